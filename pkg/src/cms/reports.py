"""Report assembly and serialization.

A report is a JSON document with a stable schema: command, fully resolved
config echo, typed results, wall-clock timing, and component versions.
Reruns with the same config and seed must reproduce the payload byte for
byte, so :func:`payload_bytes` serializes everything except timing with
sorted keys and canonical float repr.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import platform
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1"

__all__ = ["SCHEMA_VERSION", "sanitize", "make_report", "payload_bytes",
           "write_report", "write_block_curve_csv", "write_lemma2_details_csv"]


def sanitize(obj):
    """Recursively convert results into plain JSON-serializable values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return sanitize(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _versions() -> dict:
    from . import __version__

    try:
        import numba

        numba_version = numba.__version__
    except ImportError:  # pragma: no cover
        numba_version = None
    return {
        "cms": __version__,
        "numpy": np.__version__,
        "numba": numba_version,
        "python": platform.python_version(),
        "schema": SCHEMA_VERSION,
    }


def make_report(command: str, config: dict, results: dict, passed: bool,
                seconds: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": sanitize(config),
        "results": sanitize(results),
        "passed": bool(passed),
        "versions": _versions(),
        "timing": {"seconds": float(seconds)},
    }


def payload_bytes(report: dict) -> bytes:
    """Canonical bytes of the report without the timing section."""
    payload = {k: v for k, v in report.items() if k != "timing"}
    return json.dumps(payload, sort_keys=True, indent=2).encode()


def write_report(report: dict, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{report['command']}_report.json"
    path.write_bytes(json.dumps(report, sort_keys=True, indent=2).encode() + b"\n")
    return path


def write_block_curve_csv(path, curve) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "H_k", "H_k_corrected"])
        for k, (h, hc) in enumerate(zip(curve.H, curve.H_corrected), start=1):
            writer.writerow([k, repr(h), repr(hc)])


def write_lemma2_details_csv(path, details: list[dict]) -> None:
    cols = ["bin", "vertex", "representative", "count", "word",
            "empirical", "predicted", "std_error"]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in details:
            writer.writerow([
                row["bin"], row["vertex"],
                " ".join(repr(c) for c in row["representative"]),
                row["count"],
                " ".join(str(e) for e in row["word"]),
                repr(row["empirical"]), repr(row["predicted"]),
                repr(row["std_error"]),
            ])
