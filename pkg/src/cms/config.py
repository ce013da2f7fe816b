"""Run configuration: a YAML document describing the system and command
parameters.

Grammar (all sections except ``system`` and ``run.seed`` are optional and
filled with the defaults below)::

    system:
      family: planar_affine_trig | finite_chain | bernoulli_ifs
      # family parameters, e.g.
      #   transition: [[0.9, 0.1], [0.5, 0.5]]          (finite_chain)
      #   slopes/offsets/probabilities/interval          (bernoulli_ifs)
      #   overrides: {2: {by: 0.0}}, sample_halfwidth    (planar_affine_trig)
      #   delta, declared_rate                           (certificate overrides)
    run:
      seed: 12345          # required, no wall-clock default
      units: nats          # nats | bits
      workers: 0           # 0 = all cores; CMS_WORKERS env overrides
    validate:   {n_samples: 10000, tolerance: 1.0e-12}
    contraction: {n_pairs: 100000}
    chain:      {burn_in: 10000, n_samples: 100000, thinning: 1,
                 initial: {vertex: 1, coords: [0.0, 1.0]}}   # optional
    entropy:    {n_max: 5, stream_length: 1000000}
    coding:     {window: 400, tolerance: 1.0e-10, n_points: 10000, stride: 50}
    lemma2:     {past_length: 400, n_windows: 100000, stride: 1,
                 bins_per_axis: 32, min_bin_count: 200, tolerance: 0.02,
                 words: [[1], [2]]}                          # optional words

Built-in families need no parameters: ``family: planar_affine_trig`` alone
reproduces the canonical planar system.
"""

from __future__ import annotations

import copy
from pathlib import Path

import yaml

from .errors import ConfigError
from .systems import MarkovSystem, State, make_system

__all__ = ["DEFAULTS", "load_config", "resolve_config", "build_system",
           "parse_initial_state"]

DEFAULTS: dict = {
    "run": {"units": "nats", "workers": 0},
    "validate": {"n_samples": 10_000, "tolerance": 1e-12},
    "contraction": {"n_pairs": 100_000},
    "chain": {"burn_in": 10_000, "n_samples": 100_000, "thinning": 1,
              "initial": None},
    "entropy": {"n_max": 5, "stream_length": 1_000_000},
    "coding": {"window": 400, "tolerance": 1e-10, "n_points": 10_000,
               "stride": 50},
    "lemma2": {"past_length": 400, "n_windows": 100_000, "stride": 1,
               "bins_per_axis": 32, "min_bin_count": 200, "tolerance": 0.02,
               "words": None},
}

_INT_FIELDS = {
    "run.workers", "validate.n_samples", "contraction.n_pairs",
    "chain.burn_in", "chain.n_samples", "chain.thinning",
    "entropy.n_max", "entropy.stream_length",
    "coding.n_points", "coding.stride", "coding.window",
    "lemma2.past_length", "lemma2.n_windows", "lemma2.stride",
    "lemma2.bins_per_axis", "lemma2.min_bin_count",
}
_FLOAT_FIELDS = {"validate.tolerance", "coding.tolerance", "lemma2.tolerance"}


def load_config(path) -> dict:
    """Parse a YAML config file into a raw document."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def resolve_config(doc: dict, seed: int | None = None, units: str | None = None) -> dict:
    """Fill defaults, apply CLI overrides, and validate field types.

    The returned document is self-contained: feeding it back through this
    function is the identity, which underpins bit-exact reruns from a
    report's config echo.
    """
    doc = copy.deepcopy(doc)
    known = {"system", "run"} | set(DEFAULTS)
    for key in doc:
        if key not in known:
            raise ConfigError(f"unknown config section {key!r}")

    system = doc.get("system")
    if not isinstance(system, dict) or "family" not in system:
        raise ConfigError("config must declare system.family")

    out = {"system": system}
    for section, defaults in DEFAULTS.items():
        merged = dict(defaults)
        given = doc.get(section, {})
        if given is None:
            given = {}
        if not isinstance(given, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key, value in given.items():
            if key not in defaults and not (section == "run" and key == "seed"):
                raise ConfigError(f"unknown field {section}.{key}")
            merged[key] = value
        out[section] = merged

    if seed is not None:
        out["run"]["seed"] = seed
    if units is not None:
        out["run"]["units"] = units

    if "seed" not in out["run"] or out["run"]["seed"] is None:
        raise ConfigError("run.seed is required (explicit seeds only)")
    try:
        s = int(out["run"]["seed"])
    except (TypeError, ValueError):
        raise ConfigError(f"run.seed must be an integer, got {out['run']['seed']!r}") from None
    if not (0 <= s < 2 ** 64):
        raise ConfigError("run.seed must fit in an unsigned 64-bit integer")
    out["run"]["seed"] = s

    if out["run"]["units"] not in ("nats", "bits"):
        raise ConfigError(f"run.units must be 'nats' or 'bits', got {out['run']['units']!r}")

    for path in _INT_FIELDS:
        section, field = path.split(".")
        value = out[section][field]
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise ConfigError(f"{path} must be a nonnegative integer, got {value!r}")
    for path in _FLOAT_FIELDS:
        section, field = path.split(".")
        value = out[section][field]
        if not isinstance(value, (int, float)) or value <= 0:
            raise ConfigError(f"{path} must be a positive number, got {value!r}")
    return out


def build_system(resolved: dict) -> MarkovSystem:
    spec = dict(resolved["system"])
    family = spec.pop("family")
    if "overrides" in spec:
        spec["overrides"] = {int(k): dict(v) for k, v in spec["overrides"].items()}
    try:
        return make_system(family, **spec)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for family {family!r}: {exc}") from None


def parse_initial_state(system: MarkovSystem, raw) -> State | None:
    if raw is None:
        return None
    if not isinstance(raw, dict) or "vertex" not in raw:
        raise ConfigError("chain.initial must be a mapping with 'vertex' and optional 'coords'")
    return system.state(int(raw["vertex"]), raw.get("coords", ()))
