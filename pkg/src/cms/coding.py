"""Address/coding map: backward iteration of edge words onto the state space.

A bi-infinite symbol past (sigma_m, ..., sigma_0) is coded by applying the
maps oldest-to-newest to an anchor point of the oldest edge's source part and
growing the window until successive iterates move by at most a tolerance.
Average contraction makes the increments decay geometrically along typical
pasts, so the stopping increment bounds the remaining error up to a factor
rate/(1 - rate).

Coding every window of a long stationary symbol stream transports the
stream's law to the state space; for a uniquely ergodic system this
pushforward reproduces the invariant measure, which :func:`measure_distance`
quantifies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .chain import EmpiricalMeasure, Trajectory
from .errors import InputError
from .graph import validate_path
from .systems import MarkovSystem, State

__all__ = [
    "CodingConfig",
    "CodingResult",
    "MeasureDistance",
    "code_point",
    "coding_increments",
    "pushforward_measure",
    "increment_ratios",
    "measure_distance",
]


@dataclass(frozen=True)
class CodingConfig:
    """Anchors (family defaults when None), stopping tolerance, window cap.

    ``patience`` is the number of consecutive sub-tolerance increments
    required before a window counts as converged; one small increment can be
    a coincidence of colliding map images rather than actual convergence.
    """

    anchors: Optional[dict[int, State]] = None
    tolerance: float = 1e-10
    max_window: int = 2000
    patience: int = 3

    def __post_init__(self):
        if self.tolerance <= 0:
            raise InputError("tolerance must be positive")
        if self.max_window < 1:
            raise InputError("max_window must be >= 1")
        if self.patience < 1:
            raise InputError("patience must be >= 1")


@dataclass(frozen=True)
class CodingResult:
    point: State
    window_used: int
    last_increment: float
    converged: bool


@dataclass(frozen=True)
class MeasureDistance:
    part_mass_gap: float
    moment_gaps: list[float]
    energy_distance: float


def _resolve_anchors(system: MarkovSystem, config: CodingConfig) -> dict[int, State]:
    return config.anchors if config.anchors is not None else system.default_anchors()


def _symbol_indices(system: MarkovSystem, symbols: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(system.edge_ids, symbols)
    idx = np.clip(idx, 0, len(system.edge_ids) - 1)
    if not np.all(system.edge_ids[idx] == symbols):
        raise InputError("symbol stream contains ids not in the system's edge set")
    return idx.astype(np.int64)


def code_point(system: MarkovSystem, past: Sequence[int],
               config: CodingConfig | None = None) -> CodingResult:
    """Code one past window, given oldest symbol first.

    ``window_used`` is the window length at which the iterate had stabilized:
    the first longer window moved the point by at most the tolerance, and
    that increment is reported.  Running out of past (or hitting
    ``max_window``) before stabilizing yields ``converged=False`` with the
    deepest iterate.
    """
    config = config or CodingConfig()
    word = np.asarray(list(past), dtype=np.int64)
    if word.shape[0] == 0:
        raise InputError("past must contain at least one symbol")
    if not validate_path(system.graph, [int(e) for e in word]):
        raise InputError("past is not a path of the system's graph")
    sym = _symbol_indices(system, word)
    ends = np.array([word.shape[0]], np.int64)
    verts, coords, used, incs, conv = system.code_windows(
        sym, ends, config.max_window, config.tolerance, config.patience,
        _resolve_anchors(system, config))
    point = State(int(verts[0]) + 1, tuple(float(c) for c in coords[0]))
    return CodingResult(point=point, window_used=int(used[0]),
                        last_increment=float(incs[0]), converged=bool(conv[0]))


def coding_increments(system: MarkovSystem, past: Sequence[int],
                      config: CodingConfig | None = None) -> np.ndarray:
    """Successive-iterate distances d(Y_L, Y_{L-1}) for one past window."""
    config = config or CodingConfig()
    word = np.asarray(list(past), dtype=np.int64)
    if word.shape[0] == 0:
        raise InputError("past must contain at least one symbol")
    if not validate_path(system.graph, [int(e) for e in word]):
        raise InputError("past is not a path of the system's graph")
    sym = _symbol_indices(system, word)
    return system.code_trace(sym, word.shape[0], config.max_window,
                             config.tolerance, config.patience,
                             _resolve_anchors(system, config))


def window_ends(n_symbols: int, window: int, n_points: int, stride: int,
                start: int = 0) -> np.ndarray:
    """End positions (exclusive) of n_points windows; raises when the stream
    is too short."""
    if n_points < 1 or stride < 1 or window < 1:
        raise InputError("window, n_points and stride must be >= 1")
    ends = start + window + stride * np.arange(n_points, dtype=np.int64)
    if ends[-1] > n_symbols:
        need = int(ends[-1])
        raise InputError(
            f"stream too short: need {need} symbols for {n_points} windows of "
            f"length {window} at stride {stride} (have {n_symbols})"
        )
    return ends


def pushforward_measure(
    system: MarkovSystem,
    symbol_source: Trajectory,
    config: CodingConfig | None = None,
    n_points: int = 10_000,
    stride: int = 50,
    start: int = 0,
) -> EmpiricalMeasure:
    """Code overlapping past windows of a stationary symbol stream.

    Windows use up to ``config.max_window`` symbols of past each; coded
    points of converged windows form an equal-weight particle measure (the
    pushforward of the stream's law).  Non-converged windows are dropped and
    counted in the provenance.
    """
    config = config or CodingConfig()
    symbols = symbol_source.symbols
    sym = _symbol_indices(system, symbols)
    ends = window_ends(sym.shape[0], config.max_window, n_points, stride, start)
    verts, coords, used, incs, conv = system.code_windows(
        sym, ends, config.max_window, config.tolerance, config.patience,
        _resolve_anchors(system, config))
    kept = conv
    n_kept = int(kept.sum())
    if n_kept == 0:
        raise InputError("no window converged; increase max_window or tolerance")
    return EmpiricalMeasure(
        family=system.family,
        metric=system.metric,
        n_parts=system.graph.vertex_count,
        vertices=(verts[kept] + 1).astype(np.int64),
        coords=coords[kept],
        weights=np.full(n_kept, 1.0 / n_kept),
        provenance={
            "source": "pushforward",
            "seed": symbol_source.seed,
            "window": config.max_window,
            "tolerance": config.tolerance,
            "stride": stride,
            "n_windows": n_points,
            "dropped_windows": int(n_points - n_kept),
            "mean_window_used": float(used[kept].mean()),
        },
    )


def increment_ratios(
    system: MarkovSystem,
    symbol_source: Trajectory,
    config: CodingConfig | None = None,
    n_windows: int = 500,
    stride: int = 97,
    start: int = 0,
) -> np.ndarray:
    """Pooled successive-increment ratios over sampled windows.

    Each window contributes d(Y_L, Y_{L-1}) / d(Y_{L-1}, Y_{L-2}) for every
    available L; the median of the pool estimates the typical per-symbol
    contraction factor.
    """
    config = config or CodingConfig()
    sym = _symbol_indices(system, symbol_source.symbols)
    ends = window_ends(sym.shape[0], config.max_window, n_windows, stride, start)
    anchors = _resolve_anchors(system, config)
    pools = []
    for end in ends:
        incs = system.code_trace(sym, int(end), config.max_window,
                                 config.tolerance, config.patience, anchors)
        if incs.shape[0] >= 2:
            prev = incs[:-1]
            ok = prev > 0
            pools.append(incs[1:][ok] / prev[ok])
    if not pools:
        return np.empty(0)
    return np.concatenate(pools)


def _pairwise(metric: str, va, ca, vb, cb) -> np.ndarray:
    if metric == "discrete":
        return (np.asarray(va)[:, None] != np.asarray(vb)[None, :]).astype(float)
    return np.abs(ca[:, None, :] - cb[None, :, :]).sum(axis=2)


def _subsample(m: EmpiricalMeasure, cap: int):
    n = m.n_particles
    if n <= cap:
        idx = np.arange(n)
    else:
        idx = np.linspace(0, n - 1, cap).astype(np.int64)
    w = m.weights[idx]
    return m.vertices[idx], m.coords[idx], w / w.sum()


def measure_distance(a: EmpiricalMeasure, b: EmpiricalMeasure,
                     energy_cap: int = 2048) -> MeasureDistance:
    """Part-mass gap, coordinate moment gaps (orders 1 and 2), and the
    two-sample energy statistic ``2 E d(X,Y) - E d(X,X') - E d(Y,Y')``.

    Energy sums are V-statistics over (deterministically subsampled) particle
    clouds, so identical measures give exactly zero.
    """
    if (a.family, a.metric, a.dim, a.n_parts) != (b.family, b.metric, b.dim, b.n_parts):
        raise InputError(
            f"measures are over different families: "
            f"{(a.family, a.metric, a.dim, a.n_parts)} vs "
            f"{(b.family, b.metric, b.dim, b.n_parts)}"
        )
    part_gap = float(np.abs(a.part_masses() - b.part_masses()).max())

    ma, mb = a.coordinate_moments(), b.coordinate_moments()
    moment_gaps = [abs(x - y) for x, y in zip(ma["mean"], mb["mean"])]
    moment_gaps += [abs(x - y) for x, y in zip(ma["second_moment"], mb["second_moment"])]

    va, ca, wa = _subsample(a, energy_cap)
    vb, cb, wb = _subsample(b, energy_cap)
    dxy = wa @ _pairwise(a.metric, va, ca, vb, cb) @ wb
    dxx = wa @ _pairwise(a.metric, va, ca, va, ca) @ wa
    dyy = wb @ _pairwise(a.metric, vb, cb, vb, cb) @ wb
    energy = float(2.0 * dxy - dxx - dyy)

    return MeasureDistance(part_mass_gap=part_gap, moment_gaps=moment_gaps,
                           energy_distance=energy)
