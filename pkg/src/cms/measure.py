"""Cylinder probabilities of the stationary symbol process and the
conditional-law test.

The symbol process is determined on cylinders by integrating orbit
probability products against the invariant measure:
``M([e_1..e_k]) = int p_{e_1}(x) p_{e_2}(w_{e_1} x) ... dmu(x)``, independent
of the time index.  Conditionally on the infinite past, the law of the next
symbols depends on the past only through its coded point F(sigma), namely the
orbit product started at F(sigma); :func:`conditional_test` checks this
statistically by binning windows by coded point and comparing future-word
frequencies against the orbit product at a bin representative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chain import EmpiricalMeasure, Trajectory
from .coding import CodingConfig, _resolve_anchors, _symbol_indices, window_ends
from .errors import InputError
from .graph import validate_path
from .systems import MarkovSystem, State

__all__ = [
    "Cylinder",
    "CylinderEstimate",
    "ConditionalTestReport",
    "path_probability",
    "cylinder_measure",
    "conditional_test",
]


@dataclass(frozen=True)
class Cylinder:
    """A thin cylinder: the set of bi-infinite symbol sequences whose
    coordinates starting at ``start`` spell ``word``."""

    start: int
    word: tuple[int, ...]

    def validate(self, system: MarkovSystem) -> "Cylinder":
        if not validate_path(system.graph, self.word):
            raise InputError(f"cylinder word {self.word} is not a path")
        return self


@dataclass(frozen=True)
class CylinderEstimate:
    value: float
    std_error: float
    n_particles: int


def path_probability_rows(system: MarkovSystem, verts: np.ndarray,
                          coords: np.ndarray, word: Sequence[int]) -> np.ndarray:
    """Orbit probability product per starting particle (vectorized).

    Probabilities vanish off-part, so a word whose first edge starts
    elsewhere (or that is not a path) contributes zero; no validity
    precondition is needed.
    """
    n = verts.shape[0]
    out = np.zeros(n)
    word = [int(e) for e in word]
    if not word:
        return np.ones(n)
    first = system.graph.edge(word[0])
    active = verts == (first.initial - 1)
    if not np.any(active):
        return out
    prod = np.ones(int(active.sum()))
    cur = coords[active]
    vertex = first.initial
    for eid in word:
        edge = system.graph.edge(eid)
        if edge.initial != vertex:
            return out  # not a path: support condition gives probability 0
        eidx = system.edge_index(eid)
        prod = prod * system.prob_given_part(eidx, cur)
        cur = system.map_coords(eidx, cur)
        vertex = edge.terminal
    out[active] = prod
    return out


def path_probability(system: MarkovSystem, x: State, word: Sequence[int]) -> float:
    """Telescoped product p_{e_1}(x) p_{e_2}(w_{e_1} x) ...; 1 for the empty
    word, 0 when the word leaves x's part structure."""
    if not system.state_in_part(x):
        raise InputError(f"invalid state {x}")
    verts = np.array([x.vertex - 1], np.int64)
    coords = np.asarray(x.coords, float)[None, :]
    return float(path_probability_rows(system, verts, coords, word)[0])


def cylinder_measure(system: MarkovSystem, mu: EmpiricalMeasure,
                     word: Sequence[int]) -> CylinderEstimate:
    """Monte Carlo cylinder probability: the mu-weighted mean of the orbit
    product.  Shift invariance is built in (no start index enters)."""
    Cylinder(0, tuple(int(e) for e in word)).validate(system)
    vals = path_probability_rows(system, mu.vertices - 1, mu.coords, word)
    value, se, _ = mu.mean_with_se(vals)
    return CylinderEstimate(value=value, std_error=se, n_particles=mu.n_particles)


@dataclass(frozen=True)
class ConditionalTestReport:
    past_length: int
    words_tested: list[tuple[int, ...]]
    max_abs_gap: float
    total_variation_gap: float
    n_windows: int
    n_windows_coded: int
    dropped_windows: int
    n_bins_used: int
    excluded_bins: int
    excluded_windows: int
    tolerance: float
    passed: bool
    details: list[dict] = field(default_factory=list, compare=False)


def _bin_keys(system: MarkovSystem, verts: np.ndarray, coords: np.ndarray,
              bins_per_axis: int, clip_quantile: float = 0.025) -> np.ndarray:
    """Integer bin label per coded point: the part, refined by a regular grid
    over the per-part bulk box of the points.

    The box spans central quantiles rather than min/max: invariant measures
    of on-average-contractive systems can have power-law coordinate tails,
    and a min/max box would collapse the bulk into one cell.  Tail points
    clip into the edge bins (and usually fall under the occupancy minimum).
    """
    n = verts.shape[0]
    keys = verts.astype(np.int64).copy()
    if system.dim == 0:
        return keys
    scale = 1
    for _ in range(system.dim):
        scale *= bins_per_axis
    keys = keys * scale
    for v in np.unique(verts):
        mask = verts == v
        sub = coords[mask]
        cell = np.zeros(int(mask.sum()), np.int64)
        for j in range(system.dim):
            lo = float(np.quantile(sub[:, j], clip_quantile))
            hi = float(np.quantile(sub[:, j], 1.0 - clip_quantile))
            if hi <= lo:
                lo, hi = float(sub[:, j].min()), float(sub[:, j].max())
            width = (hi - lo) or 1.0
            ix = np.clip((bins_per_axis * (sub[:, j] - lo) / width).astype(np.int64),
                         0, bins_per_axis - 1)
            cell = cell * bins_per_axis + ix
        keys[mask] += cell
    return keys


def conditional_test(
    system: MarkovSystem,
    trajectory: Trajectory,
    config: CodingConfig | None = None,
    past_length: int = 400,
    words: Optional[Sequence[Sequence[int]]] = None,
    n_windows: int = 100_000,
    stride: int = 1,
    start: int = 0,
    bins_per_axis: int = 32,
    min_bin_count: int = 200,
    tolerance: float = 0.02,
) -> ConditionalTestReport:
    """Compare conditional future-word frequencies against the orbit product
    at the coded past.

    Windows of ``past_length`` symbols are coded, binned spatially by coded
    point, and within each sufficiently occupied bin the empirical frequency
    of each future word is compared to ``path_probability`` at the bin's
    centroid.  Gaps are aggregated into an occupancy-weighted total-variation
    statistic; ``passed`` reflects the configured tolerance.  Bins with fewer
    than ``min_bin_count`` windows are excluded and reported.
    """
    if past_length < 1:
        raise InputError("past_length must be >= 1")
    config = config or CodingConfig(max_window=past_length)
    if config.max_window > past_length:
        config = CodingConfig(anchors=config.anchors, tolerance=config.tolerance,
                              max_window=past_length, patience=config.patience)
    if words is None:
        words = [(int(e),) for e in system.edge_ids]
    words = [tuple(int(e) for e in w) for w in words]
    if not words:
        raise InputError("words must be nonempty")
    for w in words:
        Cylinder(1, w).validate(system)
    w_max = max(len(w) for w in words)

    sym = _symbol_indices(system, trajectory.symbols)
    n_sym = sym.shape[0]
    ends = window_ends(n_sym - w_max, past_length, n_windows, stride, start)
    verts, coords, used, incs, conv = system.code_windows(
        sym, ends, config.max_window, config.tolerance, config.patience,
        _resolve_anchors(system, config))

    kept = conv
    dropped = int(n_windows - kept.sum())
    verts1 = (verts[kept] + 1).astype(np.int64)
    coords_k = coords[kept]
    ends_k = ends[kept]
    n_coded = int(kept.sum())
    if n_coded == 0:
        raise InputError("no window converged; grow past_length or tolerance")

    # future-word match matrix (n_coded, n_words)
    word_idx = [np.asarray([system.edge_index(e) for e in w], np.int64) for w in words]
    matches = np.empty((n_coded, len(words)), bool)
    for c, widx in enumerate(word_idx):
        m = np.ones(n_coded, bool)
        for j, e in enumerate(widx):
            m &= sym[ends_k + j] == e
        matches[:, c] = m

    keys = _bin_keys(system, verts1, coords_k, bins_per_axis)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    boundaries = np.nonzero(np.diff(sorted_keys))[0] + 1
    groups = np.split(order, boundaries)

    max_gap = 0.0
    tv_weighted = 0.0
    n_used_windows = 0
    n_bins_used = 0
    excluded_bins = 0
    excluded_windows = 0
    details: list[dict] = []

    for group in groups:
        n_b = group.shape[0]
        if n_b < min_bin_count:
            excluded_bins += 1
            excluded_windows += n_b
            continue
        n_bins_used += 1
        n_used_windows += n_b
        vertex = int(verts1[group[0]])
        centroid = coords_k[group].mean(axis=0) if system.dim else ()
        rep = State(vertex, tuple(float(c) for c in centroid))
        if not system.state_in_part(rep):
            rep = State(vertex, tuple(float(c) for c in coords_k[group[0]]))
        tv = 0.0
        for c, w in enumerate(words):
            emp = float(matches[group, c].mean())
            theo = path_probability(system, rep, w)
            gap = abs(emp - theo)
            max_gap = max(max_gap, gap)
            tv += 0.5 * gap
            details.append({
                "bin": int(keys[group[0]]),
                "vertex": vertex,
                "representative": [float(c) for c in rep.coords],
                "count": n_b,
                "word": list(w),
                "empirical": emp,
                "predicted": theo,
                "std_error": float(np.sqrt(max(theo * (1 - theo), 0.0) / n_b)),
            })
        tv_weighted += n_b * tv

    if n_used_windows == 0:
        raise InputError(
            f"every bin fell below min_bin_count={min_bin_count}; "
            f"coarsen bins_per_axis or add windows"
        )
    tv_total = tv_weighted / n_used_windows

    return ConditionalTestReport(
        past_length=past_length,
        words_tested=words,
        max_abs_gap=max_gap,
        total_variation_gap=float(tv_total),
        n_windows=n_used_windows,
        n_windows_coded=n_coded,
        dropped_windows=dropped,
        n_bins_used=n_bins_used,
        excluded_bins=excluded_bins,
        excluded_windows=excluded_windows,
        tolerance=tolerance,
        passed=tv_total <= tolerance,
        details=details,
    )
