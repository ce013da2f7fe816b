"""Contractive Markov system families over a directed multigraph.

A system bundles the graph skeleton with a partition of a metric state space
into parts K_1..K_N, one self-map w_e per edge (mapping K_{i(e)} into
K_{t(e)}), and place-dependent edge probabilities p_e that vanish off
K_{i(e)}, sum to one everywhere, and stay above a floor delta on their part.
``declared_rate`` is the certified average contraction rate: the p-weighted
mean of d(w_e x, w_e y) over edges is at most ``declared_rate * d(x, y)`` for
x, y in a common part.

Three families are built in:

``planar_affine_trig``
    Two half-planes ``y >= 1/2`` and ``y <= -1/2`` of (R^2, l1), four affine
    maps (two of which fold through ``|x|``), and probabilities of the form
    ``amp * sin^2(||.||_1) + off`` / ``amp * cos^2(||.||_1) + off``.  The
    default coefficients give the classical example with average contraction
    rate 209/210 and probability floor 3/7.

``finite_chain``
    A finite Markov chain: parts are single abstract points, one edge per
    nonzero transition-matrix entry, constant maps onto the target state.

``bernoulli_ifs``
    A single compact interval with finitely many affine contractions chosen
    with constant probabilities.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import InputError, SystemIntegrityError
from .graph import DirectedMultigraph

__all__ = [
    "State",
    "MarkovSystem",
    "PlanarAffineTrig",
    "PlanarParams",
    "FiniteChain",
    "BernoulliIFS",
    "ValidationReport",
    "ContractionReport",
    "check_image_containment",
    "estimate_contraction_rate",
    "make_system",
]

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class State:
    """A point of the state space: the part it belongs to plus coordinates.

    ``coords`` is empty for ``finite_chain`` (the vertex is the whole
    identity of the point), length 1 for ``bernoulli_ifs`` and length 2 for
    ``planar_affine_trig``.
    """

    vertex: int
    coords: tuple[float, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    samples_used: int
    normalization_max_error: float
    support_violations: int
    image_containment_violations: int
    delta_violations: int
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class ContractionReport:
    pairs_sampled: int
    pairs_skipped: int
    max_ratio: float
    mean_ratio: float
    declared_rate: float
    passed: bool


class MarkovSystem:
    """Base class; subclasses provide the per-family geometry and kernels."""

    family: str = "abstract"
    dim: int = 0
    metric: str = "l1"

    def __init__(self, graph: DirectedMultigraph, delta: float, declared_rate: float):
        if not (0.0 < declared_rate < 1.0):
            raise InputError(f"declared_rate must lie in (0,1), got {declared_rate}")
        if delta <= 0.0:
            raise InputError(f"delta must be positive, got {delta}")
        if delta > 1.0 / graph.max_out_degree() + 1e-15:
            raise InputError(
                f"delta={delta} exceeds 1/max_out_degree={1.0 / graph.max_out_degree()}"
            )
        for v in range(1, graph.vertex_count + 1):
            if not graph.out_edges(v):
                raise InputError(f"vertex {v} has no out-edge (initial map not surjective)")
        self.graph = graph
        self.delta = float(delta)
        self.declared_rate = float(declared_rate)

        # kernel-side indexing: edges in ascending id order, vertices 0-based
        self.edge_ids = np.array(graph.edge_ids, dtype=np.int64)
        self._idx_of = {eid: k for k, eid in enumerate(graph.edge_ids)}
        self._initial = np.array([graph.edge(e).initial - 1 for e in graph.edge_ids], np.int64)
        self._terminal = np.array([graph.edge(e).terminal - 1 for e in graph.edge_ids], np.int64)
        counts = np.bincount(self._initial, minlength=graph.vertex_count)
        self._out_off = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self._out_edge = np.argsort(self._initial, kind="stable").astype(np.int64)

    # -- family-specific geometry (overridden) ------------------------------

    def part_index(self, coords: Sequence[float]) -> Optional[int]:
        raise NotImplementedError

    def map_coords(self, eidx: int, coords: np.ndarray) -> np.ndarray:
        """Apply edge map ``eidx`` (0-based) to coords array (n, dim)."""
        raise NotImplementedError

    def prob_given_part(self, eidx: int, coords: np.ndarray) -> np.ndarray:
        """p_e over coords (n, dim), assuming every row lies in K_{i(e)}."""
        raise NotImplementedError

    def sample_part(self, part: int, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n coordinate rows from part K_part (default sampler)."""
        raise NotImplementedError

    def default_state(self) -> State:
        raise NotImplementedError

    def default_anchors(self) -> dict[int, State]:
        raise NotImplementedError

    def simulate_arrays(self, x0: State, n: int, u: np.ndarray):
        """Run n chain steps from x0 consuming uniforms u; returns 0-based
        (edge_indices (n,), vertices (n+1,), coords (n+1, dim))."""
        raise NotImplementedError

    def code_windows(self, sym_idx: np.ndarray, ends: np.ndarray, max_window: int,
                     tol: float, patience: int, anchors: dict[int, State]):
        """Backward-iteration coding of past windows ``sym_idx[end-L:end]``.

        Returns 0-based (vertices, coords, window_used, last_increment,
        converged) arrays, one row per requested window end."""
        raise NotImplementedError

    def code_trace(self, sym_idx: np.ndarray, end: int, max_window: int,
                   tol: float, patience: int, anchors: dict[int, State]) -> np.ndarray:
        """Increment sequence d(Y_L, Y_{L-1}) for one window (diagnostics)."""
        raise NotImplementedError

    def _anchor_arrays(self, anchors: dict[int, State]):
        n = self.graph.vertex_count
        got = sorted(anchors)
        if got != list(range(1, n + 1)):
            raise InputError(f"anchors must cover vertices 1..{n}, got {got}")
        for v, a in anchors.items():
            if a.vertex != v or not self.state_in_part(a):
                raise InputError(f"anchor for part {v} is invalid: {a}")
        return np.array([[anchors[v].coords[j] for v in range(1, n + 1)]
                         for j in range(self.dim)])

    # -- shared point-wise operations ---------------------------------------

    def edge_index(self, edge_id: int) -> int:
        try:
            return self._idx_of[edge_id]
        except KeyError:
            raise InputError(f"unknown edge id {edge_id!r}") from None

    def state(self, vertex: int, coords: Sequence[float] = ()) -> State:
        s = State(int(vertex), tuple(float(c) for c in coords))
        if not self.state_in_part(s):
            raise InputError(f"coords {s.coords} do not lie in part {s.vertex}")
        return s

    def state_in_part(self, state: State) -> bool:
        if not (1 <= state.vertex <= self.graph.vertex_count):
            return False
        if len(state.coords) != self.dim:
            return False
        if self.dim == 0:
            return True
        return self.part_index(state.coords) == state.vertex

    def apply_map(self, edge_id: int, state: State) -> State:
        """w_e applied to a state of K_{i(e)}; checks the image lands in K_{t(e)}."""
        edge = self.graph.edge(edge_id)
        if not self.state_in_part(state) or state.vertex != edge.initial:
            raise InputError(
                f"state {state} is not in part {edge.initial} required by edge {edge_id}"
            )
        eidx = self.edge_index(edge_id)
        if self.dim == 0:
            return State(edge.terminal, ())
        img = self.map_coords(eidx, np.asarray(state.coords, float)[None, :])[0]
        if self.part_index(img) != edge.terminal:
            raise SystemIntegrityError(
                f"image {tuple(img)} of edge {edge_id} left its target part {edge.terminal}"
            )
        return State(edge.terminal, tuple(float(c) for c in img))

    def probability_vector(self, state: State) -> dict[int, float]:
        """All edge probabilities at a state; zero for edges of other parts."""
        if not self.state_in_part(state):
            raise InputError(f"invalid state {state}")
        verts = np.array([state.vertex - 1], np.int64)
        coords = np.asarray(state.coords, float)[None, :]
        row = self.prob_rows(verts, coords)[0]
        return {int(eid): float(p) for eid, p in zip(self.edge_ids, row)}

    def distance(self, a: State, b: State) -> float:
        if self.metric == "discrete":
            return 0.0 if a.vertex == b.vertex else 1.0
        return float(sum(abs(x - y) for x, y in zip(a.coords, b.coords)))

    # -- vectorized helpers over particle arrays -----------------------------

    def prob_rows(self, verts: np.ndarray, coords: np.ndarray) -> np.ndarray:
        """(n, m) matrix of p_e(x_i); columns follow ascending edge id."""
        n = verts.shape[0]
        rows = np.zeros((n, len(self.edge_ids)))
        for eidx in range(len(self.edge_ids)):
            mask = verts == self._initial[eidx]
            if np.any(mask):
                rows[mask, eidx] = self.prob_given_part(eidx, coords[mask])
        return rows

    def entropy_integrand(self, verts: np.ndarray, coords: np.ndarray) -> np.ndarray:
        """-sum_e p_e log p_e per particle, with 0 log 0 = 0."""
        rows = self.prob_rows(verts, coords)
        out = np.zeros(rows.shape[0])
        pos = rows > 0.0
        out -= np.sum(np.where(pos, rows * np.log(np.where(pos, rows, 1.0)), 0.0), axis=1)
        return out

    def pairwise_distance(self, va, ca, vb, cb) -> np.ndarray:
        if self.metric == "discrete":
            return (np.asarray(va)[:, None] != np.asarray(vb)[None, :]).astype(float)
        return np.abs(ca[:, None, :] - cb[None, :, :]).sum(axis=2)

    def distance_rows(self, va, ca, vb, cb) -> np.ndarray:
        if self.metric == "discrete":
            return (np.asarray(va) != np.asarray(vb)).astype(float)
        return np.abs(ca - cb).sum(axis=1)


# ---------------------------------------------------------------------------
# planar_affine_trig
# ---------------------------------------------------------------------------

_PLANAR_CANONICAL = {
    # edge id: (initial, terminal, ax, bx, abs_x, ay, by, trig, amp, off)
    1: (1, 2, -0.5, -1.0, False, -1.5, 0.25, "sin", 1.0 / 15.0, 53.0 / 105.0),
    2: (1, 1, -1.5, 1.0, False, 0.25, 0.375, "cos", 1.0 / 15.0, 3.0 / 7.0),
    3: (2, 1, -0.5, 1.0, True, -1.5, -0.25, "sin", 1.0 / 15.0, 53.0 / 105.0),
    4: (2, 1, 1.5, -1.0, True, -0.25, 0.375, "cos", 1.0 / 15.0, 3.0 / 7.0),
}


@dataclass(frozen=True)
class PlanarParams:
    """Per-edge coefficients of the planar family.

    Maps are ``(x, y) -> (ax * (|x| if abs_x else x) + bx, ay * y + by)`` and
    probabilities ``amp * trig(||(x,y)||_1)^2 + off`` with trig sin or cos.
    """

    edge_ids: tuple[int, ...]
    initial: tuple[int, ...]
    terminal: tuple[int, ...]
    ax: tuple[float, ...]
    bx: tuple[float, ...]
    abs_x: tuple[bool, ...]
    ay: tuple[float, ...]
    by: tuple[float, ...]
    trig: tuple[str, ...]
    amp: tuple[float, ...]
    off: tuple[float, ...]

    @classmethod
    def canonical(cls) -> "PlanarParams":
        ids = tuple(sorted(_PLANAR_CANONICAL))
        cols = list(zip(*(_PLANAR_CANONICAL[i] for i in ids)))
        return cls(ids, *cols)

    def replace_edge(self, edge_id: int, **fields) -> "PlanarParams":
        """New params with one edge's coefficients overridden."""
        k = self.edge_ids.index(edge_id)
        updates = {}
        for name, value in fields.items():
            col = list(getattr(self, name))
            col[k] = value
            updates[name] = tuple(col)
        return dataclasses.replace(self, **updates)


class PlanarAffineTrig(MarkovSystem):
    """Planar two-part family; zero-argument construction gives the canonical
    coefficients (rate 209/210, floor 3/7)."""

    family = "planar_affine_trig"
    dim = 2
    metric = "l1"

    def __init__(
        self,
        params: PlanarParams | None = None,
        overrides: dict[int, dict] | None = None,
        delta: float | None = None,
        declared_rate: float | None = None,
        sample_halfwidth: float = 8.0,
    ):
        params = params or PlanarParams.canonical()
        for eid, fields in (overrides or {}).items():
            params = params.replace_edge(int(eid), **fields)
        self.params = params
        self.sample_halfwidth = float(sample_halfwidth)

        n_vertices = max(max(params.initial), max(params.terminal))
        graph = DirectedMultigraph(
            n_vertices, zip(params.edge_ids, params.initial, params.terminal)
        )
        self._check_normalization(params, graph)
        if delta is None:
            delta = min(params.off)
        if declared_rate is None:
            declared_rate = self.analytic_rate_bound(params, graph)
        super().__init__(graph, delta, declared_rate)

        self._ax = np.array(params.ax)
        self._bx = np.array(params.bx)
        self._absx = np.array(params.abs_x, np.uint8)
        self._ay = np.array(params.ay)
        self._by = np.array(params.by)
        self._trig_sin = np.array([t == "sin" for t in params.trig], np.uint8)
        self._amp = np.array(params.amp)
        self._off = np.array(params.off)

    @staticmethod
    def _check_normalization(params: PlanarParams, graph: DirectedMultigraph) -> None:
        # sum_e p_e(x) == 1 identically iff, per vertex, sin- and cos-amplitudes
        # match and amplitudes + offsets sum to one
        for v in range(1, graph.vertex_count + 1):
            ks = [k for k, i in enumerate(params.initial) if i == v]
            amp_sin = sum(params.amp[k] for k in ks if params.trig[k] == "sin")
            amp_cos = sum(params.amp[k] for k in ks if params.trig[k] == "cos")
            total = amp_sin + sum(params.off[k] for k in ks)
            if abs(amp_sin - amp_cos) > NORMALIZATION_TOL or abs(total - 1.0) > NORMALIZATION_TOL:
                raise InputError(
                    f"probabilities on part {v} do not sum to 1 identically "
                    f"(sin amp {amp_sin}, cos amp {amp_cos}, total {total})"
                )
            if any(params.off[k] <= 0 or params.amp[k] < 0 for k in ks):
                raise InputError("probability coefficients must have off > 0 and amp >= 0")

    @staticmethod
    def analytic_rate_bound(params: PlanarParams, graph: DirectedMultigraph) -> float:
        """Average-contraction bound from per-coordinate Lipschitz coefficients.

        On a part, the sin-group probability q ranges over [off_sin,
        off_sin + amp]; the l1 growth factor is the larger of the two
        coordinate coefficients, each linear in q, so the extremes of q give
        the bound.  Folding through |x| only shrinks x-differences, so the
        bound also covers the abs-map edges.
        """
        worst = 0.0
        for v in range(1, graph.vertex_count + 1):
            ks = [k for k, i in enumerate(params.initial) if i == v]
            sin_ks = [k for k in ks if params.trig[k] == "sin"]
            cos_ks = [k for k in ks if params.trig[k] == "cos"]
            if len(sin_ks) != 1 or len(cos_ks) != 1:
                raise InputError(
                    "analytic rate bound needs exactly one sin and one cos edge "
                    "per part; pass declared_rate explicitly for other layouts"
                )
            s, c = sin_ks[0], cos_ks[0]
            q_lo = params.off[s]
            q_hi = params.off[s] + params.amp[s]
            for q in (q_lo, q_hi):
                coef_x = q * abs(params.ax[s]) + (1 - q) * abs(params.ax[c])
                coef_y = q * abs(params.ay[s]) + (1 - q) * abs(params.ay[c])
                worst = max(worst, coef_x, coef_y)
        if worst >= 1.0:
            raise InputError(f"coefficient analysis gives rate bound {worst} >= 1")
        return worst

    def part_index(self, coords):
        x, y = coords
        if y >= 0.5:
            return 1
        if y <= -0.5:
            return 2
        return None

    def map_coords(self, eidx, coords):
        x = coords[:, 0]
        if self._absx[eidx]:
            x = np.abs(x)
        return np.stack(
            [self._ax[eidx] * x + self._bx[eidx],
             self._ay[eidx] * coords[:, 1] + self._by[eidx]],
            axis=1,
        )

    def prob_given_part(self, eidx, coords):
        s = np.abs(coords[:, 0]) + np.abs(coords[:, 1])
        t = np.sin(s) if self._trig_sin[eidx] else np.cos(s)
        return self._amp[eidx] * t * t + self._off[eidx]

    def sample_part(self, part, n, rng):
        r = self.sample_halfwidth
        x = rng.uniform(-r, r, size=n)
        if part == 1:
            y = rng.uniform(0.5, r, size=n)
        elif part == 2:
            y = rng.uniform(-r, -0.5, size=n)
        else:
            raise InputError(f"no part {part}")
        return np.stack([x, y], axis=1)

    def default_state(self) -> State:
        return State(1, (0.0, 1.0))

    def default_anchors(self) -> dict[int, State]:
        return {1: State(1, (0.0, 0.5)), 2: State(2, (0.0, -0.5))}

    def simulate_arrays(self, x0, n, u):
        edges, verts, xs, ys = _kernels.planar_simulate(
            n, x0.vertex - 1, x0.coords[0], x0.coords[1], u,
            self._out_off, self._out_edge, self._ax, self._bx, self._absx,
            self._ay, self._by, self._trig_sin, self._amp, self._off,
            self._terminal)
        return edges, verts, np.stack([xs, ys], axis=1)

    def _code_args(self, anchors):
        arr = self._anchor_arrays(anchors)
        return (arr[0], arr[1], self._initial, self._ax, self._bx,
                self._absx, self._ay, self._by)

    def code_windows(self, sym_idx, ends, max_window, tol, patience, anchors):
        px, py, used, incs, conv = _kernels.planar_code_many(
            sym_idx, ends, max_window, tol, patience, *self._code_args(anchors))
        coords = np.stack([px, py], axis=1)
        # every iterate ends with the newest symbol's map, whose image lies in
        # that edge's target part
        verts = self._terminal[sym_idx[ends - 1]]
        return verts, coords, used, incs, conv.astype(bool)

    def code_trace(self, sym_idx, end, max_window, tol, patience, anchors):
        return _kernels.planar_code_trace(
            sym_idx, end, max_window, tol, patience, *self._code_args(anchors))


# ---------------------------------------------------------------------------
# finite_chain
# ---------------------------------------------------------------------------

class FiniteChain(MarkovSystem):
    """Finite Markov chain as a Markov system with constant edge maps.

    One edge per nonzero entry of the transition matrix, ids assigned in
    row-major order starting from 1.  Points carry no coordinates, the
    discrete metric makes every map a contraction, and any rate in (0, 1) is
    a valid certificate (pairs within a part coincide).
    """

    family = "finite_chain"
    dim = 0
    metric = "discrete"

    def __init__(self, transition: Sequence[Sequence[float]], declared_rate: float = 0.5):
        P = np.asarray(transition, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise InputError(f"transition matrix must be square, got shape {P.shape}")
        if np.any(P < 0):
            raise InputError("transition matrix entries must be nonnegative")
        rows = P.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-9):
            raise InputError(f"transition matrix rows must sum to 1, got {rows}")
        self.transition = P
        n = P.shape[0]
        edges = []
        probs = []
        eid = 0
        for i in range(n):
            for j in range(n):
                if P[i, j] > 0.0:
                    eid += 1
                    edges.append((eid, i + 1, j + 1))
                    probs.append(P[i, j])
        graph = DirectedMultigraph(n, edges)
        super().__init__(graph, delta=float(min(probs)), declared_rate=declared_rate)
        self._prob = np.array(probs)

    def part_index(self, coords):
        # points are identified by their vertex; empty coords carry no
        # information, so membership cannot be decided from them
        if len(coords) != 0:
            raise InputError("finite_chain states have no coordinates")
        return None

    def map_coords(self, eidx, coords):
        return np.zeros((coords.shape[0], 0))

    def prob_given_part(self, eidx, coords):
        return np.full(coords.shape[0], self._prob[eidx])

    def sample_part(self, part, n, rng):
        if not (1 <= part <= self.graph.vertex_count):
            raise InputError(f"no part {part}")
        return np.zeros((n, 0))

    def default_state(self) -> State:
        return State(1, ())

    def default_anchors(self) -> dict[int, State]:
        return {v: State(v, ()) for v in range(1, self.graph.vertex_count + 1)}

    def simulate_arrays(self, x0, n, u):
        edges, verts = _kernels.chain_simulate(
            n, x0.vertex - 1, u, self._out_off, self._out_edge,
            self._prob, self._terminal)
        return edges, verts, np.zeros((n + 1, 0))

    def code_windows(self, sym_idx, ends, max_window, tol, patience, anchors):
        # constant maps: the window-1 iterate t(sigma_0) is already the limit
        self._anchor_arrays(anchors)
        n = ends.shape[0]
        verts = self._terminal[sym_idx[ends - 1]]
        return (verts, np.zeros((n, 0)), np.ones(n, np.int64),
                np.zeros(n), np.ones(n, bool))

    def code_trace(self, sym_idx, end, max_window, tol, patience, anchors):
        self._anchor_arrays(anchors)
        return np.zeros(min(1, min(end, max_window) - 1))


# ---------------------------------------------------------------------------
# bernoulli_ifs
# ---------------------------------------------------------------------------

class BernoulliIFS(MarkovSystem):
    """Affine contractions of a compact interval with constant probabilities.

    The exact average contraction rate is ``sum_e p_e |slope_e|``, which is
    the default certificate.
    """

    family = "bernoulli_ifs"
    dim = 1
    metric = "l1"

    def __init__(
        self,
        slopes: Sequence[float],
        offsets: Sequence[float],
        probabilities: Sequence[float],
        interval: tuple[float, float] = (0.0, 1.0),
        declared_rate: float | None = None,
    ):
        slopes = tuple(float(a) for a in slopes)
        offsets = tuple(float(b) for b in offsets)
        probs = tuple(float(p) for p in probabilities)
        if not (len(slopes) == len(offsets) == len(probs)) or not slopes:
            raise InputError("slopes, offsets and probabilities must have equal nonzero length")
        if any(abs(a) >= 1.0 for a in slopes):
            raise InputError("every map must be a strict contraction (|slope| < 1)")
        if any(p <= 0 for p in probs) or abs(sum(probs) - 1.0) > NORMALIZATION_TOL:
            raise InputError("probabilities must be positive and sum to 1")
        lo, hi = float(interval[0]), float(interval[1])
        if not lo < hi:
            raise InputError(f"interval must have positive length, got {interval}")
        self.slopes = slopes
        self.offsets = offsets
        self.probabilities = probs
        self.interval = (lo, hi)

        graph = DirectedMultigraph(1, [(k + 1, 1, 1) for k in range(len(slopes))])
        if declared_rate is None:
            declared_rate = sum(p * abs(a) for p, a in zip(probs, slopes))
        super().__init__(graph, delta=min(probs), declared_rate=declared_rate)
        self._slope = np.array(slopes)
        self._offset = np.array(offsets)
        self._prob = np.array(probs)

    def part_index(self, coords):
        (x,) = coords
        lo, hi = self.interval
        return 1 if lo <= x <= hi else None

    def map_coords(self, eidx, coords):
        return self._slope[eidx] * coords + self._offset[eidx]

    def prob_given_part(self, eidx, coords):
        return np.full(coords.shape[0], self._prob[eidx])

    def sample_part(self, part, n, rng):
        if part != 1:
            raise InputError(f"no part {part}")
        lo, hi = self.interval
        return rng.uniform(lo, hi, size=n)[:, None]

    def default_state(self) -> State:
        lo, hi = self.interval
        return State(1, (0.5 * (lo + hi),))

    def default_anchors(self) -> dict[int, State]:
        # the midpoint: interval endpoints are typically fixed points of the
        # extreme maps, which would zero out coding increments
        return {1: self.default_state()}

    def simulate_arrays(self, x0, n, u):
        edges, xs = _kernels.interval_simulate(
            n, x0.coords[0], u, self._prob, self._slope, self._offset)
        return edges, np.zeros(n + 1, np.int64), xs[:, None]

    def code_windows(self, sym_idx, ends, max_window, tol, patience, anchors):
        anchor = float(self._anchor_arrays(anchors)[0, 0])
        pts, used, incs, conv = _kernels.interval_code_many(
            sym_idx, ends, max_window, tol, patience, anchor,
            self._slope, self._offset)
        verts = np.zeros(ends.shape[0], np.int64)
        return verts, pts[:, None], used, incs, conv.astype(bool)

    def code_trace(self, sym_idx, end, max_window, tol, patience, anchors):
        anchor = float(self._anchor_arrays(anchors)[0, 0])
        return _kernels.interval_code_trace(
            sym_idx, end, max_window, tol, patience, anchor,
            self._slope, self._offset)


# ---------------------------------------------------------------------------
# sampling-based hypothesis validation
# ---------------------------------------------------------------------------

Sampler = Callable[[int, int, np.random.Generator], np.ndarray]


def check_image_containment(
    system: MarkovSystem,
    sampler: Sampler | None = None,
    n: int = 10_000,
    seed: int = 0,
    tolerance: float = NORMALIZATION_TOL,
) -> ValidationReport:
    """Sample each part and count violated standing hypotheses.

    Per edge, ``n`` states of K_{i(e)} are drawn and images falling outside
    K_{t(e)} are counted.  The same samples feed the normalization, support
    and probability-floor checks.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    draw = sampler or system.sample_part
    rng = np.random.default_rng(seed)

    norm_err = 0.0
    support_bad = 0
    image_bad = 0
    delta_bad = 0
    samples = 0

    for part in range(1, system.graph.vertex_count + 1):
        coords = np.asarray(draw(part, n, rng), dtype=float)
        if coords.shape != (n, system.dim):
            raise InputError(
                f"sampler returned shape {coords.shape}, expected {(n, system.dim)}"
            )
        if system.dim > 0:
            parts = np.array([system.part_index(c) == part for c in coords])
            if not parts.all():
                raise InputError(f"sampler produced states outside part {part}")
        verts = np.full(n, part - 1, np.int64)
        rows = system.prob_rows(verts, coords)
        samples += n

        norm_err = max(norm_err, float(np.abs(rows.sum(axis=1) - 1.0).max()))
        out_mask = system._initial == (part - 1)
        support_bad += int(np.count_nonzero(rows[:, ~out_mask]))
        delta_bad += int(np.count_nonzero(rows[:, out_mask] < system.delta - 1e-12))

        for eidx in np.nonzero(out_mask)[0]:
            target = int(system._terminal[eidx]) + 1
            if system.dim == 0:
                continue  # constant maps land on t(e) by construction
            imgs = system.map_coords(int(eidx), coords)
            landed = np.array([system.part_index(c) == target for c in imgs])
            image_bad += int(np.count_nonzero(~landed))

    passed = (
        support_bad == 0
        and image_bad == 0
        and delta_bad == 0
        and norm_err <= tolerance
    )
    return ValidationReport(
        samples_used=samples,
        normalization_max_error=norm_err,
        support_violations=support_bad,
        image_containment_violations=image_bad,
        delta_violations=delta_bad,
        tolerance=tolerance,
        passed=passed,
    )


def estimate_contraction_rate(
    system: MarkovSystem,
    pair_sampler: Sampler | None = None,
    n_pairs: int = 100_000,
    seed: int = 0,
    tolerance: float = 1e-9,
) -> ContractionReport:
    """Empirical check of the average-contraction inequality.

    For pairs (x, y) in a common part, the ratio
    ``sum_e p_e(x) d(w_e x, w_e y) / d(x, y)`` must not exceed the declared
    rate.  Zero-distance pairs are skipped and counted (for the discrete
    family every same-part pair coincides, so all pairs are skipped and the
    ratios are vacuously zero).
    """
    if n_pairs < 1:
        raise InputError("n_pairs must be >= 1")
    draw = pair_sampler or system.sample_part
    rng = np.random.default_rng(seed)
    n_parts = system.graph.vertex_count

    max_ratio = 0.0
    ratio_sum = 0.0
    kept = 0
    skipped = 0

    for part in range(1, n_parts + 1):
        k = n_pairs // n_parts + (1 if part <= n_pairs % n_parts else 0)
        if k == 0:
            continue
        xs = np.asarray(draw(part, k, rng), dtype=float)
        ys = np.asarray(draw(part, k, rng), dtype=float)
        verts = np.full(k, part - 1, np.int64)
        if system.dim == 0:
            skipped += k
            continue
        d = np.abs(xs - ys).sum(axis=1)
        ok = d > 0.0
        skipped += int(np.count_nonzero(~ok))
        if not np.any(ok):
            continue
        xs, ys, d = xs[ok], ys[ok], d[ok]
        verts = verts[ok]
        num = np.zeros(d.shape[0])
        for eidx in np.nonzero(system._initial == (part - 1))[0]:
            p = system.prob_given_part(int(eidx), xs)
            di = np.abs(system.map_coords(int(eidx), xs)
                        - system.map_coords(int(eidx), ys)).sum(axis=1)
            num += p * di
        ratios = num / d
        max_ratio = max(max_ratio, float(ratios.max()))
        ratio_sum += float(ratios.sum())
        kept += ratios.shape[0]

    mean_ratio = ratio_sum / kept if kept else 0.0
    return ContractionReport(
        pairs_sampled=kept,
        pairs_skipped=skipped,
        max_ratio=max_ratio,
        mean_ratio=mean_ratio,
        declared_rate=system.declared_rate,
        passed=max_ratio <= system.declared_rate + tolerance,
    )


# ---------------------------------------------------------------------------
# factory
# ---------------------------------------------------------------------------

_FAMILIES = {
    "planar_affine_trig": PlanarAffineTrig,
    "finite_chain": FiniteChain,
    "bernoulli_ifs": BernoulliIFS,
}


def make_system(family: str, **params) -> MarkovSystem:
    """Construct a built-in family by name (used by the CLI configuration)."""
    try:
        cls = _FAMILIES[family]
    except KeyError:
        raise InputError(
            f"unknown family {family!r}; choose from {sorted(_FAMILIES)}"
        ) from None
    return cls(**params)
