"""Simulation of the Markov process of a system and estimation of its
invariant measure.

The process moves by drawing an edge at the current point x with probability
p_e(x) and jumping to w_e(x).  A long run after burn-in yields a particle
estimate of the invariant measure; iterating the transfer operator
``Uf = sum_e p_e * (f o w_e)`` gives an independent diagnostic, since U^n f
converges to the invariant mean of f for aperiodic systems.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional

import numpy as np

from . import mc
from .errors import InputError
from .systems import MarkovSystem, State

__all__ = [
    "ChainConfig",
    "Trajectory",
    "EmpiricalMeasure",
    "step",
    "simulate",
    "estimate_invariant_measure",
    "operator_iterate",
    "first_moment",
    "push_forward_once",
]


@dataclass(frozen=True)
class ChainConfig:
    """Sampling plan for the invariant-measure estimator."""

    n_samples: int
    seed: int
    burn_in: int = 10_000
    thinning: int = 1
    initial_state: Optional[State] = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise InputError("n_samples must be >= 1")
        if self.burn_in < 0 or self.thinning < 1:
            raise InputError("burn_in must be >= 0 and thinning >= 1")


class Trajectory:
    """A realized chain: initial state, emitted edge ids, visited states.

    Backed by arrays; ``edges[k]`` is the edge taken at step k and
    ``state(k)`` the state after k steps (``state(0)`` is the initial state).
    """

    def __init__(self, system: MarkovSystem, initial: State, edges: np.ndarray,
                 vertices: np.ndarray, coords: np.ndarray, seed: int):
        self.system = system
        self.initial = initial
        self.edges = edges
        self.vertices = vertices
        self.coords = coords
        self.seed = seed

    @property
    def n_steps(self) -> int:
        return self.edges.shape[0]

    @property
    def symbols(self) -> np.ndarray:
        """Emitted edge-id sequence."""
        return self.edges

    def state(self, k: int) -> State:
        return State(int(self.vertices[k]), tuple(float(c) for c in self.coords[k]))

    def step_record(self, k: int) -> tuple[int, State]:
        return int(self.edges[k]), self.state(k + 1)

    def final_state(self) -> State:
        return self.state(self.n_steps)

    def path_condition_holds(self) -> bool:
        """Exact check: i(e_1) = v_0, and t(e_k) = i(e_{k+1}) throughout."""
        g = self.system.graph
        init = np.array([g.initial(int(e)) for e in self.edges])
        term = np.array([g.terminal(int(e)) for e in self.edges])
        return bool(np.all(init == self.vertices[:-1]) and np.all(term == self.vertices[1:]))

    def symbol_text(self) -> str:
        return " ".join(str(int(e)) for e in self.edges)

    def save_symbols(self, path) -> None:
        Path(path).write_text(self.symbol_text() + "\n")


@dataclass
class EmpiricalMeasure:
    """Weighted particle approximation of a probability measure on the state
    space; particle order is the generation order, so serial-correlation-aware
    standard errors remain available."""

    family: str
    metric: str
    n_parts: int
    vertices: np.ndarray
    coords: np.ndarray
    weights: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise InputError("particle weights must sum to 1 within 1e-12")
        if np.any(self.weights <= 0):
            raise InputError("particle weights must be positive")

    @property
    def n_particles(self) -> int:
        return self.vertices.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def part_masses(self) -> np.ndarray:
        return np.bincount(self.vertices - 1, weights=self.weights,
                           minlength=self.n_parts)

    def part_mass_se(self) -> np.ndarray:
        """Standard error of each part mass (ESS-corrected for chain order)."""
        out = np.empty(self.n_parts)
        for v in range(self.n_parts):
            ind = (self.vertices == v + 1).astype(float)
            _, se, _ = mc.mean_with_se(ind, self.weights)
            out[v] = se
        return out

    def coordinate_moments(self) -> dict[str, list[float]]:
        if self.dim == 0:
            return {"mean": [], "second_moment": []}
        w = self.weights
        return {
            "mean": [float(np.dot(w, self.coords[:, j])) for j in range(self.dim)],
            "second_moment": [float(np.dot(w, self.coords[:, j] ** 2))
                              for j in range(self.dim)],
        }

    def mean_with_se(self, values: np.ndarray) -> tuple[float, float, float]:
        return mc.mean_with_se(np.asarray(values, float), self.weights)

    def save_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["vertex"] + [f"coord_{j + 1}" for j in range(self.dim)]
                            + ["weight"])
            for k in range(self.n_particles):
                writer.writerow([int(self.vertices[k])]
                                + [repr(float(c)) for c in self.coords[k]]
                                + [repr(float(self.weights[k]))])
        sidecar = path.with_suffix(path.suffix + ".provenance.json")
        sidecar.write_text(json.dumps(self.provenance, sort_keys=True, indent=2) + "\n")


def step(system: MarkovSystem, state: State, rng: np.random.Generator) -> tuple[int, State]:
    """One chain step: inverse-CDF edge draw (ascending edge id), then the map."""
    if not system.state_in_part(state):
        raise InputError(f"state {state} lies in no part")
    probs = system.probability_vector(state)
    u = rng.random()
    c = 0.0
    chosen = None
    for eid in system.edge_ids:
        c += probs[int(eid)]
        if u < c:
            chosen = int(eid)
            break
    if chosen is None:  # guard against c summing to 1 - eps
        chosen = int(max(eid for eid in system.edge_ids if probs[int(eid)] > 0))
    return chosen, system.apply_map(chosen, state)


def simulate(system: MarkovSystem, x0: Optional[State], n: int, seed: int) -> Trajectory:
    """n-step trajectory from x0 (family default when None); deterministic in
    (system, x0, n, seed)."""
    if n < 1:
        raise InputError("n must be >= 1")
    if x0 is None:
        x0 = system.default_state()
    if not system.state_in_part(x0):
        raise InputError(f"initial state {x0} lies in no part")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    eidx, verts, coords = system.simulate_arrays(x0, n, u)
    return Trajectory(system, x0, system.edge_ids[eidx], verts + 1, coords, seed)


def estimate_invariant_measure(system: MarkovSystem, config: ChainConfig) -> EmpiricalMeasure:
    """Equal-weight particles from a single long run.

    The chain runs ``burn_in + n_samples * thinning`` steps; burn-in states
    are discarded and every ``thinning``-th state thereafter is kept.
    """
    total = config.burn_in + config.n_samples * config.thinning
    traj = simulate(system, config.initial_state, total, config.seed)
    idx = config.burn_in + config.thinning * np.arange(1, config.n_samples + 1)
    n = config.n_samples
    return EmpiricalMeasure(
        family=system.family,
        metric=system.metric,
        n_parts=system.graph.vertex_count,
        vertices=traj.vertices[idx].copy(),
        coords=traj.coords[idx].copy(),
        weights=np.full(n, 1.0 / n),
        provenance={
            "source": "long_run",
            "burn_in": config.burn_in,
            "thinning": config.thinning,
            "seed": config.seed,
            "n_samples": config.n_samples,
        },
    )


def _expand_exact(system: MarkovSystem, verts, coords, wts):
    new_v, new_c, new_w = [], [], []
    for eidx in range(len(system.edge_ids)):
        mask = verts == system._initial[eidx]
        if not np.any(mask):
            continue
        p = system.prob_given_part(eidx, coords[mask])
        new_v.append(np.full(int(mask.sum()), system._terminal[eidx], np.int64))
        new_c.append(system.map_coords(eidx, coords[mask]))
        new_w.append(wts[mask] * p)
    return (np.concatenate(new_v), np.concatenate(new_c, axis=0),
            np.concatenate(new_w))


def operator_iterate(
    system: MarkovSystem,
    f: Callable[[State], float],
    x: State,
    n: int,
    seed: int = 0,
    max_exact_states: int = 1 << 22,
    mc_samples: int = 50_000,
) -> float:
    """U^n f(x), the expectation of f after n steps started at x.

    The branching recursion is evaluated exactly by expanding the reachable
    weighted states level by level; coinciding states merge, so families with
    constant maps stay exact at any depth (finite chains reduce to transition
    matrix powers).  Once a level would exceed ``max_exact_states``, the
    remaining depth is estimated by Monte Carlo from the current level.
    """
    if n < 0:
        raise InputError("n must be >= 0")
    if not system.state_in_part(x):
        raise InputError(f"state {x} lies in no part")
    verts = np.array([x.vertex - 1], np.int64)
    coords = np.asarray(x.coords, float)[None, :]
    wts = np.array([1.0])

    remaining = n
    while remaining > 0:
        out_deg = np.diff(system._out_off)[verts]
        if system.dim > 0 and int(out_deg.sum()) > max_exact_states:
            break
        verts, coords, wts = _expand_exact(system, verts, coords, wts)
        if system.dim == 0:
            merged = np.bincount(verts, weights=wts,
                                 minlength=system.graph.vertex_count)
            keep = np.nonzero(merged > 0)[0]
            verts = keep.astype(np.int64)
            coords = np.zeros((keep.shape[0], 0))
            wts = merged[keep]
        remaining -= 1

    if remaining == 0:
        vals = np.fromiter(
            (f(State(int(v) + 1, tuple(map(float, c))))
             for v, c in zip(verts, coords)),
            dtype=float, count=verts.shape[0])
        return float(np.dot(wts, vals))

    # Monte Carlo collapse of the remaining depth
    rng = np.random.default_rng(seed)
    starts = rng.choice(verts.shape[0], size=mc_samples, p=wts / wts.sum())
    acc = 0.0
    for s in starts:
        x_s = State(int(verts[s]) + 1, tuple(map(float, coords[s])))
        u = rng.random(remaining)
        eidx, vv, cc = system.simulate_arrays(x_s, remaining, u)
        acc += f(State(int(vv[-1]) + 1, tuple(map(float, cc[-1]))))
    return acc / mc_samples


def first_moment(measure: EmpiricalMeasure, anchors: Mapping[int, State],
                 system: MarkovSystem) -> float:
    """Mean distance of the measure to per-part anchor points.

    Finiteness of this moment is the standing hypothesis behind the coding
    and entropy computations; the value is reported as a diagnostic constant.
    """
    total = 0.0
    for v in range(1, measure.n_parts + 1):
        anchor = anchors.get(v)
        if anchor is None or anchor.vertex != v or not system.state_in_part(anchor):
            raise InputError(f"anchor for part {v} is missing or lies elsewhere: {anchor}")
        mask = measure.vertices == v
        if not np.any(mask):
            continue
        if measure.dim == 0:
            continue  # discrete metric: d(x, anchor of same part) = 0
        d = np.abs(measure.coords[mask] - np.asarray(anchor.coords)).sum(axis=1)
        total += float(np.dot(measure.weights[mask], d))
    return total


def push_forward_once(system: MarkovSystem, measure: EmpiricalMeasure,
                      seed: int) -> EmpiricalMeasure:
    """Advance every particle one chain step with fresh randomness.

    Under the exact invariant measure this leaves the distribution unchanged;
    comparing part masses before and after is the invariance diagnostic.
    """
    rows = system.prob_rows(measure.vertices - 1, measure.coords)
    cum = np.cumsum(rows, axis=1)
    rng = np.random.default_rng(seed)
    u = rng.random(measure.n_particles)
    choice = np.minimum((u[:, None] >= cum).sum(axis=1), rows.shape[1] - 1)
    verts = np.empty_like(measure.vertices)
    coords = np.empty_like(measure.coords)
    for eidx in range(len(system.edge_ids)):
        mask = choice == eidx
        if not np.any(mask):
            continue
        verts[mask] = int(system._terminal[eidx]) + 1
        if measure.dim > 0:
            coords[mask] = system.map_coords(eidx, measure.coords[mask])
    prov = dict(measure.provenance)
    prov.update({"source": "pushforward_step", "push_seed": seed})
    return EmpiricalMeasure(
        family=measure.family, metric=measure.metric, n_parts=measure.n_parts,
        vertices=verts, coords=coords, weights=measure.weights.copy(),
        provenance=prov,
    )
