"""Finite directed multigraphs: path validity and structural checks.

The graph is the skeleton of a Markov system: a finite vertex set 1..N, a
finite edge list, and maps ``initial``/``terminal`` giving each edge's source
and target vertex.  Parallel edges and self-loops are allowed.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError

__all__ = ["Edge", "DirectedMultigraph", "StructureFlags", "validate_path", "structure_flags"]


@dataclass(frozen=True)
class Edge:
    id: int
    initial: int
    terminal: int


@dataclass(frozen=True)
class StructureFlags:
    irreducible: bool
    aperiodic: bool
    i_surjective: bool


class DirectedMultigraph:
    """Immutable directed multigraph on vertices ``1..vertex_count``.

    Edge ids must be unique integers; edge order for sampling purposes is
    always ascending id order.  Surjectivity of the initial-vertex map is not
    enforced here (it is reported by :func:`structure_flags` and required by
    :class:`cms.systems.MarkovSystem`).
    """

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int, int] | Edge]):
        if vertex_count < 1:
            raise InputError(f"vertex_count must be >= 1, got {vertex_count}")
        self.vertex_count = int(vertex_count)
        parsed = []
        for item in edges:
            e = item if isinstance(item, Edge) else Edge(*item)
            if not (1 <= e.initial <= vertex_count and 1 <= e.terminal <= vertex_count):
                raise InputError(
                    f"edge {e.id}: vertices ({e.initial}, {e.terminal}) outside 1..{vertex_count}"
                )
            parsed.append(e)
        ids = [e.id for e in parsed]
        if len(set(ids)) != len(ids):
            raise InputError("edge ids are not unique")
        self.edges = tuple(sorted(parsed, key=lambda e: e.id))
        self._by_id = {e.id: e for e in self.edges}
        self._out = {v: tuple(e for e in self.edges if e.initial == v)
                     for v in range(1, vertex_count + 1)}

    @property
    def edge_ids(self) -> tuple[int, ...]:
        return tuple(e.id for e in self.edges)

    def edge(self, edge_id: int) -> Edge:
        try:
            return self._by_id[edge_id]
        except KeyError:
            raise InputError(f"unknown edge id {edge_id!r}") from None

    def has_edge(self, edge_id: int) -> bool:
        return edge_id in self._by_id

    def initial(self, edge_id: int) -> int:
        return self.edge(edge_id).initial

    def terminal(self, edge_id: int) -> int:
        return self.edge(edge_id).terminal

    def out_edges(self, vertex: int) -> tuple[Edge, ...]:
        if not (1 <= vertex <= self.vertex_count):
            raise InputError(f"vertex {vertex} outside 1..{self.vertex_count}")
        return self._out[vertex]

    def max_out_degree(self) -> int:
        return max(len(self._out[v]) for v in self._out)

    def __repr__(self) -> str:
        return f"DirectedMultigraph(vertices={self.vertex_count}, edges={len(self.edges)})"


def validate_path(graph: DirectedMultigraph, word: Sequence[int]) -> bool:
    """True iff consecutive edges connect: terminal(e_k) == initial(e_{k+1}).

    The empty word is a path.  Unknown edge ids raise :class:`InputError`.
    """
    edges = [graph.edge(eid) for eid in word]
    return all(a.terminal == b.initial for a, b in zip(edges, edges[1:]))


def _reachable(adj: dict[int, set[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def structure_flags(graph: DirectedMultigraph) -> StructureFlags:
    """Irreducibility, aperiodicity, and surjectivity of the initial map.

    Irreducible means strongly connected.  The period is the gcd of directed
    cycle lengths, computed from BFS level differences: for every edge u->v,
    gcd accumulates level(u) + 1 - level(v).  Aperiodicity (period 1) is only
    meaningful for irreducible graphs and is reported False otherwise.
    """
    verts = range(1, graph.vertex_count + 1)
    fwd = {v: set() for v in verts}
    bwd = {v: set() for v in verts}
    for e in graph.edges:
        fwd[e.initial].add(e.terminal)
        bwd[e.terminal].add(e.initial)

    irreducible = (
        len(_reachable(fwd, 1)) == graph.vertex_count
        and len(_reachable(bwd, 1)) == graph.vertex_count
    )
    i_surjective = all(len(graph.out_edges(v)) > 0 for v in verts)

    aperiodic = False
    if irreducible:
        level = {1: 0}
        queue = deque([1])
        while queue:
            u = queue.popleft()
            for v in fwd[u]:
                if v not in level:
                    level[v] = level[u] + 1
                    queue.append(v)
        g = 0
        for e in graph.edges:
            g = math.gcd(g, level[e.initial] + 1 - level[e.terminal])
        aperiodic = g == 1

    return StructureFlags(irreducible=irreducible, aperiodic=aperiodic, i_surjective=i_surjective)
