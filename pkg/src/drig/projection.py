"""One-node community projection and per-vertex degree processes.

Every active group becomes a clique on its members; the projection is a
multigraph whose edge multiplicity X(i,j) counts the active groups containing
both endpoints.  Degrees are the (|a|-1)-sums, not simple-graph degrees.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dynamics import Timeline
from .sampling import BipartiteState, Group


class CliqueGuardError(ValueError):
    """A group exceeds the projection size guard (quadratic blowup)."""


@dataclass(frozen=True)
class ProjectedMultigraph:
    n: int
    edges: dict  # (i, j) with i < j -> multiplicity >= 1

    @cached_property
    def degrees(self) -> np.ndarray:
        """d_i = sum over containing groups of (|a|-1) = multi-degree."""
        d = np.zeros(self.n, dtype=np.int64)
        for (i, j), x in self.edges.items():
            d[i] += x
            d[j] += x
        return d

    @cached_property
    def adjacency(self) -> dict:
        adj: dict[int, dict[int, int]] = {}
        for (i, j), x in self.edges.items():
            adj.setdefault(i, {})[j] = x
            adj.setdefault(j, {})[i] = x
        return adj

    def edge_count(self) -> int:
        """Number of edges counted with multiplicity."""
        return sum(self.edges.values())

    def to_csv(self) -> str:
        lines = ["i,j,multiplicity"]
        for (i, j), x in sorted(self.edges.items()):
            lines.append(f"{i},{j},{x}")
        return "\n".join(lines)

    def simple_edges(self) -> set:
        """Lossy simple-graph view (multiplicities dropped)."""
        return set(self.edges)


def project(state: BipartiteState, clique_guard: int = 10_000) -> ProjectedMultigraph:
    """Community projection of a bipartite state; cost O(sum |a|^2)."""
    edges: dict[tuple[int, int], int] = {}
    for g in state.groups:
        if len(g) > clique_guard:
            raise CliqueGuardError(
                f"group of size {len(g)} exceeds clique_guard={clique_guard}")
        for e in itertools.combinations(g, 2):  # members are sorted, so i < j
            edges[e] = edges.get(e, 0) + 1
    return ProjectedMultigraph(n=state.n, edges=edges)


def degree_process(timeline: Timeline, vertex: int,
                   grid: list[float]) -> np.ndarray:
    """d_vertex(s) = sum over groups containing the vertex of
    (|a|-1) * 1{some ON interval contains s}, evaluated on the grid."""
    for s in grid:
        if not (0.0 <= s <= timeline.horizon):
            raise ValueError(f"grid point {s} outside [0, {timeline.horizon}]")
    own = [(len(g) - 1, m.intervals) for g, m in timeline.marks.items()
           if vertex in g]
    out = np.zeros(len(grid), dtype=np.int64)
    for idx, s in enumerate(grid):
        out[idx] = sum(inc for inc, ivs in own
                       if any(on <= s <= off for on, off in ivs))
    return out
