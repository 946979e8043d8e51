"""Local limit machinery: the two-type branching process, its community
projection, rooted-ball extraction with canonical codes, and neighborhood
census comparison between simulated graphs and the limit.

The limit of the graph around a uniform vertex is a two-type tree: l-nodes
(vertices) alternate with r-nodes (groups).  An l-root reproduces as a mixed
Poisson with rate W * mu; deeper l-nodes use the size-biased weight law (the
usual size-bias of a mixed Poisson), and deeper r-nodes produce k children
with probability (k+1) p_{k+1} / mu.  Collapsing every r-node to a clique on
its l-neighbors gives the limiting local picture of the projected graph.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import InsufficientSampleError, LimitLaws
from .projection import ProjectedMultigraph

BALL_CAP_DEFAULT = 200
EXACT_CANON_LIMIT = 12


class PopulationExplosionError(RuntimeError):
    """Branching-process sample exceeded the node cap."""


class UnsupportedRootError(ValueError):
    """Community projection is only defined for l-rooted trees."""


# ---------------------------------------------------------------------------
# discrete samplers for the offspring laws
# ---------------------------------------------------------------------------

class _Discrete:
    def __init__(self, values, probs):
        v = np.asarray(values, dtype=float)
        p = np.asarray(probs, dtype=float)
        self.values = v
        self.probs = p / p.sum()

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(len(self.values), size=size, p=self.probs)
        return self.values[idx]


def _offspring_samplers(laws: LimitLaws):
    """(W plain, W size-biased, right-root count, right-shift count)."""
    w_plain = _Discrete(*zip(*laws.weights.atoms))
    w_bias = _Discrete(*zip(*laws.weights.size_biased_atoms()))
    ks, ps = laws._ks, laws._ps
    right_root = _Discrete(ks, ps)
    # size-biased group size, shifted by -1 (children exclude the parent)
    right_shift = _Discrete(ks - 1, ks * ps)
    return w_plain, w_bias, right_root, right_shift


# ---------------------------------------------------------------------------
# two-type tree
# ---------------------------------------------------------------------------

@dataclass
class TwoTypeTree:
    """Rooted tree with marks alternating by generation.

    Node 0 is the root; parents[i] < i for every non-root node.
    """

    root_mark: str
    marks: list           # "l" or "r" per node
    parents: list         # -1 for the root
    depth: int

    @property
    def node_count(self) -> int:
        return len(self.marks)

    def children(self) -> list:
        kids: list[list[int]] = [[] for _ in self.marks]
        for i, p in enumerate(self.parents):
            if p >= 0:
                kids[p].append(i)
        return kids

    def offspring_counts(self, mark: str, skip_root: bool = False) -> np.ndarray:
        kids = self.children()
        out = [len(kids[i]) for i, m in enumerate(self.marks)
               if m == mark and not (skip_root and i == 0)]
        return np.array(out, dtype=np.int64)


def sample_bp(laws: LimitLaws, depth: int,
              rng: np.random.Generator,
              root_mark: str | None = None,
              gamma_mix: float | None = None,
              node_cap: int = 1_000_000) -> TwoTypeTree:
    """One realization of the two-type limit tree down to the given depth.

    If root_mark is None the root type is mixed: l with probability
    gamma_mix, defaulting to 1 / (1 + E[W]) (the limit of the l-fraction of
    the bipartite graph).
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    w_plain, w_bias, right_root, right_shift = _offspring_samplers(laws)
    lam = laws.mean_rate
    if root_mark is None:
        if gamma_mix is None:
            gamma_mix = 1.0 / (1.0 + laws.weights.limit_moment(1))
        root_mark = "l" if rng.uniform() < gamma_mix else "r"
    if root_mark not in ("l", "r"):
        raise ValueError("root mark must be 'l' or 'r'")

    marks = [root_mark]
    parents = [-1]
    frontier = [0]
    for gen in range(depth):
        if not frontier:
            break
        cur_mark = marks[frontier[0]]
        nf = len(frontier)
        if cur_mark == "l":
            w = (w_plain if gen == 0 else w_bias).draw(rng, nf)
            counts = rng.poisson(w * lam)
            child_mark = "r"
        else:
            sampler = right_root if gen == 0 else right_shift
            counts = sampler.draw(rng, nf).astype(np.int64)
            child_mark = "l"
        total = int(counts.sum())
        if len(marks) + total > node_cap:
            raise PopulationExplosionError(
                f"tree exceeded {node_cap} nodes at generation {gen + 1}")
        nxt = []
        for parent, c in zip(frontier, counts.tolist()):
            for _ in range(c):
                marks.append(child_mark)
                parents.append(parent)
                nxt.append(len(marks) - 1)
        frontier = nxt
    return TwoTypeTree(root_mark=root_mark, marks=marks, parents=parents,
                       depth=depth)


# ---------------------------------------------------------------------------
# community projection of a tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootedGraph:
    """Rooted multigraph given by an adjacency map v -> {u: multiplicity}."""

    adjacency: dict
    root: int

    @property
    def n(self) -> int:
        return len(self.adjacency)


def project_bp(tree: TwoTypeTree) -> RootedGraph:
    """Collapse every r-node to a clique on its l-neighbors (parent plus
    children); vertices are the l-nodes, rooted at the tree root."""
    if tree.root_mark != "l":
        raise UnsupportedRootError("projection needs an l-rooted tree")
    l_index = {}
    for i, m in enumerate(tree.marks):
        if m == "l":
            l_index[i] = len(l_index)
    adj: dict[int, dict[int, int]] = {v: {} for v in l_index.values()}
    kids = tree.children()
    for i, m in enumerate(tree.marks):
        if m != "r":
            continue
        members = [l_index[tree.parents[i]]] + [l_index[c] for c in kids[i]]
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                u, v = members[a], members[b]
                adj[u][v] = adj[u].get(v, 0) + 1
                adj[v][u] = adj[v].get(u, 0) + 1
    return RootedGraph(adjacency=adj, root=0)


# ---------------------------------------------------------------------------
# canonical codes for rooted balls
# ---------------------------------------------------------------------------

class _CanonBudgetExceeded(Exception):
    pass


def _refine(colors: dict, adj: dict) -> dict:
    """Color refinement to a stable partition; colors renormalized to ranks."""
    while True:
        sig = {}
        for v, c in colors.items():
            nbr = tuple(sorted((colors[u], m) for u, m in adj[v].items()))
            sig[v] = (c, nbr)
        ranks = {s: r for r, s in enumerate(sorted(set(sig.values())))}
        new = {v: ranks[sig[v]] for v in colors}
        if new == colors:
            return new
        colors = new


def _discrete_code(colors: dict, adj: dict) -> bytes:
    pos = {v: c for v, c in colors.items()}
    edges = sorted((min(pos[v], pos[u]), max(pos[v], pos[u]), m)
                   for v in adj for u, m in adj[v].items() if pos[v] < pos[u])
    return repr((len(colors), tuple(edges))).encode()


def _first_cell(colors: dict) -> list:
    by_color: dict[int, list] = {}
    for v, c in colors.items():
        by_color.setdefault(c, []).append(v)
    for c in sorted(by_color):
        if len(by_color[c]) > 1:
            return sorted(by_color[c])
    return []


def _interchangeable(cell: list, adj: dict) -> bool:
    """True when every permutation of the cell is an automorphism: all cell
    vertices share the same out-of-cell neighbor dict and the induced
    subgraph on the cell is empty or uniformly complete (covers the leaves
    of a star and the vertices of a hanging clique, which otherwise blow up
    the individualization search factorially)."""
    cs = set(cell)
    outside = [{u: m for u, m in adj[v].items() if u not in cs} for v in cell]
    if any(o != outside[0] for o in outside[1:]):
        return False
    inner = {m for v in cell for u, m in adj[v].items() if u in cs}
    if not inner:
        return True
    if len(inner) > 1:
        return False
    mult = inner.pop()
    return all(sum(1 for u in adj[v] if u in cs) == len(cell) - 1
               and all(adj[v][u] == mult for u in adj[v] if u in cs)
               for v in cell)


def _canon_search(colors: dict, adj: dict, budget: list) -> bytes:
    colors = _refine(colors, adj)
    cell = _first_cell(colors)
    if not cell:
        return _discrete_code(colors, adj)
    if _interchangeable(cell, adj):
        cell = cell[:1]
    best = None
    fresh = max(colors.values()) + 1
    for v in cell:
        budget[0] -= 1
        if budget[0] < 0:
            raise _CanonBudgetExceeded
        child = dict(colors)
        child[v] = fresh
        code = _canon_search(child, adj, budget)
        if best is None or code < best:
            best = code
    return best


def _canon_greedy(colors: dict, adj: dict) -> bytes:
    """Deterministic fallback: individualize the smallest vertex of the first
    non-singleton cell until discrete.  Not relabel-invariant in general."""
    colors = _refine(colors, adj)
    while True:
        cell = _first_cell(colors)
        if not cell:
            return _discrete_code(colors, adj)
        colors[cell[0]] = max(colors.values()) + 1
        colors = _refine(colors, adj)


def canonical_code(adj: dict, root, budget: int = 50_000) -> tuple[bytes, bool]:
    """Canonical byte code of a rooted multigraph.

    Exact (relabel-invariant) via refinement plus individualization search;
    if the search budget runs out the greedy tie-break is used instead and
    the code is flagged ambiguous (possibly splitting isomorphic balls, never
    merging distinct ones).
    """
    colors = {v: (0 if v == root else 1) for v in adj}
    try:
        return _canon_search(colors, adj, [budget]), False
    except _CanonBudgetExceeded:
        return _canon_greedy(colors, adj), True


@dataclass(frozen=True)
class RootedBall:
    """Radius-r ball around a root, identified by its canonical code."""

    radius: int
    n_vertices: int
    code: bytes
    truncated: bool = False
    ambiguous: bool = False


def _adjacency_of(graph) -> tuple[dict, int | None]:
    if isinstance(graph, RootedGraph):
        return graph.adjacency, graph.root
    if isinstance(graph, ProjectedMultigraph):
        return graph.adjacency, None
    raise TypeError(f"unsupported graph type {type(graph)!r}")


def extract_ball(graph, root: int, r: int,
                 ball_cap: int = BALL_CAP_DEFAULT) -> RootedBall:
    """Induced subgraph on vertices within distance r of the root, BFS order.

    Balls larger than ball_cap come back truncated with an empty code; the
    census counts them separately rather than classifying them.
    """
    if r < 0:
        raise ValueError("radius must be >= 0")
    adj, _ = _adjacency_of(graph)
    seen = {root}
    frontier = [root]
    for _ in range(r):
        nxt = []
        for v in frontier:
            for u in adj.get(v, ()):
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
        if len(seen) > ball_cap:
            return RootedBall(radius=r, n_vertices=len(seen), code=b"",
                              truncated=True)
    sub = {v: {u: m for u, m in adj.get(v, {}).items() if u in seen}
           for v in seen}
    code, ambiguous = canonical_code(sub, root)
    return RootedBall(radius=r, n_vertices=len(seen), code=code,
                      ambiguous=ambiguous)


# ---------------------------------------------------------------------------
# census comparison
# ---------------------------------------------------------------------------

@dataclass
class CensusReport:
    tv: float
    radius: int
    m: int
    sim_counts: dict = field(default_factory=dict)
    bp_counts: dict = field(default_factory=dict)
    sim_truncated: int = 0
    bp_truncated: int = 0
    ambiguous: int = 0

    def to_csv(self) -> str:
        lines = ["code_hex,sim_count,bp_count"]
        for code in sorted(set(self.sim_counts) | set(self.bp_counts)):
            lines.append(f"{code.hex()},{self.sim_counts.get(code, 0)},"
                         f"{self.bp_counts.get(code, 0)}")
        return "\n".join(lines)


def bp_ball(laws: LimitLaws, r: int, rng: np.random.Generator,
            ball_cap: int = BALL_CAP_DEFAULT) -> RootedBall:
    """One l-rooted limit ball: sample a depth-2r tree, project, extract."""
    tree = sample_bp(laws, depth=2 * r, rng=rng, root_mark="l")
    return extract_ball(project_bp(tree), 0, r, ball_cap=ball_cap)


def census_compare(graph: ProjectedMultigraph, laws: LimitLaws, r: int, m: int,
                   rng: np.random.Generator,
                   ball_cap: int = BALL_CAP_DEFAULT) -> CensusReport:
    """Total-variation distance between the empirical canonical-code law of m
    uniformly rooted balls of the simulated graph and m limit-tree balls."""
    if m < 1_000:
        raise InsufficientSampleError(f"need >= 1000 ball samples, got {m}")
    if r > 3:
        raise ValueError("census restricted to radius <= 3")
    report = CensusReport(tv=0.0, radius=r, m=m)
    roots = rng.integers(0, graph.n, size=m)
    for root in roots.tolist():
        ball = extract_ball(graph, root, r, ball_cap=ball_cap)
        if ball.truncated:
            report.sim_truncated += 1
            continue
        report.ambiguous += ball.ambiguous
        report.sim_counts[ball.code] = report.sim_counts.get(ball.code, 0) + 1
    for _ in range(m):
        ball = bp_ball(laws, r, rng, ball_cap=ball_cap)
        if ball.truncated:
            report.bp_truncated += 1
            continue
        report.ambiguous += ball.ambiguous
        report.bp_counts[ball.code] = report.bp_counts.get(ball.code, 0) + 1
    sim_n = max(sum(report.sim_counts.values()), 1)
    bp_n = max(sum(report.bp_counts.values()), 1)
    codes = set(report.sim_counts) | set(report.bp_counts)
    report.tv = 0.5 * sum(abs(report.sim_counts.get(c, 0) / sim_n
                              - report.bp_counts.get(c, 0) / bp_n)
                          for c in codes)
    return report
