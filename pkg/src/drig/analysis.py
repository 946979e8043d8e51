"""Theoretical limit objects and their comparison with simulation output.

Covers the limiting degree laws and their generating functions, the giant
component fixed point, the mixed-Poisson degree oracle, the closed-form
edge-mark law, the Frechet limit of the maximum group size, and the dynamic
giant-membership trajectory.
"""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dynamics import Timeline
from .params import GroupSizeLaw, PowerLawGroupSizes, WeightModel
from .projection import ProjectedMultigraph
from .sampling import BipartiteState


class TruncationError(ValueError):
    """Oracle tail mass above tolerance; retry with a larger k_max."""


class InsufficientSampleError(ValueError):
    pass


class UnsupportedLawError(ValueError):
    pass


# ---------------------------------------------------------------------------
# limiting degree laws
# ---------------------------------------------------------------------------

class LimitLaws:
    """Limiting left/right degree variables of the bipartite graph and the
    generating functions driving the giant component fixed point.

    The left degree is mixed Poisson with parameter W * mu * rate_scale; the
    right degree has law p_k.  Size-biasing the mixed Poisson tilts the
    mixing law by w / E[W] (exact for a discrete W), so the shifted left
    variable is again mixed Poisson under the size-biased weight law.
    rate_scale=1+t gives the laws of the rescaled / union graph.
    """

    def __init__(self, weights: WeightModel, law: GroupSizeLaw,
                 rate_scale: float = 1.0):
        self.weights = weights
        self.law = law
        self.rate_scale = float(rate_scale)
        k_hi = law.support_upto(1e-16)
        ks = np.arange(2, k_hi + 1)
        ps = np.array([law.pmf(int(k)) for k in ks])
        keep = ps > 0
        self._ks, self._ps = ks[keep], ps[keep]

    @property
    def mean_rate(self) -> float:
        return self.law.mu * self.rate_scale

    def pgf_left(self, z: float) -> float:
        """G_{D_l}(z) = E[exp(W mu (z - 1))]."""
        lam = self.mean_rate
        return math.fsum(m * math.exp(v * lam * (z - 1.0))
                         for v, m in self.weights.atoms)

    def pgf_left_shift(self, z: float) -> float:
        """G of the shifted left degree: E[W exp(W mu (z-1))] / E[W]."""
        lam = self.mean_rate
        ew = self.weights.limit_moment(1)
        return math.fsum(m * v * math.exp(v * lam * (z - 1.0))
                         for v, m in self.weights.atoms) / ew

    def pgf_right(self, z: float) -> float:
        """G_{D_r}(z) = sum_k p_k z^k."""
        if z == 1.0:
            return 1.0
        return float(np.sum(self._ps * z ** self._ks))

    def pgf_right_shift(self, z: float) -> float:
        """G of the shifted right degree: sum_k k p_k z^(k-1) / mu."""
        if z == 1.0:
            return 1.0
        return float(np.sum(self._ks * self._ps * z ** (self._ks - 1)) / self.law.mu)

    @property
    def mean_left_shift(self) -> float:
        """E[shifted left degree] = mu E[W^2] / E[W] (times rate_scale)."""
        return (self.mean_rate * self.weights.limit_moment(2)
                / self.weights.limit_moment(1))

    @property
    def mean_right_shift(self) -> float:
        """E[shifted right degree] = (mu2 - mu) / mu."""
        return (self.law.mu2 - self.law.mu) / self.law.mu

    @property
    def offspring_product(self) -> float:
        return self.mean_left_shift * self.mean_right_shift


@dataclass(frozen=True)
class GiantSolution:
    eta_l: float
    xi_l: float
    supercritical: bool
    residual: float
    iterations: int


def solve_giant(laws: LimitLaws, tol: float = 1e-13,
                max_iter: int = 100_000) -> GiantSolution:
    """Smallest solution of eta = G_rshift(G_lshift(eta)) by monotone
    iteration from 0; subcritical laws return eta=1, xi=0."""
    if laws.offspring_product <= 1.0:
        return GiantSolution(1.0, 0.0, False, 0.0, 0)
    eta = 0.0
    for it in range(1, max_iter + 1):
        nxt = laws.pgf_right_shift(laws.pgf_left_shift(eta))
        if abs(nxt - eta) < tol:
            eta = nxt
            break
        eta = nxt
    else:
        raise ArithmeticError("giant fixed point iteration did not converge")
    residual = abs(eta - laws.pgf_right_shift(laws.pgf_left_shift(eta)))
    xi = 1.0 - laws.pgf_left(eta)
    return GiantSolution(eta, xi, True, residual, it)


# ---------------------------------------------------------------------------
# degree oracle (mixed compound Poisson) and total-variation test
# ---------------------------------------------------------------------------

def degree_law_oracle(weights: WeightModel, law: GroupSizeLaw, k_max: int,
                      tail_tol: float = 1e-9,
                      rate_scale: float = 1.0) -> tuple[np.ndarray, float]:
    """Limiting intersection-degree pmf q_0..q_{k_max} plus certified tail.

    The degree is sum_l (l-1) X_l with X_l ~ Poisson(l p_l w) independent,
    i.e. compound Poisson with total rate w*mu and jump pmf
    f(j) = (j+1) p_{j+1} / mu; computed per weight atom via the Panjer
    recursion and mixed over the atoms.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    mu = law.mu
    # jumps larger than k_max cannot contribute to q_0..q_{k_max}
    jumps = np.zeros(k_max + 2)
    for j in range(1, k_max + 2):
        jumps[j] = (j + 1) * law.pmf(j + 1) / mu
    q = np.zeros(k_max + 1)
    for v, mass in weights.atoms:
        lam = v * mu * rate_scale
        qa = np.zeros(k_max + 1)
        qa[0] = math.exp(-lam)
        for m in range(1, k_max + 1):
            j = np.arange(1, m + 1)
            qa[m] = lam / m * float(np.sum(j * jumps[j] * qa[m - j]))
        q += mass * qa
    tail = 1.0 - float(q.sum())
    if tail > tail_tol:
        raise TruncationError(
            f"oracle tail mass {tail:.3g} above {tail_tol}; increase k_max "
            f"(try {2 * k_max + 10})")
    return q, max(tail, 0.0)


@dataclass(frozen=True)
class DegreeCensus:
    counts: np.ndarray  # counts[k] = number of vertices with degree k
    size: int

    @staticmethod
    def from_degrees(degrees: np.ndarray) -> "DegreeCensus":
        degrees = np.asarray(degrees, dtype=np.int64)
        return DegreeCensus(np.bincount(degrees), int(len(degrees)))

    @property
    def masses(self) -> np.ndarray:
        return self.counts / self.size


def tv_degree_test(census: DegreeCensus, oracle: np.ndarray,
                   oracle_tail: float = 0.0) -> float:
    """(1/2) sum_k |Q_k - q_k| over the shared range, counting census mass
    beyond the oracle range fully, plus the oracle tail mass."""
    q_emp = census.masses
    k = max(len(q_emp), len(oracle))
    a = np.zeros(k)
    b = np.zeros(k)
    a[:len(q_emp)] = q_emp
    b[:len(oracle)] = oracle
    return 0.5 * float(np.abs(a - b).sum()) + oracle_tail


# ---------------------------------------------------------------------------
# connected components
# ---------------------------------------------------------------------------

class UnionFind:
    """Weighted union-find with path halving."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def giant_fraction(graph) -> tuple[float, np.ndarray]:
    """Largest-component fraction of (left) vertices plus component labels.

    Accepts a BipartiteState (components via vertex-group incidences) or a
    ProjectedMultigraph (components via edges); only the n graph vertices
    count toward the fraction.
    """
    n = graph.n
    uf = UnionFind(n)
    if isinstance(graph, BipartiteState):
        for g in graph.groups:
            first = g[0]
            for i in g[1:]:
                uf.union(first, i)
    elif isinstance(graph, ProjectedMultigraph):
        for (i, j) in graph.edges:
            uf.union(i, j)
    else:
        raise TypeError(f"unsupported graph type {type(graph)!r}")
    labels = np.fromiter((uf.find(i) for i in range(n)), dtype=np.int64, count=n)
    largest = int(np.bincount(labels).max()) if n else 0
    return largest / n, labels


# ---------------------------------------------------------------------------
# edge-mark law
# ---------------------------------------------------------------------------

def mark_cdf(s1: float, s2: float, t: float) -> float:
    """Limiting joint CDF of (first ON time, first OFF time) of a union-graph
    group: F_t(s1, s2) = (1 - e^(s1 - s2) + s1) / (1 + t)."""
    if s1 < 0 or s1 > t or s2 < s1:
        raise ValueError("need 0 <= s1 <= t and s2 >= s1")
    return (1.0 - math.exp(s1 - s2) + s1) / (1.0 + t) if math.isfinite(s2) \
        else (1.0 + s1) / (1.0 + t)


def mark_cdf_prelimit(s1: float, s2: float, q: float, t: float) -> float:
    """Finite-n joint CDF of the marks of a single group with rate q,
    conditioned on being ON at some point of [0, t]."""
    if s1 < 0 or s1 > t or s2 < s1:
        raise ValueError("need 0 <= s1 <= t and s2 >= s1")
    pi_on = q / (1.0 + q)
    pi_off = 1.0 - pi_on
    denom = pi_on + pi_off * (-math.expm1(-q * t))
    start_on = pi_on * (-math.expm1(-s2)) if math.isfinite(s2) else pi_on
    if not math.isfinite(s2):
        start_off = pi_off * (-math.expm1(-q * s1))
    elif abs(q - 1.0) < 1e-9:
        # q -> 1 limit of the closed form below
        start_off = pi_off * (-math.expm1(-s1) - s1 * math.exp(-s2))
    else:
        start_off = pi_off * (-math.expm1(-q * s1)
                              - q / (q - 1.0)
                              * (math.exp(-s2) - math.exp(-s1 * q + s1 - s2)))
    return (start_on + start_off) / denom


def mark_law_test(timeline: Timeline, grid: list[tuple[float, float]],
                  min_groups: int = 100) -> float:
    """Max absolute deviation between the empirical joint CDF of the first
    (ON, OFF) marks over union-graph groups and the limiting closed form."""
    marks = timeline.marks
    if len(marks) < min_groups:
        raise InsufficientSampleError(
            f"only {len(marks)} union-graph groups; need >= {min_groups}")
    ons = np.array([m.first_on for m in marks.values()])
    offs = np.array([m.first_off for m in marks.values()])
    t = timeline.horizon
    worst = 0.0
    for s1, s2 in grid:
        emp = float(np.mean((ons <= s1) & (offs <= s2)))
        worst = max(worst, abs(emp - mark_cdf(s1, s2, t)))
    return worst


# ---------------------------------------------------------------------------
# maximum group size
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaxGroupProcess:
    """Nondecreasing right-continuous step function t -> K_max over [0, t]."""

    jump_times: np.ndarray   # starts at 0.0 with the initial-state maximum
    values: np.ndarray
    n: int
    alpha: float

    def value_at(self, s: float) -> int:
        idx = int(np.searchsorted(self.jump_times, s, side="right")) - 1
        return int(self.values[idx])

    @property
    def rescaled_values(self) -> np.ndarray:
        return self.values / self.n ** (1.0 / self.alpha)


def kmax_step_process(timeline: Timeline, alpha: float) -> MaxGroupProcess:
    init_max = max((len(g) for g in timeline.initial.groups), default=0)
    times, sizes = timeline.switch_on_events()
    jt, vals = [0.0], [init_max]
    cur = init_max
    for u, k in zip(times.tolist(), sizes.tolist()):
        if k > cur:
            cur = k
            jt.append(u)
            vals.append(cur)
    return MaxGroupProcess(np.array(jt), np.array(vals, dtype=np.int64),
                           timeline.n, alpha)


def kmax_limit_cdf(k, t: float, alpha: float, c_p: float, ew: float,
                   include_initial: bool = True) -> np.ndarray:
    """Frechet-type limit CDF of K_max / n^(1/alpha).

    Groups arriving in (0, t] contribute exp(-t c_p k^-alpha E[W]); the
    stationary time-0 state contributes one more factor of the same form, so
    the window [0, t] has exponent (t + 1).
    """
    k = np.asarray(k, dtype=float)
    scale = (t + 1.0) if include_initial else t
    out = np.where(k > 0, np.exp(-scale * c_p * np.maximum(k, 1e-300) ** (-alpha) * ew), 0.0)
    return out


def ks_statistic(samples: np.ndarray, cdf) -> float:
    """Two-sided KS distance of the empirical CDF from a given CDF, compared
    at the jump points of the empirical CDF (exact for discrete support)."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = len(x)
    if m == 0:
        raise InsufficientSampleError("no samples")
    f = np.asarray(cdf(x), dtype=float)
    hi = np.abs(np.arange(1, m + 1) / m - f)
    lo = np.abs(np.arange(0, m) / m - f)
    return float(np.maximum(hi, lo).max())


def check_kmax_hypotheses(law: GroupSizeLaw) -> float:
    """Validate the size law for the max-group-size limit; returns alpha."""
    if not isinstance(law, PowerLawGroupSizes):
        raise UnsupportedLawError("maximum-group-size limit needs a power law")
    if law.alpha <= 3:
        warnings.warn("alpha <= 3 is outside the limit theorem's hypothesis; "
                      "results are exploratory", RuntimeWarning)
    return law.alpha


def kmax_replica_summary(timeline: Timeline, alpha: float,
                         split: float | None = None) -> dict:
    """Per-replica maxima: the time-0 maximum, the full-window maximum, and
    (optionally) the arrival maxima on (0, split] and (split, t]."""
    proc = kmax_step_process(timeline, alpha)
    out = {
        "k0_max": int(proc.values[0]),
        "k_window_max": int(proc.values[-1]),
    }
    if split is not None:
        times, sizes = timeline.switch_on_events()
        first = sizes[times <= split]
        second = sizes[times > split]
        out["k_arrival_first"] = int(first.max()) if len(first) else 0
        out["k_arrival_second"] = int(second.max()) if len(second) else 0
    return out


# ---------------------------------------------------------------------------
# dynamic giant membership
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GiantTrajectory:
    root: int
    grid: np.ndarray
    indicator: np.ndarray          # 1{root in largest component of slice(s)}
    proxy: np.ndarray | None       # 1{ball boundary at radius r nonempty}
    proxy_radius: int | None


def membership_map(state: BipartiteState) -> dict:
    """vertex -> list of containing groups, built once per state."""
    member_groups: dict[int, list] = {}
    for g in state.groups:
        for i in g:
            member_groups.setdefault(i, []).append(g)
    return member_groups


def ball_boundary_nonempty(member_groups: dict, root: int,
                           radius: int) -> bool:
    """True when the intersection graph has a vertex at exactly the given
    distance from the root (BFS over shared-group adjacency)."""
    seen = {root}
    frontier = [root]
    for _ in range(radius):
        nxt = []
        for v in frontier:
            for g in member_groups.get(v, ()):
                for u in g:
                    if u not in seen:
                        seen.add(u)
                        nxt.append(u)
        if not nxt:
            return False
        frontier = nxt
    return len(frontier) > 0


def giant_trajectory(timeline: Timeline, root: int, grid: list[float],
                     proxy_radius: int | None = None) -> GiantTrajectory:
    """Indicator process of membership of the root in the largest component,
    evaluated by independent slicing at the grid times."""
    ind = np.zeros(len(grid), dtype=np.int64)
    prox = np.zeros(len(grid), dtype=np.int64) if proxy_radius else None
    for idx, s in enumerate(grid):
        state = timeline.slice(s)
        frac, labels = giant_fraction(state)
        counts = np.bincount(labels)
        giant_label = int(np.argmax(counts))
        ind[idx] = int(labels[root] == giant_label and counts[giant_label] > 1)
        if proxy_radius:
            prox[idx] = int(ball_boundary_nonempty(membership_map(state),
                                                   root, proxy_radius))
    return GiantTrajectory(root, np.asarray(grid, dtype=float), ind, prox,
                           proxy_radius)
