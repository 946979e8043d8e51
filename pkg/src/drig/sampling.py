"""Exact sampling of the stationary bipartite community graph.

The active set has the product-Bernoulli law prod_a Bernoulli(q_a/(1+q_a))
without ever enumerating the exponentially many potential groups:

1. draw a Poisson(ell) number of candidates; each candidate gets an iid size
   from p_k and k member draws iid proportional to the weights,
2. discard candidates with repeated members - the surviving candidates form a
   Poisson point process on distinct groups with intensity exactly q_a,
3. deduplicate, and retain each occupied group with probability
   [q/(1+q)] / [1 - e^(-q)], which lies in (0, 1] for every q > 0.

A rate_scale factor of (1+t) turns the same pipeline into the sampler for the
rescaled stationary graph.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .params import (
    FiniteGroupSizes, GroupSizeLaw, ModelConfig, WeightModel,
    group_rate_exact,
)

Group = tuple[int, ...]


class InstanceTooLargeError(ValueError):
    """Exhaustive enumeration requested on too large an instance."""


# ---------------------------------------------------------------------------
# weighted vertex sampling
# ---------------------------------------------------------------------------

class AliasTable:
    """Walker/Vose alias method: O(n) setup, O(1) per draw."""

    def __init__(self, probs: np.ndarray):
        p = np.asarray(probs, dtype=float)
        if np.any(p < 0):
            raise ValueError("negative probability")
        p = p / p.sum()
        n = len(p)
        self.n = n
        scaled = p * n
        self.prob = np.zeros(n)
        self.alias = np.zeros(n, dtype=np.int64)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s, l = small.pop(), large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = l
            scaled[l] = scaled[l] + scaled[s] - 1.0
            (small if scaled[l] < 1.0 else large).append(l)
        for i in large + small:
            self.prob[i] = 1.0

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        idx = rng.integers(0, self.n, size=size)
        keep = rng.uniform(size=idx.shape) < self.prob[idx]
        return np.where(keep, idx, self.alias[idx])


# ---------------------------------------------------------------------------
# bipartite state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BipartiteState:
    """An active set of groups plus the quantities derived from it."""

    n: int
    groups: tuple[Group, ...]

    @cached_property
    def left_degrees(self) -> np.ndarray:
        """d_i = number of active groups containing vertex i."""
        d = np.zeros(self.n, dtype=np.int64)
        flat = [i for g in self.groups for i in g]
        if flat:
            np.add.at(d, np.array(flat), 1)
        return d

    @cached_property
    def size_counts(self) -> Counter:
        """A_k = number of active groups of size k."""
        return Counter(len(g) for g in self.groups)

    @property
    def m(self) -> int:
        """M_n = total number of active groups."""
        return len(self.groups)

    @cached_property
    def intersection_degrees(self) -> np.ndarray:
        """Degrees in the one-node projection: d_i = sum over groups (|a|-1)."""
        d = np.zeros(self.n, dtype=np.int64)
        for g in self.groups:
            inc = len(g) - 1
            for i in g:
                d[i] += inc
        return d

    def handshake_ok(self) -> bool:
        return int(self.left_degrees.sum()) == sum(len(g) for g in self.groups)

    def to_jsonl(self) -> str:
        import json
        return "\n".join(json.dumps({"members": list(g), "size": len(g)})
                         for g in self.groups)


# ---------------------------------------------------------------------------
# candidate machinery (shared with the dynamic simulator)
# ---------------------------------------------------------------------------

def draw_candidate_groups(rng: np.random.Generator, m: int,
                          weights: WeightModel, law: GroupSizeLaw,
                          alias: AliasTable | None = None) -> list[Group | None]:
    """m candidate groups; entries are sorted member tuples, or None where the
    candidate drew a repeated vertex (zero intensity for non-simple groups)."""
    if m == 0:
        return []
    if alias is None:
        alias = AliasTable(weights.weights)
    sizes = law.sample(rng, m, n_max=weights.n)
    out: list[Group | None] = [None] * m
    for k in np.unique(sizes):
        idx = np.nonzero(sizes == k)[0]
        members = alias.draw(rng, (len(idx), int(k)))
        members.sort(axis=1)
        ok = np.all(np.diff(members, axis=1) != 0, axis=1)
        for j, row, good in zip(idx.tolist(), members.tolist(), ok.tolist()):
            if good:
                out[j] = tuple(row)
    return out


def group_rates_bulk(groups: list[Group], weights: WeightModel,
                     law: GroupSizeLaw) -> np.ndarray:
    """Vectorized q_a for a list of (already validated) groups."""
    q = np.zeros(len(groups))
    if not groups:
        return q
    logw = np.log(weights.weights)
    log_ell = math.log(weights.ell)
    sizes = np.array([len(g) for g in groups])
    for k in np.unique(sizes):
        idx = np.nonzero(sizes == k)[0]
        p = law.pmf(int(k))
        if p == 0.0:
            continue
        mat = np.array([groups[i] for i in idx], dtype=np.int64)
        log_q = (gammaln(k + 1) + math.log(p)
                 + logw[mat].sum(axis=1) - (k - 1) * log_ell)
        q[idx] = np.exp(log_q)
    return q


def occupancy_thinning_probability(q):
    """[q/(1+q)] / [1 - e^(-q)], the exact correction from 'occupied by the
    candidate Poisson process' to 'ON under the stationary law'.

    The expression tends to 1 as q -> 0, which also covers rates that
    underflow to exactly 0 in double precision."""
    q = np.asarray(q, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = q / ((1.0 + q) * (-np.expm1(-q)))
    return np.where(q > 0.0, out, 1.0)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def sample_stationary(config: ModelConfig,
                      rng: np.random.Generator | None = None,
                      rate_scale: float = 1.0,
                      weights: WeightModel | None = None,
                      law: GroupSizeLaw | None = None,
                      alias: AliasTable | None = None) -> BipartiteState:
    """Exact sample of the stationary graph (rate_scale=1) or of the rescaled
    graph with rates (rate_scale)*q_a."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    weights = weights if weights is not None else config.weight_model()
    law = law if law is not None else config.group_size_law()
    m = int(rng.poisson(weights.ell * rate_scale))
    cands = draw_candidate_groups(rng, m, weights, law, alias)
    occupied = list(dict.fromkeys(g for g in cands if g is not None))
    q = group_rates_bulk(occupied, weights, law) * rate_scale
    retain = occupancy_thinning_probability(q)
    u = rng.uniform(size=len(occupied))
    active = tuple(g for g, keep in zip(occupied, u < retain) if keep)
    return BipartiteState(n=config.n, groups=active)


def enumerate_stationary_law(weights_exact: list[Fraction], law: GroupSizeLaw,
                             rate_scale: Fraction = Fraction(1),
                             max_groups: int = 25) -> dict[frozenset, Fraction]:
    """Exact product measure over all 2^G active-set configurations of a tiny
    instance, in rational arithmetic.  Keys are frozensets of groups."""
    n = len(weights_exact)
    if not isinstance(law, FiniteGroupSizes):
        raise InstanceTooLargeError("enumeration needs a finite-support size law")
    potential: list[Group] = []
    for k in sorted(law._pmf):
        if k > n:
            continue
        potential.extend(itertools.combinations(range(n), k))
        if len(potential) > max_groups:
            raise InstanceTooLargeError(
                f"more than {max_groups} potential groups")
    pis = []
    for g in potential:
        q = group_rate_exact(g, weights_exact, law) * rate_scale
        pis.append(q / (1 + q))
    out: dict[frozenset, Fraction] = {}
    for mask in itertools.product((0, 1), repeat=len(potential)):
        prob = Fraction(1)
        for x, pi in zip(mask, pis):
            prob *= pi if x else (1 - pi)
        key = frozenset(g for g, x in zip(potential, mask) if x)
        out[key] = prob
    return out


def poisson_coupling_bound(i: int, k: int, weights: WeightModel,
                           law: GroupSizeLaw) -> float:
    """Upper bound on the coupling error between the number of size-k groups
    containing vertex i and a Poisson(k p_k w_i) variable:

        2 (k(k-1) p_k)^2 (w_i^2 / ell) ((k-1)/ell)^(k-2) (E[Wn^2]/E[Wn])^(k-1)
    """
    if not (2 <= k <= weights.n):
        raise ValueError("need 2 <= k <= n")
    p = law.pmf(k)
    if p == 0.0:
        return 0.0
    wi = float(weights.weights[i])
    ell = weights.ell
    ratio = weights.empirical_moment(2) / weights.empirical_moment(1)
    return (2.0 * (k * (k - 1) * p) ** 2 * wi ** 2 / ell
            * ((k - 1) / ell) ** (k - 2) * ratio ** (k - 1))
