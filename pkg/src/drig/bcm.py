"""Bipartite configuration model (BCM) with community degrees.

A balanced degree sequence pair assigns d_l[i] half-edges to vertex i and
d_r[a] half-edges to community slot a; the model is a uniform perfect
matching of the two half-edge sets, collapsed to an edge-multiplicity matrix.
The exact multigraph law is

    P(G) = (1 / h!) * prod_i d_l[i]! * prod_a d_r[a]! / prod_{i,a} x[i,a]!

which this module verifies by exhaustive enumeration of all h! matchings,
together with the two uniformity theorems (BCM given simplicity, and the
product-Bernoulli group graph given its degree sequence) and the bridge
identifying the two conditional laws on tiny instances.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .params import GroupSizeLaw, group_rate_exact
from .sampling import Group, InstanceTooLargeError, enumerate_stationary_law

ENUM_HALF_EDGE_CAP = 8


class BalanceError(ValueError):
    """Left and right degree sums differ."""


class DegreeMismatchError(ValueError):
    """Multigraph degrees do not match the declared sequence."""


# ---------------------------------------------------------------------------
# degree sequences and multigraphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeSequencePair:
    d_left: tuple
    d_right: tuple

    def __post_init__(self):
        if any(d < 0 or int(d) != d for d in self.d_left + self.d_right):
            raise ValueError("degrees must be nonnegative integers")
        if sum(self.d_left) != sum(self.d_right):
            raise BalanceError(
                f"left sum {sum(self.d_left)} != right sum {sum(self.d_right)}")

    @property
    def h(self) -> int:
        """Total number of half-edges on each side."""
        return int(sum(self.d_left))


@dataclass(frozen=True)
class BipartiteMultigraph:
    """Sparse multiplicity matrix keyed by (left vertex, right slot)."""

    n_left: int
    n_right: int
    x: tuple  # sorted tuple of ((i, a), multiplicity)

    @staticmethod
    def from_dict(n_left: int, n_right: int, x: dict) -> "BipartiteMultigraph":
        return BipartiteMultigraph(n_left, n_right,
                                   tuple(sorted((k, v) for k, v in x.items() if v)))

    @property
    def left_degrees(self) -> tuple:
        d = [0] * self.n_left
        for (i, _), m in self.x:
            d[i] += m
        return tuple(d)

    @property
    def right_degrees(self) -> tuple:
        d = [0] * self.n_right
        for (_, a), m in self.x:
            d[a] += m
        return tuple(d)

    def is_simple(self) -> bool:
        return all(m <= 1 for _, m in self.x)


# ---------------------------------------------------------------------------
# sampling and exact law
# ---------------------------------------------------------------------------

def _half_edges(degrees) -> list:
    return [idx for idx, d in enumerate(degrees) for _ in range(d)]


def sample_bcm(degrees: DegreeSequencePair,
               rng: np.random.Generator) -> BipartiteMultigraph:
    """Uniform matching of left to right half-edges (a random permutation of
    the right half-edge list), collapsed to multiplicities."""
    left = _half_edges(degrees.d_left)
    right = _half_edges(degrees.d_right)
    perm = rng.permutation(len(right))
    x = Counter((i, right[p]) for i, p in zip(left, perm.tolist()))
    return BipartiteMultigraph.from_dict(len(degrees.d_left),
                                         len(degrees.d_right), x)


def bcm_law(graph: BipartiteMultigraph,
            degrees: DegreeSequencePair) -> Fraction:
    """Exact probability of one multigraph under the uniform matching."""
    if graph.left_degrees != tuple(degrees.d_left) \
            or graph.right_degrees != tuple(degrees.d_right):
        raise DegreeMismatchError("graph degrees do not match the sequence")
    num = Fraction(1)
    for d in degrees.d_left:
        num *= math.factorial(d)
    for d in degrees.d_right:
        num *= math.factorial(d)
    den = Fraction(math.factorial(degrees.h))
    for _, m in graph.x:
        num /= math.factorial(m)
    return num / den


def enumerate_bcm(degrees: DegreeSequencePair) -> dict:
    """Exact matching-count law over multigraphs: graph -> Fraction.

    Walks all h! pairings (left half-edges in fixed order against every
    permutation of right half-edges); only h <= 8 is allowed.
    """
    if degrees.h > ENUM_HALF_EDGE_CAP:
        raise InstanceTooLargeError(
            f"h = {degrees.h} > {ENUM_HALF_EDGE_CAP}: enumeration refused")
    left = _half_edges(degrees.d_left)
    right = _half_edges(degrees.d_right)
    total = math.factorial(len(right))
    counts: Counter = Counter()
    for perm in itertools.permutations(right):
        x = Counter(zip(left, perm))
        g = BipartiteMultigraph.from_dict(len(degrees.d_left),
                                          len(degrees.d_right), x)
        counts[g] += 1
    return {g: Fraction(c, total) for g, c in counts.items()}


# ---------------------------------------------------------------------------
# exhaustive verifications
# ---------------------------------------------------------------------------

def verify_bcm_law(degrees: DegreeSequencePair) -> dict:
    """Enumerated matching frequencies must equal the closed-form law for
    every multigraph, and the law must sum to exactly 1."""
    enum = enumerate_bcm(degrees)
    mismatches = [g for g, p in enum.items() if p != bcm_law(g, degrees)]
    total = sum(enum.values())
    return {
        "h": degrees.h,
        "multigraphs": len(enum),
        "law_matches_enumeration": not mismatches,
        "sums_to_one": total == 1,
        "ok": not mismatches and total == 1,
    }


def verify_bcm_uniform_given_simple(degrees: DegreeSequencePair) -> dict:
    """All simple graphs with the sequence must be equally likely under the
    matching law conditioned on simplicity."""
    enum = enumerate_bcm(degrees)
    simple = {g: p for g, p in enum.items() if g.is_simple()}
    report = {
        "h": degrees.h,
        "multigraphs": len(enum),
        "simple_graphs": len(simple),
        "simplicity_probability": float(sum(simple.values())),
    }
    if not simple:
        report.update(uniform=True, ok=True, note="no simple graphs")
        return report
    probs = set(simple.values())
    report.update(uniform=len(probs) == 1, ok=len(probs) == 1)
    return report


def bgrg_degree_key(active: frozenset, n: int) -> tuple:
    """Degree sequence of a group-graph configuration: the left degree vector
    together with the right degrees indexed by subset (the subset is the
    identity of the right vertex, so inactive groups have degree 0)."""
    d_left = [0] * n
    for g in active:
        for i in g:
            d_left[i] += 1
    d_right = tuple(sorted((g, len(g)) for g in active))
    return tuple(d_left), d_right


def bgrg_factorization(active: frozenset, weights_exact: list,
                       law: GroupSizeLaw, potential: list,
                       rate_scale: Fraction = Fraction(1)) -> Fraction:
    """Closed-form configuration probability as a function of degrees only:

        prod_i w_i^{d_l_i} * prod_active (k! p_k rate / ell^(k-1))
        * prod_all_potential (1 + q_a)^(-1)
    """
    n = len(weights_exact)
    d_left, _ = bgrg_degree_key(active, n)
    ell = sum(weights_exact)
    prob = Fraction(1)
    for i, d in enumerate(d_left):
        prob *= weights_exact[i] ** d
    for g in active:
        k = len(g)
        prob *= Fraction(math.factorial(k)) * law.pmf_exact(k) \
            * rate_scale / ell ** (k - 1)
    for g in potential:
        q = group_rate_exact(g, weights_exact, law) * rate_scale
        prob /= 1 + q
    return prob


def verify_bgrg_uniform_given_degrees(weights_exact: list, law: GroupSizeLaw,
                                      rate_scale: Fraction = Fraction(1)) -> dict:
    """Group the exact enumerated law by degree sequence; every class must be
    exactly uniform and every configuration must match the degree-only
    closed form."""
    measure = enumerate_stationary_law(weights_exact, law, rate_scale)
    potential = sorted({g for cfg in measure for g in cfg})
    classes: dict[tuple, list] = {}
    for cfg, p in measure.items():
        classes.setdefault(bgrg_degree_key(cfg, len(weights_exact)), []).append(
            (cfg, p))
    non_uniform = [k for k, members in classes.items()
                   if len({p for _, p in members}) > 1]
    factor_fail = [
        cfg for cfg, p in measure.items()
        if p != bgrg_factorization(cfg, weights_exact, law, potential, rate_scale)
    ]
    class_report = [
        {
            "degrees": {"left": list(d_left),
                        "right": [[sorted(g), k] for g, k in d_right]},
            "members": [sorted(sorted(g) for g in cfg) for cfg, _ in members],
            "probability": str(members[0][1]),
        }
        for (d_left, d_right), members in sorted(classes.items())
    ]
    return {
        "n": len(weights_exact),
        "configurations": len(measure),
        "classes": class_report,
        "uniform": not non_uniform,
        "factorization_matches": not factor_fail,
        "ok": not non_uniform and not factor_fail,
    }


# ---------------------------------------------------------------------------
# bridge: group graph given degrees == BCM given simplicity
# ---------------------------------------------------------------------------

def _bcm_config_law(d_left: tuple, sizes: tuple) -> dict:
    """BCM law, conditioned on simplicity, quotiented by relabelings of the
    right slots: keys are frozensets of member tuples (i.e. group-graph
    configurations).  Raises if a simple outcome repeats a subset, which
    cannot happen for degree pairs realizable by the group graph."""
    degrees = DegreeSequencePair(tuple(d_left), tuple(sizes))
    enum = enumerate_bcm(degrees)
    out: dict[frozenset, Fraction] = {}
    z = Fraction(0)
    for g, p in enum.items():
        if not g.is_simple():
            continue
        z += p
        groups = [tuple(sorted(i for (i, a), m in g.x if a == slot))
                  for slot in range(len(sizes))]
        if len(set(groups)) != len(groups):
            raise ValueError("simple matching repeats a subset; degree pair "
                             "is not group-graph realizable")
        key = frozenset(groups)
        out[key] = out.get(key, Fraction(0)) + p
    if z == 0:
        return {}
    return {k: v / z for k, v in out.items()}


def verify_bridge(weights_exact: list, law: GroupSizeLaw,
                  rate_scale: Fraction = Fraction(1)) -> dict:
    """For every degree sequence the enumerated group graph realizes, its
    conditional law must equal the BCM law given simplicity with the same
    degrees (right slots carrying the active group sizes)."""
    n = len(weights_exact)
    measure = enumerate_stationary_law(weights_exact, law, rate_scale)
    by_deg: dict[tuple, dict] = {}
    for cfg, p in measure.items():
        d_left, d_right = bgrg_degree_key(cfg, n)
        sizes = tuple(sorted((k for _, k in d_right), reverse=True))
        by_deg.setdefault((d_left, sizes), {}).update({cfg: p})
    failures = []
    compared = 0
    skipped = 0
    for (d_left, sizes), members in by_deg.items():
        if not sizes:
            continue  # the empty configuration has nothing to match
        if sum(sizes) > ENUM_HALF_EDGE_CAP:
            skipped += 1  # matching enumeration infeasible for this class
            continue
        compared += 1
        z = sum(members.values())
        bgrg_cond = {cfg: p / z for cfg, p in members.items()}
        bcm_cond = _bcm_config_law(d_left, sizes)
        if bgrg_cond != bcm_cond:
            failures.append({"d_left": d_left, "sizes": sizes})
    return {
        "n": n,
        "degree_classes_compared": compared,
        "degree_classes_skipped": skipped,
        "failures": failures,
        "ok": not failures and compared > 0,
    }
