"""Model inputs: vertex weights, group-size distribution, run configuration.

A group a (a set of k >= 2 vertices) switches OFF -> ON at rate

    q_a = k! * p_k * prod_{i in a} w_i / ell^(k-1),      ell = sum_i w_i,

and ON -> OFF at rate 1, so its stationary ON-probability is q_a / (1 + q_a).
Everything downstream (samplers, limit laws, diagnostics) is parametrised by
the vertex weights and the group-size pmf (p_k)_{k>=2} defined here.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import zeta  # zeta(s, q) is the Hurwitz zeta function


class InvalidGroupError(ValueError):
    """Group has duplicate vertices or members outside [0, n)."""


class DegenerateWeightsError(ValueError):
    """The limiting weight law has zero mean."""


class ConfigError(ValueError):
    """Malformed run configuration."""


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightModel:
    """Vertex weights w_i together with the limiting weight law.

    The limiting law is a finite discrete law given as (value, mass) atoms;
    continuous laws must be discretized by the caller.  If ``weight_cap`` is
    set, every weight is truncated at that value (the cap applies to the
    realized weights; the atoms are expected to respect it too).
    """

    weights: np.ndarray
    atoms: tuple[tuple[float, float], ...]
    weight_cap: float | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) == 0:
            raise ValueError("weights must be a non-empty 1-d array")
        if not np.all(w > 0):
            raise ValueError("all weights must be positive")
        if self.weight_cap is not None:
            if self.weight_cap <= 0:
                raise ValueError("weight_cap must be positive")
            w = np.minimum(w, self.weight_cap)
        object.__setattr__(self, "weights", w)
        masses = np.array([m for _, m in self.atoms])
        if len(masses) == 0 or abs(masses.sum() - 1.0) > 1e-9:
            raise ValueError("atom masses must sum to 1")
        if any(v < 0 for v, _ in self.atoms):
            raise ValueError("atom values must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def ell(self) -> float:
        return float(self.weights.sum())

    def empirical_moment(self, r: int) -> float:
        """E[W_n^r] = (1/n) sum_i w_i^r."""
        return float(np.mean(self.weights ** r))

    def limit_moment(self, r: int) -> float:
        """E[W^r] under the limiting atom law."""
        return float(sum(m * v ** r for v, m in self.atoms))

    def size_biased_atoms(self) -> tuple[tuple[float, float], ...]:
        """Atoms of the size-biased law, mass proportional to v * m."""
        ew = self.limit_moment(1)
        if ew <= 0:
            raise DegenerateWeightsError("E[W] = 0")
        return tuple((v, v * m / ew) for v, m in self.atoms if v * m > 0)

    @staticmethod
    def constant(n: int, value: float = 1.0, weight_cap: float | None = None) -> "WeightModel":
        return WeightModel(np.full(n, float(value)), ((float(value), 1.0),), weight_cap)

    @staticmethod
    def iid_discrete(n: int, values: Sequence[float], masses: Sequence[float],
                     rng: np.random.Generator,
                     weight_cap: float | None = None) -> "WeightModel":
        """Weights drawn iid from the finite discrete law, which is also the limit law."""
        values = [float(v) for v in values]
        masses = [float(m) for m in masses]
        w = rng.choice(values, size=n, p=masses)
        return WeightModel(w, tuple(zip(values, masses)), weight_cap)

    @staticmethod
    def explicit(weights: Sequence[float], atoms: Sequence[tuple[float, float]],
                 weight_cap: float | None = None) -> "WeightModel":
        return WeightModel(np.asarray(weights, dtype=float),
                           tuple((float(v), float(m)) for v, m in atoms), weight_cap)


# ---------------------------------------------------------------------------
# group sizes
# ---------------------------------------------------------------------------

class GroupSizeLaw:
    """Probability mass function p_k on group sizes k >= 2."""

    mu: float     # sum_k k p_k
    mu2: float    # sum_k k^2 p_k
    alpha: float | None
    tail_constant: float | None  # c_p with sum_{l>k} p_l ~ c_p k^(-alpha)

    def pmf(self, k: int) -> float:
        raise NotImplementedError

    def pmf_exact(self, k: int) -> Fraction:
        """Exact rational pmf value (for the tiny-instance enumerators)."""
        return Fraction(self.pmf(k))

    def tail(self, k: int) -> float:
        """P(K > k) = sum_{l > k} p_l."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, m: int, n_max: int) -> np.ndarray:
        """m iid sizes; draws with k > n_max are redrawn (never loops forever
        for n_max >= 2 as long as some p_k with k <= n_max is positive)."""
        raise NotImplementedError

    def support_upto(self, eps: float = 1e-14) -> int:
        """Smallest K with tail(K) < eps (used to truncate series)."""
        raise NotImplementedError

    def pmf_vector(self, k_max: int) -> np.ndarray:
        """Array [p_0, ..., p_{k_max}] (zeros below k=2)."""
        out = np.zeros(k_max + 1)
        for k in range(2, k_max + 1):
            out[k] = self.pmf(k)
        return out


class FiniteGroupSizes(GroupSizeLaw):
    """Explicit pmf on a finite support {2, ..., K}."""

    def __init__(self, pmf: dict[int, float]):
        if not pmf:
            raise ValueError("empty pmf")
        for k, p in pmf.items():
            if k < 2 or int(k) != k:
                raise ValueError(f"group sizes must be integers >= 2, got {k}")
            if p < 0:
                raise ValueError("pmf values must be nonnegative")
        total = math.fsum(pmf.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"pmf must sum to 1 within 1e-12, got {total}")
        self._pmf = {int(k): float(p) for k, p in sorted(pmf.items()) if p > 0}
        self.mu = math.fsum(k * p for k, p in self._pmf.items())
        self.mu2 = math.fsum(k * k * p for k, p in self._pmf.items())
        self.alpha = None
        self.tail_constant = None
        ks = sorted(self._pmf)
        self._ks = np.array(ks)
        self._ps = np.array([self._pmf[k] for k in ks])
        self.k_max = ks[-1]

    def pmf(self, k: int) -> float:
        return self._pmf.get(k, 0.0)

    def pmf_exact(self, k: int) -> Fraction:
        return Fraction(self._pmf.get(k, 0.0))

    def tail(self, k: int) -> float:
        return math.fsum(p for l, p in self._pmf.items() if l > k)

    def support_upto(self, eps: float = 1e-14) -> int:
        return self.k_max

    def sample(self, rng, m, n_max):
        if min(self._pmf) > n_max:
            raise ValueError("no admissible group size <= n")
        out = self._ks[rng.choice(len(self._ks), size=m, p=self._ps)]
        bad = out > n_max
        while bad.any():
            out[bad] = self._ks[rng.choice(len(self._ks), size=int(bad.sum()), p=self._ps)]
            bad = out > n_max
        return out


class PowerLawGroupSizes(GroupSizeLaw):
    """Power-law sizes fixed by their tail: P(K > k) = (2/k)^alpha for k >= 2.

    Hence p_k = (2/(k-1))^alpha - (2/k)^alpha for k >= 3 (and p_2 = 0), the
    tail constant is exactly c_p = 2^alpha, and both mu and mu2 are finite
    whenever alpha > 2.
    """

    def __init__(self, alpha: float):
        if alpha <= 2:
            raise ValueError("alpha must exceed 2 for finite mu and mu2")
        self.alpha = float(alpha)
        self.tail_constant = 2.0 ** alpha
        # E[K] = sum_{j>=0} P(K>j); E[K^2] = sum_{j>=0} (2j+1) P(K>j)
        c = self.tail_constant
        z_a = float(zeta(alpha, 2))        # sum_{j>=2} j^-alpha
        z_a1 = float(zeta(alpha - 1, 2))   # sum_{j>=2} j^-(alpha-1)
        # mu  = 3 + sum_{j>=3} (2/j)^a        = 2 + c z_a  (using c 2^-a = 1)
        # mu2 = 9 + sum_{j>=3} (2j+1) (2/j)^a = 4 + c (2 z_a1 + z_a)
        self.mu = 2.0 + c * z_a
        self.mu2 = 4.0 + c * (2.0 * z_a1 + z_a)
        # self-check: tail(2) must be 1 so that the pmf sums to 1
        assert abs(self.tail(2) - 1.0) < 1e-15

    def pmf(self, k: int) -> float:
        if k < 3:
            return 0.0
        return (2.0 / (k - 1)) ** self.alpha - (2.0 / k) ** self.alpha

    def tail(self, k: int) -> float:
        if k < 2:
            return 1.0
        return (2.0 / k) ** self.alpha

    def support_upto(self, eps: float = 1e-14) -> int:
        return max(3, int(math.ceil(2.0 * eps ** (-1.0 / self.alpha))))

    def sample(self, rng, m, n_max):
        if n_max < 3:
            raise ValueError("power-law sizes need n >= 3")
        u = rng.uniform(size=m)
        # K = min{k : (2/k)^alpha < U}
        out = np.floor(2.0 * u ** (-1.0 / self.alpha)).astype(np.int64) + 1
        bad = out > n_max
        while bad.any():
            u = rng.uniform(size=int(bad.sum()))
            out[bad] = np.floor(2.0 * u ** (-1.0 / self.alpha)).astype(np.int64) + 1
            bad = out > n_max
        return out


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

MODES = ("stationary", "dynamic", "union", "rescaled")


@dataclass(frozen=True)
class ModelConfig:
    """Full description of one run; the seed determines all randomness."""

    n: int
    t: float
    seed: int
    weights_spec: dict = field(default_factory=lambda: {"kind": "constant", "params": {"value": 1.0}})
    group_size_spec: dict = field(default_factory=lambda: {"kind": "finite", "params": {"pmf": {"2": 1.0}}})
    mode: str = "stationary"

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.t < 0:
            raise ConfigError("t must be >= 0")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")

    # -- construction of the concrete model objects -------------------------

    def weight_model(self) -> WeightModel:
        kind = self.weights_spec.get("kind")
        params = self.weights_spec.get("params", {})
        cap = params.get("weight_cap")
        if kind == "constant":
            return WeightModel.constant(self.n, params.get("value", 1.0), cap)
        if kind in ("two_point", "discrete"):
            values, masses = params["values"], params["masses"]
            if kind == "two_point" and len(values) != 2:
                raise ConfigError("two_point weights need exactly two values")
            # dedicated child stream so weight realization never shifts run randomness
            rng = np.random.default_rng(np.random.SeedSequence([int(self.seed), 0x57]))
            return WeightModel.iid_discrete(self.n, values, masses, rng, cap)
        if kind == "explicit":
            return WeightModel.explicit(params["weights"], params["atoms"], cap)
        raise ConfigError(f"unknown weights kind {kind!r}")

    def group_size_law(self) -> GroupSizeLaw:
        kind = self.group_size_spec.get("kind")
        params = self.group_size_spec.get("params", {})
        if kind == "finite":
            return FiniteGroupSizes({int(k): float(p) for k, p in params["pmf"].items()})
        if kind == "power_law":
            return PowerLawGroupSizes(float(params["alpha"]))
        raise ConfigError(f"unknown group_size kind {kind!r}")

    # -- JSON contract -------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n, "t": self.t, "seed": self.seed,
            "weights": self.weights_spec, "group_size": self.group_size_spec,
            "mode": self.mode,
        }, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ModelConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from e
        for fld in ("n", "t", "seed"):
            if fld not in doc:
                raise ConfigError(f"missing required field {fld!r}")
        return ModelConfig(
            n=int(doc["n"]), t=float(doc["t"]), seed=int(doc["seed"]),
            weights_spec=doc.get("weights", {"kind": "constant", "params": {"value": 1.0}}),
            group_size_spec=doc.get("group_size", {"kind": "finite", "params": {"pmf": {"2": 1.0}}}),
            mode=doc.get("mode", "stationary"),
        )


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def _validate_group(group: Sequence[int], n: int) -> tuple[int, ...]:
    g = tuple(sorted(int(i) for i in group))
    if len(g) < 2:
        raise InvalidGroupError("group needs at least 2 vertices")
    if len(set(g)) != len(g):
        raise InvalidGroupError(f"duplicate vertices in group {g}")
    if g[0] < 0 or g[-1] >= n:
        raise InvalidGroupError(f"group members must lie in [0, {n})")
    return g


def group_rate(group: Sequence[int], weights: WeightModel, law: GroupSizeLaw) -> float:
    """OFF -> ON rate q_a = k! p_k prod w_i / ell^(k-1) for the group a."""
    g = _validate_group(group, weights.n)
    k = len(g)
    p = law.pmf(k)
    if p == 0.0:
        return 0.0
    # log-space for stability at large k
    log_q = (math.lgamma(k + 1) + math.log(p)
             + float(np.log(weights.weights[list(g)]).sum())
             - (k - 1) * math.log(weights.ell))
    return math.exp(log_q)


def group_rate_exact(group: Sequence[int], weights: Sequence[Fraction],
                     law: GroupSizeLaw) -> Fraction:
    """Exact rational q_a; weights are given as Fractions."""
    g = tuple(sorted(group))
    k = len(g)
    p = law.pmf_exact(k)
    if p == 0:
        return Fraction(0)
    ell = sum(weights)
    prod = Fraction(1)
    for i in g:
        prod *= weights[i]
    return Fraction(math.factorial(k)) * p * prod / ell ** (k - 1)


def stationary_on_probability(group: Sequence[int], weights: WeightModel,
                              law: GroupSizeLaw) -> float:
    """pi_ON = q_a / (1 + q_a)."""
    q = group_rate(group, weights, law)
    return q / (1.0 + q)


def supercriticality_parameter(weights: WeightModel, law: GroupSizeLaw) -> float:
    """E[W^2] (mu2 - mu) / E[W]; a giant component exists iff this exceeds 1."""
    ew = weights.limit_moment(1)
    if ew <= 0:
        raise DegenerateWeightsError("E[W] = 0")
    return weights.limit_moment(2) * (law.mu2 - law.mu) / ew


def regularity_report(weights: WeightModel, law: GroupSizeLaw,
                      threshold: float = 0.1) -> dict:
    """Finite-n diagnostics for the weight regularity assumptions.

    Flags when max_i w_i^2 / ell exceeds the threshold, signalling that the
    finite-n bias terms in the coupling bounds are not negligible.
    """
    w = weights.weights
    max_w = float(w.max())
    ratio = max_w ** 2 / weights.ell
    return {
        "n": weights.n,
        "mean_w": weights.empirical_moment(1),
        "mean_w2": weights.empirical_moment(2),
        "mean_w3": weights.empirical_moment(3),
        "max_w": max_w,
        "max_w_sq_over_ell": ratio,
        "flag": ratio > threshold,
        "mu": law.mu,
        "mu2": law.mu2,
    }
