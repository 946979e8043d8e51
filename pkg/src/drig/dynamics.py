"""Exact ON/OFF Markov dynamics on [0, t].

Groups switch ON at rate q_a while OFF and OFF at rate 1 while ON.  The
activation stream is realized as a global Poisson candidate stream of rate
ell (the same candidate machinery as the stationary sampler), thinned by
discarding candidates that name a currently-ON group.  Since groups evolve
independently, the trajectory of each group is a function of its own
candidate arrival times and its own exponential clocks only, so the whole
timeline can be built group by group - the law is identical to processing a
global event queue in time order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .params import GroupSizeLaw, ModelConfig, WeightModel
from .sampling import (
    AliasTable, BipartiteState, Group, draw_candidate_groups, group_rates_bulk,
    sample_stationary,
)


class HorizonError(ValueError):
    """Time argument outside [0, t]."""


@dataclass
class ActivationMark:
    """ON intervals of one group within the observation window.

    Interval starts lie in [0, t]; the final OFF time is the actual simulated
    switch-off and may exceed the horizon (never capped: the limiting mark
    law puts positive mass on off-times beyond t).  A group that is ON at
    time 0 has its first interval starting at exactly 0.
    """

    group: Group
    intervals: list[tuple[float, float]]

    @property
    def first_on(self) -> float:
        return self.intervals[0][0]

    @property
    def first_off(self) -> float:
        return self.intervals[0][1]

    def active_at(self, s: float) -> bool:
        return any(on <= s <= off for on, off in self.intervals)


@dataclass
class Timeline:
    """Full event history: one ActivationMark per group ever active in [0, t]."""

    n: int
    horizon: float
    marks: dict[Group, ActivationMark]
    initial: BipartiteState

    def slice(self, s: float) -> BipartiteState:
        if not (0.0 <= s <= self.horizon):
            raise HorizonError(f"s={s} outside [0, {self.horizon}]")
        active = tuple(g for g, m in self.marks.items() if m.active_at(s))
        return BipartiteState(n=self.n, groups=active)

    def union_graph(self) -> BipartiteState:
        return BipartiteState(n=self.n, groups=tuple(self.marks))

    def count_multi_switch(self) -> int:
        """Number of groups with two or more ON intervals."""
        return sum(1 for m in self.marks.values() if len(m.intervals) >= 2)

    def switch_on_events(self) -> tuple[np.ndarray, np.ndarray]:
        """(times, sizes) of all strictly-positive switch-ON events, sorted."""
        times, sizes = [], []
        for g, m in self.marks.items():
            for on, _ in m.intervals:
                if on > 0.0:
                    times.append(on)
                    sizes.append(len(g))
        order = np.argsort(times) if times else np.array([], dtype=int)
        return (np.array(times)[order], np.array(sizes, dtype=np.int64)[order])

    def event_log(self):
        """Strictly time-sorted (time, kind, members) events within [0, t]."""
        events = []
        for g, m in self.marks.items():
            for on, off in m.intervals:
                if on > 0.0:
                    events.append((on, "on", g))
                if off <= self.horizon:
                    events.append((off, "off", g))
        events.sort(key=lambda e: (e[0], e[1], e[2]))
        return events


def simulate(config: ModelConfig,
             rng: np.random.Generator | None = None) -> Timeline:
    """Exact trajectory on [0, t], started from a stationary sample."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    weights = config.weight_model()
    law = config.group_size_law()
    alias = AliasTable(weights.weights)
    t = config.t

    initial = sample_stationary(config, rng, weights=weights, law=law, alias=alias)
    marks: dict[Group, ActivationMark] = {}
    init_offs = rng.exponential(size=initial.m)
    for g, e in zip(initial.groups, init_offs.tolist()):
        marks[g] = ActivationMark(g, [(0.0, e)])

    if t > 0.0:
        n_cand = int(rng.poisson(weights.ell * t))
        times = np.sort(rng.uniform(0.0, t, size=n_cand))
        keys = draw_candidate_groups(rng, n_cand, weights, law, alias)
        on_durations = rng.exponential(size=n_cand)
        for u, g, e in zip(times.tolist(), keys, on_durations.tolist()):
            if g is None:
                continue
            mark = marks.get(g)
            if mark is None:
                marks[g] = ActivationMark(g, [(u, u + e)])
            elif u > mark.intervals[-1][1]:
                # group is OFF at the candidate time: accept the switch-ON
                mark.intervals.append((u, u + e))
            # else: candidate names a currently-ON group and is discarded

    return Timeline(n=config.n, horizon=t, marks=marks, initial=initial)


def slice_state(timeline: Timeline, s: float) -> BipartiteState:
    return timeline.slice(s)


def union_graph(timeline: Timeline) -> BipartiteState:
    return timeline.union_graph()


def count_multi_switch(timeline: Timeline) -> int:
    return timeline.count_multi_switch()


def sample_rescaled(config: ModelConfig,
                    rng: np.random.Generator | None = None) -> BipartiteState:
    """Stationary sample of the rescaled graph: rates (1 + t) * q_a."""
    return sample_stationary(config, rng, rate_scale=1.0 + config.t)


def union_inclusion_probability(q: float, t: float) -> float:
    """P(group ON at some point of [0, t]) = pi_ON + pi_OFF (1 - e^(-t q))."""
    pi_on = q / (1.0 + q)
    return pi_on + (1.0 - pi_on) * (-math.expm1(-t * q))


def equivalence_bound(weights: WeightModel, law: GroupSizeLaw, t: float,
                      term_tol: float = 1e-18) -> float:
    """Closed-form bound on sum_a (pi_union - pi_rescaled)^2 / pi_rescaled:

        (1+t)^3 sum_k k^4 p_k^3 ell^-(k-1) (k^2/ell)^(k-2) (E[Wn^3]/E[Wn])^k

    The k-sum is truncated once terms fall below term_tol.
    """
    ell = weights.ell
    ratio = weights.empirical_moment(3) / weights.empirical_moment(1)
    total = 0.0
    prev = math.inf
    for k in range(2, law.support_upto(1e-30) + 1):
        p = law.pmf(k)
        if p == 0.0:
            continue
        term = (k ** 4 * p ** 3 * ell ** (-(k - 1))
                * (k * k / ell) ** (k - 2) * ratio ** k)
        if term > prev and term > 1.0:
            raise ArithmeticError("divergent term growth in equivalence bound")
        prev = term
        total += term
        if term < term_tol:
            break
    return (1.0 + t) ** 3 * total
