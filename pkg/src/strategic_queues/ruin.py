"""Gambler's-ruin closed forms and a finite absorbing-chain solver.

The closed forms cover the classic two-barrier +/-1 walk (probability of
ruin, expected duration in rounds, and the one-barrier limits).  The chain
solver is the desk-scale oracle used against every closed-form expression
in this package: it takes an arbitrary finite continuous-time jump chain
with designated absorbing states and returns, for every state,

* ``eta``   -- probability of hitting the target set J before any other
  absorbing state, and
* ``kappa`` -- expected time (model time units, not jump counts) until
  absorption anywhere,

via dense first-step linear systems (LAPACK LU with partial pivoting).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

#: Hard cap on chain size; desk-scale systems stay far below this.
MAX_STATES = 20_000

#: Tolerance for the p = 1/2 case split of the two-barrier walk.
P_EQUAL_TOL = 1e-12


class DriftTowardOpenBarrier(ValueError):
    """One-barrier expected duration requested with drift away from (or no
    drift toward) the closed barrier, so the expectation is infinite."""


class NotAbsorbing(ValueError):
    """Some state cannot reach any absorbing state."""


class SingularSystem(RuntimeError):
    """The linear solve broke down (should not happen for a valid chain)."""


class TooManyStates(ValueError):
    """Chain exceeds the dense-solver size guard."""


@dataclass(frozen=True)
class RuinSpec:
    """Two-barrier +/-1 walk: win one unit w.p. ``p``, lose w.p. ``1 - p``;
    stop on cumulative loss ``loss_barrier`` or cumulative win ``win_barrier``."""

    p: float
    loss_barrier: int
    win_barrier: int

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError("p must lie strictly inside (0, 1)")
        if self.loss_barrier < 1 or self.win_barrier < 1:
            raise ValueError("barriers must be positive integers")

    @property
    def q(self) -> float:
        return 1.0 - self.p


def ruin_probability(spec: RuinSpec) -> float:
    """Probability the walk hits the loss barrier before the win barrier.

    Symmetric case within ``P_EQUAL_TOL`` of p = 1/2 uses the exact
    W / (L + W) branch; otherwise the (q/p)-power form, evaluated through
    expm1/log1p so nearly-fair walks do not cancel catastrophically.
    """
    l, w = spec.loss_barrier, spec.win_barrier
    if abs(spec.p - 0.5) <= P_EQUAL_TOL:
        return w / (l + w)
    log_r = math.log1p((spec.q - spec.p) / spec.p)  # log(q/p)
    # win probability ((q/p)^L - 1) / ((q/p)^(L+W) - 1)
    p_win = math.expm1(l * log_r) / math.expm1((l + w) * log_r)
    return 1.0 - p_win


def ruin_expected_duration(spec: RuinSpec) -> float:
    """Expected number of rounds until either barrier is hit."""
    l, w = spec.loss_barrier, spec.win_barrier
    if abs(spec.p - 0.5) <= P_EQUAL_TOL:
        return float(l * w)
    log_r = math.log1p((spec.q - spec.p) / spec.p)
    p_win = math.expm1(l * log_r) / math.expm1((l + w) * log_r)
    return (l + w) / (spec.q - spec.p) * (l / (l + w) - p_win)


def one_sided_expected_duration(p: float, barrier: int, side: str) -> float:
    """Expected rounds to reach a single barrier, the opposite one removed.

    ``side="win"`` needs p > 1/2 (drift toward the barrier) and returns
    W / (p - q); ``side="loss"`` needs p < 1/2 and returns L / (q - p).
    Otherwise the expectation is infinite and ``DriftTowardOpenBarrier``
    is raised.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie strictly inside (0, 1)")
    if barrier < 1:
        raise ValueError("barrier must be a positive integer")
    q = 1.0 - p
    if side == "win":
        if p - q <= P_EQUAL_TOL:
            raise DriftTowardOpenBarrier("expected duration infinite for p <= 1/2")
        return barrier / (p - q)
    if side == "loss":
        if q - p <= P_EQUAL_TOL:
            raise DriftTowardOpenBarrier("expected duration infinite for p >= 1/2")
        return barrier / (q - p)
    raise ValueError(f"side must be 'win' or 'loss', got {side!r}")


@dataclass(frozen=True)
class AbsorbingChainSpec:
    """Finite continuous-time jump chain with designated absorbing states.

    ``states`` fixes the (solver) ordering.  ``rates`` maps each state to a
    sequence of (successor, rate) pairs; entries for absorbing states are
    ignored.  ``target`` is the set J whose hitting probability eta is
    wanted; ``other_absorbing`` are the remaining absorbing states.
    Self-loops are allowed and eliminated before solving (they carry no
    information for a continuous-time chain).  Every non-absorbing state
    must have positive total exit rate after self-loop removal.
    """

    states: tuple
    rates: Mapping[Hashable, Sequence[tuple]]
    target: frozenset
    other_absorbing: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "target", frozenset(self.target))
        object.__setattr__(self, "other_absorbing", frozenset(self.other_absorbing))

    @property
    def absorbing(self) -> frozenset:
        return self.target | self.other_absorbing


@dataclass(frozen=True)
class AbsorptionResult:
    """Per-state hitting probability of J (eta) and expected time to
    absorption anywhere (kappa); eta = 1, kappa = 0 on J and kappa = 0 on
    the other absorbing states."""

    eta: dict
    kappa: dict


def _validated_exits(chain: AbsorbingChainSpec):
    """Self-loop-free exit lists and total exit rates for transient states."""
    state_set = set(chain.states)
    if len(state_set) != len(chain.states):
        raise ValueError("duplicate state labels")
    if not chain.target:
        raise ValueError("target set is empty")
    for s in chain.absorbing:
        if s not in state_set:
            raise ValueError(f"absorbing state {s!r} not among states")
    if chain.target & chain.other_absorbing:
        raise ValueError("target and other_absorbing overlap")

    exits = {}
    totals = {}
    for s in chain.states:
        if s in chain.absorbing:
            continue
        out = []
        total = 0.0
        for t, r in chain.rates.get(s, ()):
            r = float(r)
            if not math.isfinite(r) or r < 0.0:
                raise ValueError(f"rate {r!r} on {s!r} -> {t!r} is invalid")
            if t not in state_set:
                raise ValueError(f"transition {s!r} -> {t!r} leaves the state set")
            if t == s or r == 0.0:
                continue
            out.append((t, r))
            total += r
        if total <= 0.0:
            raise ValueError(f"non-absorbing state {s!r} has no exit rate")
        exits[s] = out
        totals[s] = total
    return exits, totals


def _check_reachability(chain: AbsorbingChainSpec, exits) -> None:
    """BFS on reversed positive-rate edges from the absorbing set."""
    reverse = {s: [] for s in chain.states}
    for s, out in exits.items():
        for t, _ in out:
            reverse[t].append(s)
    seen = set(chain.absorbing)
    frontier = deque(seen)
    while frontier:
        t = frontier.popleft()
        for s in reverse[t]:
            if s not in seen:
                seen.add(s)
                frontier.append(s)
    stranded = [s for s in chain.states if s not in seen]
    if stranded:
        raise NotAbsorbing(f"states cannot reach the absorbing set: {stranded[:5]!r}")


def solve_absorption(chain: AbsorbingChainSpec) -> AbsorptionResult:
    """Solve the first-step systems for eta and kappa.

    For transient states, with jump probabilities p(s,t) = rate(s,t)/R(s)
    and holding time 1/R(s) (R(s) = total self-loop-free exit rate):

        eta(s)   = sum_t p(s,t) eta(t)        eta = 1 on J, 0 on other abs.
        kappa(s) = 1/R(s) + sum_t p(s,t) kappa(t)   kappa = 0 on absorbing.
    """
    if len(chain.states) > MAX_STATES:
        raise TooManyStates(f"{len(chain.states)} states exceeds {MAX_STATES}")
    exits, totals = _validated_exits(chain)
    _check_reachability(chain, exits)

    transient = [s for s in chain.states if s not in chain.absorbing]
    index = {s: i for i, s in enumerate(transient)}
    m = len(transient)

    eta = {s: (1.0 if s in chain.target else 0.0) for s in chain.absorbing}
    kappa = {s: 0.0 for s in chain.absorbing}

    if m:
        a = np.eye(m)
        b_eta = np.zeros(m)
        b_kap = np.zeros(m)
        for s in transient:
            i = index[s]
            total = totals[s]
            b_kap[i] = 1.0 / total
            for t, r in exits[s]:
                p = r / total
                if t in chain.target:
                    b_eta[i] += p
                elif t not in chain.other_absorbing:
                    a[i, index[t]] -= p
        try:
            solution = np.linalg.solve(a, np.column_stack([b_eta, b_kap]))
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
        if not np.all(np.isfinite(solution)):
            raise SingularSystem("non-finite solution")
        for s in transient:
            i = index[s]
            eta[s] = float(solution[i, 0])
            kappa[s] = float(solution[i, 1])

    return AbsorptionResult(eta=eta, kappa=kappa)


def birth_death_walk_chain(up_rate: float, down_rate: float, low: int, high: int) -> AbsorbingChainSpec:
    """Walk on integers low..high with absorption at both ends; target is
    the low barrier.  Convenience constructor shared by tests and oracles."""
    states = tuple(range(low, high + 1))
    rates = {
        s: ((s + 1, up_rate), (s - 1, down_rate))
        for s in states
        if low < s < high
    }
    return AbsorbingChainSpec(
        states=states,
        rates=rates,
        target=frozenset({low}),
        other_absorbing=frozenset({high}),
    )
