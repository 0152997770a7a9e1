"""Customer-side equilibrium objects for the two-class priority queue.

Everything here reduces to two running sums at a fixed load factor rho:

    s(k)     = 1 + rho + ... + rho^(k-1)          (s(0) = 0, s(1) = 1)
    gamma(k) = s(1) + s(2) + ... + s(k)           (gamma(0) = 0)

computed by the recurrence ``s(k+1) = 1 + rho * s(k)``.  All the case-split
closed forms (rho != 1 vs rho = 1) are algebraically equal to expressions in
``s`` and ``gamma``, which are regular at rho = 0 and rho = 1 and do not
overflow for rho > 1 at desk sizes, so no branch ever needs to be taken.
The identities used:

    served probability at position p        P_p = 1 / s(p+1)
    expected sojourn at position p          E_p = gamma(p) / (mu * s(p+1))
    capped-walk clear time (cap L)          H(a, b) = (gamma(L) - gamma(L-a)
                                                       + b * s(L+1)) / mu
    join threshold brackets                 largest n with gamma(n) <= K

Thresholds are found by integer bracketing on the strictly increasing
``gamma`` sequence (doubling scan, then bisection); no floating-point root
finding is ever used.  Ties (net benefit exactly zero) resolve to join/stay.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional

from .model import (
    ModelParams,
    Position,
    QueueState,
    near_one,
    utilizations,
    validate_params,
)

#: Scans refuse to cross this threshold index (reachable only for tiny rho
#: with astronomical reward-to-cost ratios).
MAX_THRESHOLD = 10**6


class ThresholdOverflow(ValueError):
    """A threshold scan exceeded MAX_THRESHOLD."""


class UnstableSemiStrategic(ValueError):
    """Semi-strategic analysis requires rho_a < 1."""


class WrongRegime(ValueError):
    """Operation called in the wrong reward-ratio regime."""


class DomainError(ValueError):
    """Argument outside an operation's stated domain."""


class CapViolation(ValueError):
    """More A-customers than the cap admits."""


class Regime(enum.Enum):
    LOW_RATIO = "low_ratio"
    HIGH_RATIO = "high_ratio"


class SeriesAccumulator:
    """Memoized s(k) and gamma(k) at a fixed load factor.

    ``gamma`` is strictly increasing and unbounded (s(k) >= 1), so integer
    bracketing against it is well defined for any nonnegative bound.
    """

    __slots__ = ("rho", "_s", "_gamma")

    def __init__(self, rho: float):
        if not math.isfinite(rho) or rho < 0.0:
            raise ValueError(f"load factor must be finite and >= 0, got {rho!r}")
        self.rho = float(rho)
        self._s = [0.0]
        self._gamma = [0.0]

    def _extend(self, k: int) -> None:
        s, g, rho = self._s, self._gamma, self.rho
        while len(s) <= k:
            nxt = 1.0 + rho * s[-1]
            s.append(nxt)
            g.append(g[-1] + nxt)

    def s(self, k: int) -> float:
        if k < 0:
            raise ValueError("series index must be >= 0")
        self._extend(k)
        return self._s[k]

    def gamma(self, k: int) -> float:
        if k < 0:
            raise ValueError("series index must be >= 0")
        self._extend(k)
        return self._gamma[k]

    def largest_gamma_leq(self, bound: float) -> "Bracket":
        """Largest integer n with gamma(n) <= bound, plus the bracketing pair.

        Doubling scan to overshoot, then bisection on the memoized prefix.
        """
        if not math.isfinite(bound) or bound < 0.0:
            raise ValueError(f"bound must be finite and >= 0, got {bound!r}")
        hi = 1
        while self.gamma(hi) <= bound:
            hi *= 2
            if hi > MAX_THRESHOLD:
                raise ThresholdOverflow(f"threshold exceeds {MAX_THRESHOLD}")
        # gamma(hi) > bound; find the boundary in the memoized prefix.
        n = bisect_right(self._gamma, bound, lo=0, hi=hi + 1) - 1
        return Bracket(value=n, lower=self._gamma[n], upper=self._gamma[n + 1])


@dataclass(frozen=True)
class Bracket:
    """Integer threshold with its bracketing pair: lower = gamma(value) <=
    bound < gamma(value + 1) = upper (weak tie goes to the larger value)."""

    value: int
    lower: float
    upper: float


@dataclass(frozen=True)
class HighRatioThresholds:
    """High-ratio B thresholds: capacity v beyond the A cap, join bound t,
    and the real value whose floor gave v."""

    v: int
    t: int
    v_real: float


@dataclass(frozen=True)
class ThresholdSet:
    """Every equilibrium threshold for one parameter set.

    ``b_join`` is the largest observed total at which a B-customer joins;
    the stay threshold on Position is ``b_join + 1`` (a B reneges upon
    reaching Position ``b_join + 2``).  ``v``/``t`` are None in the
    low-ratio regime, ``b_semi`` is None when rho_a >= 1 (unstable).
    ``brackets`` maps threshold names to their real root or bracketing pair.
    """

    a_equilibrium: int
    a_social: int
    b_semi: Optional[int]
    regime: Regime
    b_join: int
    v: Optional[int]
    t: Optional[int]
    brackets: dict

    @property
    def b_stay(self) -> int:
        return self.b_join + 1


@dataclass(frozen=True)
class EquilibriumProfile:
    """Fully-strategic equilibrium strategy profile.

    Join/stay predicates depend only on counts visible to the deciding
    customer: A-customers look at the number of A-customers, B-customers at
    the total count ahead of them.  Ties resolve to join/stay.
    """

    thresholds: ThresholdSet

    def a_join(self, n_a: int) -> bool:
        return n_a < self.thresholds.a_equilibrium

    def b_join(self, n_total: int) -> bool:
        return n_total <= self.thresholds.b_join

    def b_stay(self, p: Position) -> bool:
        return p <= self.thresholds.b_stay


def naor_threshold(reward: float, cost: float, mu: float) -> int:
    """Selfish join threshold floor(reward * mu / cost) for one class."""
    if cost <= 0 or mu <= 0 or reward * mu < cost:
        raise ValueError("requires reward * mu >= cost > 0")
    return math.floor(reward * mu / cost)


def naor_social_threshold(reward: float, cost: float, mu: float, rho: float) -> Bracket:
    """Socially optimal join threshold: largest n with gamma_rho(n) <= reward*mu/cost.

    Equals the floor of the real root of the planner equation because gamma
    is strictly increasing; returns the bracketing pair alongside.
    """
    if cost <= 0 or mu <= 0 or reward * mu < cost:
        raise ValueError("requires reward * mu >= cost > 0")
    if rho <= 0:
        raise ValueError("requires rho > 0")
    return SeriesAccumulator(rho).largest_gamma_leq(reward * mu / cost)


def served_prob_position(p: Position, rho_a: float) -> float:
    """Probability a B at position p is served before reaching position p+1."""
    if p < 1:
        raise DomainError("position must be >= 1")
    return 1.0 / SeriesAccumulator(rho_a).s(p + 1)


def sojourn_position(p: Position, rho_a: float, mu: float) -> float:
    """Expected time in system for a B at position p reneging at p+1."""
    if p < 1:
        raise DomainError("position must be >= 1")
    if mu <= 0:
        raise ValueError("mu must be > 0")
    acc = SeriesAccumulator(rho_a)
    return acc.gamma(p) / (mu * acc.s(p + 1))


def net_benefit_semi(p: Position, params: ModelParams) -> float:
    """Expected payoff of a B at position p who would renege at p+1."""
    params = validate_params(params)
    rho_a = utilizations(params).rho_a
    return params.reward_b * served_prob_position(p, rho_a) - params.cost_b * sojourn_position(
        p, rho_a, params.mu
    )


def semi_strategic_threshold(params: ModelParams) -> Bracket:
    """Stay threshold on Position for a B-customer when A-customers are not
    strategic: largest p with gamma(p) <= reward_b * mu / cost_b.

    Requires rho_a < 1 for stability of the semi-strategic system.
    """
    params = validate_params(params)
    rho_a = utilizations(params).rho_a
    if rho_a >= 1.0 - 1e-9:
        raise UnstableSemiStrategic(f"rho_a = {rho_a} >= 1")
    bound = params.reward_b * params.mu / params.cost_b
    return SeriesAccumulator(rho_a).largest_gamma_leq(bound)


def rect_expected_clear_time(n_a: int, n_b: int, cap: int, rho_a: float, mu: float) -> float:
    """Expected time for the capped walk to clear (n_a, n_b) down to (0, 0).

    The walk gains an A at rate rho_a * mu while n_a < cap (self-loop at the
    cap), and loses one customer at rate mu (A-customers first).  In series
    form H(n_a, n_b) = (gamma(cap) - gamma(cap - n_a) + n_b * s(cap+1)) / mu,
    exact at rho_a in {0, 1}.
    """
    if n_a < 0 or n_b < 0:
        raise DomainError("counts must be nonnegative")
    if cap < 0:
        raise DomainError("cap must be nonnegative")
    if n_a > cap:
        raise CapViolation(f"n_a = {n_a} exceeds cap = {cap}")
    if mu <= 0:
        raise ValueError("mu must be > 0")
    acc = SeriesAccumulator(rho_a)
    return (acc.gamma(cap) - acc.gamma(cap - n_a) + n_b * acc.s(cap + 1)) / mu


def _k_b(params: ModelParams) -> float:
    return params.reward_b * params.mu / params.cost_b


def fs_regime(params: ModelParams) -> Regime:
    """Reward-ratio regime split for fully-strategic B-customers.

    HIGH_RATIO iff reward_b * mu / cost_b >= gamma(M) evaluated at rho_a,
    where M is the A-equilibrium threshold; gamma(M) is mu times the capped
    clear time from (M, 0).  The boundary goes to HIGH_RATIO.
    """
    params = validate_params(params)
    m = naor_threshold(params.reward_a, params.cost_a, params.mu)
    acc = SeriesAccumulator(utilizations(params).rho_a)
    return Regime.HIGH_RATIO if _k_b(params) >= acc.gamma(m) else Regime.LOW_RATIO


def fs_threshold_low(params: ModelParams) -> Bracket:
    """Low-ratio join threshold on the observed total.

    A B-customer observing n joins iff gamma(n + 1) <= reward_b*mu/cost_b:
    she enters position n + 1, one deeper than the semi-strategic marginal
    customer, hence the bracket's arguments are shifted by one.  Returned
    bracket: value = b_join, lower = gamma(b_join + 1), upper = gamma(b_join + 2).
    """
    params = validate_params(params)
    if fs_regime(params) is not Regime.HIGH_RATIO:
        stay = SeriesAccumulator(utilizations(params).rho_a).largest_gamma_leq(_k_b(params))
        return Bracket(value=stay.value - 1, lower=stay.lower, upper=stay.upper)
    raise WrongRegime("high-ratio parameters; use fs_thresholds_high")


def fs_thresholds_high(params: ModelParams) -> HighRatioThresholds:
    """High-ratio thresholds: v = floor((K - gamma(M)) / s(M+1)), t = M + v.

    A B-customer joins iff the observed total is below t and reneges upon
    reaching position t + 1.
    """
    params = validate_params(params)
    if fs_regime(params) is not Regime.HIGH_RATIO:
        raise WrongRegime("low-ratio parameters; use fs_threshold_low")
    m = naor_threshold(params.reward_a, params.cost_a, params.mu)
    acc = SeriesAccumulator(utilizations(params).rho_a)
    v_real = (_k_b(params) - acc.gamma(m)) / acc.s(m + 1)
    v = math.floor(v_real)
    return HighRatioThresholds(v=v, t=m + v, v_real=v_real)


def fs_served_prob(n: int, params: ModelParams, thresholds: HighRatioThresholds) -> float:
    """Served probability for a B joining at observed total n (high ratio).

    Certain below v; s(t - n) / s(M + 1) for v <= n < t; undefined at n >= t.
    """
    params = validate_params(params)
    if n < 0 or n >= thresholds.t:
        raise DomainError(f"observed total {n} outside [0, {thresholds.t})")
    if n < thresholds.v:
        return 1.0
    m = thresholds.t - thresholds.v
    acc = SeriesAccumulator(utilizations(params).rho_a)
    return acc.s(thresholds.t - n) / acc.s(m + 1)


def _exit_time(w: int, m: int, mu: float, acc: SeriesAccumulator) -> float:
    # Unconditional expected duration of the two-barrier phase whose
    # distances are (m + 1 - w) down and w up; series form of the
    # duration formula, regular at rho = 1.
    return (w * acc.gamma(m) - (m + 1) * acc.gamma(w - 1)) / (mu * acc.s(m + 1))


def fs_net_benefit(n: int, params: ModelParams, thresholds: HighRatioThresholds) -> float:
    """Expected payoff of a B-customer joining at observed total n (high ratio).

    Three zones:

    * n < v: service is certain; payoff is reward minus the capped clear
      time of the entering configuration (A-count at its worst case).
    * v <= n <= t - 1: she enters position n + 1 and reneges upon reaching
      position t + 1; the walk between the certainty boundary and the
      renege boundary decomposes into an exit phase plus, on success, the
      certain clear time from (0, v) including herself.
    * n = t: she enters position t + 1 already at the equilibrium renege
      point; the marginal evaluation lets her stay until pushed one level
      further (an instant renege would make the payoff identically zero and
      the threshold sign change unobservable).  Both barriers shift up by
      one, which is why the bracket below uses v + 1.
    """
    params = validate_params(params)
    v, t = thresholds.v, thresholds.t
    m = t - v
    if n < 0 or n > t:
        raise DomainError(f"observed total {n} outside [0, {t}]")
    rho_a = utilizations(params).rho_a
    acc = SeriesAccumulator(rho_a)
    r_b, c_b, mu = params.reward_b, params.cost_b, params.mu

    if n < v:
        n_a = min(n, m)
        clear = rect_expected_clear_time(n_a, n - n_a + 1, m, rho_a, mu)
        return r_b - c_b * clear

    if n < t:
        p = acc.s(t - n) / acc.s(m + 1)
        exit_time = _exit_time(t - n, m, mu, acc)
        certain_tail = v * acc.s(m + 1) / mu
        return r_b * p - c_b * (exit_time + p * certain_tail)

    p = 1.0 / acc.s(m + 1)
    exit_time = acc.gamma(m) / (mu * acc.s(m + 1))
    certain_tail = (v + 1) * acc.s(m + 1) / mu
    return r_b * p - c_b * (exit_time + p * certain_tail)


def g_value(n: int, params: ModelParams, thresholds: HighRatioThresholds) -> float:
    """Per-success exit time G(n) = exit phase duration / served probability.

    Defined for rho_a != 1 and v <= n <= t - 1; strictly increasing in n,
    with G(t - 1) = gamma(M) / mu closing the marginal join inequality with
    equality.
    """
    params = validate_params(params)
    v, t = thresholds.v, thresholds.t
    if n < v or n > t - 1:
        raise DomainError(f"observed total {n} outside [{v}, {t - 1}]")
    rho_a = utilizations(params).rho_a
    if near_one(rho_a):
        raise DomainError("g_value is stated for rho_a != 1")
    m = t - v
    acc = SeriesAccumulator(rho_a)
    w = t - n
    return (w * acc.gamma(m) - (m + 1) * acc.gamma(w - 1)) / (params.mu * acc.s(w))


def fs_equilibrium_profile(params: ModelParams) -> EquilibriumProfile:
    """Assemble the full fully-strategic equilibrium profile."""
    params = validate_params(params)
    rho = utilizations(params)
    k_a = params.reward_a * params.mu / params.cost_a

    a_eq = naor_threshold(params.reward_a, params.cost_a, params.mu)
    a_soc = naor_social_threshold(params.reward_a, params.cost_a, params.mu, rho.rho_a)
    brackets = {
        "a_equilibrium": {"real_root": k_a},
        "a_social": {"bracket": (a_soc.lower, a_soc.upper)},
    }

    try:
        b_semi = semi_strategic_threshold(params)
        b_semi_value: Optional[int] = b_semi.value
        brackets["b_semi"] = {"bracket": (b_semi.lower, b_semi.upper)}
    except UnstableSemiStrategic:
        b_semi_value = None

    regime = fs_regime(params)
    if regime is Regime.HIGH_RATIO:
        high = fs_thresholds_high(params)
        b_join, v, t = high.t - 1, high.v, high.t
        brackets["v"] = {"real_root": high.v_real}
    else:
        low = fs_threshold_low(params)
        b_join, v, t = low.value, None, None
        brackets["b_join"] = {"bracket": (low.lower, low.upper)}

    thresholds = ThresholdSet(
        a_equilibrium=a_eq,
        a_social=a_soc.value,
        b_semi=b_semi_value,
        regime=regime,
        b_join=b_join,
        v=v,
        t=t,
        brackets=brackets,
    )
    return EquilibriumProfile(thresholds=thresholds)
