"""Social-optimum thresholds: the unconstrained global planner and the
priority-bound per-class planners.

The per-class B-planner needs the hitting probability eta and expected
absorption time kappa of a jump chain on a trapezoid of states

    {(i, j) : 0 <= i <= m*, 0 <= j, i + j <= n}

where i counts A-customers, j counts B-customers including the tagged
last one, (0, 0) is the service target, and any transition across the
diagonal i + j = n is a forced renege.  Transitions: A-arrivals move
right at rate lambda_a (blocked at i = m*), B-arrivals move up at rate
lambda_b (under the planner's LCFS ordering a fresh B overtakes the
tagged one), services move left, or down along the j-axis.  The chain is
solved exactly by the dense absorbing-chain solver; the served
probability and sojourn then carry closed-form prefactors for the
triangle phase above the rectangle, which is a plain two-barrier walk in
the combined load factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .model import ModelParams, QueueState, utilizations, validate_params
from .ruin import AbsorbingChainSpec, AbsorptionResult, solve_absorption
from .strategic import (
    Bracket,
    SeriesAccumulator,
    naor_social_threshold,
)

#: Candidate scan guard for the B-planner threshold.
SCAN_LIMIT = 10**4

#: Sentinel label for the forced-renege absorbing state.
RENEGE = "renege"


class DegenerateTrapezoid(ValueError):
    """Trapezoid analysis needs n > m_star; below that the single-class
    combined-load formulas apply."""


class ScanDiverged(RuntimeError):
    """B-planner scan found no sign change within the candidate guard."""


@dataclass(frozen=True)
class GlobalPlan:
    """Unconstrained planner: cap the favored class (higher reward-to-cost
    ratio) at its own social threshold, cap total occupancy for the
    unfavored class, and force the last unfavored customer to renege when a
    favored arrival overflows the total."""

    favored: str  # "a" or "b"
    favored_threshold: int
    total_threshold: int
    eviction_rule: str
    brackets: dict


@dataclass(frozen=True)
class TrapezoidSpec:
    """State space for one B-planner candidate threshold n (> m_star)."""

    m_star: int
    n: int
    lambda_a: float
    lambda_b: float
    mu: float

    def __post_init__(self):
        if self.m_star < 1:
            raise ValueError("m_star must be >= 1")
        if self.n <= self.m_star:
            raise DegenerateTrapezoid(f"n = {self.n} must exceed m_star = {self.m_star}")
        if self.lambda_a <= 0 or self.lambda_b < 0 or self.mu <= 0:
            raise ValueError("rates must be positive (lambda_b may be zero)")

    @property
    def rho(self) -> float:
        return (self.lambda_a + self.lambda_b) / self.mu


@dataclass(frozen=True)
class BPlannerThreshold:
    """B-planner result: the threshold itself, whether it coincides with the
    global plan's total threshold, and the scanned marginal values (kept so
    a non-single-crossing scan is reportable rather than silently resolved)."""

    value: int
    coincides_with_global: bool
    scan: tuple
    single_crossing: bool


def a_planner_threshold(params: ModelParams) -> Bracket:
    """A-planner threshold: the single-class social threshold at rho_a."""
    params = validate_params(params)
    rho_a = utilizations(params).rho_a
    return naor_social_threshold(params.reward_a, params.cost_a, params.mu, rho_a)


def global_thresholds(params: ModelParams) -> GlobalPlan:
    """Thresholds of the unconstrained social planner.

    The favored class is the one with the larger reward-to-cost ratio (ties
    go to A, keeping the service order aligned with the fixed priority
    structure; lambda_b = 0 also forces A since no B class exists).  The
    favored cap uses the favored class's own utilization; the total cap uses
    the unfavored class's reward and cost with the combined utilization.
    """
    params = validate_params(params)
    util = utilizations(params)
    ratio_a = params.reward_a / params.cost_a
    ratio_b = params.reward_b / params.cost_b
    favored = "b" if (ratio_b > ratio_a and params.lambda_b > 0) else "a"

    if favored == "a":
        fav = naor_social_threshold(params.reward_a, params.cost_a, params.mu, util.rho_a)
        tot = naor_social_threshold(params.reward_b, params.cost_b, params.mu, util.rho)
    else:
        fav = naor_social_threshold(params.reward_b, params.cost_b, params.mu, util.rho_b)
        tot = naor_social_threshold(params.reward_a, params.cost_a, params.mu, util.rho)

    return GlobalPlan(
        favored=favored,
        favored_threshold=fav.value,
        total_threshold=tot.value,
        eviction_rule="last unfavored customer in queue reneges on overflow",
        brackets={
            "favored_threshold": (fav.lower, fav.upper),
            "total_threshold": (tot.lower, tot.upper),
        },
    )


def trapezoid_chain(spec: TrapezoidSpec) -> AbsorbingChainSpec:
    """Build the trapezoid jump chain with target (0, 0) and a single
    forced-renege state absorbing every transition across i + j = n."""
    m, n = spec.m_star, spec.n
    states = [(i, j) for i in range(m + 1) for j in range(n - i + 1)]
    rates = {}
    for i, j in states:
        if (i, j) == (0, 0):
            continue
        out = []
        if i < m:
            dest = (i + 1, j) if i + 1 + j <= n else RENEGE
            out.append((dest, spec.lambda_a))
        # at i = m an arriving A balks: no transition
        if spec.lambda_b > 0:
            dest = (i, j + 1) if i + j + 1 <= n else RENEGE
            out.append((dest, spec.lambda_b))
        if i > 0:
            out.append(((i - 1, j), spec.mu))
        else:
            out.append(((0, j - 1), spec.mu))
        rates[(i, j)] = tuple(out)
    states.append(RENEGE)
    return AbsorbingChainSpec(
        states=tuple(states),
        rates=rates,
        target=frozenset({(0, 0)}),
        other_absorbing=frozenset({RENEGE}),
    )


def solve_trapezoid(spec: TrapezoidSpec) -> AbsorptionResult:
    """Solve the trapezoid chain; exposed so the printed eta system can be
    residual-checked against the same solution the metrics use."""
    return solve_absorption(trapezoid_chain(spec))


def b_planner_metrics(
    spec: TrapezoidSpec,
    state: QueueState,
    solution: Optional[AbsorptionResult] = None,
) -> tuple:
    """Served probability P and expected sojourn E for the tagged last
    B-customer entering on the diagonal n_a + n_b = spec.n.

    The triangle phase above the rectangle is a two-barrier walk in the
    combined load factor rho: its success probability is 1/s(m*+1) and its
    unconditional duration gamma(m*)/(mu s(m*+1)), both independent of where
    on the diagonal the walk starts.  On success it stands at (0, n - m*),
    from which the solved chain supplies eta and kappa:

        P = eta(0, n - m*) / s(m*+1)
        E = gamma(m*) / (mu s(m*+1)) + kappa(0, n - m*) / s(m*+1)
    """
    if state.n != spec.n:
        raise ValueError(f"state total {state.n} must equal spec.n = {spec.n}")
    if state.n_a > spec.m_star:
        raise ValueError(f"state has {state.n_a} A-customers above the cap {spec.m_star}")
    if state.n_b < 1:
        raise ValueError("the tagged customer is a B, so n_b >= 1")
    if solution is None:
        solution = solve_trapezoid(spec)
    acc = SeriesAccumulator(spec.rho)
    m = spec.m_star
    entry = (0, spec.n - m)
    beta = 1.0 / acc.s(m + 1)
    first_passage = acc.gamma(m) / (spec.mu * acc.s(m + 1))
    p = beta * solution.eta[entry]
    e = first_passage + beta * solution.kappa[entry]
    return p, e


def trapezoid_eta_residual(spec: TrapezoidSpec, solution: Optional[AbsorptionResult] = None) -> float:
    """Max residual of the B-planner eta equations over the solved values.

    The equations are checked in uniformized form with the full event rate
    D = lambda_a + lambda_b + mu on the left; blocked A-arrivals at i = m*
    appear as self-loop terms.  The closed-form boundary row at
    j = n - m* + 1 uses the combined load factor in both numerator and
    denominator (the triangle moves with both arrival streams).
    """
    if solution is None:
        solution = solve_trapezoid(spec)
    eta = solution.eta
    m, n = spec.m_star, spec.n
    la, lb, mu = spec.lambda_a, spec.lambda_b, spec.mu
    d = la + lb + mu
    top = n - m
    acc = SeriesAccumulator(spec.rho)

    worst = abs(eta[(0, 0)] - 1.0)

    def rhs(i, j):
        # one uniformized step from interior state (i, j)
        total = 0.0
        if i < m:
            total += la * eta[(i + 1, j)]
        else:
            total += la * eta[(i, j)]
        up = (i, j + 1)
        total += lb * (eta[up] if i + j + 1 <= n else 0.0)
        total += mu * eta[(i - 1, j) if i > 0 else (0, j - 1)]
        return total / d

    for j in range(1, top + 1):
        worst = max(worst, abs(eta[(0, j)] - rhs(0, j)))
    for i in range(1, m + 1):
        for j in range(0, top + 1):
            worst = max(worst, abs(eta[(i, j)] - rhs(i, j)))
    # closed-form boundary row above the rectangle
    for i in range(0, m):
        expected = acc.s(m - i) / acc.s(m + 1) * eta[(0, top)]
        worst = max(worst, abs(eta[(i, top + 1)] - expected))
    return worst


def _degenerate_b_threshold(params: ModelParams, m_star: int) -> int:
    # For positions n <= m_star the A-cap is unreachable, so the marginal
    # value reduces to the single-class bracketing in the combined load.
    util = utilizations(params)
    bound = params.reward_b * params.mu / params.cost_b
    bracket = SeriesAccumulator(util.rho).largest_gamma_leq(bound)
    return min(m_star, bracket.value)


def b_planner_threshold(params: ModelParams) -> BPlannerThreshold:
    """Largest position n at which the B-planner's marginal value is
    nonnegative.

    When reward_b/cost_b < reward_a/cost_a the B-planner coincides with the
    global plan's total threshold.  Otherwise candidates n = m*+1, m*+2, ...
    are scanned through the trapezoid metrics, stopping once the value has
    been negative for three consecutive candidates; monotonicity of the
    value in n is monitored, not assumed.
    """
    params = validate_params(params)
    if params.reward_b / params.cost_b < params.reward_a / params.cost_a:
        plan = global_thresholds(params)
        return BPlannerThreshold(
            value=plan.total_threshold,
            coincides_with_global=True,
            scan=(),
            single_crossing=True,
        )

    m_star = a_planner_threshold(params).value
    scan = []
    best: Optional[int] = None
    negatives_in_row = 0
    n = m_star
    while negatives_in_row < 3:
        n += 1
        if n > m_star + SCAN_LIMIT:
            raise ScanDiverged(f"no sign change by n = {n}")
        spec = TrapezoidSpec(
            m_star=m_star, n=n, lambda_a=params.lambda_a,
            lambda_b=params.lambda_b, mu=params.mu,
        )
        p, e = b_planner_metrics(spec, QueueState(n_a=0, n_b=n))
        value = params.reward_b * p - params.cost_b * e
        scan.append((n, value))
        if value >= 0.0:
            best = n
            negatives_in_row = 0
        else:
            negatives_in_row += 1

    if best is None:
        best = _degenerate_b_threshold(params, m_star)

    signs = [v >= 0.0 for _, v in scan]
    crossings = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    return BPlannerThreshold(
        value=best,
        coincides_with_global=False,
        scan=tuple(scan),
        single_crossing=crossings <= 1,
    )
