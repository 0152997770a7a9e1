"""Domain types, parameter validation, and derived load factors.

Conventions used throughout the package:

* Class A has preemptive priority over class B; within a class the queue
  is FCFS unless a planner policy says otherwise.
* ``Position`` is the 1-based rank of a tagged B-customer: position
  ``p`` means ``p - 1`` customers ahead, and ``p = 1`` means in service
  (still preemptible by an arriving A).
* Functions named ``*_position`` take the tagged customer's position;
  functions taking a pair ``(n_a, n_b)`` take the customers *ahead*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

#: Load factors within this distance of 1 are routed to the rho = 1 branch
#: of any case-split expression.  The series recurrences used everywhere
#: make both branches agree well inside this tolerance.
RHO_ONE_TOL = 1e-9

#: Exact key set of a JSON parameter record.
PARAM_KEYS = ("lambda_a", "lambda_b", "mu", "reward_a", "cost_a", "reward_b", "cost_b")

#: 1-based rank of a tagged customer; 1 = in service (preemptible).
Position = int


class ParamError(ValueError):
    """Base class for parameter validation failures."""


class NotFinite(ParamError):
    """A parameter is NaN, infinite, or not a number."""


class NonPositiveRate(ParamError):
    """A parameter that must be positive is not (lambda_b may be zero)."""


class RewardTooSmall(ParamError):
    """reward * mu < cost: such customers would never join and the system
    would sit idle, so the configuration is rejected."""

    def __init__(self, klass: str):
        self.klass = klass
        super().__init__(f"reward_{klass} * mu < cost_{klass}")


class UnknownKeys(ParamError):
    """A JSON parameter record carries keys outside the schema."""

    def __init__(self, keys):
        self.keys = tuple(sorted(keys))
        super().__init__(f"unknown parameter keys: {', '.join(self.keys)}")


class MissingKeys(ParamError):
    """A JSON parameter record lacks required keys."""

    def __init__(self, keys):
        self.keys = tuple(sorted(keys))
        super().__init__(f"missing parameter keys: {', '.join(self.keys)}")


@dataclass(frozen=True)
class ModelParams:
    """Arrival rates, service rate, and per-class reward / waiting cost.

    All rates are events per unit time; rewards are money units, costs are
    money units per unit time in system.  ``lambda_b = 0`` is allowed so the
    single-class model is recoverable; all other rates must be positive.
    """

    lambda_a: float
    lambda_b: float
    mu: float
    reward_a: float
    cost_a: float
    reward_b: float
    cost_b: float


@dataclass(frozen=True)
class Utilizations:
    """Per-class and combined load factors."""

    rho_a: float
    rho_b: float
    rho: float


@dataclass(frozen=True)
class QueueState:
    """Counts of A- and B-customers, either in system or ahead of a tagged
    customer depending on context (each call site says which)."""

    n_a: int
    n_b: int

    def __post_init__(self):
        if self.n_a < 0 or self.n_b < 0:
            raise ValueError("queue counts must be nonnegative")

    @property
    def n(self) -> int:
        return self.n_a + self.n_b


def _as_finite_float(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NotFinite(f"{name} is not a number: {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise NotFinite(f"{name} is not finite: {value!r}")
    return value


def validate_params(raw) -> ModelParams:
    """Validate a parameter record and return an immutable ``ModelParams``.

    ``raw`` may be a mapping with exactly the keys of :data:`PARAM_KEYS` or an
    existing ``ModelParams`` (validation is idempotent).  Nothing is clamped:
    bad values raise.
    """
    if isinstance(raw, ModelParams):
        fields = {k: getattr(raw, k) for k in PARAM_KEYS}
    else:
        missing = [k for k in PARAM_KEYS if k not in raw]
        if missing:
            raise MissingKeys(missing)
        fields = {k: raw[k] for k in PARAM_KEYS}

    vals = {k: _as_finite_float(k, v) for k, v in fields.items()}

    if vals["lambda_a"] <= 0:
        raise NonPositiveRate("lambda_a must be > 0")
    if vals["lambda_b"] < 0:
        raise NonPositiveRate("lambda_b must be >= 0")
    if vals["mu"] <= 0:
        raise NonPositiveRate("mu must be > 0")
    for k in ("reward_a", "cost_a", "reward_b", "cost_b"):
        if vals[k] <= 0:
            raise NonPositiveRate(f"{k} must be > 0")
    for klass in ("a", "b"):
        if vals[f"reward_{klass}"] * vals["mu"] < vals[f"cost_{klass}"]:
            raise RewardTooSmall(klass)

    return ModelParams(**vals)


def params_from_json(obj) -> ModelParams:
    """Build ``ModelParams`` from a decoded JSON object with exactly the
    schema keys.  Unknown keys are an error listing them."""
    if not isinstance(obj, dict):
        raise ParamError("parameter record must be a JSON object")
    unknown = [k for k in obj if k not in PARAM_KEYS]
    if unknown:
        raise UnknownKeys(unknown)
    return validate_params(obj)


def utilizations(params: ModelParams) -> Utilizations:
    """Field-wise load factors; rho is the exact sum rho_a + rho_b."""
    rho_a = params.lambda_a / params.mu
    rho_b = params.lambda_b / params.mu
    return Utilizations(rho_a=rho_a, rho_b=rho_b, rho=rho_a + rho_b)


def near_one(rho: float) -> bool:
    """True when a load factor should be treated as exactly 1."""
    return abs(rho - 1.0) <= RHO_ONE_TOL
