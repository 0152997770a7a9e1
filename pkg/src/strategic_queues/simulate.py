"""Discrete-event simulator of the two-class preemptive-priority M/M/1.

This is the statistical oracle for every closed form in the package and
the engine behind the welfare comparisons.  Design points:

* Exact event-driven dynamics: exponential interarrivals per class,
  exponential services, preempt-resume priority (an arriving A displaces a
  B in service).  Services are redrawn on resume, which is
  distributionally equivalent for exponential services; a resume-residual
  variant is kept behind a switch so the equivalence is testable.
* The event queue is keyed by (time, sequence number); the sequence number
  is a deterministic tiebreak, so identical seeds give identical runs.
* RNG: numpy's Philox counter-based 64-bit generator.  Replication r of a
  run with seed s draws from three independent streams (A arrivals, B
  arrivals, services) spawned from ``SeedSequence((s, r))``, so scenarios
  sharing a seed share arrival processes (common random numbers) and
  replications can be merged in any order.
* B-customers renege only at A-arrival epochs (positions worsen only
  then); planner policies instead force the last unfavored customer out
  when a favored arrival overflows the total cap.
* Welfare accrues cost continuously (integrated occupancy times per-class
  cost) and rewards at service completions, both inside the measurement
  window that starts after the warmup fraction of the horizon.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import ModelParams, QueueState, utilizations, validate_params
from .planner import GlobalPlan, a_planner_threshold, b_planner_threshold, global_thresholds
from .strategic import (
    EquilibriumProfile,
    fs_equilibrium_profile,
    semi_strategic_threshold,
)

OCCUPANCY_GUARD = 10**7
_PROBE_LIMIT = 2**20

_ARRIVAL_A, _ARRIVAL_B, _COMPLETION = 0, 1, 2


class ConfigError(ValueError):
    """Invalid simulation configuration."""


class OverflowGuard(RuntimeError):
    """System occupancy exceeded the runaway guard."""


@dataclass(frozen=True)
class SimConfig:
    """Seed, replication count, horizon (event count or time), and warmup
    fraction discarded before steady-state measurement starts."""

    seed: int
    replications: int = 1
    horizon_events: Optional[int] = None
    horizon_time: Optional[float] = None
    warmup: float = 0.2
    thin_arrival_sampling: Optional[int] = None

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if (self.horizon_events is None) == (self.horizon_time is None):
            raise ConfigError("set exactly one of horizon_events / horizon_time")
        if self.horizon_events is not None and self.horizon_events <= 0:
            raise ConfigError("horizon_events must be > 0")
        if self.horizon_time is not None and self.horizon_time <= 0:
            raise ConfigError("horizon_time must be > 0")
        if not (0.0 <= self.warmup < 1.0):
            raise ConfigError("warmup must lie in [0, 1)")
        if self.thin_arrival_sampling is not None and self.thin_arrival_sampling < 1:
            raise ConfigError("thin_arrival_sampling must be >= 1")


@dataclass(frozen=True)
class PlannerEviction:
    """Forced-renege rule: when a favored-class arrival pushes the total
    past ``total_threshold``, the last unfavored customer in queue leaves."""

    favored: str  # "a" or "b"
    total_threshold: int


@dataclass(frozen=True)
class StrategyPolicy:
    """Join/renege predicates seen by the simulator.

    ``a_join``/``b_join`` receive the state observed by the arriving
    customer (excluding themselves); equilibrium A-strategies only read
    ``state.n_a``, but planner policies for an unfavored A class need the
    total, hence the full state.  ``b_renege`` maps a Position to True when
    a B at that position leaves.  ``planner_eviction`` switches the engine
    to planner mode: favored class served first, forced reneges on
    overflow, no voluntary reneging.
    """

    a_join: Callable[[QueueState], bool]
    b_join: Callable[[QueueState], bool]
    b_renege: Callable[[int], bool]
    planner_eviction: Optional[PlannerEviction] = None


def always_join_policy() -> StrategyPolicy:
    return StrategyPolicy(
        a_join=lambda s: True,
        b_join=lambda s: True,
        b_renege=lambda p: False,
    )


def equilibrium_policy(profile: EquilibriumProfile) -> StrategyPolicy:
    th = profile.thresholds
    return StrategyPolicy(
        a_join=lambda s: s.n_a < th.a_equilibrium,
        b_join=lambda s: s.n <= th.b_join,
        b_renege=lambda p: p > th.b_stay,
    )


def semi_strategic_policy(params: ModelParams) -> StrategyPolicy:
    """A-customers always join; B-customers use the semi-strategic stay
    threshold (join iff the entering position does not exceed it)."""
    stay = semi_strategic_threshold(params).value
    return StrategyPolicy(
        a_join=lambda s: True,
        b_join=lambda s: s.n + 1 <= stay,
        b_renege=lambda p: p > stay,
    )


def global_plan_policy(plan: GlobalPlan) -> StrategyPolicy:
    if plan.favored == "a":
        a_join = lambda s: s.n_a < plan.favored_threshold
        b_join = lambda s: s.n < plan.total_threshold
    else:
        a_join = lambda s: s.n < plan.total_threshold
        b_join = lambda s: s.n_b < plan.favored_threshold
    return StrategyPolicy(
        a_join=a_join,
        b_join=b_join,
        b_renege=lambda p: False,
        planner_eviction=PlannerEviction(plan.favored, plan.total_threshold),
    )


def class_planner_policy(a_threshold: int, b_total_threshold: int) -> StrategyPolicy:
    """Two class planners under binding priority: A capped at its own social
    threshold, B admission capped on the total, last B bumped when an A
    arrival overflows the total."""
    return StrategyPolicy(
        a_join=lambda s: s.n_a < a_threshold,
        b_join=lambda s: s.n < b_total_threshold,
        b_renege=lambda p: False,
        planner_eviction=PlannerEviction("a", b_total_threshold),
    )


@dataclass
class ClassTally:
    arrivals: int = 0
    served: int = 0
    balked: int = 0
    reneged: int = 0
    remaining: int = 0
    sojourn_sum: float = 0.0
    sojourn_count: int = 0
    reward_sum: float = 0.0
    cost_integral: float = 0.0

    def conserved(self) -> bool:
        return self.arrivals == self.served + self.balked + self.reneged + self.remaining


@dataclass
class ReplicationResult:
    tally_a: ClassTally
    tally_b: ClassTally
    measured_time: float
    occupancy: dict
    arrival_samples: list
    events: int
    end_time: float

    def welfare_rate(self, klass: str) -> float:
        t = self.tally_a if klass == "a" else self.tally_b
        if self.measured_time <= 0.0:
            return math.nan
        return (t.reward_sum - t.cost_integral) / self.measured_time

    def mean_sojourn(self, klass: str) -> float:
        t = self.tally_a if klass == "a" else self.tally_b
        return t.sojourn_sum / t.sojourn_count if t.sojourn_count else math.nan


def _mean_se(values) -> tuple:
    arr = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    if arr.size == 1:
        return float(arr[0]), math.nan
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


@dataclass
class SimStats:
    """Aggregated statistics over replications, with the per-replication
    results retained for paired (common-random-number) comparisons."""

    replications: list

    def counts(self, klass: str) -> dict:
        keys = ("arrivals", "served", "balked", "reneged", "remaining")
        out = {k: 0 for k in keys}
        for rep in self.replications:
            t = rep.tally_a if klass == "a" else rep.tally_b
            for k in keys:
                out[k] += getattr(t, k)
        return out

    def welfare_rates(self, klass: str):
        return [rep.welfare_rate(klass) for rep in self.replications]

    def total_welfare_rates(self):
        return [rep.welfare_rate("a") + rep.welfare_rate("b") for rep in self.replications]

    def mean_sojourn(self, klass: str) -> tuple:
        return _mean_se([rep.mean_sojourn(klass) for rep in self.replications])

    def welfare_rate(self, klass: str) -> tuple:
        return _mean_se(self.welfare_rates(klass))

    def total_welfare_rate(self) -> tuple:
        return _mean_se(self.total_welfare_rates())

    def occupancy(self) -> dict:
        merged = {}
        for rep in self.replications:
            for k, v in rep.occupancy.items():
                merged[k] = merged.get(k, 0.0) + v
        return merged

    def arrival_samples(self) -> list:
        out = []
        for rep in self.replications:
            out.extend(rep.arrival_samples)
        return out

    def to_dict(self) -> dict:
        d = {"replications": len(self.replications)}
        for klass in ("a", "b"):
            mean_soj, se_soj = self.mean_sojourn(klass)
            wr, wr_se = self.welfare_rate(klass)
            d[klass] = dict(self.counts(klass))
            d[klass].update(
                mean_sojourn=mean_soj,
                mean_sojourn_se=se_soj,
                welfare_rate=wr,
                welfare_rate_se=wr_se,
            )
        tot, tot_se = self.total_welfare_rate()
        d["total_welfare_rate"] = tot
        d["total_welfare_rate_se"] = tot_se
        d["occupancy"] = {f"{k[0]},{k[1]}": v for k, v in sorted(self.occupancy().items())}
        return d


class _ExpStream:
    """Buffered unit-mean exponential draws from one generator."""

    __slots__ = ("gen", "buf", "i")

    def __init__(self, gen, block: int = 4096):
        self.gen = gen
        self.buf = gen.standard_exponential(block)
        self.i = 0

    def draw(self) -> float:
        if self.i >= self.buf.size:
            self.buf = self.gen.standard_exponential(self.buf.size)
            self.i = 0
        v = self.buf[self.i]
        self.i += 1
        return float(v)


def replication_streams(seed: int, rep: int):
    """Three independent Philox generators (A arrivals, B arrivals,
    services) for one replication; deterministic in (seed, rep)."""
    children = np.random.SeedSequence(entropy=(seed, rep)).spawn(3)
    return tuple(np.random.Generator(np.random.Philox(c)) for c in children)


class _Replication:
    def __init__(self, params, policy, config, rep, service_resume):
        self.p = params
        self.policy = policy
        self.cfg = config
        self.resume_residual = service_resume == "residual"
        gen_a, gen_b, gen_s = replication_streams(config.seed, rep)
        self.ea, self.eb, self.es = _ExpStream(gen_a), _ExpStream(gen_b), _ExpStream(gen_s)

        # The priority class preempts and is served first: A under the
        # equilibrium and class-planner regimes, the favored class under
        # the unconstrained global plan.
        pe = policy.planner_eviction
        self.priority = pe.favored if pe is not None else "a"

        self.clock = 0.0
        self.heap = []
        self.seq = 0
        self.queues = {"a": deque(), "b": deque()}  # (arrival_time, remaining or None)
        self.serving = None  # (klass, arrival_time)
        self.svc_token = 0
        self.svc_done_at = math.inf

        self.tally = {"a": ClassTally(), "b": ClassTally()}
        self.occupancy = {}
        self.arrival_samples = []
        self.meas_start: Optional[float] = None
        self.last_t = 0.0
        self.measured_end = 0.0

    # -- state helpers -------------------------------------------------
    def _count(self, klass) -> int:
        return len(self.queues[klass]) + (1 if self.serving and self.serving[0] == klass else 0)

    def _push(self, t, kind, token=0):
        heapq.heappush(self.heap, (t, self.seq, kind, token))
        self.seq += 1

    def _advance(self, t):
        if self.meas_start is not None:
            lo = max(self.last_t, self.meas_start)
            if t > lo:
                dt = t - lo
                na, nb = self._count("a"), self._count("b")
                self.tally["a"].cost_integral += dt * self.p.cost_a * na
                self.tally["b"].cost_integral += dt * self.p.cost_b * nb
                key = (na, nb)
                self.occupancy[key] = self.occupancy.get(key, 0.0) + dt
                self.measured_end = t
        self.last_t = t

    def _start_service(self):
        if self.serving is not None:
            return
        secondary = "b" if self.priority == "a" else "a"
        for klass in (self.priority, secondary):
            q = self.queues[klass]
            if q:
                arr, remaining = q.popleft()
                if self.resume_residual and remaining is not None:
                    duration = remaining
                else:
                    duration = self.es.draw() / self.p.mu
                self.serving = (klass, arr)
                self.svc_token += 1
                self.svc_done_at = self.clock + duration
                self._push(self.svc_done_at, _COMPLETION, self.svc_token)
                return

    def _preempt_serving(self):
        klass, arr = self.serving
        remaining = self.svc_done_at - self.clock if self.resume_residual else None
        self.queues[klass].appendleft((arr, remaining))
        self.serving = None
        self.svc_token += 1  # pending completion is now stale

    def _evict_last(self, klass):
        """Forced renege of the unfavored customer farthest from service."""
        q = self.queues[klass]
        if q:
            q.pop()
            self.tally[klass].reneged += 1
        elif self.serving and self.serving[0] == klass:
            self.serving = None
            self.svc_token += 1
            self.tally[klass].reneged += 1
            self._start_service()

    def _handle_arrival(self, klass):
        pol, t = self.policy, self.clock
        tally = self.tally[klass]
        tally.arrivals += 1
        state = QueueState(self._count("a"), self._count("b"))
        if klass == "a":
            thin = self.cfg.thin_arrival_sampling
            if thin and self.meas_start is not None and t >= self.meas_start:
                if tally.arrivals % thin == 0:
                    self.arrival_samples.append(state.n_a)
            joins = pol.a_join(state)
        else:
            joins = pol.b_join(state)

        if not joins:
            tally.balked += 1
        else:
            if klass == self.priority and self.serving and self.serving[0] != klass:
                self._preempt_serving()
            self.queues[klass].append((t, None))
            self._start_service()
            pe = pol.planner_eviction
            if pe is None:
                if klass == "a":
                    # voluntary reneging: positions worsen only on A arrivals
                    while self.queues["b"] and pol.b_renege(self._count("a") + self._count("b")):
                        self.queues["b"].pop()
                        self.tally["b"].reneged += 1
            elif klass == pe.favored and self._count("a") + self._count("b") > pe.total_threshold:
                self._evict_last("b" if pe.favored == "a" else "a")

        if klass == "a":
            self._push(t + self.ea.draw() / self.p.lambda_a, _ARRIVAL_A)
        else:
            self._push(t + self.eb.draw() / self.p.lambda_b, _ARRIVAL_B)

    def _handle_completion(self):
        klass, arr = self.serving
        self.serving = None
        tally = self.tally[klass]
        tally.served += 1
        if self.meas_start is not None and self.clock >= self.meas_start:
            reward = self.p.reward_a if klass == "a" else self.p.reward_b
            tally.reward_sum += reward
            if arr >= self.meas_start:
                tally.sojourn_sum += self.clock - arr
                tally.sojourn_count += 1
        self._start_service()

    def run(self) -> ReplicationResult:
        cfg = self.cfg
        self._push(self.ea.draw() / self.p.lambda_a, _ARRIVAL_A)
        if self.p.lambda_b > 0:
            self._push(self.eb.draw() / self.p.lambda_b, _ARRIVAL_B)

        warm_events = None
        if cfg.horizon_events is not None:
            warm_events = math.ceil(cfg.warmup * cfg.horizon_events)
            if warm_events == 0:
                self.meas_start = 0.0
        else:
            self.meas_start = cfg.warmup * cfg.horizon_time
        events = 0

        while True:
            t, _, kind, token = heapq.heappop(self.heap)
            if kind == _COMPLETION and token != self.svc_token:
                continue  # stale completion from a preempted service
            if cfg.horizon_time is not None and t > cfg.horizon_time:
                self._advance(cfg.horizon_time)
                break
            self._advance(t)
            self.clock = t
            if kind == _ARRIVAL_A:
                self._handle_arrival("a")
            elif kind == _ARRIVAL_B:
                self._handle_arrival("b")
            else:
                self._handle_completion()
            events += 1
            if self._count("a") + self._count("b") > OCCUPANCY_GUARD:
                raise OverflowGuard("system occupancy exceeded the runaway guard")
            if warm_events is not None and events == warm_events and self.meas_start is None:
                self.meas_start = self.clock
            if cfg.horizon_events is not None and events >= cfg.horizon_events:
                break

        self.tally["a"].remaining = self._count("a")
        self.tally["b"].remaining = self._count("b")
        if not (self.tally["a"].conserved() and self.tally["b"].conserved()):
            raise RuntimeError("per-class conservation violated")
        measured = max(0.0, self.measured_end - (self.meas_start if self.meas_start is not None else 0.0))
        return ReplicationResult(
            tally_a=self.tally["a"],
            tally_b=self.tally["b"],
            measured_time=measured,
            occupancy=self.occupancy,
            arrival_samples=self.arrival_samples,
            events=events,
            end_time=self.last_t,
        )


def run_simulation(
    params: ModelParams,
    policy: StrategyPolicy,
    config: SimConfig,
    service_resume: str = "redraw",
) -> SimStats:
    """Simulate the two-class system under ``policy``.

    ``service_resume`` selects how a preempted B's service continues:
    ``"redraw"`` (default, the documented behaviour) or ``"residual"``
    (kept only to test that the two are statistically indistinguishable).
    """
    params = validate_params(params)
    if service_resume not in ("redraw", "residual"):
        raise ConfigError(f"unknown service_resume {service_resume!r}")
    reps = [
        _Replication(params, policy, config, r, service_resume).run()
        for r in range(config.replications)
    ]
    return SimStats(replications=reps)


# -- tagged-customer Monte Carlo --------------------------------------


@dataclass(frozen=True)
class TaggedEstimate:
    """Monte Carlo estimates for one tagged B-customer: served probability
    and (unconditional) expected time in system, with standard errors."""

    p_hat: float
    p_se: float
    e_hat: float
    e_se: float
    replications: int


def _first_failure(pred, start: int) -> Optional[int]:
    """Smallest k >= start with pred(k) False, assuming pred is a threshold
    predicate (True then False); None if it never fails below the probe cap."""
    if pred(start):
        lo = start  # pred(lo) True
        hi = max(start, 1)
        while pred(hi):
            hi *= 2
            if hi > _PROBE_LIMIT:
                return None
        # pred(lo) True, pred(hi) False
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if pred(mid):
                lo = mid
            else:
                hi = mid
        return hi
    return start


def _tagged_walk(
    na0: int,
    nb0: int,
    cap_a: Optional[int],
    renege_position: Optional[int],
    lambda_a: float,
    mu: float,
    reps: int,
    rng: np.random.Generator,
):
    """Vectorized absorption walk for a tagged B behind (na0, nb0).

    The tagged customer's position is na + nb + 1; A-arrivals occur at rate
    lambda_a while na < cap_a; services clear A-customers first.  She is
    served when a service fires with nobody ahead, and reneges at the
    instant an A-arrival pushes her position to ``renege_position``.
    Returns (served, sojourn) arrays across replications.
    """
    na = np.full(reps, na0, dtype=np.int64)
    nb = np.full(reps, nb0, dtype=np.int64)
    sojourn = np.zeros(reps)
    served = np.zeros(reps, dtype=bool)
    alive = np.ones(reps, dtype=bool)
    guard = 0
    while True:
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        guard += 1
        if guard > 10**6:
            raise OverflowGuard("tagged walk failed to absorb")
        cna = na[idx]
        blocked = np.zeros(idx.size, dtype=bool) if cap_a is None else (cna >= cap_a)
        rate_a = np.where(blocked, 0.0, lambda_a)
        total = rate_a + mu
        sojourn[idx] += rng.standard_exponential(idx.size) / total
        is_arrival = rng.random(idx.size) * total < rate_a

        arr = idx[is_arrival]
        na[arr] += 1
        if renege_position is not None:
            gone = arr[na[arr] + nb[arr] + 1 >= renege_position]
            alive[gone] = False

        svc = idx[~is_arrival]
        has_a = na[svc] > 0
        na[svc[has_a]] -= 1
        rest = svc[~has_a]
        has_b = nb[rest] > 0
        nb[rest[has_b]] -= 1
        done = rest[~has_b]
        served[done] = True
        alive[done] = False
    return served, sojourn


def _estimate(served, sojourn) -> TaggedEstimate:
    reps = served.size
    p_hat = float(served.mean())
    p_se = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / reps)
    e_hat = float(sojourn.mean())
    e_se = float(sojourn.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    return TaggedEstimate(p_hat=p_hat, p_se=p_se, e_hat=e_hat, e_se=e_se, replications=reps)


def estimate_tagged_metrics(
    start: QueueState,
    policy: StrategyPolicy,
    params: ModelParams,
    config: SimConfig,
) -> TaggedEstimate:
    """Monte Carlo served probability / sojourn for a tagged B injected
    behind ``start`` under the policy's thresholds.

    The policy predicates are probed for their integer thresholds (they are
    threshold rules by construction in this model), after which all
    replications advance in vectorized steps.  No warmup applies: the
    quantity is transient by definition.
    """
    params = validate_params(params)
    cap_a = _first_failure(lambda k: policy.a_join(QueueState(k, 0)), 0)
    renege_position = _first_failure(lambda p: not policy.b_renege(p), 1)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=(config.seed, 0))))
    served, sojourn = _tagged_walk(
        start.n_a,
        start.n_b,
        cap_a,
        renege_position,
        params.lambda_a,
        params.mu,
        config.replications,
        rng,
    )
    return _estimate(served, sojourn)


def estimate_tagged_trapezoid(
    state: QueueState,
    m_star: int,
    n_threshold: int,
    params: ModelParams,
    config: SimConfig,
) -> TaggedEstimate:
    """Monte Carlo oracle for the B-planner trapezoid metrics.

    ``state`` is the system (A-count, B-count including the tagged last B)
    on the entry diagonal n_a + n_b = n_threshold.  B arrivals overtake
    the tagged customer (planner LCFS), A arrivals are blocked at m_star,
    and any arrival that would push her position past ``n_threshold``
    bumps her out.
    """
    params = validate_params(params)
    if state.n != n_threshold:
        raise ConfigError("state must sit on the entry diagonal")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=(config.seed, 1))))
    reps = config.replications
    i = np.full(reps, state.n_a, dtype=np.int64)
    j = np.full(reps, state.n_b, dtype=np.int64)
    sojourn = np.zeros(reps)
    served = np.zeros(reps, dtype=bool)
    alive = np.ones(reps, dtype=bool)
    lam_a, lam_b, mu = params.lambda_a, params.lambda_b, params.mu
    guard = 0
    while True:
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        guard += 1
        if guard > 10**6:
            raise OverflowGuard("trapezoid walk failed to absorb")
        rate_a = np.where(i[idx] >= m_star, 0.0, lam_a)
        total = rate_a + lam_b + mu
        sojourn[idx] += rng.standard_exponential(idx.size) / total
        u = rng.random(idx.size) * total

        is_a = u < rate_a
        is_b = ~is_a & (u < rate_a + lam_b)
        is_svc = ~is_a & ~is_b

        arr_a = idx[is_a]
        i[arr_a] += 1
        alive[arr_a[i[arr_a] + j[arr_a] > n_threshold]] = False  # bumped

        arr_b = idx[is_b]
        j[arr_b] += 1
        alive[arr_b[i[arr_b] + j[arr_b] > n_threshold]] = False  # bumped

        svc = idx[is_svc]
        has_a = i[svc] > 0
        i[svc[has_a]] -= 1
        rest = svc[~has_a]
        waiting = j[rest] > 1
        j[rest[waiting]] -= 1
        done = rest[~waiting]  # i = 0, j = 1: her own completion
        served[done] = True
        alive[done] = False
    return _estimate(served, sojourn)


# -- best-response audit ----------------------------------------------


@dataclass(frozen=True)
class AuditRow:
    label: str
    estimate: float
    se: float
    expected_sign: str  # ">=0" or "<=0"
    violation: bool


@dataclass(frozen=True)
class AuditReport:
    rows: tuple

    @property
    def ok(self) -> bool:
        return not any(r.violation for r in self.rows)


def _payoff_row(label, expected_sign, est, se) -> AuditRow:
    if expected_sign == ">=0":
        violation = est < -3.0 * se
    else:
        violation = est > 3.0 * se
    return AuditRow(label=label, estimate=est, se=se, expected_sign=expected_sign, violation=violation)


def best_response_audit(
    params: ModelParams,
    profile: EquilibriumProfile,
    config: SimConfig,
) -> AuditReport:
    """Estimate deviation payoffs at every threshold-adjacent state.

    A-customers: joining at the last admitted count must pay weakly
    positive, joining one past it weakly negative.  B-customers: the same
    for joining at / past ``b_join`` and for staying at / past the stay
    threshold.  A deviator already past a threshold stays until pushed one
    level beyond her entry (an instant renege would score exactly zero and
    carry no sign information).  Anchors put the A-count at its worst case.
    A violation is an estimate on the wrong side of zero by more than three
    standard errors.
    """
    params = validate_params(params)
    th = profile.thresholds
    m = th.a_equilibrium
    reps = config.replications
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=(config.seed, 2))))
    rows = []

    # A-side: sojourn of an A joining at position k is a sum of k services.
    for n_a, sign in ((m - 1, ">=0"), (m, "<=0")):
        if n_a < 0:
            continue
        sojourns = rng.gamma(shape=n_a + 1, scale=1.0 / params.mu, size=reps)
        payoff = params.reward_a - params.cost_a * sojourns
        est, se = float(payoff.mean()), float(payoff.std(ddof=1) / math.sqrt(reps))
        rows.append(_payoff_row(f"A joins at n_a={n_a}", sign, est, se))

    # B-side joins at observed totals around b_join, worst-case A anchor.
    stay = th.b_stay
    for n, sign in ((th.b_join, ">=0"), (th.b_join + 1, "<=0")):
        if n < 0:
            continue
        na0 = min(n, m)
        barrier = max(stay, n + 1) + 1
        served, sojourn = _tagged_walk(
            na0, n - na0, m, barrier, params.lambda_a, params.mu, reps, rng
        )
        payoff = params.reward_b * served - params.cost_b * sojourn
        est, se = float(payoff.mean()), float(payoff.std(ddof=1) / math.sqrt(reps))
        rows.append(_payoff_row(f"B joins at n={n}", sign, est, se))

    # B-side stay/renege around the stay threshold.
    for p, sign in ((stay, ">=0"), (stay + 1, "<=0")):
        ahead = p - 1
        na0 = min(ahead, m)
        served, sojourn = _tagged_walk(
            na0, ahead - na0, m, p + 1, params.lambda_a, params.mu, reps, rng
        )
        payoff = params.reward_b * served - params.cost_b * sojourn
        est, se = float(payoff.mean()), float(payoff.std(ddof=1) / math.sqrt(reps))
        rows.append(_payoff_row(f"B stays at position {p}", sign, est, se))

    return AuditReport(rows=tuple(rows))


# -- welfare comparison -----------------------------------------------


@dataclass(frozen=True)
class WelfareRow:
    scenario: str
    welfare_a: float
    se_a: float
    welfare_b: float
    se_b: float
    welfare_total: float
    se_total: float
    diff_total_vs_equilibrium: float
    se_diff: float


@dataclass(frozen=True)
class WelfareTable:
    rows: tuple

    def row(self, scenario: str) -> WelfareRow:
        for r in self.rows:
            if r.scenario == scenario:
                return r
        raise KeyError(scenario)

    COLUMNS = (
        "scenario",
        "welfare_a",
        "se_a",
        "welfare_b",
        "se_b",
        "welfare_total",
        "se_total",
        "diff_total_vs_equilibrium",
        "se_diff",
    )

    def as_records(self) -> list:
        return [{c: getattr(r, c) for c in self.COLUMNS} for r in self.rows]


def welfare_compare(params: ModelParams, config: SimConfig) -> WelfareTable:
    """Welfare rates under (i) the fully-strategic equilibrium, (ii) the
    global plan with forced reneges, (iii) the two class planners, all with
    common random seeds so scenario differences are pure policy effects."""
    params = validate_params(params)
    scenarios = [
        ("equilibrium", equilibrium_policy(fs_equilibrium_profile(params))),
        ("global_plan", global_plan_policy(global_thresholds(params))),
        (
            "class_planners",
            class_planner_policy(
                a_planner_threshold(params).value,
                b_planner_threshold(params).value,
            ),
        ),
    ]
    stats = {name: run_simulation(params, pol, config) for name, pol in scenarios}
    eq_totals = np.asarray(stats["equilibrium"].total_welfare_rates())
    rows = []
    for name, _ in scenarios:
        s = stats[name]
        wa, sa = s.welfare_rate("a")
        wb, sb = s.welfare_rate("b")
        wt, st = s.total_welfare_rate()
        diffs = np.asarray(s.total_welfare_rates()) - eq_totals
        d_mean, d_se = _mean_se(diffs)
        rows.append(
            WelfareRow(
                scenario=name,
                welfare_a=wa,
                se_a=sa,
                welfare_b=wb,
                se_b=sb,
                welfare_total=wt,
                se_total=st,
                diff_total_vs_equilibrium=d_mean,
                se_diff=d_se,
            )
        )
    return WelfareTable(rows=tuple(rows))
