"""Strategic two-class preemptive-priority M/M/1 queue: equilibrium and
planner thresholds in closed form, absorbing-chain solvers, and a
discrete-event simulation oracle."""

from .model import (
    ModelParams,
    ParamError,
    Position,
    QueueState,
    Utilizations,
    params_from_json,
    utilizations,
    validate_params,
)
from .ruin import (
    AbsorbingChainSpec,
    AbsorptionResult,
    RuinSpec,
    one_sided_expected_duration,
    ruin_expected_duration,
    ruin_probability,
    solve_absorption,
)
from .strategic import (
    Bracket,
    EquilibriumProfile,
    HighRatioThresholds,
    Regime,
    SeriesAccumulator,
    ThresholdSet,
    fs_equilibrium_profile,
    fs_net_benefit,
    fs_regime,
    fs_served_prob,
    fs_threshold_low,
    fs_thresholds_high,
    g_value,
    naor_social_threshold,
    naor_threshold,
    net_benefit_semi,
    rect_expected_clear_time,
    semi_strategic_threshold,
    served_prob_position,
    sojourn_position,
)
from .planner import (
    BPlannerThreshold,
    GlobalPlan,
    TrapezoidSpec,
    a_planner_threshold,
    b_planner_metrics,
    b_planner_threshold,
    global_thresholds,
    solve_trapezoid,
    trapezoid_eta_residual,
)
from .simulate import (
    SimConfig,
    SimStats,
    StrategyPolicy,
    TaggedEstimate,
    WelfareTable,
    best_response_audit,
    class_planner_policy,
    equilibrium_policy,
    estimate_tagged_metrics,
    estimate_tagged_trapezoid,
    global_plan_policy,
    run_simulation,
    semi_strategic_policy,
    welfare_compare,
    always_join_policy,
)

__version__ = "0.1.0"
