"""Robust residual-detector tuning, stealthy sensor attacks, and reachable-set bounds.

The package covers one workflow end to end for stochastic LTI systems whose
noise is known only through second moments:

* tune a quadratic residual detector either the classical way (chi-squared,
  exact under Gaussian noise) or distributionally robustly (a threshold
  whose false-alarm guarantee holds for every distribution with the modeled
  moments);
* synthesize sensor attacks that cancel the natural residual and stay below
  the threshold at every step, so they never raise an alarm;
* certify a minimum-trace outer ellipsoid containing every state such an
  attacker can reach, by assembling a linear matrix inequality and solving
  it with the built-in barrier SDP solver over a grid of decay constants.
"""

__version__ = "0.1.0"

from .ambiguity import (
    EllipsoidBoundarySampler,
    GaussianSampler,
    MomentAmbiguitySet,
    NoiseSampler,
    StudentTSampler,
    chebyshev_tail_bound,
    stream_rng,
)
from .attack import (
    AttackKind,
    AttackPolicy,
    FixedUnit,
    GreedyAligned,
    UniformSphere,
    attack_input,
    budget_direction,
    greedy_direction,
)
from .detector import (
    DetectorConfig,
    FalseAlarmEstimate,
    Tuning,
    attack_free_distance_samples,
    distance_measure,
    estimate_false_alarm_rate,
    make_detector,
    tune_chi_squared,
    tune_dr,
)
from .matcore import (
    InvalidInput,
    NotPd,
    NotPsd,
    as_matrix,
    as_sym_matrix,
    inverse_spd,
    spectral_norm_sym,
    sqrt_psd,
    sym_eig,
)
from .reachset import (
    AllInfeasible,
    Ellipsoid,
    GridPointDiagnostics,
    ReachSetResult,
    TradeoffPoint,
    assemble_lmi,
    contains,
    default_decay_grid,
    lyapunov_certificate_gap,
    min_trace_ellipsoid,
    noise_truncation,
    reachable_cloud,
    spectral_radius,
    trace_tradeoff_sweep,
)
from .sdp import (
    NumericalFailure,
    SdpBlock,
    SdpProblem,
    SdpSolution,
    SdpStatus,
    phase1,
    solve,
)
from .system import (
    JointSystem,
    LtiSystem,
    NoSteadyState,
    ResidualModel,
    Trace,
    joint_system,
    residual_model,
    simulate,
    solve_dare,
    steady_state_error_cov,
)

__all__ = [name for name in dir() if not name.startswith("_")]
