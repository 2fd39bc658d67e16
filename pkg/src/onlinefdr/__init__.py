"""Streaming FDR control: generalized alpha-investing with weights and decay.

One engine drives every rule: the doubly-weighted, decaying-memory wealth
update, with the simpler algorithms as reductions (unit weights, delta = 1).
The sim module provides the Monte Carlo harness that validates the error
guarantees empirically; the cli module exposes stream/simulate/verify.
"""

from ._kernels import backend as kernel_backend
from .engine import (
    StepInputs,
    Stream,
    budget_b,
    reset,
    reward_cap,
    should_abstain,
    should_reset,
    step,
)
from .errors import (
    BudgetViolation,
    ConfigError,
    GridMismatch,
    InvalidPValue,
    InvalidParams,
    NegativeInput,
    NonPositiveWeight,
    OnlineFdrError,
    ParseError,
    ResetNotAllowed,
    RewardViolation,
    VersionMismatch,
)
from .fdphat import FdpLedger, greedy_fdp_rule, update_fdp_hat, verify_rule
from .metrics import TrajectoryMetrics, TrialReport, aggregate, fdp
from .policies import (
    AlphaInvesting,
    AlphaSpendRewards,
    AlphaSpending,
    GammaSequence,
    Lord17,
    LordPP,
    MemLordPP,
    PolicySpec,
    Uncorrected,
    gamma_lord_default,
)
from .sim import (
    GaussianScenario,
    ScenarioSuite,
    SuiteEntry,
    generate_stream,
    super_uniformity_check,
    super_uniformity_exhaustive,
    run_stream,
    run_suite,
)
from .types import (
    DecisionRecord,
    EngineConfig,
    Observation,
    StreamState,
    deserialize_state,
    fresh_state,
    serialize_state,
)
from .weights import (
    ConstantWeights,
    CustomWeights,
    FileWeights,
    OracleWeights,
    UnitWeights,
    next_weights,
)

__version__ = "0.1.0"
