"""Quantum AIXI at desk scale: density-operator environments, Bayesian
mixtures over finite hypothesis classes, exact expectimax planning, and
experiments on convergence, CHSH and Kochen-Specker contextuality."""

from .agent import (
    AgentState,
    JointState,
    PlanningConfig,
    entangled_step,
    qaixi_policy,
    run_episode,
    value,
)
from .channels import (
    Instrument,
    KrausChannel,
    UnitaryAction,
    apply_channel,
    branch_apply,
    choi_vector,
    instrument_distribution,
    validate,
)
from .core import (
    DensityOperator,
    PureState,
    eigendecompose_hermitian,
    partial_trace,
    relative_entropy,
    tensor,
    trace_distance,
)
from .environments import ActionSpec, EnvironmentModel, History, Percept, env_step, make_classical_env
from .errors import CapacityError, ConfigError, ImpossibleObservationError
from .induction import (
    MixtureState,
    gap_statistics,
    mixture_init,
    mixture_operator,
    mixture_update,
    posterior_divergence,
    predictive_distribution,
)

__version__ = "0.1.0"
