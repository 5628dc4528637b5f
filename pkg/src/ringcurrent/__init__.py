"""Current states on dipolar Rydberg rings: model, pulse optimization and dynamics."""

__version__ = "0.1.0"

from .analytics import (
    QslReport,
    beat_frequency,
    blob_velocity,
    current_closed,
    population_profile_closed,
    qsl,
    superposition_current_closed,
    translation_time,
    two_state_population,
)
from .errors import (
    CapacityError,
    DegeneratePairError,
    DomainError,
    IndeterminatePhaseError,
    IntegratorAccuracyError,
    NonFiniteGradientError,
)
from .evolve import (
    PulseSchedule,
    Trajectory,
    evolve_bare,
    evolve_lindblad,
    evolve_pulsed,
    evolve_schedule_then_bare,
    full_space_oracle,
    propagator,
)
from .grape import GrapeConfig, OptimizationReport, fidelity, gradient, min_target_time_scan, optimize
from .observables import (
    ObservableSeries,
    error_metrics,
    local_current,
    pair_correlator,
    populations,
    reconstruct_phases,
    total_current,
    uhlmann_fidelity,
)
from .ring import (
    CouplingTable,
    RingSpec,
    WindingTarget,
    bare_hamiltonian,
    coupling_table,
    current_operator,
    current_state,
    detuned_hamiltonian,
    eigenenergy,
    link_distance,
    localized_state,
    ring_index,
    superposition_state,
)
from .robustness import (
    DephasingModel,
    NoiseModel,
    dephasing_sweep,
    disorder_sweep,
    fit_decay_rate,
    perturb_schedule,
)
