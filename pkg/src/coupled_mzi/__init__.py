"""Coulomb-coupled electronic Mach-Zehnder interferometers.

One chiral interferometer acts as a generalized which-path detector for a
second one through a tunable interaction phase.  The package computes the
exact joint scattering statistics, the induced POVM and its contextual
values, conditioned averages including weak and semi-weak values, quantum
erasure curves, fluctuation-damped measurements, and estimator error
budgets; a CLI reproduces parameter sweeps as CSV.
"""

from .conditioning import (
    ConditionalTable,
    ConditionedAverage,
    WeakValueResult,
    conditional_table,
    conditioned_average,
    erasure_curve,
    semiweak_value,
    weak_value,
    xi_joint_interference,
)
from .config import ExperimentConfig, ScanSpec, evaluate_number, load_config, load_config_text
from .errors import (
    AmbiguousMeasurementError,
    ConfigError,
    CoupledMziError,
    InternalConsistencyError,
    PostSelectionImpossibleError,
)
from .interaction import (
    InteractionGeometry,
    coupling_phase,
    dynamical_phase,
    geometry_for_phase,
    position_phase,
    sequential_phase,
    wavenumber_shift,
)
from .measurement import (
    ContextualValues,
    EfficientFactorization,
    MeasurementOperators,
    PovmPair,
    contextual_values,
    decompose_observable,
    detector_drain_amplitudes,
    detector_drain_probabilities,
    efficient_factorization,
    limit_contextual_values,
    measurement_operators,
    povm_expectation,
    povm_pair,
    reconstruct_average,
    reduced_system_state,
    system_drain_probabilities,
)
from .params import (
    CouplingModel,
    DetectorDrain,
    DetectorParams,
    InterferometerConfig,
    JointInterferenceParams,
    ObservableCoefficients,
    QpcSetting,
    SystemDrain,
    SystemParams,
    detector_params,
    joint_interference_params,
    qpc_from_angle,
    qpc_from_transmission,
    system_params,
)
from .scattering import (
    ArmState,
    JointAmplitudes,
    JointStatistics,
    PhysicalBias,
    arm_state,
    average_current,
    concurrence,
    cross_noise_power,
    joint_amplitudes,
    joint_probability_table,
    joint_statistics,
    joint_statistics_closed_form,
    qpc_unitary,
)
from .stochastic import (
    EstimateReport,
    EventRecord,
    ObservationBudget,
    averaged_detector_params,
    contextual_estimate,
    damping_eta,
    observation_time,
    raised_cosine_pdf,
    sample_events,
    sample_events_fluctuating,
    sample_events_sharded,
)

__version__ = "0.1.0"
