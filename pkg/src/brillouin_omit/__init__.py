"""Simulation and joint fitting of Brillouin cavity-optomechanical reflectivity spectra."""
from .model import (
    REFERENCE_PARAMS,
    DomainError,
    DriveCondition,
    SystemParams,
    coupling_rate,
    drive_from_power,
    photon_number,
    reflectivity,
    steady_state_fields,
    thermal_occupation,
)
from .modes import (
    HybridModes,
    Regime,
    RegimeClass,
    classify_regime,
    hybrid_modes,
    min_separation_over_detuning,
    splitting,
    threshold_power,
)
from .synthesis import (
    DetuningMap,
    FrequencyPlan,
    Spectrum,
    SpectrumMeta,
    ThermalCalibration,
    analyzer_frequency_map,
    detuning_map,
    fsr_from_temperature,
    sample_spectrum,
)
from .fitting import (
    CouplingMode,
    FitProblem,
    FitResult,
    LMOptions,
    ParameterVector,
    estimate_g0,
    fit,
    initial_guess,
    lm_solve,
    numeric_jacobian,
    residuals,
)

__version__ = "0.1.0"
