"""Dissipation-assisted STIRAP: pulse/detuning design and open-system dynamics.

The package is organized in five layers: numerical kernels (``numerics``),
the three-level lambda-system model and adiabatic frame (``model``), the
pulse-delay and detuning design (``design``), state-vector and
density-matrix propagation (``propagate``), and the scenario/scan/export
harness (``harness``) with a thin CLI on top (``cli``).
"""

from .numerics import (
    FitConvergenceError,
    FitFamily,
    FitResult,
    IntegrationError,
    TimeGrid,
    find_level_crossing,
    fit_least_squares,
    integrate_ivp,
)
from .model import (
    AdiabaticFrame,
    DegenerateFrameError,
    DriveSample,
    PulseParameters,
    adiabatic_couplings,
    adiabatic_frame,
    adiabatic_transform,
    bare_hamiltonian,
    dissipative_hamiltonian,
    gaussian_drive,
    mixing_angles,
)
from .design import (
    BoundaryViolationWarning,
    CouplingResiduals,
    DetuningFit,
    DetuningSolution,
    decoupling_residuals,
    fit_detuning,
    matched_delay,
    solve_detuning,
)
from .propagate import (
    DensityMatrix,
    DissipationRates,
    StateVector,
    TraceConsistencyError,
    Trajectory,
    initial_state,
    observables,
    optimum_shutdown_time,
    propagate_lindblad,
    propagate_schrodinger,
    propagation_matrix,
)
from .harness import (
    ConfigError,
    DeviationSpec,
    GridResult,
    ScanSpec,
    ScenarioConfig,
    baseline_transfer_config,
    detuning_deviation_scan,
    excited_state_config,
    excited_state_scan,
    export,
    load_records,
    pulse_deviation_scan,
    run_scenario,
    scan_grid,
    shutdown_scenario_config,
    table2_report,
    traditional_stirap_config,
)

__version__ = "0.1.0"

__all__ = [
    "AdiabaticFrame",
    "BoundaryViolationWarning",
    "ConfigError",
    "CouplingResiduals",
    "DegenerateFrameError",
    "DensityMatrix",
    "DetuningFit",
    "DetuningSolution",
    "DeviationSpec",
    "DissipationRates",
    "DriveSample",
    "FitConvergenceError",
    "FitFamily",
    "FitResult",
    "GridResult",
    "IntegrationError",
    "PulseParameters",
    "ScanSpec",
    "ScenarioConfig",
    "StateVector",
    "TimeGrid",
    "TraceConsistencyError",
    "Trajectory",
    "adiabatic_couplings",
    "adiabatic_frame",
    "adiabatic_transform",
    "bare_hamiltonian",
    "baseline_transfer_config",
    "decoupling_residuals",
    "detuning_deviation_scan",
    "dissipative_hamiltonian",
    "excited_state_config",
    "excited_state_scan",
    "export",
    "find_level_crossing",
    "fit_detuning",
    "fit_least_squares",
    "gaussian_drive",
    "initial_state",
    "integrate_ivp",
    "load_records",
    "matched_delay",
    "mixing_angles",
    "observables",
    "optimum_shutdown_time",
    "propagate_lindblad",
    "propagate_schrodinger",
    "propagation_matrix",
    "pulse_deviation_scan",
    "run_scenario",
    "scan_grid",
    "shutdown_scenario_config",
    "solve_detuning",
    "table2_report",
    "traditional_stirap_config",
]
