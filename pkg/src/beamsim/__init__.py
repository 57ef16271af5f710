"""Damped nonlinear beam: simulation, equilibrium, and energy certification."""

from .diagnostics import (
    ConvergenceReport,
    EnergyLedger,
    check_bounds,
    check_energy_identity,
    check_energy_monotone,
    convergence_report,
    energy_of,
    windowed_dissipation,
)
from .discretization import (
    Discretization,
    Grid,
    QuadratureRule,
    build_discretization,
    build_operator,
    h2star_norm_sq,
    l2_inner,
    lp_norm,
    modal_to_nodal,
    nodal_to_modal,
    potential_energy,
)
from .dynamics import (
    NewtonDivergence,
    SingularJacobian,
    State,
    StepFailed,
    StepReport,
    Trajectory,
    initial_state,
    run,
    step,
    weak_residual,
)
from .model import (
    BeamScenario,
    CubicRestoring,
    InvalidScenario,
    LinearPlusQuadraticDamping,
    LinearRestoring,
    PowerLawDamping,
    SampledForcing,
    SampledProfile,
    SineModeForcing,
    SineModeProfile,
    SmoothedOneSidedRestoring,
    ValidationReport,
    ZeroForcing,
    ZeroProfile,
    ZeroRestoring,
    validate_scenario,
)
from .scenario_io import (
    OutputOptions,
    RunSetup,
    ScenarioFormatError,
    load_scenario_file,
    write_scenario_file,
)
from .stationary import (
    MaxIterationsExceeded,
    NonConvexDetected,
    StationarySolution,
    residual_bvp,
    solve_stationary,
    total_potential,
)

__version__ = "0.1.0"
