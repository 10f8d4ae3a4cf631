"""Flight-dynamics workbench for a hybrid buoyant-aerodynamic vehicle with
moving-mass actuation: nonlinear 6-DOF simulation, steady trim and spiral
solving, linearized stability analysis, and aerodynamic coefficient
identification from steady-flight logs."""

__version__ = "0.1.0"

from .aero import AeroLoads, AeroModel, aero_loads, eval_coeffs, lift_drag_analysis, loads_to_body, stability_slopes
from .dynamics import ControlInput, StateDerivative, composite_cg, mass_matrix, state_derivative
from .equilibria import (
    SteadySolution,
    StabilityReport,
    eigen_report,
    linearize,
    solve_spiral,
    solve_straight,
    steady_residual,
    turning_radius,
)
from .frames import (
    AeroAngles,
    EulerAngles,
    GimbalLock,
    State,
    VehicleParams,
    aero_angles,
    euler_rate_matrix,
    rotation_body_to_inertial,
    wind_to_body,
)
from .paramio import load_bundled, read_aero, read_params
from .simulate import InputSchedule, Segment, Trajectory, glide_metrics, integrate, turning_radius_series
from .sysid import FitResult, SteadyObservation, TrialRecord, extract_steady, fit, invert_aero, load_trials, mirror_augment
