"""Nonlinear 6-DOF dynamics with moving-mass actuation.

Assembles the generalized force and torque, the 9x9 mass matrix coupling
body acceleration to moving-mass acceleration, and the full state
derivative.  The 9x9 system is solved (LU with partial pivoting), never
inverted.
"""

from dataclasses import dataclass, field

import numpy as np

from . import aero as aeromod
from .frames import (
    EulerAngles,
    GimbalLock,
    State,
    aero_angles,
    euler_rate_matrix,
    rotation_body_to_inertial,
)


class SingularMass(RuntimeError):
    """The 9x9 mass-matrix solve failed (should not occur for valid params)."""


@dataclass(frozen=True)
class ControlInput:
    """Propeller thrusts [N] and commanded moving-mass acceleration [m/s^2]."""

    Fl: float
    Fr: float
    Fbar: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "Fbar", np.asarray(self.Fbar, dtype=float).reshape(3))
        if self.Fl < 0 or self.Fr < 0:
            raise ValueError("thrusts must be non-negative")


@dataclass(frozen=True)
class StateDerivative:
    pdot: np.ndarray
    edot: np.ndarray
    vdot: np.ndarray
    wdot: np.ndarray
    rbardot: np.ndarray
    rbarddot: np.ndarray

    def as_vector(self):
        return np.concatenate(
            [self.pdot, self.edot, self.vdot, self.wdot, self.rbardot, self.rbarddot]
        )


def skew(v):
    """Cross-product matrix: skew(a) @ b == a x b."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def composite_cg(params, rbar):
    """First mass moment l_g = m r + mbar rbar and the composite CG r_g."""
    rbar = np.asarray(rbar, dtype=float).reshape(3)
    l_g = params.m * params.r + params.mbar * rbar
    return l_g, l_g / params.total_mass


def total_inertia(params, rbar):
    """Inertia about the CB including the moving point mass."""
    S = skew(rbar)
    return params.inertia - params.mbar * (S @ S)


def generalized_force(state, control, aero_force, params, legacy=False):
    """Generalized force on the translational channel (thrust excluded;
    thrust enters through the input matrix)."""
    R = rotation_body_to_inertial(state.e)
    v, w = state.v, state.w
    l_g, _ = composite_cg(params, state.rbar)
    grav = params.net_weight * R.T[:, 2]
    f = params.total_mass * np.cross(v, w) + grav + aero_force
    f += 2.0 * params.mbar * np.cross(state.rbardot, w)
    if not legacy:
        f += np.cross(np.cross(w, l_g), w)
    return f


def generalized_torque(state, aero_torque, params, legacy=False):
    """Generalized torque on the rotational channel."""
    v, w, rbar = state.v, state.w, state.rbar
    l_g, _ = composite_cg(params, rbar)
    R = rotation_body_to_inertial(state.e)
    Itot = total_inertia(params, rbar)
    t = (Itot @ w).copy()
    t = np.cross(t, w)
    t += np.cross(l_g, params.g * R.T[:, 2]) + aero_torque
    t += 2.0 * params.mbar * np.cross(rbar, np.cross(state.rbardot, w))
    if not legacy:
        t += np.cross(l_g, np.cross(v, w))
    return t


def mass_matrix(params, rbar, legacy=False):
    """The 9x9 block mass matrix M; callers solve M x = rhs.

    Blocks:  [(m+mbar) I3   -lg^x        mbar I3 ]
             [ lg^x         I - mbar Sr^2  mbar Sr]
             [ 0            0            I3      ]
    """
    rbar = np.asarray(rbar, dtype=float).reshape(3)
    l_g, _ = composite_cg(params, rbar)
    Sl = skew(l_g)
    Sr = skew(rbar)
    M = np.zeros((9, 9))
    M[0:3, 0:3] = params.total_mass * np.eye(3)
    M[3:6, 3:6] = params.inertia - params.mbar * (Sr @ Sr)
    M[6:9, 6:9] = np.eye(3)
    M[0:3, 6:9] = params.mbar * np.eye(3)
    M[3:6, 6:9] = params.mbar * Sr
    if not legacy:
        M[0:3, 3:6] = -Sl
        M[3:6, 0:3] = Sl
    return M


def thrust_columns(rbar, d, simple_yaw=False):
    """Raw 9x5 input map: columns for Fl, Fr, and the Fbar channel.

    The yaw-moment lever arm includes the lateral moving-mass offset
    rbar_y; `simple_yaw` drops it, keeping only the propeller offset d,
    to quantify the difference between the two readings.
    """
    ry = 0.0 if simple_yaw else rbar[1]
    cols = np.zeros((9, 5))
    cols[0, 0] = cols[0, 1] = 1.0
    cols[4, 0] = cols[4, 1] = rbar[2]
    cols[5, 0] = ry + d
    cols[5, 1] = ry - d
    cols[6:9, 2:5] = np.eye(3)
    return cols


def deriv_vector(y, Fl, Fr, Fbar, params, model, legacy=False, simple_yaw=False):
    """State derivative on the packed 18-vector; the hot path for integration."""
    phi, theta = y[3], y[4]
    if abs(theta) >= np.pi / 2 - 1e-3:
        raise GimbalLock(f"pitch angle {theta:.4f} rad too close to +-pi/2")
    e = EulerAngles(phi, theta, y[5])
    R = rotation_body_to_inertial(e)
    J = euler_rate_matrix(e)
    v, w = y[6:9], y[9:12]
    rbar, rbardot = y[12:15], y[15:18]

    a = aero_angles(v)
    loads = aeromod.aero_loads(model, a, w, params.rho)
    F_aero, T_aero = aeromod.loads_to_body(a, loads)

    l_g, _ = composite_cg(params, rbar)
    gcol = R.T[:, 2]

    f = params.total_mass * np.cross(v, w) + params.net_weight * gcol + F_aero
    f += 2.0 * params.mbar * np.cross(rbardot, w)
    Itot = params.inertia - params.mbar * (skew(rbar) @ skew(rbar))
    t = np.cross(Itot @ w, w) + np.cross(l_g, params.g * gcol) + T_aero
    t += 2.0 * params.mbar * np.cross(rbar, np.cross(rbardot, w))
    if not legacy:
        f += np.cross(np.cross(w, l_g), w)
        t += np.cross(l_g, np.cross(v, w))

    rhs = np.concatenate([f, t, np.zeros(3)])
    rhs += thrust_columns(rbar, params.d, simple_yaw) @ np.concatenate([[Fl, Fr], Fbar])

    M = mass_matrix(params, rbar, legacy=legacy)
    try:
        acc = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMass(str(exc)) from exc

    ydot = np.empty(18)
    ydot[0:3] = R @ v
    ydot[3:6] = J @ w
    ydot[6:9] = acc[0:3]
    ydot[9:12] = acc[3:6]
    ydot[12:15] = rbardot
    ydot[15:18] = acc[6:9]
    return ydot


def state_derivative(state, control, params, model, legacy=False, simple_yaw=False):
    """Full state derivative for a State/ControlInput pair."""
    y = state.as_vector()
    ydot = deriv_vector(
        y, control.Fl, control.Fr, control.Fbar, params, model,
        legacy=legacy, simple_yaw=simple_yaw,
    )
    return StateDerivative(
        pdot=ydot[0:3],
        edot=ydot[3:6],
        vdot=ydot[6:9],
        wdot=ydot[9:12],
        rbardot=ydot[12:15],
        rbarddot=ydot[15:18],
    )


def mechanical_energy(state, params):
    """Kinetic plus potential energy [J] of the vehicle with the moving
    mass frozen.  Conserved when aerodynamics, thrust, and moving-mass
    actuation are all absent.

    Potential accounts for the attitude-dependent CG height as well as
    the net-buoyancy height term (z is positive down).
    """
    M = mass_matrix(params, state.rbar)
    x = np.concatenate([state.v, state.w, state.rbardot])
    ke = 0.5 * x @ (M @ x)
    R = rotation_body_to_inertial(state.e)
    l_g, _ = composite_cg(params, state.rbar)
    z_cg_rel = (R @ l_g)[2]
    pe = -params.net_weight * state.p[2] - params.g * z_cg_rel
    return ke + pe
