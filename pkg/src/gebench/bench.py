"""Two-degree-of-freedom bench dynamics: heave and pitch of a propeller pair.

Rigid body on a gimballed arm with two propellers a distance l from the
pivot.  Vertical and pitch motion follow

    m * z''     + c * z'  = (F1 + F2) * cos(theta) - m*g
    J * theta'' + D * theta' = (F1 - F2) * l

Each propeller sits at its own altitude z +/- l*sin(theta); propeller 1 is
on the side that rises with positive pitch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BodyParams",
    "BenchState",
    "PropellerAltitudes",
    "AllocationSingularError",
    "dynamics_derivative",
    "propeller_altitudes",
    "attitude_from_propeller_altitudes",
    "allocate",
    "thrusts_to_wrench",
    "nominal_plants",
]

STANDARD_GRAVITY = 9.80665


class AllocationSingularError(ValueError):
    """Thrust allocation is singular (pitch angle too close to +/-90 deg)."""


@dataclass(frozen=True)
class BodyParams:
    """Rigid-body parameters of the bench (SI units).

    Attributes:
        mass: Total mass of body, motors and propellers [kg].
        drag: Linear vertical drag coefficient c [N*s/m].
        inertia: Pitch inertia J [kg*m^2].
        rot_viscosity: Rotational viscosity D [N*m*s/rad].
        arm: Pitch moment arm l (pivot to propeller axis) [m].
        gravity: Gravitational acceleration [m/s^2].
    """

    mass: float
    drag: float
    inertia: float
    rot_viscosity: float
    arm: float
    gravity: float = STANDARD_GRAVITY

    def __post_init__(self) -> None:
        for name in ("mass", "inertia", "arm", "gravity"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("drag", "rot_viscosity"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass
class BenchState:
    """Altitude [m], climb rate [m/s], pitch [rad], pitch rate [rad/s]."""

    z: float = 0.0
    z_dot: float = 0.0
    theta: float = 0.0
    theta_dot: float = 0.0


@dataclass(frozen=True)
class PropellerAltitudes:
    """Per-propeller altitudes [m]; clamped is True if a ground clamp hit."""

    z1: float
    z2: float
    clamped: bool = False


def dynamics_derivative(
    state: BenchState, f1: float, f2: float, p: BodyParams
) -> tuple[float, float, float, float]:
    """Time derivative (z', z'', theta', theta'') for given thrusts [N]."""
    cos_t = math.cos(state.theta)
    z_dd = ((f1 + f2) * cos_t - p.mass * p.gravity - p.drag * state.z_dot) / p.mass
    theta_dd = ((f1 - f2) * p.arm - p.rot_viscosity * state.theta_dot) / p.inertia
    return state.z_dot, z_dd, state.theta_dot, theta_dd


def propeller_altitudes(state: BenchState, p: BodyParams) -> PropellerAltitudes:
    """Altitude of each propeller plane for the current pose.

    z1 = z + l*sin(theta), z2 = z - l*sin(theta); negative values clamp
    to 0 and set the clamped flag.
    """
    offset = p.arm * math.sin(state.theta)
    z1 = state.z + offset
    z2 = state.z - offset
    clamped = z1 < 0.0 or z2 < 0.0
    return PropellerAltitudes(max(z1, 0.0), max(z2, 0.0), clamped)


def attitude_from_propeller_altitudes(
    z1: float, z2: float, arm: float
) -> tuple[float, float]:
    """Centre altitude and pitch angle from per-propeller altitudes.

    z = (z1 + z2)/2, theta = arcsin((z1 - z2) / (2l)).  Inverse of
    propeller_altitudes for |theta| < pi/2.
    """
    if arm <= 0.0:
        raise ValueError(f"arm must be > 0, got {arm}")
    return 0.5 * (z1 + z2), math.asin((z1 - z2) / (2.0 * arm))


def allocate(
    f_z: float, t_theta: float, theta: float, arm: float, cos_tol: float = 1e-6
) -> tuple[float, float]:
    """Split a vertical-force / pitch-torque command into propeller thrusts.

    F1 = F_z/(2 cos theta) + T/(2l),  F2 = F_z/(2 cos theta) - T/(2l).
    Exact inverse of thrusts_to_wrench.  May return negative thrusts; the
    caller decides how to handle infeasible (downward) requests.

    Raises:
        AllocationSingularError: If cos(theta) <= cos_tol.
    """
    cos_t = math.cos(theta)
    if cos_t <= cos_tol:
        raise AllocationSingularError(
            f"cannot allocate thrust at theta={theta:.4f} rad (cos={cos_t:.2e})"
        )
    common = f_z / (2.0 * cos_t)
    diff = t_theta / (2.0 * arm)
    return common + diff, common - diff


def thrusts_to_wrench(
    f1: float, f2: float, theta: float, arm: float
) -> tuple[float, float]:
    """Net vertical force and pitch torque from the two thrusts."""
    cos_t = math.cos(theta)
    return (f1 + f2) * cos_t, (f1 - f2) * arm


def nominal_plants(p: BodyParams) -> tuple[float, float]:
    """Double-integrator gains of the nominal plants 1/(m s^2), 1/(J s^2).

    Returns (1/m, 1/J); controller synthesis treats each axis as a pure
    double integrator with these gains.
    """
    return 1.0 / p.mass, 1.0 / p.inertia
