"""Ground-effect ratio models for rotors hovering near a surface.

Covers the three classical constant-thrust power-ratio models (Betz,
Cheeseman-Bennett, Hayden), the finite exponential thrust-augmentation
model that stays bounded at zero altitude, and the matching motor-current
ratio model together with its inverse map from current to altitude.

The classical models predict vanishing power on the ground and are kept
for comparison only.  Estimation is built on the finite model:

    thrust ratio   F/F_inf = 1 + C_a * exp(-C_b * z / R)
    current ratio  I/I_inf = 1 / (1 + C_a * exp(-C_b * z / R))

which gives a non-zero current at z = 0 and is invertible for z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "PropellerGeParams",
    "HaydenParams",
    "BladeGeometry",
    "AltitudeResult",
    "ALTITUDE_OK",
    "ALTITUDE_BEYOND_GE",
    "ALTITUDE_BELOW_GROUND",
    "betz_power_ratio",
    "cheeseman_power_ratio",
    "hayden_power_ratio",
    "finite_ge_thrust_ratio",
    "max_thrust_ratio_from_geometry",
    "ge_current_ratio",
    "altitude_from_current",
]


class ModelDomainError(ValueError):
    """Input lies outside the validity domain of a ground-effect model."""


@dataclass(frozen=True)
class PropellerGeParams:
    """Per-propeller coefficients of the finite ground-effect model.

    Attributes:
        c_a: Maximum thrust-ratio gain at z = 0 (dimensionless, > 0).
        c_b: Decay-rate coefficient of the effect with z/R (dimensionless, > 0).
        rotor_radius: Propeller radius R [m].
    """

    c_a: float
    c_b: float
    rotor_radius: float

    def __post_init__(self) -> None:
        if self.c_a <= 0.0:
            raise ValueError(f"c_a must be > 0, got {self.c_a}")
        if self.c_b <= 0.0:
            raise ValueError(f"c_b must be > 0, got {self.c_b}")
        if self.rotor_radius <= 0.0:
            raise ValueError(f"rotor_radius must be > 0, got {self.rotor_radius}")


@dataclass(frozen=True)
class HaydenParams:
    """Coefficients of the Hayden power-ratio model (experimentally fitted)."""

    a_coef: float = 1.0
    b_coef: float = 0.03

    def __post_init__(self) -> None:
        if self.a_coef <= 0.0:
            raise ValueError(f"a_coef must be > 0, got {self.a_coef}")
        if self.b_coef < 0.0:
            raise ValueError(f"b_coef must be >= 0, got {self.b_coef}")


@dataclass(frozen=True)
class BladeGeometry:
    """Blade-element quantities that set the maximum thrust-ratio gain.

    Attributes:
        lift_slope: Blade lift-curve slope (dimensionless, > 0).
        solidity: Rotor solidity (dimensionless, > 0).
        collective_pitch: Collective pitch angle [rad], > 0.
    """

    lift_slope: float
    solidity: float
    collective_pitch: float

    def __post_init__(self) -> None:
        for name in ("lift_slope", "solidity", "collective_pitch"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


def betz_power_ratio(z: float, r: float) -> float:
    """In-ground-effect to free-air power ratio, thin-disk linear model.

    P/P_inf = 2z/R at constant thrust.  Only meaningful for z much smaller
    than the rotor radius; the value is returned unclamped and exceeds 1
    as soon as z > R/2.

    Args:
        z: Altitude of the propeller plane [m], >= 0.
        r: Rotor radius [m], > 0.
    """
    if r <= 0.0:
        raise ModelDomainError(f"rotor radius must be > 0, got {r}")
    if z < 0.0:
        raise ModelDomainError(f"altitude must be >= 0, got {z}")
    return 2.0 * z / r


def cheeseman_power_ratio(z: float, r: float) -> float:
    """Cheeseman-Bennett power ratio 1 / (1 + (R/4z)^2) at constant thrust.

    Singular at z = 0 (predicts zero power on the ground); strictly
    increasing in z with limit 1 far from the surface.
    """
    if r <= 0.0:
        raise ModelDomainError(f"rotor radius must be > 0, got {r}")
    if z <= 0.0:
        raise ModelDomainError(f"model is singular at z <= 0, got z={z}")
    q = r / (4.0 * z)
    return 1.0 / (1.0 + q * q)


def hayden_power_ratio(z: float, r: float, p: HaydenParams) -> float:
    """Hayden power ratio 1 / (A + B*(2R/z)^2) at constant thrust."""
    if r <= 0.0:
        raise ModelDomainError(f"rotor radius must be > 0, got {r}")
    if z <= 0.0:
        raise ModelDomainError(f"model is singular at z <= 0, got z={z}")
    q = 2.0 * r / z
    return 1.0 / (p.a_coef + p.b_coef * q * q)


def finite_ge_thrust_ratio(z: float, p: PropellerGeParams) -> float:
    """Thrust augmentation 1 + C_a * exp(-C_b * z / R) at constant power.

    Finite at the ground (1 + C_a), strictly decreasing, limit 1 out of
    ground effect.

    Args:
        z: Altitude of the propeller plane [m], >= 0.
        p: Ground-effect coefficients for this propeller.
    """
    if z < 0.0:
        raise ModelDomainError(f"altitude must be >= 0, got {z}")
    return 1.0 + p.c_a * math.exp(-p.c_b * z / p.rotor_radius)


def max_thrust_ratio_from_geometry(g: BladeGeometry) -> float:
    """Maximum thrust-ratio gain C_a from blade-element geometry.

    C_a = (sqrt(192*Cla*s*t0 + 9*Cla*s^2) - 3*Cla*s)
          / (32*t0 + 3*Cla*s - sqrt(192*Cla*s*t0 + 9*Cla*s^2))

    with Cla the lift slope, s the solidity and t0 the collective pitch.

    Raises:
        ModelDomainError: If the discriminant is negative or the
            denominator is not strictly positive for the given geometry.
    """
    cla, s, t0 = g.lift_slope, g.solidity, g.collective_pitch
    disc = 192.0 * cla * s * t0 + 9.0 * cla * s * s
    if disc < 0.0:
        raise ModelDomainError(f"negative discriminant {disc} for geometry {g}")
    root = math.sqrt(disc)
    den = 32.0 * t0 + 3.0 * cla * s - root
    if den <= 0.0:
        raise ModelDomainError(
            "non-positive denominator in thrust-ratio gain: "
            f"32*t0 + 3*Cla*s - sqrt(disc) = {den:.6g} "
            f"(Cla={cla}, solidity={s}, collective_pitch={t0})"
        )
    return (root - 3.0 * cla * s) / den


def ge_current_ratio(z: float, p: PropellerGeParams) -> float:
    """Motor-current ratio I/I_inf = 1 / (1 + C_a * exp(-C_b * z / R)).

    Reciprocal of finite_ge_thrust_ratio; equals 1/(1 + C_a) > 0 on the
    ground, strictly increasing in z, limit 1 out of ground effect.
    """
    return 1.0 / finite_ge_thrust_ratio(z, p)


ALTITUDE_OK = "ok"
ALTITUDE_BEYOND_GE = "beyond_ge"
ALTITUDE_BELOW_GROUND = "below_ground"


@dataclass(frozen=True)
class AltitudeResult:
    """Altitude inverted from a current ratio, with a range flag.

    flag is one of ALTITUDE_OK, ALTITUDE_BEYOND_GE (current at or above
    the out-of-GE reference: no altitude information, value clamped to
    the ceiling) or ALTITUDE_BELOW_GROUND (current at or below the
    ground-level value, clamped to 0).
    """

    altitude: float
    flag: str = ALTITUDE_OK

    @property
    def in_range(self) -> bool:
        return self.flag == ALTITUDE_OK


def altitude_from_current(
    i_m: float,
    i_m_inf: float,
    p: PropellerGeParams,
    ceiling: float | None = None,
) -> AltitudeResult:
    """Invert the current-ratio model: altitude from a measured DC current.

    z = -(R / C_b) * ln((1/C_a) * (I_inf/I - 1))

    Valid for currents strictly between the ground-level value
    I_inf/(1 + C_a) and the out-of-GE reference I_inf.  Out-of-range
    currents do not raise: a measured current at or above I_inf carries
    no altitude information (returns the ceiling, flagged beyond_ge) and
    a current at or below the ground-level value clamps to 0 (flagged
    below_ground).

    Args:
        i_m: Measured DC motor current [A], > 0.
        i_m_inf: Out-of-ground-effect reference current at the same
            thrust [A], > 0.
        p: Ground-effect coefficients of this propeller.
        ceiling: Altitude reported when the current is beyond the model
            range [m]; defaults to 3 rotor radii.
    """
    if i_m <= 0.0:
        raise ModelDomainError(f"measured current must be > 0, got {i_m}")
    if i_m_inf <= 0.0:
        raise ModelDomainError(f"reference current must be > 0, got {i_m_inf}")
    if ceiling is None:
        ceiling = 3.0 * p.rotor_radius

    excess = i_m_inf / i_m - 1.0
    if excess <= 0.0:
        return AltitudeResult(ceiling, ALTITUDE_BEYOND_GE)
    z = -(p.rotor_radius / p.c_b) * math.log(excess / p.c_a)
    if z < 0.0:
        return AltitudeResult(0.0, ALTITUDE_BELOW_GROUND)
    if z > ceiling:
        return AltitudeResult(ceiling, ALTITUDE_BEYOND_GE)
    return AltitudeResult(z, ALTITUDE_OK)
