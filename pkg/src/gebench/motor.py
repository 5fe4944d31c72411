"""Motor and propeller models: torque balance, steady currents, thrust map.

The motor obeys

    J_w * dw/dt = K_t * I - C_Q * w^2 - D_w * w - T_C

and at constant speed the current reduces to I = (C_Q w^2 + D_w w + T_C)/K_t,
commonly approximated by (C_Q/K_t) w^2 since the viscous and Coulomb terms
are small at hover speeds.  Thrust follows the blade-element quadratic law
F = C_F w^2.  Combining the steady current with the finite ground-effect
thrust model yields the in-ground-effect current for a required thrust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .ge_models import PropellerGeParams, finite_ge_thrust_ratio

__all__ = [
    "MotorParams",
    "MotorState",
    "motor_torque_balance_derivative",
    "steady_current",
    "bet_thrust",
    "bet_speed_for_thrust",
    "current_in_ge",
    "SpeedServo",
]


@dataclass(frozen=True)
class MotorParams:
    """Electromechanical parameters of one motor-propeller unit (SI units).

    Attributes:
        torque_coef: Torque constant K_t [N*m/A].
        inertia: Rotor inertia J_w [kg*m^2].
        viscosity: Viscous drag D_w [N*m*s/rad].
        counter_torque_coef: Aerodynamic counter torque C_Q [N*m*s^2/rad^2].
        coulomb_torque: Coulomb friction torque T_C [N*m].
        thrust_coef: Blade-element thrust coefficient C_F [N*s^2/rad^2].
    """

    torque_coef: float
    inertia: float
    viscosity: float
    counter_torque_coef: float
    coulomb_torque: float
    thrust_coef: float

    def __post_init__(self) -> None:
        for name in (
            "torque_coef",
            "inertia",
            "viscosity",
            "counter_torque_coef",
            "coulomb_torque",
            "thrust_coef",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    def steady_dominance_margin(self, omega: float) -> float:
        """Ratio C_Q*w^2 / (D_w*w + T_C); the quadratic-only current
        approximation is sound when this is well above 1."""
        return (
            self.counter_torque_coef
            * omega
            * omega
            / (self.viscosity * omega + self.coulomb_torque)
        )


@dataclass
class MotorState:
    """Rotational speed [rad/s] and applied current [A] of one motor."""

    omega: float = 0.0
    current: float = 0.0


def motor_torque_balance_derivative(
    state: MotorState, i_m: float, p: MotorParams
) -> float:
    """Angular acceleration from the motor torque balance [rad/s^2].

    dw/dt = (K_t*I - C_Q*w^2 - D_w*w - T_C) / J_w
    """
    w = state.omega
    return (
        p.torque_coef * i_m
        - p.counter_torque_coef * w * w
        - p.viscosity * w
        - p.coulomb_torque
    ) / p.inertia


def steady_current(omega_c: float, p: MotorParams, exact: bool = False) -> float:
    """Motor current at constant rotational speed omega_c [A].

    With exact=False returns the quadratic approximation (C_Q/K_t)*w^2,
    valid because D_w*w and T_C are small against C_Q*w^2 at hover speeds.
    With exact=True returns the full balance (C_Q*w^2 + D_w*w + T_C)/K_t.
    """
    if omega_c < 0.0:
        raise ValueError(f"rotational speed must be >= 0, got {omega_c}")
    torque = p.counter_torque_coef * omega_c * omega_c
    if exact:
        torque += p.viscosity * omega_c + p.coulomb_torque
    return torque / p.torque_coef


def bet_thrust(omega: float, c_f: float) -> float:
    """Blade-element thrust F = C_F * w^2 [N]."""
    if omega < 0.0:
        raise ValueError(f"rotational speed must be >= 0, got {omega}")
    return c_f * omega * omega


def bet_speed_for_thrust(f: float, c_f: float) -> float:
    """Rotational speed producing thrust f out of ground effect [rad/s].

    Exact inverse of bet_thrust.  Negative thrust requests clamp to zero
    speed (the propellers cannot push downward); callers that need to
    notice the clamp should test the request sign themselves.
    """
    if c_f <= 0.0:
        raise ValueError(f"thrust coefficient must be > 0, got {c_f}")
    if f <= 0.0:
        return 0.0
    return math.sqrt(f / c_f)


def current_in_ge(
    f_required: float, z: float, motor: MotorParams, ge: PropellerGeParams
) -> float:
    """Steady motor current delivering thrust f_required at altitude z [A].

    In ground effect the propeller needs less aerodynamic power for the
    same thrust, so the out-of-GE current scales down by the thrust
    augmentation factor:

        I(z) = (C_Q / (K_t * C_F)) * F / (1 + C_a * exp(-C_b*z/R))

    At large z this reduces to the out-of-GE current (C_Q/(K_t*C_F))*F.
    """
    if f_required < 0.0:
        raise ValueError(f"required thrust must be >= 0, got {f_required}")
    i_inf = (
        motor.counter_torque_coef / (motor.torque_coef * motor.thrust_coef)
    ) * f_required
    return i_inf / finite_ge_thrust_ratio(z, ge)


class SpeedServo:
    """PI speed controller with torque-balance feedforward for one motor.

    The feedforward term supplies the current that balances the steady
    aerodynamic and friction torques at the present speed, so the PI part
    only drives the inertia during transients and its integrator settles
    to zero.  Gains place a double pole of the inertia loop at the given
    bandwidth.  Commanded current is unconstrained (the bench supply is
    not modelled as a limit).
    """

    def __init__(self, motor: MotorParams, bandwidth: float = 60.0):
        if bandwidth <= 0.0:
            raise ValueError(f"servo bandwidth must be > 0, got {bandwidth}")
        self.motor = motor
        self.bandwidth = bandwidth
        self.kp = 2.0 * motor.inertia * bandwidth / motor.torque_coef
        self.ki = motor.inertia * bandwidth * bandwidth / motor.torque_coef
        self._integral = 0.0

    def reset(self, integral: float = 0.0) -> None:
        self._integral = integral

    def command(self, omega_ref: float, omega: float, dt: float) -> float:
        """Current command tracking omega_ref from measured omega [A]."""
        err = omega_ref - omega
        self._integral += self.ki * err * dt
        feedforward = steady_current(max(omega, 0.0), self.motor, exact=True)
        return feedforward + self.kp * err + self._integral
