"""Outer-loop controllers: pole-placed PID/PD and a disturbance observer.

Both bench axes are double integrators (1/(M s^2) with M the mass or the
pitch inertia), so gains come from multiple-root pole placement:

    PID, triple pole at -p:   K_d = 3*M*p,  K_p = 3*M*p^2,  K_i = M*p^3
    PD,  double pole at -p:   K_d = 2*M*p,  K_p = M*p^2

The discrete realisation differentiates the measurement (no derivative
kick) through a first-order roll-off filter and freezes the integrator
while the commanded force is saturated.  The altitude loop additionally
carries a disturbance observer: a first-order low-pass of the mismatch
between nominal-plant force M_n * z'' and the commanded force, subtracted
from the command.  It absorbs gravity, drag and the ground-effect thrust
surplus without waiting for the integrator.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "PidGains",
    "DobConfig",
    "place_pid_double_integrator",
    "place_pd_double_integrator",
    "Pid",
    "DisturbanceObserver",
]


@dataclass(frozen=True)
class PidGains:
    """Proportional, integral and derivative gains; ki == 0 denotes PD."""

    kp: float
    ki: float
    kd: float

    def __post_init__(self) -> None:
        for name in ("kp", "ki", "kd"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class DobConfig:
    """Disturbance-observer filter cutoff [rad/s] and enable flag."""

    cutoff: float = 50.0
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.cutoff <= 0.0:
            raise ValueError(f"cutoff must be > 0, got {self.cutoff}")


def place_pid_double_integrator(inertia_like: float, pole: float) -> PidGains:
    """PID gains putting the closed loop of 1/(M s^2) at a triple pole -p.

    The closed-loop characteristic polynomial
    M s^3 + K_d s^2 + K_p s + K_i is identified with M (s + p)^3.
    """
    if inertia_like <= 0.0 or pole <= 0.0:
        raise ValueError(
            f"inertia_like and pole must be > 0, got {inertia_like}, {pole}"
        )
    m = inertia_like
    return PidGains(kp=3.0 * m * pole * pole, ki=m * pole**3, kd=3.0 * m * pole)


def place_pd_double_integrator(inertia_like: float, pole: float) -> PidGains:
    """PD gains putting the closed loop of 1/(M s^2) at a double pole -p."""
    if inertia_like <= 0.0 or pole <= 0.0:
        raise ValueError(
            f"inertia_like and pole must be > 0, got {inertia_like}, {pole}"
        )
    m = inertia_like
    return PidGains(kp=m * pole * pole, ki=0.0, kd=2.0 * m * pole)


class Pid:
    """Discrete PID with filtered derivative on the measurement.

    The derivative path differentiates the measured output (not the
    error) and low-passes it at deriv_cutoff [rad/s].  When output limits
    are supplied, the command is clamped and the integrator is frozen
    whenever integrating would push further into the saturated side.
    """

    def __init__(
        self,
        gains: PidGains,
        deriv_cutoff: float = 100.0,
        out_min: float | None = None,
        out_max: float | None = None,
    ):
        if deriv_cutoff <= 0.0:
            raise ValueError(f"deriv_cutoff must be > 0, got {deriv_cutoff}")
        self.gains = gains
        self.deriv_cutoff = deriv_cutoff
        self.out_min = out_min
        self.out_max = out_max
        self._integral = 0.0
        self._deriv = 0.0
        self._prev_meas: float | None = None

    def reset(self, integral: float = 0.0) -> None:
        self._integral = integral
        self._deriv = 0.0
        self._prev_meas = None

    @property
    def integral(self) -> float:
        return self._integral

    def step(self, ref: float, meas: float, dt: float) -> float:
        """One control update; returns the commanded actuator effort."""
        if dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {dt}")
        err = ref - meas

        if self._prev_meas is None:
            raw_rate = 0.0
        else:
            raw_rate = (meas - self._prev_meas) / dt
        self._prev_meas = meas
        # first-order roll-off on the measured rate
        a = self.deriv_cutoff * dt
        self._deriv += a / (1.0 + a) * (raw_rate - self._deriv)

        unsat = (
            self.gains.kp * err
            + self._integral
            + self.gains.ki * err * dt
            - self.gains.kd * self._deriv
        )
        out = unsat
        if self.out_max is not None and out > self.out_max:
            out = self.out_max
        if self.out_min is not None and out < self.out_min:
            out = self.out_min
        saturated_up = out < unsat
        saturated_down = out > unsat
        if not (saturated_up and err > 0.0) and not (saturated_down and err < 0.0):
            self._integral += self.gains.ki * err * dt
        return out


class DisturbanceObserver:
    """First-order disturbance observer on a double-integrator channel.

    Estimates the lumped input disturbance d = M_n * accel - u through a
    low-pass filter with the configured cutoff; the estimate is meant to
    be subtracted from the force command.  Disabled observers return 0.
    """

    def __init__(self, nominal_mass: float, cfg: DobConfig):
        if nominal_mass <= 0.0:
            raise ValueError(f"nominal_mass must be > 0, got {nominal_mass}")
        self.nominal_mass = nominal_mass
        self.cfg = cfg
        self._estimate = 0.0

    def reset(self, estimate: float = 0.0) -> None:
        self._estimate = estimate

    @property
    def estimate(self) -> float:
        return self._estimate if self.cfg.enabled else 0.0

    def step(self, measured_accel: float, commanded_force: float, dt: float) -> float:
        """Update with the measured acceleration and the force actually
        commanded this step; returns the disturbance estimate [N]."""
        if dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {dt}")
        if not self.cfg.enabled:
            return 0.0
        mismatch = self.nominal_mass * measured_accel - commanded_force
        a = self.cfg.cutoff * dt
        self._estimate += a / (1.0 + a) * (mismatch - self._estimate)
        return self._estimate
