"""Closed-loop bench simulation engine, metrics, sweeps and CSV output.

Fixed-step RK4 on the coupled bench + motor states with the controllers,
disturbance observer and current-based estimator executing once per step
(single rate).  Loop topology per step:

    refs -> altitude PID (+DOB) and pitch PD -> thrust allocation
         -> per-propeller speed references -> motor speed servos
         -> motor/bench dynamics (thrust boosted by the true ground
            effect at each propeller's own altitude)

The estimator consumes the measured DC current of each motor, i.e. the
constant-speed torque-balance current at the instantaneous speed (plus
configured sensor noise), and never feeds back into control unless the
scenario selects estimate feedback.  Records are bit-reproducible for a
fixed scenario and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bench import BenchState, allocate, dynamics_derivative, propeller_altitudes
from .control import (
    DisturbanceObserver,
    Pid,
    place_pd_double_integrator,
    place_pid_double_integrator,
)
from .estimation import AttitudeEstimator
from .ge_models import finite_ge_thrust_ratio
from .ipt import coupling_from_altitude, max_efficiency
from .motor import SpeedServo, bet_speed_for_thrust, steady_current
from .scenario import ScenarioConfig

__all__ = [
    "TRAJECTORY_COLUMNS",
    "TrajectoryRecord",
    "ScenarioSummary",
    "SweepCase",
    "SweepReport",
    "SimulationDiverged",
    "run_scenario",
    "summarize",
    "run_parameter_error_sweep",
    "emit_csv",
    "DEFAULT_SWEEP_SCALINGS",
]

TRAJECTORY_COLUMNS = (
    "t", "z", "theta", "z_dot", "theta_dot", "omega1", "omega2",
    "f1", "f2", "i1", "i2", "z_hat", "theta_hat", "e_z", "e_theta",
    "k", "eta",
)

DEFAULT_SWEEP_SCALINGS = (
    (1.0, 1.0),
    (1.05, 1.05),
    (1.05, 0.95),
    (0.95, 1.05),
    (0.95, 0.95),
)


class SimulationDiverged(RuntimeError):
    """State left the valid envelope; carries the last valid step index."""

    def __init__(self, step: int, time: float, reason: str):
        super().__init__(f"simulation diverged at step {step} (t={time:.4f} s): {reason}")
        self.last_valid_step = step
        self.time = time


@dataclass
class TrajectoryRecord:
    """Per-step simulation log with fixed column order.

    data has one row per step and the columns of TRAJECTORY_COLUMNS.
    """

    data: np.ndarray
    events: list[str] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return self.data[:, TRAJECTORY_COLUMNS.index(name)]

    def __len__(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class WindowMetrics:
    """Signed worst error and RMSD of an estimation error over a window."""

    worst_error: float
    rmsd: float


@dataclass(frozen=True)
class ScenarioSummary:
    """Steady-state estimation accuracy against the scenario targets."""

    altitude: WindowMetrics
    pitch: WindowMetrics
    altitude_window: tuple[float, float]
    pitch_window: tuple[float, float]
    altitude_error_limit: float
    pitch_error_limit: float

    @property
    def altitude_ok(self) -> bool:
        return abs(self.altitude.worst_error) < self.altitude_error_limit

    @property
    def pitch_ok(self) -> bool:
        return abs(self.pitch.worst_error) < self.pitch_error_limit

    def lines(self) -> list[str]:
        a, p = self.altitude, self.pitch
        return [
            "steady-state altitude estimation error "
            f"(t in [{self.altitude_window[0]:g}, {self.altitude_window[1]:g}] s): "
            f"worst {a.worst_error * 1e3:+.3f} mm, RMSD {a.rmsd * 1e3:.3f} mm "
            f"(limit {self.altitude_error_limit * 1e3:g} mm): "
            + ("PASS" if self.altitude_ok else "FAIL"),
            "steady-state pitch estimation error "
            f"(t in [{self.pitch_window[0]:g}, {self.pitch_window[1]:g}] s): "
            f"worst {p.worst_error * 1e3:+.3f} mrad, RMSD {p.rmsd * 1e3:.3f} mrad "
            f"(limit {self.pitch_error_limit * 1e3:g} mrad): "
            + ("PASS" if self.pitch_ok else "FAIL"),
        ]


def _window_metrics(t: np.ndarray, err: np.ndarray, window: tuple[float, float]) -> WindowMetrics:
    mask = (t >= window[0]) & (t <= window[1])
    if not np.any(mask):
        return WindowMetrics(math.nan, math.nan)
    e = err[mask]
    worst = float(e[np.argmax(np.abs(e))])
    return WindowMetrics(worst, float(np.sqrt(np.mean(e * e))))


def summarize(record: TrajectoryRecord, cfg: ScenarioConfig) -> ScenarioSummary:
    """Evaluate the estimation-error claims on their steady-state windows."""
    t = record.column("t")
    ev = cfg.evaluation
    return ScenarioSummary(
        altitude=_window_metrics(t, record.column("e_z"), ev.altitude_window),
        pitch=_window_metrics(t, record.column("e_theta"), ev.pitch_window),
        altitude_window=ev.altitude_window,
        pitch_window=ev.pitch_window,
        altitude_error_limit=ev.altitude_error_limit,
        pitch_error_limit=ev.pitch_error_limit,
    )


def _hover_equilibrium(cfg: ScenarioConfig, pitch_kp: float):
    """Solve the closed-loop hover fixed point (theta*, Fe1, Fe2, u_z).

    At equilibrium both actual thrusts equal half the weight over
    cos(theta); the pitch PD holds the small angle at which its torque
    command exactly produces the asymmetric speed references that cancel
    the ground-effect mismatch between the propellers.
    """
    body = cfg.body
    z_h = cfg.timeline.hover_altitude
    theta = 0.0
    fe1 = fe2 = 0.0
    for _ in range(60):
        sin_t = math.sin(theta)
        cos_t = math.cos(theta)
        z1 = z_h + body.arm * sin_t
        z2 = z_h - body.arm * sin_t
        c1 = finite_ge_thrust_ratio(max(z1, 0.0), cfg.ge_true_1)
        c2 = finite_ge_thrust_ratio(max(z2, 0.0), cfg.ge_true_2)
        fa = body.mass * body.gravity / (2.0 * cos_t)
        fe1, fe2 = fa / c1, fa / c2
        theta_new = -(fe1 - fe2) * body.arm / pitch_kp
        if abs(theta_new - theta) < 1e-15:
            theta = theta_new
            break
        theta = theta_new
    u_z = (fe1 + fe2) * math.cos(theta)
    return theta, fe1, fe2, u_z


def run_scenario(cfg: ScenarioConfig, seed: int | None = None) -> TrajectoryRecord:
    """Simulate one scenario; returns the full per-step record.

    Raises:
        SimulationDiverged: On non-finite state or pitch beyond the
            gimbal range; the exception reports the last valid step.
    """
    body, tl = cfg.body, cfg.timeline
    m1, m2 = cfg.motor1, cfg.motor2
    ge1, ge2 = cfg.ge_true_1, cfg.ge_true_2
    dt = tl.dt
    n_steps = int(round(tl.duration / dt))
    mg = body.mass * body.gravity
    f_z_max = cfg.control.thrust_max_factor * mg

    gains_z = place_pid_double_integrator(body.mass, cfg.control.altitude_pole)
    gains_t = place_pd_double_integrator(body.inertia, cfg.control.pitch_pole)
    pid_z = Pid(gains_z, deriv_cutoff=cfg.control.altitude_deriv_cutoff)
    pid_t = Pid(gains_t, deriv_cutoff=cfg.control.pitch_deriv_cutoff)
    dob = DisturbanceObserver(body.mass, cfg.control.dob)
    servo1 = SpeedServo(m1, cfg.control.servo_bandwidth)
    servo2 = SpeedServo(m2, cfg.control.servo_bandwidth)

    i_inf = cfg.reference_currents()
    estimator = AttitudeEstimator(
        cfg.ge_nominal_1,
        cfg.ge_nominal_2,
        body.arm,
        i_inf,
        forgetting=cfg.estimator.forgetting,
        init_altitude=cfg.estimator.init_altitude,
        init_covariance=cfg.estimator.init_covariance,
        max_altitude=cfg.estimator.ceiling_factor * cfg.ge_nominal_1.rotor_radius,
    )

    noise_sigma = cfg.noise.current_sigma
    rng = np.random.default_rng(cfg.noise.seed if seed is None else seed)

    state = BenchState()
    hover_mode = cfg.init_mode == "hover"
    if hover_mode:
        theta0, fe1_0, fe2_0, u_z0 = _hover_equilibrium(cfg, gains_t.kp)
        state = BenchState(z=tl.hover_altitude, theta=theta0)
        w1 = math.sqrt(fe1_0 / m1.thrust_coef)
        w2 = math.sqrt(fe2_0 / m2.thrust_coef)
        if cfg.control.dob.enabled:
            dob.reset(-u_z0)
        else:
            pid_z.reset(integral=u_z0)
    else:
        w1 = w2 = 0.0

    events: list[str] = []
    ground_contact_logged = False
    neg_thrust_logged = False

    data = np.empty((n_steps + 1, len(TRAJECTORY_COLUMNS)))

    # locals for the integration loop
    arm, mass, grav, drag = body.arm, body.mass, body.gravity, body.drag
    inertia, rot_visc = body.inertia, body.rot_viscosity
    ca1, cb1, r1 = ge1.c_a, ge1.c_b, ge1.rotor_radius
    ca2, cb2, r2 = ge2.c_a, ge2.c_b, ge2.rotor_radius
    kt1, jw1, dv1, cq1, tc1, cf1 = (
        m1.torque_coef, m1.inertia, m1.viscosity,
        m1.counter_torque_coef, m1.coulomb_torque, m1.thrust_coef,
    )
    kt2, jw2, dv2, cq2, tc2, cf2 = (
        m2.torque_coef, m2.inertia, m2.viscosity,
        m2.counter_torque_coef, m2.coulomb_torque, m2.thrust_coef,
    )
    exp, sin, cos = math.exp, math.sin, math.cos

    def deriv(z, zd, th, thd, w1_, w2_, i1, i2):
        sin_t = sin(th)
        cos_t = cos(th)
        z1 = z + arm * sin_t
        z2 = z - arm * sin_t
        f1 = (1.0 + ca1 * exp(-cb1 * (z1 if z1 > 0.0 else 0.0) / r1)) * cf1 * w1_ * w1_
        f2 = (1.0 + ca2 * exp(-cb2 * (z2 if z2 > 0.0 else 0.0) / r2)) * cf2 * w2_ * w2_
        zdd = ((f1 + f2) * cos_t - mass * grav - drag * zd) / mass
        thdd = ((f1 - f2) * arm - rot_visc * thd) / inertia
        drive1 = kt1 * i1 - cq1 * w1_ * w1_ - dv1 * w1_ - tc1
        dw1 = drive1 / jw1 if (w1_ > 0.0 or drive1 > 0.0) else 0.0
        drive2 = kt2 * i2 - cq2 * w2_ * w2_ - dv2 * w2_ - tc2
        dw2 = drive2 / jw2 if (w2_ > 0.0 or drive2 > 0.0) else 0.0
        return zd, zdd, thd, thdd, dw1, dw2

    use_estimate_feedback = cfg.control.feedback == "estimate"
    half_dt = 0.5 * dt
    sixth_dt = dt / 6.0

    for k in range(n_steps + 1):
        t = k * dt
        z, zd, th, thd = state.z, state.z_dot, state.theta, state.theta_dot

        # measured DC currents: constant-speed torque balance at the
        # instantaneous speed, plus sensor noise
        i1_meas = steady_current(w1, m1, exact=True)
        i2_meas = steady_current(w2, m2, exact=True)
        if noise_sigma > 0.0:
            i1_meas += noise_sigma * rng.standard_normal()
            i2_meas += noise_sigma * rng.standard_normal()
        est = estimator.step(t, i1_meas, i2_meas)

        z_ref = tl.hover_altitude if hover_mode else tl.altitude_ref(t)
        th_ref = tl.pitch_ref(t)
        z_fb = est.z_hat if use_estimate_feedback else z
        th_fb = est.theta_hat if use_estimate_feedback else th

        # altitude PID with the observer correction inside the clamp
        d_hat = dob.estimate
        pid_z.out_min = 0.0 + d_hat
        pid_z.out_max = f_z_max + d_hat
        u_z = pid_z.step(z_ref, z_fb, dt) - d_hat
        t_theta = pid_t.step(th_ref, th_fb, dt)

        f1_ref, f2_ref = allocate(u_z, t_theta, th_fb, arm)
        if (f1_ref < 0.0 or f2_ref < 0.0) and not neg_thrust_logged:
            events.append(f"negative thrust request clamped at t={t:.3f} s")
            neg_thrust_logged = True
        w1_ref = bet_speed_for_thrust(f1_ref, cf1)
        w2_ref = bet_speed_for_thrust(f2_ref, cf2)
        i1_cmd = servo1.command(w1_ref, w1, dt)
        i2_cmd = servo2.command(w2_ref, w2, dt)

        # actual thrusts and acceleration at this step (records + DOB)
        state.z, state.z_dot, state.theta, state.theta_dot = z, zd, th, thd
        alts = propeller_altitudes(state, body)
        f1 = finite_ge_thrust_ratio(alts.z1, ge1) * cf1 * w1 * w1
        f2 = finite_ge_thrust_ratio(alts.z2, ge2) * cf2 * w2 * w2
        _, zdd, _, _ = dynamics_derivative(state, f1, f2, body)
        if z <= 0.0 and zdd < 0.0:
            zdd = 0.0  # ground contact: the encoder sees no acceleration
        dob.step(zdd, u_z, dt)

        k_coup = coupling_from_altitude(z, cfg.coupling_map).k
        eta = max_efficiency(k_coup, cfg.ipt_circuit)

        row = data[k]
        row[0] = t
        row[1] = z
        row[2] = th
        row[3] = zd
        row[4] = thd
        row[5] = w1
        row[6] = w2
        row[7] = f1
        row[8] = f2
        row[9] = i1_meas
        row[10] = i2_meas
        row[11] = est.z_hat
        row[12] = est.theta_hat
        row[13] = est.z_hat - z
        row[14] = est.theta_hat - th
        row[15] = k_coup
        row[16] = eta

        if k == n_steps:
            break

        # RK4 over [t, t+dt] with the current commands held
        y = (z, zd, th, thd, w1, w2)
        k1 = deriv(*y, i1_cmd, i2_cmd)
        k2 = deriv(*(a + half_dt * b for a, b in zip(y, k1)), i1_cmd, i2_cmd)
        k3 = deriv(*(a + half_dt * b for a, b in zip(y, k2)), i1_cmd, i2_cmd)
        k4 = deriv(*(a + dt * b for a, b in zip(y, k3)), i1_cmd, i2_cmd)
        z, zd, th, thd, w1, w2 = (
            a + sixth_dt * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
        )

        if z < 0.0:
            z = 0.0
            if zd < 0.0:
                zd = 0.0
            if not ground_contact_logged:
                events.append(f"ground contact at t={t + dt:.3f} s")
                ground_contact_logged = True
        w1 = max(w1, 0.0)
        w2 = max(w2, 0.0)

        if not (
            math.isfinite(z) and math.isfinite(zd)
            and math.isfinite(th) and math.isfinite(thd)
            and math.isfinite(w1) and math.isfinite(w2)
        ):
            raise SimulationDiverged(k, t, "non-finite state")
        if abs(th) >= 0.5 * math.pi:
            raise SimulationDiverged(k, t, f"pitch {th:.3f} rad beyond gimbal range")

        state.z, state.z_dot, state.theta, state.theta_dot = z, zd, th, thd

    return TrajectoryRecord(data=data, events=events)


@dataclass(frozen=True)
class SweepCase:
    """Estimation-error metrics for one nominal-coefficient scaling."""

    s_a: float
    s_b: float
    max_altitude_error: float
    altitude_rmsd: float
    max_pitch_error: float
    pitch_rmsd: float

    @property
    def label(self) -> str:
        if self.s_a == 1.0 and self.s_b == 1.0:
            return "no model error"
        return f"c_a x {self.s_a:.2f}, c_b x {self.s_b:.2f}"


@dataclass(frozen=True)
class SweepReport:
    """Results of the nominal-coefficient error sweep, in case order."""

    cases: tuple[SweepCase, ...]

    def lines(self) -> list[str]:
        out = [
            f"{'case':<26} {'alt err':>10} {'alt RMSD':>10} {'pitch err':>11} {'pitch RMSD':>11}"
        ]
        for c in self.cases:
            out.append(
                f"{c.label:<26} {c.max_altitude_error * 1e3:>+8.2f}mm "
                f"{c.altitude_rmsd * 1e3:>8.2f}mm "
                f"{c.max_pitch_error * 1e3:>+8.2f}mrad "
                f"{c.pitch_rmsd * 1e3:>8.2f}mrad"
            )
        return out


def run_parameter_error_sweep(
    cfg: ScenarioConfig,
    scalings: tuple[tuple[float, float], ...] = DEFAULT_SWEEP_SCALINGS,
    seed: int | None = None,
) -> SweepReport:
    """Run the scenario once per coefficient scaling and collect metrics.

    Each case scales the estimator's nominal (c_a, c_b) while the truth
    keeps the unscaled values; case i runs with seed base+i so noisy
    scenarios stay reproducible case by case.
    """
    base_seed = cfg.noise.seed if seed is None else seed
    cases = []
    for idx, (s_a, s_b) in enumerate(scalings):
        record = run_scenario(cfg.with_nominal_scaling(s_a, s_b), seed=base_seed + idx)
        summary = summarize(record, cfg)
        cases.append(
            SweepCase(
                s_a=s_a,
                s_b=s_b,
                max_altitude_error=summary.altitude.worst_error,
                altitude_rmsd=summary.altitude.rmsd,
                max_pitch_error=summary.pitch.worst_error,
                pitch_rmsd=summary.pitch.rmsd,
            )
        )
    return SweepReport(cases=tuple(cases))


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def emit_csv(obj: TrajectoryRecord | SweepReport, path: str | Path) -> Path:
    """Write a trajectory or sweep report as RFC-4180 CSV (CRLF, header).

    Values carry 9 significant digits; output bytes are deterministic
    for a given object.
    """
    path = Path(path)
    lines: list[str] = []
    if isinstance(obj, TrajectoryRecord):
        lines.append(",".join(TRAJECTORY_COLUMNS))
        for row in obj.data:
            lines.append(",".join(_fmt(v) for v in row))
    elif isinstance(obj, SweepReport):
        lines.append(
            "case,s_a,s_b,max_altitude_error_m,altitude_rmsd_m,"
            "max_pitch_error_rad,pitch_rmsd_rad"
        )
        for c in obj.cases:
            label = f'"{c.label}"' if "," in c.label else c.label
            lines.append(
                ",".join(
                    [label, _fmt(c.s_a), _fmt(c.s_b), _fmt(c.max_altitude_error),
                     _fmt(c.altitude_rmsd), _fmt(c.max_pitch_error), _fmt(c.pitch_rmsd)]
                )
            )
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")
    try:
        with path.open("w", newline="") as fh:
            fh.write("\r\n".join(lines) + "\r\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path
