"""Scenario configuration: schema, TOML loading, validation, defaults.

A scenario is one TOML file describing the bench, motors, ground-effect
coefficients (true and, optionally, the nominal set the estimator uses),
controller and observer settings, estimator settings, the IPT circuit,
the reference timeline, noise injection and the evaluation windows.  The
packaged reference scenario carries the bench parameter set used
throughout the test suite: takeoff to a 0.3 m hover, a 0.05 rad pitch
excursion at 20 s, return at 30 s.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bench import BodyParams
from .control import DobConfig
from .ge_models import PropellerGeParams
from .ipt import CouplingMap, IptCircuitParams
from .motor import MotorParams, steady_current

__all__ = [
    "ConfigError",
    "ControlConfig",
    "EstimatorConfig",
    "TimelineConfig",
    "NoiseConfig",
    "EvaluationConfig",
    "ScenarioConfig",
    "load_scenario",
    "default_scenario",
    "default_scenario_text",
]

# rotor-scale motors have inertias well below this; larger values are
# almost certainly a units mistake in the source data
MOTOR_INERTIA_PLAUSIBLE_MAX = 0.05


class ConfigError(ValueError):
    """Scenario validation failure with field-level diagnostics."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n" + "\n".join(f"  - {p}" for p in problems))


@dataclass(frozen=True)
class ControlConfig:
    altitude_pole: float = 10.0
    pitch_pole: float = 30.0
    servo_bandwidth: float = 60.0
    thrust_max_factor: float = 2.5
    altitude_deriv_cutoff: float = 100.0
    pitch_deriv_cutoff: float = 300.0
    feedback: str = "encoder"  # or "estimate"
    dob: DobConfig = field(default_factory=DobConfig)


@dataclass(frozen=True)
class EstimatorConfig:
    forgetting: float = 0.9985
    init_altitude: float = 0.3
    init_covariance: float = 10.0
    ceiling_factor: float = 3.0
    i_inf_1: float | None = None
    i_inf_2: float | None = None


@dataclass(frozen=True)
class TimelineConfig:
    duration: float = 40.0
    dt: float = 1e-3
    hover_altitude: float = 0.3
    altitude_ref_tau: float = 0.5
    pitch_step: float = 0.05
    pitch_step_time: float = 20.0
    pitch_return_time: float = 30.0
    pitch_ref_tau: float = 0.5

    def altitude_ref(self, t: float) -> float:
        """First-order shaped climb reference from the ground."""
        if t <= 0.0:
            return 0.0
        return self.hover_altitude * (1.0 - math.exp(-t / self.altitude_ref_tau))

    def pitch_ref(self, t: float) -> float:
        """First-order shaped pitch excursion and return."""
        if t < self.pitch_step_time:
            return 0.0
        level = self.pitch_step * (
            1.0 - math.exp(-(t - self.pitch_step_time) / self.pitch_ref_tau)
        )
        if t < self.pitch_return_time:
            return level
        at_return = self.pitch_step * (
            1.0
            - math.exp(-(self.pitch_return_time - self.pitch_step_time) / self.pitch_ref_tau)
        )
        return at_return * math.exp(-(t - self.pitch_return_time) / self.pitch_ref_tau)


@dataclass(frozen=True)
class NoiseConfig:
    current_sigma: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class EvaluationConfig:
    """Steady-state windows [s] and accuracy targets for the estimate."""

    altitude_window: tuple[float, float] = (10.0, 20.0)
    pitch_window: tuple[float, float] = (20.0, 40.0)
    altitude_error_limit: float = 3e-3
    pitch_error_limit: float = 0.04


@dataclass(frozen=True)
class ScenarioConfig:
    body: BodyParams
    motor1: MotorParams
    motor2: MotorParams
    ge_true_1: PropellerGeParams
    ge_true_2: PropellerGeParams
    ge_nominal_1: PropellerGeParams
    ge_nominal_2: PropellerGeParams
    control: ControlConfig = field(default_factory=ControlConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    ipt_circuit: IptCircuitParams = field(default_factory=IptCircuitParams)
    coupling_map: CouplingMap = field(default_factory=CouplingMap)
    timeline: TimelineConfig = field(default_factory=TimelineConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    init_mode: str = "ground"  # or "hover"
    warnings: tuple[str, ...] = ()

    def hover_thrust_per_propeller(self) -> float:
        return 0.5 * self.body.mass * self.body.gravity

    def reference_currents(self) -> tuple[float, float]:
        """Out-of-GE reference current per channel [A].

        Explicit values win; otherwise the reference is the identified
        intercept of the current model, i.e. the full steady current at
        the out-of-GE hover speed for half the body weight.
        """
        f_hover = self.hover_thrust_per_propeller()
        out = []
        for override, motor in (
            (self.estimator.i_inf_1, self.motor1),
            (self.estimator.i_inf_2, self.motor2),
        ):
            if override is not None:
                out.append(override)
            else:
                omega_e = math.sqrt(f_hover / motor.thrust_coef)
                out.append(steady_current(omega_e, motor, exact=True))
        return out[0], out[1]

    def with_nominal_scaling(self, s_a: float, s_b: float) -> "ScenarioConfig":
        """Copy with the estimator's nominal coefficients scaled."""
        return replace(
            self,
            ge_nominal_1=replace(
                self.ge_nominal_1, c_a=s_a * self.ge_nominal_1.c_a, c_b=s_b * self.ge_nominal_1.c_b
            ),
            ge_nominal_2=replace(
                self.ge_nominal_2, c_a=s_a * self.ge_nominal_2.c_a, c_b=s_b * self.ge_nominal_2.c_b
            ),
        )


def _get(table: dict, section: str, key: str, problems: list[str], default=None, required=False):
    sec = table.get(section, {})
    if key not in sec:
        if required:
            problems.append(f"{section}.{key}: missing required value")
        return default
    return sec[key]


def _build_section(cls, table: dict, section: str, fields: dict[str, str], problems: list[str]):
    """Construct a params dataclass from table[section], mapping TOML keys."""
    kwargs = {}
    sec = table
    for part in section.split("."):
        sec = sec.get(part, {}) if isinstance(sec, dict) else {}
    missing = [k for k in fields if k not in sec]
    if missing:
        problems.append(f"{section}: missing {', '.join(sorted(missing))}")
        return None
    for toml_key, attr in fields.items():
        kwargs[attr] = sec[toml_key]
    extras = set(sec) - set(fields)
    if extras:
        problems.append(f"{section}: unknown keys {', '.join(sorted(extras))}")
        return None
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append(f"{section}: {exc}")
        return None


_MOTOR_FIELDS = {
    "torque_coef": "torque_coef",
    "inertia": "inertia",
    "viscosity": "viscosity",
    "counter_torque_coef": "counter_torque_coef",
    "coulomb_torque": "coulomb_torque",
    "thrust_coef": "thrust_coef",
}
_GE_FIELDS = {"c_a": "c_a", "c_b": "c_b", "rotor_radius": "rotor_radius"}
_BODY_FIELDS = {
    "mass": "mass",
    "drag": "drag",
    "inertia": "inertia",
    "rot_viscosity": "rot_viscosity",
    "arm": "arm",
    "gravity": "gravity",
}


def parse_scenario(doc: dict) -> ScenarioConfig:
    """Validate a parsed TOML document into a ScenarioConfig.

    Raises:
        ConfigError: With one line per offending field.
    """
    problems: list[str] = []
    warnings: list[str] = []

    body = _build_section(BodyParams, doc, "body", _BODY_FIELDS, problems)
    motor1 = _build_section(MotorParams, doc, "motors.m1", _MOTOR_FIELDS, problems)
    motor2 = _build_section(MotorParams, doc, "motors.m2", _MOTOR_FIELDS, problems)
    ge1 = _build_section(PropellerGeParams, doc, "ground_effect.true.p1", _GE_FIELDS, problems)
    ge2 = _build_section(PropellerGeParams, doc, "ground_effect.true.p2", _GE_FIELDS, problems)

    ge_nom = doc.get("ground_effect", {}).get("nominal", None)
    if ge_nom is None:
        ge_nom_1, ge_nom_2 = ge1, ge2
    else:
        ge_nom_1 = _build_section(
            PropellerGeParams, doc, "ground_effect.nominal.p1", _GE_FIELDS, problems
        )
        ge_nom_2 = _build_section(
            PropellerGeParams, doc, "ground_effect.nominal.p2", _GE_FIELDS, problems
        )

    for name, motor in (("motors.m1", motor1), ("motors.m2", motor2)):
        if motor is not None and motor.inertia > MOTOR_INERTIA_PLAUSIBLE_MAX:
            warnings.append(
                f"{name}.inertia: {motor.inertia} kg*m^2 is implausibly large for a "
                "rotor-scale motor (loaded verbatim; check the source units)"
            )

    def simple(section, cls, problems):
        sec = doc.get(section, {})
        if not isinstance(sec, dict):
            problems.append(f"{section}: must be a table")
            return cls()
        try:
            return cls(**sec)
        except (TypeError, ValueError) as exc:
            problems.append(f"{section}: {exc}")
            return cls()

    ctl_sec = dict(doc.get("control", {}))
    dob_sec = ctl_sec.pop("dob", {})
    try:
        dob = DobConfig(**dob_sec)
    except (TypeError, ValueError) as exc:
        problems.append(f"control.dob: {exc}")
        dob = DobConfig()
    try:
        control = ControlConfig(dob=dob, **ctl_sec)
    except (TypeError, ValueError) as exc:
        problems.append(f"control: {exc}")
        control = ControlConfig(dob=dob)
    if control.feedback not in ("encoder", "estimate"):
        problems.append(
            f"control.feedback: must be 'encoder' or 'estimate', got {control.feedback!r}"
        )

    estimator = simple("estimator", EstimatorConfig, problems)
    if not 0.0 < estimator.forgetting <= 1.0:
        problems.append(
            f"estimator.forgetting: must be in (0, 1], got {estimator.forgetting}"
        )

    ipt_sec = dict(doc.get("ipt", {}))
    anchors = ipt_sec.pop("coupling_anchors", None)
    try:
        circuit = IptCircuitParams(**ipt_sec)
    except (TypeError, ValueError) as exc:
        problems.append(f"ipt: {exc}")
        circuit = IptCircuitParams()
    try:
        cmap = CouplingMap(tuple((z, k) for z, k in anchors)) if anchors else CouplingMap()
    except (TypeError, ValueError) as exc:
        problems.append(f"ipt.coupling_anchors: {exc}")
        cmap = CouplingMap()

    timeline = simple("timeline", TimelineConfig, problems)
    if timeline.dt <= 0.0:
        problems.append(f"timeline.dt: must be > 0, got {timeline.dt}")
    elif timeline.duration < timeline.dt:
        problems.append(
            f"timeline.duration: must be >= dt, got {timeline.duration} < {timeline.dt}"
        )
    noise = simple("noise", NoiseConfig, problems)
    if noise.current_sigma < 0.0:
        problems.append(f"noise.current_sigma: must be >= 0, got {noise.current_sigma}")

    eval_sec = dict(doc.get("evaluation", {}))
    for key in ("altitude_window", "pitch_window"):
        if key in eval_sec:
            eval_sec[key] = tuple(eval_sec[key])
    try:
        evaluation = EvaluationConfig(**eval_sec)
    except (TypeError, ValueError) as exc:
        problems.append(f"evaluation: {exc}")
        evaluation = EvaluationConfig()
    for key, window in (
        ("altitude_window", evaluation.altitude_window),
        ("pitch_window", evaluation.pitch_window),
    ):
        if len(window) != 2 or window[0] >= window[1]:
            problems.append(f"evaluation.{key}: must be an increasing [start, end] pair")

    init_mode = doc.get("init", {}).get("mode", "ground")
    if init_mode not in ("ground", "hover"):
        problems.append(f"init.mode: must be 'ground' or 'hover', got {init_mode!r}")

    known = {
        "body", "motors", "ground_effect", "control", "estimator",
        "ipt", "timeline", "noise", "evaluation", "init",
    }
    for key in doc:
        if key not in known:
            problems.append(f"{key}: unknown section")

    if problems:
        raise ConfigError(problems)

    return ScenarioConfig(
        body=body,
        motor1=motor1,
        motor2=motor2,
        ge_true_1=ge1,
        ge_true_2=ge2,
        ge_nominal_1=ge_nom_1,
        ge_nominal_2=ge_nom_2,
        control=control,
        estimator=estimator,
        ipt_circuit=circuit,
        coupling_map=cmap,
        timeline=timeline,
        noise=noise,
        evaluation=evaluation,
        init_mode=init_mode,
        warnings=tuple(warnings),
    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario TOML file."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError([f"{path}: no such file"])
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: TOML parse error: {exc}"])
    return parse_scenario(doc)


def default_scenario_text() -> str:
    """Raw TOML text of the packaged reference scenario."""
    return (
        resources.files("gebench").joinpath("data/reference_scenario.toml").read_text()
    )


def default_scenario() -> ScenarioConfig:
    """Packaged reference scenario (0.3 m hover, 0.05 rad pitch excursion)."""
    return parse_scenario(tomllib.loads(default_scenario_text()))
