"""Two-propeller ground-effect bench toolkit.

Simulates a gimballed two-propeller bench flying near a surface, estimates
its altitude and pitch purely from the motor currents, identifies the
ground-effect current model from logged data, and evaluates the efficiency
of a resonant inductive power link at the resulting coil separation.
"""

from .bench import (
    BenchState,
    BodyParams,
    PropellerAltitudes,
    allocate,
    attitude_from_propeller_altitudes,
    dynamics_derivative,
    nominal_plants,
    propeller_altitudes,
    thrusts_to_wrench,
)
from .control import (
    DisturbanceObserver,
    DobConfig,
    Pid,
    PidGains,
    place_pd_double_integrator,
    place_pid_double_integrator,
)
from .estimation import (
    AttitudeEstimate,
    AttitudeEstimator,
    RlsChannel,
    channel_altitude,
    combine_attitude,
    new_channel,
    rls_update,
)
from .ge_models import (
    AltitudeResult,
    BladeGeometry,
    HaydenParams,
    PropellerGeParams,
    altitude_from_current,
    betz_power_ratio,
    cheeseman_power_ratio,
    finite_ge_thrust_ratio,
    ge_current_ratio,
    hayden_power_ratio,
    max_thrust_ratio_from_geometry,
)
from .identification import (
    CurrentTrace,
    FitResult,
    extract_dc,
    fit_ge_current_model,
    identify_from_traces,
)
from .ipt import (
    CouplingMap,
    IptCircuitParams,
    coupling_from_altitude,
    efficiency_band,
    max_efficiency,
)
from .motor import (
    MotorParams,
    MotorState,
    SpeedServo,
    bet_speed_for_thrust,
    bet_thrust,
    current_in_ge,
    motor_torque_balance_derivative,
    steady_current,
)
from .scenario import ScenarioConfig, default_scenario, load_scenario
from .simulation import (
    SweepReport,
    TrajectoryRecord,
    emit_csv,
    run_parameter_error_sweep,
    run_scenario,
    summarize,
)

__version__ = "0.1.0"
