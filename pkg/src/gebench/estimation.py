"""Online altitude and pitch estimation from the two motor currents.

Each propeller carries one scalar recursive-least-squares channel.  The
current-ratio model I*(1 + C_a*x) = I_inf with x = exp(-C_b*z/R) is linear
in x, so the channel regresses

    observation y = I_inf - I,   regressor phi = C_a * I

with exponential forgetting, then maps the smoothed x back to altitude
through z = -(R/C_b)*ln(x).  The two channel altitudes combine into the
centre altitude and pitch angle of the bench:

    z = (z1 + z2)/2,   theta = arcsin((z1 - z2) / (2l))

Estimates stay inside the physically credible band by clamping x to
[exp(-C_b*z_max/R), 1]; the estimate picks up a per-channel quality flag
whenever a sample is rejected or a clamp engages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .ge_models import PropellerGeParams

__all__ = [
    "RlsChannel",
    "AttitudeEstimate",
    "CHANNEL_OK",
    "CHANNEL_REJECTED",
    "CHANNEL_SATURATED_LOW",
    "CHANNEL_SATURATED_HIGH",
    "THETA_SATURATED",
    "new_channel",
    "rls_update",
    "channel_altitude",
    "combine_attitude",
    "AttitudeEstimator",
]

CHANNEL_OK = "ok"
CHANNEL_REJECTED = "rejected"
CHANNEL_SATURATED_LOW = "saturated_low"
CHANNEL_SATURATED_HIGH = "saturated_high"
THETA_SATURATED = "theta_saturated"


@dataclass(frozen=True)
class RlsChannel:
    """State of one forgetting-factor RLS channel.

    Attributes:
        x_hat: Estimate of exp(-C_b*z/R), clamped to [x_min, 1].
        covariance: Scalar covariance P > 0.
        forgetting: Forgetting factor in (0, 1].
        i_m_inf: Out-of-ground-effect reference current [A].
        x_min: Lower clamp of x_hat (sets the maximum credible altitude).
        rejected: Count of rejected (non-positive) samples.
        flag: Quality flag of the latest update.
    """

    x_hat: float
    covariance: float
    forgetting: float
    i_m_inf: float
    x_min: float
    rejected: int = 0
    flag: str = CHANNEL_OK

    def __post_init__(self) -> None:
        if not 0.0 < self.forgetting <= 1.0:
            raise ValueError(f"forgetting must be in (0, 1], got {self.forgetting}")
        if self.covariance <= 0.0:
            raise ValueError(f"covariance must be > 0, got {self.covariance}")
        if self.i_m_inf <= 0.0:
            raise ValueError(f"i_m_inf must be > 0, got {self.i_m_inf}")
        if not 0.0 < self.x_min < 1.0:
            raise ValueError(f"x_min must be in (0, 1), got {self.x_min}")


def new_channel(
    ge: PropellerGeParams,
    i_m_inf: float,
    forgetting: float = 0.9985,
    init_altitude: float = 0.3,
    init_covariance: float = 10.0,
    max_altitude: float | None = None,
) -> RlsChannel:
    """Build a channel initialised at a prior altitude.

    max_altitude defaults to 3 rotor radii and sets the lower clamp of
    the exponential estimate.
    """
    if max_altitude is None:
        max_altitude = 3.0 * ge.rotor_radius
    x0 = math.exp(-ge.c_b * init_altitude / ge.rotor_radius)
    x_min = math.exp(-ge.c_b * max_altitude / ge.rotor_radius)
    return RlsChannel(
        x_hat=min(max(x0, x_min), 1.0),
        covariance=init_covariance,
        forgetting=forgetting,
        i_m_inf=i_m_inf,
        x_min=x_min,
    )


def rls_update(ch: RlsChannel, i_m_sample: float, ge: PropellerGeParams) -> RlsChannel:
    """One forgetting-factor RLS update from a current sample.

    Non-positive samples are rejected (channel state unchanged apart from
    the rejection count).  The updated estimate is clamped to its band;
    a clamp is reported through the channel flag but does not touch the
    covariance recursion.
    """
    if i_m_sample <= 0.0:
        return replace(ch, rejected=ch.rejected + 1, flag=CHANNEL_REJECTED)

    phi = ge.c_a * i_m_sample
    y = ch.i_m_inf - i_m_sample
    lam = ch.forgetting
    denom = lam + phi * phi * ch.covariance
    gain = ch.covariance * phi / denom
    x = ch.x_hat + gain * (y - phi * ch.x_hat)
    cov = ch.covariance / denom

    flag = CHANNEL_OK
    if x < ch.x_min:
        x = ch.x_min
        flag = CHANNEL_SATURATED_LOW
    elif x > 1.0:
        x = 1.0
        flag = CHANNEL_SATURATED_HIGH
    return replace(ch, x_hat=x, covariance=cov, flag=flag)


def channel_altitude(ch: RlsChannel, ge: PropellerGeParams) -> float:
    """Altitude implied by the channel estimate: z = -(R/C_b)*ln(x_hat)."""
    return -(ge.rotor_radius / ge.c_b) * math.log(ch.x_hat)


@dataclass(frozen=True)
class AttitudeEstimate:
    """Combined estimate with per-channel altitudes and quality flags."""

    z_hat: float
    theta_hat: float
    z1_hat: float
    z2_hat: float
    flags: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.flags


def combine_attitude(z1: float, z2: float, arm: float) -> AttitudeEstimate:
    """Centre altitude and pitch from the two propeller altitudes.

    Pitch saturates at +/- pi/2 (flagged) when |z1 - z2| exceeds the
    geometric limit 2l.
    """
    if arm <= 0.0:
        raise ValueError(f"arm must be > 0, got {arm}")
    z = 0.5 * (z1 + z2)
    s = (z1 - z2) / (2.0 * arm)
    flags: tuple[str, ...] = ()
    if s > 1.0:
        theta = 0.5 * math.pi
        flags = (THETA_SATURATED,)
    elif s < -1.0:
        theta = -0.5 * math.pi
        flags = (THETA_SATURATED,)
    else:
        theta = math.asin(s)
    return AttitudeEstimate(z, theta, z1, z2, flags)


class AttitudeEstimator:
    """Streaming two-channel estimator: (t, i1, i2) in, attitude out.

    Single writer; the latest estimate is an immutable snapshot that may
    be read concurrently.  Batch processing of a recorded current log is
    a thin loop over step().
    """

    def __init__(
        self,
        ge1: PropellerGeParams,
        ge2: PropellerGeParams,
        arm: float,
        i_m_inf: tuple[float, float],
        forgetting: float = 0.9985,
        init_altitude: float = 0.3,
        init_covariance: float = 10.0,
        max_altitude: float | None = None,
    ):
        if arm <= 0.0:
            raise ValueError(f"arm must be > 0, got {arm}")
        self.ge1 = ge1
        self.ge2 = ge2
        self.arm = arm
        self.ch1 = new_channel(
            ge1, i_m_inf[0], forgetting, init_altitude, init_covariance, max_altitude
        )
        self.ch2 = new_channel(
            ge2, i_m_inf[1], forgetting, init_altitude, init_covariance, max_altitude
        )
        self._last_time: float | None = None
        self.latest: AttitudeEstimate | None = None

    def step(self, t: float, i1: float, i2: float) -> AttitudeEstimate:
        """Consume one pair of current samples taken at time t [s]."""
        if self._last_time is not None and t < self._last_time:
            raise ValueError(
                f"sample timestamps must be monotone: {t} after {self._last_time}"
            )
        self._last_time = t
        self.ch1 = rls_update(self.ch1, i1, self.ge1)
        self.ch2 = rls_update(self.ch2, i2, self.ge2)
        z1 = channel_altitude(self.ch1, self.ge1)
        z2 = channel_altitude(self.ch2, self.ge2)
        est = combine_attitude(z1, z2, self.arm)
        flags = list(est.flags)
        for label, ch in (("ch1", self.ch1), ("ch2", self.ch2)):
            if ch.flag != CHANNEL_OK:
                flags.append(f"{label}_{ch.flag}")
        est = replace(est, flags=tuple(flags))
        self.latest = est
        return est

    def run_batch(self, times, i1_samples, i2_samples) -> list[AttitudeEstimate]:
        """Process aligned sample sequences; returns one estimate per row."""
        return [
            self.step(t, a, b) for t, a, b in zip(times, i1_samples, i2_samples)
        ]
