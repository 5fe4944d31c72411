"""Resonant inductive-power-transfer link efficiency versus coil separation.

Maps altitude to coupling coefficient through a user-supplied anchor table
and evaluates the maximum transmission efficiency of a two-coil resonant
link under optimal loading:

    eta = k^2 Q1 Q2 / (1 + sqrt(1 + k^2 Q1 Q2))^2

with Q = omega*L/R the coil quality factors at the operating frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "IptCircuitParams",
    "CouplingMap",
    "CouplingResult",
    "coupling_from_altitude",
    "max_efficiency",
    "efficiency_band",
]

DEFAULT_COUPLING_ANCHORS = ((0.27, 0.13), (0.30, 0.10), (0.33, 0.07))


@dataclass(frozen=True)
class IptCircuitParams:
    """Operating frequency [Hz], coil resistances [ohm], inductances [H]."""

    f_op: float = 85e3
    r1: float = 0.108
    r2: float = 0.0325
    l1: float = 236e-6
    l2: float = 18.9e-6

    def __post_init__(self) -> None:
        for name in ("f_op", "r1", "r2", "l1", "l2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.q1 <= 1.0 or self.q2 <= 1.0:
            raise ValueError(
                f"coil quality factors must exceed 1, got Q1={self.q1:.3g}, Q2={self.q2:.3g}"
            )

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.f_op

    @property
    def q1(self) -> float:
        return 2.0 * math.pi * self.f_op * self.l1 / self.r1

    @property
    def q2(self) -> float:
        return 2.0 * math.pi * self.f_op * self.l2 / self.r2


@dataclass(frozen=True)
class CouplingMap:
    """Piecewise-linear coupling coefficient versus altitude.

    Anchors are (z [m], k) pairs; k must lie in (0, 1) and decrease with
    z (larger separation couples less).
    """

    anchors: tuple[tuple[float, float], ...] = DEFAULT_COUPLING_ANCHORS

    def __post_init__(self) -> None:
        pts = tuple(sorted((float(z), float(k)) for z, k in self.anchors))
        if len(pts) < 2:
            raise ValueError("coupling map needs at least 2 anchors")
        zs = [z for z, _ in pts]
        ks = [k for _, k in pts]
        if len(set(zs)) != len(zs):
            raise ValueError("coupling anchors must have distinct altitudes")
        if any(not 0.0 < k < 1.0 for k in ks):
            raise ValueError(f"anchor couplings must lie in (0, 1), got {ks}")
        if any(k2 >= k1 for k1, k2 in zip(ks, ks[1:])):
            raise ValueError("coupling must decrease strictly with altitude")
        object.__setattr__(self, "anchors", pts)

    @property
    def z_range(self) -> tuple[float, float]:
        return self.anchors[0][0], self.anchors[-1][0]


@dataclass(frozen=True)
class CouplingResult:
    """Coupling coefficient with a flag set when z left the map range."""

    k: float
    clamped: bool = False


def coupling_from_altitude(z: float, cmap: CouplingMap) -> CouplingResult:
    """Interpolate the coupling coefficient at altitude z.

    Outside the anchor range the nearest end value is returned with the
    clamped flag set.
    """
    pts = cmap.anchors
    if z <= pts[0][0]:
        return CouplingResult(pts[0][1], clamped=z < pts[0][0])
    if z >= pts[-1][0]:
        return CouplingResult(pts[-1][1], clamped=z > pts[-1][0])
    for (z0, k0), (z1, k1) in zip(pts, pts[1:]):
        if z <= z1:
            w = (z - z0) / (z1 - z0)
            return CouplingResult(k0 + w * (k1 - k0))
    raise AssertionError("unreachable")


def max_efficiency(k: float, c: IptCircuitParams) -> float:
    """Maximum link efficiency at coupling k under optimal loading."""
    if not 0.0 < k < 1.0:
        raise ValueError(f"coupling must lie in (0, 1), got {k}")
    kq = k * k * c.q1 * c.q2
    return kq / (1.0 + math.sqrt(1.0 + kq)) ** 2


def efficiency_band(
    z_est_error: float,
    hover_z: float,
    cmap: CouplingMap,
    circuit: IptCircuitParams,
) -> tuple[float, float]:
    """Efficiency range implied by an altitude-estimation error band.

    Evaluates the efficiency at hover_z +/- z_est_error and returns the
    ordered (min, max) pair.
    """
    if z_est_error < 0.0:
        raise ValueError(f"error band must be >= 0, got {z_est_error}")
    etas = []
    for z in (hover_z - z_est_error, hover_z + z_est_error):
        k = coupling_from_altitude(z, cmap).k
        etas.append(max_efficiency(k, circuit))
    return min(etas), max(etas)
