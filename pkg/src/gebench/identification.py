"""Offline identification of the ground-effect current model from logs.

Pipeline: each constant-altitude current trace is reduced to its DC
component (FFT-based, snapping the averaging window to whole periods of
the dominant oscillation when one is present), then the points
(altitude, DC current) are fitted to

    I(z) = I_inf / (1 + C_a * exp(-C_b * z / R))

by damped Gauss-Newton in log-parameter space with multiple starts over a
log-spaced (C_a, C_b) box.  I_inf is linear in the model, so each start
seeds it with its conditional least-squares value.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "CurrentTrace",
    "FitResult",
    "FitError",
    "extract_dc",
    "fit_ge_current_model",
    "identify_from_traces",
    "load_trace_csv",
    "load_manifest",
]


class FitError(RuntimeError):
    """Fit failed to converge; carries the best parameters found so far."""

    def __init__(self, message: str, best: "FitResult | None" = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class CurrentTrace:
    """Uniformly sampled motor-current record at one constant altitude.

    Attributes:
        sample_rate: Sampling frequency [Hz].
        samples: Current samples [A].
        altitude: Altitude at which the trace was recorded [m].
    """

    sample_rate: float
    samples: np.ndarray
    altitude: float

    def __post_init__(self) -> None:
        if self.sample_rate <= 0.0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        object.__setattr__(
            self, "samples", np.asarray(self.samples, dtype=float).ravel()
        )
        if self.samples.size == 0:
            raise ValueError("trace has no samples")


@dataclass(frozen=True)
class FitResult:
    """Fitted model coefficients and fit quality.

    residual_rms is the root-mean-square misfit in amps over the points
    actually fitted; residuals are per-point (data - model).
    """

    c_a: float
    c_b: float
    i_m_inf: float
    residual_rms: float
    residuals: tuple[float, ...] = field(default_factory=tuple)
    iterations: int = 0

    def __post_init__(self) -> None:
        if self.c_a <= 0.0 or self.c_b <= 0.0:
            raise ValueError(
                f"fitted coefficients must be > 0, got c_a={self.c_a}, c_b={self.c_b}"
            )
        if self.residual_rms < 0.0:
            raise ValueError(f"residual_rms must be >= 0, got {self.residual_rms}")


def extract_dc(trace: CurrentTrace, peak_threshold: float = 10.0) -> float:
    """DC component of a current trace [A].

    Looks for a dominant oscillation in the spectrum; when one stands out
    (peak power above peak_threshold times the non-DC average), the mean
    is taken over the largest whole number of its periods that fits in
    the record, which removes the bias a partially covered cycle leaves
    in a plain mean.  Otherwise returns the plain mean.
    """
    x = trace.samples
    n = x.size
    if n < 4:
        return float(np.mean(x))

    spec = np.fft.rfft(x - np.mean(x))
    power = np.abs(spec) ** 2
    power[0] = 0.0
    k = int(np.argmax(power))
    if k == 0 or power[k] < peak_threshold * np.mean(power[1:]):
        return float(np.mean(x))

    # refine the peak bin by quadratic interpolation on log power
    if 1 <= k < power.size - 1 and power[k - 1] > 0.0 and power[k + 1] > 0.0:
        la, lb, lc = np.log(power[k - 1 : k + 2])
        denom = la - 2.0 * lb + lc
        delta = 0.5 * (la - lc) / denom if denom != 0.0 else 0.0
        delta = float(np.clip(delta, -0.5, 0.5))
    else:
        delta = 0.0
    freq = (k + delta) * trace.sample_rate / n

    period_samples = trace.sample_rate / freq
    whole = int(math.floor(n / period_samples))
    if whole < 1:
        return float(np.mean(x))
    m = int(round(whole * period_samples))
    m = min(max(m, 1), n)
    return float(np.mean(x[:m]))


def _model(z: np.ndarray, c_a: float, c_b: float, i_inf: float, r: float) -> np.ndarray:
    return i_inf / (1.0 + c_a * np.exp(-c_b * z / r))


def _conditional_i_inf(z: np.ndarray, i: np.ndarray, c_a: float, c_b: float, r: float) -> float:
    """Least-squares I_inf given (c_a, c_b): model is linear in I_inf."""
    u = 1.0 / (1.0 + c_a * np.exp(-c_b * z / r))
    denom = float(u @ u)
    if denom <= 0.0:
        return float(np.mean(i))
    return float((u @ i) / denom)


def fit_ge_current_model(
    points: list[tuple[float, float]],
    r: float,
    fixed_i_inf: float | None = None,
    n_starts: int = 5,
    max_iter: int = 200,
    gtol: float = 1e-12,
) -> FitResult:
    """Fit (C_a, C_b, I_inf) to (altitude, DC current) points.

    Damped Gauss-Newton on log-parameters (positivity for free) with
    n_starts starts log-spaced across C_a in [0.5, 5] and C_b in [1, 6];
    the best converged start wins.  Pass fixed_i_inf to fit only the two
    shape coefficients.

    Args:
        points: (z [m], i_dc [A]) pairs; at least 4 distinct altitudes
            spanning at least a factor of 3.
        r: Rotor radius [m].

    Raises:
        FitError: If no start converges; the exception carries the best
            parameters reached.
        ValueError: If the points are insufficient to constrain the fit.
    """
    if r <= 0.0:
        raise ValueError(f"rotor radius must be > 0, got {r}")
    pts = [(float(z), float(i)) for z, i in points]
    z_all = np.array([p[0] for p in pts])
    i_all = np.array([p[1] for p in pts])
    if np.any(z_all < 0.0):
        raise ValueError("altitudes must be >= 0")
    distinct = np.unique(z_all)
    if distinct.size < 4:
        raise ValueError(f"need >= 4 distinct altitudes, got {distinct.size}")
    zmin = distinct[distinct > 0].min() if np.any(distinct > 0) else 0.0
    if zmin > 0.0 and distinct.max() / zmin < 3.0:
        raise ValueError(
            "altitude points must span at least a factor of 3 "
            f"(got {distinct.max() / zmin:.2f})"
        )

    ca_starts = np.geomspace(0.5, 5.0, n_starts)
    cb_starts = np.geomspace(1.0, 6.0, n_starts)

    best: FitResult | None = None
    best_cost = math.inf
    converged = False

    for ca0, cb0 in zip(ca_starts, cb_starts):
        res = _gauss_newton(
            z_all, i_all, r, ca0, cb0, fixed_i_inf, max_iter, gtol
        )
        if res is None:
            continue
        fit, ok, cost = res
        if cost < best_cost:
            best, best_cost = fit, cost
        converged = converged or ok

    if best is None:
        raise FitError("all fit starts failed")
    if not converged:
        raise FitError(
            f"fit did not converge in {max_iter} iterations per start", best=best
        )
    return best


def _gauss_newton(
    z: np.ndarray,
    i: np.ndarray,
    r: float,
    ca0: float,
    cb0: float,
    fixed_i_inf: float | None,
    max_iter: int,
    gtol: float,
):
    """One damped Gauss-Newton descent; returns (FitResult, converged, cost)."""
    ca, cb = ca0, cb0
    i_inf = fixed_i_inf if fixed_i_inf is not None else _conditional_i_inf(z, i, ca, cb, r)
    if i_inf <= 0.0:
        return None

    def residuals(ca_, cb_, iinf_):
        return i - _model(z, ca_, cb_, iinf_, r)

    cost = float(residuals(ca, cb, i_inf) @ residuals(ca, cb, i_inf))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        e = np.exp(-cb * z / r)
        d = 1.0 + ca * e
        # derivatives of the model w.r.t. log-parameters
        dm_dlca = -i_inf * ca * e / d**2
        dm_dlcb = i_inf * ca * cb * (z / r) * e / d**2
        cols = [dm_dlca, dm_dlcb]
        if fixed_i_inf is None:
            cols.append(i_inf / d)
        jac = -np.column_stack(cols)  # residual jacobian
        res = residuals(ca, cb, i_inf)
        grad = 2.0 * jac.T @ res
        if float(np.linalg.norm(grad)) <= gtol * max(1.0, cost):
            converged = True
            break
        try:
            step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None

        # backtracking on the residual norm
        alpha = 1.0
        improved = False
        for _ in range(40):
            ca_n = ca * math.exp(alpha * step[0])
            cb_n = cb * math.exp(alpha * step[1])
            iinf_n = (
                i_inf * math.exp(alpha * step[2])
                if fixed_i_inf is None
                else i_inf
            )
            res_n = residuals(ca_n, cb_n, iinf_n)
            cost_n = float(res_n @ res_n)
            if math.isfinite(cost_n) and cost_n <= cost:
                improved = cost < math.inf and (cost - cost_n) > 1e-15 * (1.0 + cost)
                ca, cb, i_inf, new_cost = ca_n, cb_n, iinf_n, cost_n
                break
            alpha *= 0.5
        else:
            converged = True  # no descent direction left: at a local optimum
            break
        cost = new_cost
        if not improved:
            converged = True
            break

    res = residuals(ca, cb, i_inf)
    rms = float(np.sqrt(np.mean(res**2)))
    fit = FitResult(
        c_a=ca,
        c_b=cb,
        i_m_inf=i_inf,
        residual_rms=rms,
        residuals=tuple(float(v) for v in res),
        iterations=it,
    )
    return fit, converged, float(res @ res)


def identify_from_traces(traces: list[CurrentTrace], r: float, **fit_kwargs) -> FitResult:
    """Run DC extraction on each trace, then fit the current model.

    Traces recorded at the same altitude average into one point, so
    duplicates act as weights without skewing a noiseless fit.
    """
    if len(traces) < 4:
        raise ValueError(f"need >= 4 traces, got {len(traces)}")
    by_alt: dict[float, list[float]] = {}
    for tr in traces:
        by_alt.setdefault(tr.altitude, []).append(extract_dc(tr))
    points = [(z, float(np.mean(vals))) for z, vals in sorted(by_alt.items())]
    return fit_ge_current_model(points, r, **fit_kwargs)


def load_trace_csv(path: str | Path, altitude: float) -> CurrentTrace:
    """Load a current log CSV with columns t_s, i_a (header required)."""
    path = Path(path)
    times: list[float] = []
    currents: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "t_s" not in reader.fieldnames or "i_a" not in reader.fieldnames:
            raise ValueError(f"{path}: expected columns t_s, i_a, got {reader.fieldnames}")
        for row in reader:
            times.append(float(row["t_s"]))
            currents.append(float(row["i_a"]))
    if len(times) < 2:
        raise ValueError(f"{path}: need at least 2 samples")
    dt = np.diff(times)
    step = float(np.median(dt))
    if step <= 0.0 or np.any(np.abs(dt - step) > 1e-6 * max(step, 1.0) + 1e-12):
        raise ValueError(f"{path}: samples must be uniformly spaced")
    return CurrentTrace(sample_rate=1.0 / step, samples=np.array(currents), altitude=altitude)


def load_manifest(path: str | Path) -> tuple[list[CurrentTrace], float]:
    """Load an identification manifest (JSON) and its referenced traces.

    Schema:
        {"rotor_radius": 0.34,
         "traces": [{"file": "hover_005.csv", "altitude_m": 0.05}, ...]}

    Relative trace paths resolve against the manifest directory.
    """
    path = Path(path)
    with path.open() as fh:
        doc = json.load(fh)
    try:
        r = float(doc["rotor_radius"])
        entries = doc["traces"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: manifest must define rotor_radius and traces") from exc
    traces = []
    for entry in entries:
        fpath = Path(entry["file"])
        if not fpath.is_absolute():
            fpath = path.parent / fpath
        traces.append(load_trace_csv(fpath, float(entry["altitude_m"])))
    return traces, r
