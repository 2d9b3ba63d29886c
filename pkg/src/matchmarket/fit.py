"""Grid-search fit of simulated married-share curves to cohort data.

Simulation steps map to ages through ``age = intercept + slope * t``. For
each threshold curve and each map the simulated share is interpolated at
the observed ages (share 0 before step 0, the last value past the end) and
scored by RMSE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import format_lambda, parse_lambda
from .errors import DegenerateSeriesError

SLOPES = np.round(np.arange(0.1, 2.0 + 1e-9, 0.05), 10)
INTERCEPTS = np.round(np.arange(10.0, 25.0 + 1e-9, 0.5), 10)


@dataclass(frozen=True, eq=False)
class FitReport:
    lam: float
    slope: float
    intercept: float
    rmse: float
    table: tuple  # ((age, observed, fitted), ...)
    cohort: str = ""

    def __post_init__(self):
        if not (self.rmse >= 0 and self.slope > 0):
            raise ValueError("a fit needs rmse >= 0 and slope > 0")

    def step_of(self, age):
        return (age - self.intercept) / self.slope


def _curves(sim):
    """``{lam: share array over t = 0..T}`` with float thresholds."""
    out = {}
    for lam, curve in sim.items():
        lam = parse_lambda(lam) if isinstance(lam, str) else float(lam)
        curve = np.asarray(curve, dtype=np.float64)
        if curve.ndim != 1 or curve.size < 2 or not np.all(np.isfinite(curve)):
            raise DegenerateSeriesError(f"simulated curve for lambda={format_lambda(lam)} is unusable")
        out[lam] = curve
    return out


def predict(curve, ages, slope, intercept):
    """Simulated shares at ``ages`` (broadcasts over slope/intercept grids)."""
    t = (np.asarray(ages) - intercept) / slope
    steps = np.arange(curve.size, dtype=np.float64)
    return np.interp(t, steps, curve, left=0.0, right=curve[-1])


def fit_model_to_series(sim, real, slopes=SLOPES, intercepts=INTERCEPTS):
    """Best ``(lam, slope, intercept)`` for one :class:`RealSeries`."""
    curves = _curves(sim)
    if len(curves) < 2:
        raise DegenerateSeriesError("need at least two simulated thresholds")
    ages, shares = real.ages, real.shares
    if ages.size < 3:
        raise DegenerateSeriesError(f"cohort {real.cohort}: need at least 3 points, have {ages.size}")
    if np.ptp(shares) == 0:
        raise DegenerateSeriesError(f"cohort {real.cohort}: constant share series")
    S = np.asarray(slopes, dtype=np.float64)[:, None, None]
    I = np.asarray(intercepts, dtype=np.float64)[None, :, None]
    best = None
    for lam in sorted(curves):
        pred = predict(curves[lam], ages[None, None, :], S, I)
        rmse = np.sqrt(np.mean((pred - shares) ** 2, axis=-1))
        i, j = np.unravel_index(np.argmin(rmse), rmse.shape)
        if best is None or rmse[i, j] < best[0] - 1e-15:
            best = (float(rmse[i, j]), lam, float(S[i, 0, 0]), float(I[0, j, 0]))
    rmse, lam, slope, intercept = best
    fitted = predict(curves[lam], ages, slope, intercept)
    table = tuple(zip(ages.tolist(), shares.tolist(), fitted.tolist()))
    return FitReport(lam, slope, intercept, max(rmse, 0.0), table, real.cohort)


def fit_cohorts(sim, series, **kw):
    """One independent fit per cohort, keyed by cohort label."""
    return {s.cohort: fit_model_to_series(sim, s, **kw) for s in series}


def curves_from_summary(summary):
    """Married-share curves from :func:`matchmarket.sweep.read_summary`."""
    out = {}
    for label, (t, married, _) in summary.items():
        if label == "adaptive":
            continue
        lam = parse_lambda(label)
        if not np.array_equal(t, np.arange(t.size)):
            raise DegenerateSeriesError(f"summary for lambda={label} is not a full t = 0..T curve")
        out[lam] = married
    return out


def format_report(reports):
    lines = ["cohort,lambda,slope,intercept,rmse"]
    for cohort, r in reports.items():
        lines.append(f"{cohort},{format_lambda(r.lam)},{r.slope:.12g},{r.intercept:.12g},{r.rmse:.12g}")
    return "\n".join(lines)

