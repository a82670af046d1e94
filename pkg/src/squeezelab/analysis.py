"""Exponent extraction from quench series.

Covers the decay exponent lambda of the transverse magnetization, the
scaling exponents (nu, mu, nu0) of the squeezing optimum versus system
size, their consistency relation nu = nu0 - 2*lambda*mu, saturating
size-dependence fits, and finite-size drop-time detection/collapse.
All fits are plain least squares on (log-)transformed data; standard
errors come from the linear-regression formula or the curve_fit
covariance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .collective import TimeSeries

DEFAULT_T_LO = 2.0          # start of the power-law window, units of 1/J
DEFAULT_WINDOW_SPAN = 10 ** 0.7
DROP_FACTOR = 0.5           # "drop" = falling below this fraction of the
                            # power-law extrapolation (or of m(0))


@dataclass
class ScalingFit:
    """One fitted exponent with its provenance."""

    exponent: float
    se: float
    window: tuple            # (x_lo, x_hi) actually used
    model: str               # "power-law" | "saturating"
    amplitude: float = np.nan
    n_points: int = 0
    resid_max: float = np.nan
    params: dict = field(default_factory=dict)


def _slope_fit(x, y):
    """Least-squares line y = a + b x; returns (b, a, se_b, max|resid|)."""
    n = len(x)
    A = np.vstack([x, np.ones(n)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    b, a = coef
    r = y - A @ coef
    if n > 2:
        se_b = np.sqrt((r @ r) / (n - 2) / ((x - x.mean()) ** 2).sum())
    else:
        se_b = np.nan
    return b, a, se_b, float(np.max(np.abs(r))) if n else np.nan


def fit_power_law(t, m, lo, hi, min_points=6) -> ScalingFit:
    """m ~ A t^(-lam) on t in [lo, hi]; exponent is the positive lam."""
    t = np.asarray(t, float)
    m = np.asarray(m, float)
    sel = (t >= lo) & (t <= hi) & (m > 0) & (t > 0)
    if sel.sum() < min_points:
        raise ValueError(
            f"power-law window [{lo:g}, {hi:g}] holds {int(sel.sum())} "
            f"usable points, need >= {min_points}")
    b, a, se, rmax = _slope_fit(np.log(t[sel]), np.log(m[sel]))
    return ScalingFit(exponent=-b, se=se, window=(lo, hi),
                      model="power-law", amplitude=np.exp(a),
                      n_points=int(sel.sum()), resid_max=rmax)


# ---------------------------------------------------------------------------
# finite-size drop detection
# ---------------------------------------------------------------------------

@dataclass
class DropReport:
    t_drop: float
    mode: str                # "fast" | "powerlaw" | "absolute"
    lam: float | None = None


def _cross(t, m, thr, i):
    """Linear-interpolated time where m falls below thr between i-1 and i."""
    if i == 0:
        return t[0]
    da = m[i - 1] - thr[i - 1]
    db = m[i] - thr[i]
    if da <= 0 or da == db:
        return t[i]
    return t[i - 1] + da / (da - db) * (t[i] - t[i - 1])


def _absolute_drop(t, m, factor) -> DropReport:
    thr = np.full_like(m, factor * m[0])
    below = np.nonzero(m < thr)[0]
    if not below.size:
        raise ValueError("no finite-size drop detected within the window")
    return DropReport(t_drop=_cross(t, m, thr, below[0]), mode="absolute")


def detect_drop(t, m, t_lo: float = DEFAULT_T_LO, factor: float = DROP_FACTOR,
                span: float = DEFAULT_WINDOW_SPAN) -> DropReport:
    """Locate the finite-size magnetization drop.

    Fast relaxation (the series loses a 1-factor share of its initial
    value before the power-law window even opens) is thresholded against
    m(0) directly; otherwise the drop is the first crossing below
    factor times the power-law extrapolation fitted on the early window
    [t_lo, min(t_lo*span, 0.6*t_drop)], iterated to a fixpoint. If no
    meaningful power law exists (fitted exponent outside (0, 1)), an
    absolute threshold against m(0) is the fallback.
    """
    t = np.asarray(t, float)
    m = np.asarray(m, float)
    early = np.nonzero((t <= t_lo) & (m < factor * m[0]))[0]
    if early.size:
        thr = np.full_like(m, factor * m[0])
        return DropReport(t_drop=_cross(t, m, thr, early[0]), mode="fast")
    t_drop = t[-1]
    lam = None
    for _ in range(20):
        hi = min(t_lo * span, 0.6 * t_drop)
        try:
            f = fit_power_law(t, m, t_lo, hi, min_points=4)
        except ValueError:
            return _absolute_drop(t, m, factor)
        if not (0.0 <= f.exponent <= 1.0):
            return _absolute_drop(t, m, factor)
        lam = f.exponent
        with np.errstate(divide="ignore"):
            extr = factor * f.amplitude * t ** (-lam)
        below = np.nonzero((t > hi) & (m < extr))[0]
        new = _cross(t, m, extr, below[0]) if below.size else t[-1]
        if abs(new - t_drop) <= 1e-9:
            return DropReport(t_drop=new, mode="powerlaw", lam=lam)
        t_drop = new
    return DropReport(t_drop=t_drop, mode="powerlaw", lam=lam)


@dataclass
class DropCollapse:
    t_drop: dict                  # L -> drop time
    spread_scaled: float          # spread of t_drop / L
    spread_raw: float             # spread of t_drop
    kind: str                     # "ballistic" | "size-independent"
    reports: dict = field(default_factory=dict)


def _spread(vals) -> float:
    vals = np.asarray(vals, float)
    return float((vals.max() - vals.min()) / vals.mean())


def drop_time_collapse(series: dict, t_lo: float = DEFAULT_T_LO,
                       factor: float = DROP_FACTOR) -> DropCollapse:
    """Drop times across sizes and which rescaling collapses them.

    `series` maps linear size L to a TimeSeries. The drop time is
    ballistic when t_drop/L has the smaller relative spread, and
    size-independent (paramagnetic decay) otherwise.
    """
    reports = {}
    for L, ts in series.items():
        t = ts.t
        m = ts.column("m_x")
        reports[L] = detect_drop(t, m, t_lo=t_lo, factor=factor)
    Ls = sorted(reports)
    td = np.array([reports[L].t_drop for L in Ls])
    spread_scaled = _spread(td / np.asarray(Ls, float))
    spread_raw = _spread(td)
    kind = "ballistic" if spread_scaled < spread_raw else "size-independent"
    return DropCollapse(t_drop={L: reports[L].t_drop for L in Ls},
                        spread_scaled=spread_scaled, spread_raw=spread_raw,
                        kind=kind, reports=reports)


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------

def fit_lambda(ts: TimeSeries, window: tuple | None = None,
               t_lo: float = DEFAULT_T_LO,
               span: float = DEFAULT_WINDOW_SPAN) -> ScalingFit:
    """Decay exponent of m_x ~ t^(-lambda).

    Without an explicit window the fit uses [t_lo, min(t_lo*span,
    0.6*t_drop)] with the drop located by detect_drop, so the transient
    and the finite-size drop stay excluded.
    """
    t = ts.t
    m = ts.column("m_x")
    if window is None:
        rep = detect_drop(t, m, t_lo=t_lo, span=span)
        window = (t_lo, min(t_lo * span, 0.6 * rep.t_drop))
    return fit_power_law(t, m, window[0], window[1])


@dataclass
class OptimumScaling:
    nu: ScalingFit       # (xi2)_min ~ N^(-nu)
    mu: ScalingFit       # t at the xi2 optimum ~ N^(mu)
    nu0: ScalingFit      # v_perp_min / (N/4) ~ N^(-nu0)


def fit_optimum_scaling(points) -> OptimumScaling:
    """Three independent log-log fits of the squeezing optimum vs N.

    `points` is a sequence of (N, xi2_min, t_min, v_perp_min). The
    minimal transverse variance enters normalized by the coherent-state
    value N/4, so nu0 is directly comparable with nu.
    """
    pts = sorted((float(N), float(x), float(tm), float(v))
                 for N, x, tm, v in points)
    if len(pts) < 4:
        raise ValueError(f"need >= 4 sizes, got {len(pts)}")
    N = np.array([p[0] for p in pts])
    xi2 = np.array([p[1] for p in pts])
    tm = np.array([p[2] for p in pts])
    vn = np.array([p[3] for p in pts]) / (N / 4.0)
    if np.any(np.diff(xi2) > 0):
        warnings.warn("xi2_min is not monotonic in N: no scalable squeezing")
    logN = np.log(N)

    def fit(y, sign):
        b, a, se, rmax = _slope_fit(logN, np.log(y))
        return ScalingFit(exponent=sign * b, se=se,
                          window=(float(N[0]), float(N[-1])),
                          model="power-law", amplitude=np.exp(a),
                          n_points=len(N), resid_max=rmax)

    return OptimumScaling(nu=fit(xi2, -1), mu=fit(tm, +1), nu0=fit(vn, -1))


@dataclass
class ExponentRelation:
    residual: float          # nu - (nu0 - 2*lambda*mu)
    predicted: float         # nu0 - 2*lambda*mu
    rsw_predicted: float     # (1 - lambda) * nu0
    rsw_residual: float


def check_exponent_relation(nu: float, nu0: float, lam: float,
                            mu: float) -> ExponentRelation:
    """Consistency of the measured nu with nu0 - 2*lambda*mu.

    Also reports the spin-wave-theory form (1 - lambda)*nu0, which the
    first expression reduces to when mu = nu0/2.
    """
    predicted = nu0 - 2.0 * lam * mu
    rsw = (1.0 - lam) * nu0
    return ExponentRelation(residual=nu - predicted, predicted=predicted,
                            rsw_predicted=rsw, rsw_residual=nu - rsw)


# ---------------------------------------------------------------------------
# saturating size dependence
# ---------------------------------------------------------------------------

def fit_saturating(points) -> ScalingFit:
    """Fit m(N) = m_inf - a N^(-sigma) to (N, m) pairs.

    Returns sigma as the headline exponent; m_inf, a and their standard
    errors ride along in params. m_inf consistent with zero (within its
    SE) signals no saturation at a finite value.
    """
    pts = sorted((float(N), float(m)) for N, m in points)
    if len(pts) < 5:
        raise ValueError(f"need >= 5 sizes, got {len(pts)}")
    N = np.array([p[0] for p in pts])
    m = np.array([p[1] for p in pts])

    def model(n, m_inf, a, sigma):
        return m_inf - a * n ** (-sigma)

    p0 = (m[-1], 0.5, 0.5)
    popt, pcov = curve_fit(model, N, m, p0=p0, maxfev=20000)
    se = np.sqrt(np.diag(pcov))
    resid = m - model(N, *popt)
    return ScalingFit(
        exponent=float(popt[2]), se=float(se[2]),
        window=(float(N[0]), float(N[-1])), model="saturating",
        n_points=len(N), resid_max=float(np.max(np.abs(resid))),
        params={"m_inf": float(popt[0]), "m_inf_se": float(se[0]),
                "a": float(popt[1]), "a_se": float(se[1])})


def decay_time_grid(t_max: float, n: int = 400,
                    t_first: float = 0.05) -> np.ndarray:
    """Log-spaced output grid with t = 0 prepended, for decay runs."""
    return np.concatenate([[0.0], np.geomspace(t_first, t_max, n)])
