"""Collective-spin observables and the squeezing parameter.

The central quantity is xi2 = N * min_perp Var(J_perp) / |<J>|^2, the
squeezing parameter whose value below 1/k witnesses (k+1)-partite
entanglement. The transverse plane is built from the instantaneous mean
spin direction -- nothing here assumes <J> points along x.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

#: below this fraction of N the mean spin no longer defines a frame
EPS_MEAN_PER_SPIN = 1e-9

CSV_COLUMNS = ["t", "m_x", "var_e1", "var_e2", "cov_12",
               "v_perp_min", "theta_min", "xi2", "n_sw"]


class FrameUndefinedError(ValueError):
    """Raised when |<J>| is too small to define the transverse plane."""


@dataclass(frozen=True)
class CollectiveMoments:
    """First and (symmetrized) second moments of J at one instant."""

    t: float
    mean: np.ndarray          # <J>, 3-vector
    second: np.ndarray        # (1/2)<J_a J_b + J_b J_a>, 3x3
    N: int

    def var(self, a: int) -> float:
        return float(self.second[a, a] - self.mean[a] ** 2)


@dataclass(frozen=True)
class SqueezingPoint:
    t: float
    m_x: float
    var_e1: float
    var_e2: float
    cov_12: float
    v_perp_min: float
    theta_min: float
    xi2: float
    n_sw: float | None = None
    extras: dict = field(default_factory=dict)

    def depth_witness(self) -> int:
        """Largest k with xi2 < 1/k; witnesses (k+1)-partite entanglement."""
        if self.xi2 >= 1.0:
            return 0
        return int(math.floor(1.0 / self.xi2 - 1e-12))


@dataclass
class TimeSeries:
    points: list
    metadata: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) if getattr(p, name) is not None
                         else np.nan for p in self.points])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")


def transverse_frame(mean: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair (e1, e2) perpendicular to mean."""
    n = mean / np.linalg.norm(mean)
    seed = np.array([0.0, 1.0, 0.0]) if abs(n[0]) > 0.5 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(n, seed)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def min_transverse_variance(m: CollectiveMoments) -> tuple[float, float]:
    """Minimum variance over quadratures in the plane perpendicular to <J>.

    Returns (value, theta) where theta is measured from e1 toward e2 of
    the deterministic frame. The 2x2 transverse covariance
    [[V11, C], [C, V22]] has minimum eigenvalue
    (V11+V22)/2 - sqrt(((V11-V22)/2)^2 + C^2).
    """
    jlen = np.linalg.norm(m.mean)
    if jlen < EPS_MEAN_PER_SPIN * m.N:
        raise FrameUndefinedError(
            "polarization lost: squeezing frame undefined "
            f"(|<J>| = {jlen:.3e} < {EPS_MEAN_PER_SPIN * m.N:.3e})")
    e1, e2 = transverse_frame(m.mean)
    v11 = e1 @ m.second @ e1 - (e1 @ m.mean) ** 2
    v22 = e2 @ m.second @ e2 - (e2 @ m.mean) ** 2
    c = e1 @ m.second @ e2 - (e1 @ m.mean) * (e2 @ m.mean)
    half_sum = 0.5 * (v11 + v22)
    half_diff = 0.5 * (v11 - v22)
    value = half_sum - math.hypot(half_diff, c)
    theta = 0.5 * math.atan2(2.0 * c, v11 - v22) + 0.5 * math.pi
    # fold to (-pi/2, pi/2]: quadrature angles are pi-periodic
    if theta > 0.5 * math.pi:
        theta -= math.pi
    return float(value), float(theta)


def squeezing_parameter(m: CollectiveMoments, n_sw: float | None = None) -> SqueezingPoint:
    """Assemble the full squeezing record for one time point."""
    value, theta = min_transverse_variance(m)
    e1, e2 = transverse_frame(m.mean)
    v11 = e1 @ m.second @ e1 - (e1 @ m.mean) ** 2
    v22 = e2 @ m.second @ e2 - (e2 @ m.mean) ** 2
    c = e1 @ m.second @ e2 - (e1 @ m.mean) * (e2 @ m.mean)
    jlen2 = float(m.mean @ m.mean)
    xi2 = m.N * value / jlen2
    return SqueezingPoint(
        t=m.t,
        m_x=float(np.linalg.norm(m.mean)) / m.N,
        var_e1=float(v11), var_e2=float(v22), cov_12=float(c),
        v_perp_min=value, theta_min=theta, xi2=float(xi2), n_sw=n_sw)


# ---------------------------------------------------------------------------
# optimal-time extraction
# ---------------------------------------------------------------------------

def _refine_parabola(t: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    """3-point quadratic refinement of a grid minimum at index i."""
    ta, tb, tc = t[i - 1], t[i], t[i + 1]
    ya, yb, yc = y[i - 1], y[i], y[i + 1]
    denom = (ta - tb) * (ta - tc) * (tb - tc)
    a = (tc * (yb - ya) + tb * (ya - yc) + ta * (yc - yb)) / denom
    b = (tc ** 2 * (ya - yb) + tb ** 2 * (yc - ya) + ta ** 2 * (yb - yc)) / denom
    if a <= 0:  # flat/degenerate; keep the grid point
        return float(tb), float(yb)
    tstar = -b / (2 * a)
    c0 = ya - a * ta ** 2 - b * ta
    return float(tstar), float(a * tstar ** 2 + b * tstar + c0)


def _interior_argmin(t: np.ndarray, y: np.ndarray, what: str) -> int:
    i = int(np.nanargmin(y))
    if i == 0 or i == len(y) - 1:
        raise ValueError(f"{what} minimum sits on the grid boundary: "
                         "extend time window")
    return i


@dataclass(frozen=True)
class OptimumReport:
    t_min: float          # time of minimum transverse variance
    v_perp_min: float
    t_opt: float          # time of minimum xi2
    xi2_min: float
    m_x_opt: float        # magnetization at t_opt


def find_optimum(ts: TimeSeries) -> OptimumReport:
    """Locate the variance minimum and the squeezing minimum on a series.

    Both grid argmins are refined by a local 3-point parabola. For a
    series with decaying magnetization the squeezing optimum comes first
    (the variance keeps shrinking a little longer than xi2 = v/m^2 does).
    """
    t = ts.t
    v = ts.column("v_perp_min")
    x = ts.column("xi2")
    iv = _interior_argmin(t, v, "transverse variance")
    ix = _interior_argmin(t, x, "squeezing parameter")
    t_min, v_min = _refine_parabola(t, v, iv)
    t_opt, x_min = _refine_parabola(t, x, ix)
    m = ts.column("m_x")
    m_opt = float(np.interp(t_opt, t, m))
    return OptimumReport(t_min=t_min, v_perp_min=v_min,
                         t_opt=t_opt, xi2_min=x_min, m_x_opt=m_opt)


# ---------------------------------------------------------------------------
# CSV / JSON serialization
# ---------------------------------------------------------------------------

def write_series_csv(ts: TimeSeries, path, extra_columns=()) -> None:
    """Write the standard series CSV (empty cells where not applicable)."""
    cols = CSV_COLUMNS + list(extra_columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for p in ts.points:
            row = []
            for c in CSV_COLUMNS:
                v = getattr(p, c)
                row.append("" if v is None else repr(float(v)))
            for c in extra_columns:
                v = p.extras.get(c)
                row.append("" if v is None else repr(float(v)))
            w.writerow(row)


def write_series_sidecar(ts: TimeSeries, path) -> None:
    with open(path, "w") as fh:
        json.dump(ts.metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_series_csv(path, metadata=None) -> TimeSeries:
    pts = []
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        for rec in r:
            kw = {}
            extras = {}
            for k, v in rec.items():
                val = None if v in ("", None) else float(v)
                if k in CSV_COLUMNS:
                    kw[k] = val
                else:
                    extras[k] = val
            pts.append(SqueezingPoint(extras=extras, **kw))
    return TimeSeries(points=pts, metadata=metadata or {})
