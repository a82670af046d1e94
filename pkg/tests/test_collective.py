"""Tests for collective-spin moments, the squeezing parameter, optimum
extraction and series serialization."""

import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from squeezelab.collective import (CollectiveMoments, SqueezingPoint,
                                   TimeSeries, FrameUndefinedError,
                                   transverse_frame, min_transverse_variance,
                                   squeezing_parameter, find_optimum,
                                   write_series_csv, write_series_sidecar,
                                   read_series_csv)


def css_moments(N, t=0.0):
    """Coherent state along +x: <J> = (N/2, 0, 0), transverse vars N/4."""
    mean = np.array([N / 2.0, 0.0, 0.0])
    second = np.diag([N ** 2 / 4.0, N / 4.0, N / 4.0])
    return CollectiveMoments(t=t, mean=mean, second=second, N=N)


def moments_with_transverse_cov(N, v11, v22, c, mean_dir=None):
    """Moments polarized along mean_dir with prescribed transverse covariance
    in the deterministic frame of that direction."""
    if mean_dir is None:
        mean_dir = np.array([1.0, 0.0, 0.0])
    mean_dir = np.asarray(mean_dir, float)
    mean_dir /= np.linalg.norm(mean_dir)
    mean = 0.5 * N * mean_dir
    e1, e2 = transverse_frame(mean)
    second = np.outer(mean, mean)
    second += v11 * np.outer(e1, e1) + v22 * np.outer(e2, e2)
    second += c * (np.outer(e1, e2) + np.outer(e2, e1))
    return CollectiveMoments(t=0.0, mean=mean, second=second, N=N)


class TestFrame:
    def test_transverse_frame_orthonormal(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            mean = rng.normal(size=3)
            e1, e2 = transverse_frame(mean)
            n = mean / np.linalg.norm(mean)
            assert abs(e1 @ e2) < 1e-13
            assert abs(e1 @ n) < 1e-13
            assert abs(e2 @ n) < 1e-13
            assert e1 @ e1 == pytest.approx(1.0)
            assert e2 @ e2 == pytest.approx(1.0)

    def test_lost_polarization_raises(self):
        N = 16
        m = CollectiveMoments(t=0.0, mean=np.zeros(3),
                              second=np.eye(3) * N / 4.0, N=N)
        with pytest.raises(FrameUndefinedError,
                           match="polarization lost: squeezing frame undefined"):
            min_transverse_variance(m)
        # threshold is 1e-9 per spin
        m2 = CollectiveMoments(t=0.0, mean=np.array([0.5e-9 * N, 0, 0]),
                               second=np.eye(3) * N / 4.0, N=N)
        with pytest.raises(FrameUndefinedError):
            squeezing_parameter(m2)

    def test_frame_error_is_value_error(self):
        assert issubclass(FrameUndefinedError, ValueError)


class TestMinTransverseVariance:
    def test_css_value_and_xi2(self):
        N = 10
        value, _ = min_transverse_variance(css_moments(N))
        assert value == pytest.approx(N / 4.0, rel=1e-14)
        p = squeezing_parameter(css_moments(N))
        assert p.xi2 == pytest.approx(1.0, rel=1e-14)
        assert p.m_x == pytest.approx(0.5, rel=1e-14)

    def test_diagonal_covariance(self):
        m = moments_with_transverse_cov(8, v11=2.0, v22=1.0, c=0.0)
        value, theta = min_transverse_variance(m)
        assert value == pytest.approx(1.0, rel=1e-13)
        assert theta == pytest.approx(math.pi / 2)

    def test_value_never_exceeds_axis_variances(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = rng.normal(size=(2, 2))
            cov = a @ a.T + 0.01 * np.eye(2)
            m = moments_with_transverse_cov(6, cov[0, 0], cov[1, 1], cov[0, 1])
            value, _ = min_transverse_variance(m)
            assert value <= min(cov[0, 0], cov[1, 1]) + 1e-12

    def test_matches_angle_scan_on_random_covariances(self):
        # brute-force Var(cos(th) J_e1 + sin(th) J_e2) over 1e5 angles
        rng = np.random.default_rng(42)
        th = np.linspace(0.0, np.pi, 100000, endpoint=False)
        ct, st = np.cos(th), np.sin(th)
        worst = 0.0
        for _ in range(1000):
            a = rng.normal(size=(2, 2))
            cov = a @ a.T + 1e-3 * np.eye(2)
            m = moments_with_transverse_cov(12, cov[0, 0], cov[1, 1], cov[0, 1])
            value, theta = min_transverse_variance(m)
            scan = (ct * ct * cov[0, 0] + st * st * cov[1, 1]
                    + 2 * ct * st * cov[0, 1])
            worst = max(worst, abs(value - scan.min()))
            # the reported angle achieves the minimum
            v_at = (math.cos(theta) ** 2 * cov[0, 0]
                    + math.sin(theta) ** 2 * cov[1, 1]
                    + 2 * math.cos(theta) * math.sin(theta) * cov[0, 1])
            assert v_at == pytest.approx(value, abs=1e-10)
        assert worst < 1e-8

    def test_theta_folded_to_half_open_interval(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            a = rng.normal(size=(2, 2))
            cov = a @ a.T + 0.1 * np.eye(2)
            m = moments_with_transverse_cov(4, cov[0, 0], cov[1, 1], cov[0, 1])
            _, theta = min_transverse_variance(m)
            assert -math.pi / 2 < theta <= math.pi / 2

    def test_rotation_about_mean_axis_leaves_value_invariant(self):
        # gauge freedom: physics cannot depend on the in-plane frame choice
        rng = np.random.default_rng(7)
        N = 20
        for _ in range(25):
            a = rng.normal(size=(2, 2))
            cov = a @ a.T + 0.05 * np.eye(2)
            m = moments_with_transverse_cov(N, cov[0, 0], cov[1, 1], cov[0, 1])
            p = squeezing_parameter(m)
            ang = rng.uniform(0, 2 * np.pi)
            n = m.mean / np.linalg.norm(m.mean)
            K = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
            R = (np.eye(3) + math.sin(ang) * K
                 + (1 - math.cos(ang)) * (K @ K))
            m_rot = CollectiveMoments(t=0.0, mean=R @ m.mean,
                                      second=R @ m.second @ R.T, N=N)
            p_rot = squeezing_parameter(m_rot)
            assert p_rot.v_perp_min == pytest.approx(p.v_perp_min, abs=1e-10)
            assert p_rot.xi2 == pytest.approx(p.xi2, abs=1e-10)
            # theta transforms by the rotation angle (mod pi)
            d = (p.theta_min + ang - p_rot.theta_min) % math.pi
            assert min(d, math.pi - d) < 1e-8


class TestDepthWitness:
    def test_thresholds(self):
        def point(xi2):
            return SqueezingPoint(t=0, m_x=0.5, var_e1=1, var_e2=1, cov_12=0,
                                  v_perp_min=1, theta_min=0.0, xi2=xi2)
        assert point(1.2).depth_witness() == 0
        assert point(1.0).depth_witness() == 0
        assert point(0.9).depth_witness() == 1
        assert point(0.34).depth_witness() == 2
        assert point(0.24).depth_witness() == 4


def series_from_arrays(t, v, m, N):
    pts = []
    for ti, vi, mi in zip(t, v, m):
        xi2 = vi / (N * mi * mi)
        pts.append(SqueezingPoint(t=float(ti), m_x=float(mi), var_e1=vi,
                                  var_e2=vi, cov_12=0.0, v_perp_min=float(vi),
                                  theta_min=0.0, xi2=float(xi2)))
    return TimeSeries(points=pts)


class TestFindOptimum:
    def test_quadratic_with_constant_magnetization(self):
        t = np.linspace(0.5, 6.0, 40)
        ts = series_from_arrays(t, 1.0 + (t - 3.0) ** 2, np.full_like(t, 0.4), 50)
        rep = find_optimum(ts)
        # parabola refinement is exact on an exact parabola
        assert rep.t_min == pytest.approx(3.0, abs=1e-12)
        assert rep.t_opt == pytest.approx(3.0, abs=1e-9)
        assert rep.v_perp_min == pytest.approx(1.0, abs=1e-12)

    def test_decaying_magnetization_advances_the_optimum(self):
        # v quadratic around t_min, m ~ t^-lam: xi2 minimum sits earlier,
        # shifted by about lam*v_min/(a*t_min)
        N, v_min, a, t_min, lam = 200, 1.0, 2.0, 5.0, 0.2
        t = np.linspace(3.0, 7.0, 2001)
        v = v_min + a * (t - t_min) ** 2
        m = 0.4 * (t / t_min) ** (-lam)
        ts = series_from_arrays(t, v, m, N)
        rep = find_optimum(ts)
        assert rep.t_opt <= rep.t_min
        # direct minimization of the continuous xi2(t) as oracle
        from scipy.optimize import minimize_scalar
        res = minimize_scalar(
            lambda x: (v_min + a * (x - t_min) ** 2)
            / (N * (0.4 * (x / t_min) ** (-lam)) ** 2),
            bounds=(3.0, 7.0), method="bounded",
            options={"xatol": 1e-12})
        assert rep.t_opt == pytest.approx(res.x, abs=2e-3)
        shift = rep.t_min - rep.t_opt
        predicted = lam * v_min / (a * t_min)
        assert shift == pytest.approx(predicted, rel=0.15)

    def test_shift_vanishes_with_system_size(self):
        # v_min ~ N^-2/3 and t_min ~ N^1/3 push the two optima together
        lam, a = 0.2, 1.0
        shifts = []
        for N in (100, 1000, 10000):
            v_min, t_min = N ** (-2 / 3), N ** (1 / 3)
            t = np.linspace(0.5 * t_min, 1.5 * t_min, 4001)
            v = v_min + a * (t - t_min) ** 2
            m = 0.4 * (t / t_min) ** (-lam)
            rep = find_optimum(series_from_arrays(t, v, m, N))
            assert rep.t_opt <= rep.t_min
            shifts.append(rep.t_min - rep.t_opt)
        assert shifts[2] < shifts[1] < shifts[0]
        assert shifts[2] < 0.05 * shifts[0]

    def test_boundary_minimum_rejected(self):
        t = np.linspace(1.0, 5.0, 20)
        ts = series_from_arrays(t, 1.0 / t, np.full_like(t, 0.4), 10)
        with pytest.raises(ValueError, match="extend time window"):
            find_optimum(ts)


class TestSerialization:
    def test_csv_roundtrip(self, tmp_path):
        import dataclasses
        t = np.linspace(0.0, 2.0, 9)
        ts = series_from_arrays(t, 1.0 + (t - 1.0) ** 2, 0.5 - 0.1 * t, 30)
        # mixed presence of n_sw
        ts.points[0] = dataclasses.replace(ts.points[0], n_sw=0.125)
        path = tmp_path / "series.csv"
        write_series_csv(ts, path)
        back = read_series_csv(path)
        assert len(back) == len(ts)
        for a, b in zip(ts.points, back.points):
            for col in ("t", "m_x", "var_e1", "var_e2", "cov_12",
                        "v_perp_min", "theta_min", "xi2"):
                assert getattr(b, col) == getattr(a, col)
        assert back.points[0].n_sw == 0.125
        assert back.points[1].n_sw is None

    def test_csv_extra_columns(self, tmp_path):
        t = np.linspace(0.0, 1.0, 5)
        ts = series_from_arrays(t, np.ones_like(t), np.full_like(t, 0.5), 10)
        for p in ts.points:
            p.extras["xi2_err"] = 0.01
        path = tmp_path / "series.csv"
        write_series_csv(ts, path, extra_columns=("xi2_err",))
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        assert header[-1] == "xi2_err"
        back = read_series_csv(path)
        assert back.points[2].extras["xi2_err"] == 0.01

    def test_header_column_order(self, tmp_path):
        ts = series_from_arrays(np.array([0.0, 1.0, 2.0]),
                                np.array([1.0, 0.9, 1.1]),
                                np.array([0.5, 0.5, 0.5]), 4)
        path = tmp_path / "s.csv"
        write_series_csv(ts, path)
        with open(path) as fh:
            header = fh.readline().strip()
        assert header == ("t,m_x,var_e1,var_e2,cov_12,"
                          "v_perp_min,theta_min,xi2,n_sw")

    def test_sidecar_metadata(self, tmp_path):
        ts = TimeSeries(points=[], metadata={"model": "nn", "seed": 7})
        path = tmp_path / "s.json"
        write_series_sidecar(ts, path)
        with open(path) as fh:
            meta = json.load(fh)
        assert meta == {"model": "nn", "seed": 7}
