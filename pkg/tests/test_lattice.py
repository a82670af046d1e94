"""Tests for the coupling-matrix builders and their Fourier transforms."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from squeezelab.lattice import (LatticeGeometry, CouplingSpec, CouplingMatrix,
                                square, build_couplings, fourier_coupling,
                                coupling_dump_csv, all_to_all, coupling_values)


def nn(L, J=1.0):
    return build_couplings(square(L), CouplingSpec("nn", J=J))


class TestGeometry:
    def test_too_small_edge_rejected(self):
        with pytest.raises(ValueError, match="edges must be >= 2"):
            LatticeGeometry(1, 8)
        with pytest.raises(ValueError):
            square(1)

    def test_min_image_components_in_half_open_window(self):
        geom = square(6)
        c = geom.coords()
        d = geom.min_image(c[:, None, :] - c[None, :, :])
        assert d.min() == -2          # -L/2 excluded: window is (-3, 3]
        assert d.max() == 3           # +L/2 included

    def test_rectangle_site_count(self):
        assert LatticeGeometry(4, 2).N == 8


class TestCouplingFamilies:
    def test_nn_row_sum_is_coordination_number(self):
        cm = nn(4)
        assert cm.J0 == pytest.approx(4.0, abs=1e-15)
        assert_allclose(cm.values.sum(axis=1), 4.0, atol=1e-13)

    def test_nn_couples_only_unit_distance(self):
        cm = nn(5)
        geom = cm.geometry
        c = geom.coords()
        d = geom.min_image(c[:, None, :] - c[None, :, :])
        r2 = (d ** 2).sum(axis=-1)
        assert_allclose(cm.values[r2 == 1], 1.0)
        assert_allclose(cm.values[r2 != 1], 0.0)

    def test_matrix_symmetric_zero_diagonal(self):
        for spec in (CouplingSpec("nn"),
                     CouplingSpec("powerlaw", alpha=3.0),
                     CouplingSpec("rydberg", Rb=1.5)):
            cm = build_couplings(square(6), spec)
            assert_allclose(cm.values, cm.values.T, atol=0)
            assert_allclose(np.diag(cm.values), 0.0)

    def test_translation_invariance(self):
        # every site sees the same coupling environment on the torus
        cm = build_couplings(square(6), CouplingSpec("rydberg", Rb=2.0))
        sums = cm.values.sum(axis=1)
        assert_allclose(sums, sums[0], rtol=1e-14)
        assert cm.J0 == pytest.approx(sums[0], rel=1e-14)

    def test_rydberg_distance_one_equals_bare_scale(self):
        # the dressed profile is normalized so that J(r=1) = J exactly
        cm = build_couplings(square(6), CouplingSpec("rydberg", J=0.7, Rb=1.5))
        geom = cm.geometry
        c = geom.coords()
        d = geom.min_image(c[:, None, :] - c[None, :, :])
        r2 = (d ** 2).sum(axis=-1)
        assert_allclose(cm.values[r2 == 1], 0.7, rtol=1e-15)

    def test_rydberg_row_sum_reference_value(self):
        # 4x4 cluster: the same row sum that feeds the inertia tables
        cm = build_couplings(square(4), CouplingSpec("rydberg", Rb=1.5))
        assert cm.J0 == pytest.approx(7.27, abs=0.01)

    def test_rydberg_rb_zero_is_inverse_sixth_power(self):
        cm = build_couplings(square(8), CouplingSpec("rydberg", Rb=0.0))
        pl = build_couplings(square(8), CouplingSpec("powerlaw", alpha=6.0))
        assert_allclose(cm.values, pl.values, rtol=1e-14)

    def test_steep_powerlaw_approaches_nearest_neighbor(self):
        pl = build_couplings(square(6), CouplingSpec("powerlaw", alpha=50.0))
        assert np.abs(pl.values - nn(6).values).max() < 1e-6

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="unknown coupling family"):
            CouplingSpec("dipole")
        with pytest.raises(ValueError, match="alpha"):
            CouplingSpec("powerlaw")
        with pytest.raises(ValueError, match="Rb"):
            CouplingSpec("rydberg")
        with pytest.raises(ValueError, match="ferromagnetic"):
            CouplingSpec("nn", J=-1.0)

    def test_values_are_read_only(self):
        cm = nn(4)
        with pytest.raises(ValueError):
            cm.values[0, 1] = 5.0


class TestFourier:
    def test_k_zero_component_is_row_sum(self):
        for spec in (CouplingSpec("nn"), CouplingSpec("powerlaw", alpha=3.0)):
            cm = build_couplings(square(8), spec)
            mg = fourier_coupling(cm)
            assert mg.J0 == pytest.approx(cm.J0, rel=1e-14)

    def test_sum_over_k_vanishes(self):
        # zero diagonal of the coupling matrix: sum_k J_k = N * J(0) = 0
        cm = build_couplings(square(6), CouplingSpec("rydberg", Rb=1.2))
        mg = fourier_coupling(cm)
        assert abs(mg.Jk.sum()) < 1e-12 * cm.N

    def test_nearest_neighbor_dispersion_closed_form(self):
        J = 1.3
        cm = nn(8, J=J)
        mg = fourier_coupling(cm)
        k = mg.wavevectors()
        expected = 2 * J * (np.cos(k[..., 0]) + np.cos(k[..., 1]))
        assert_allclose(mg.Jk, expected, atol=1e-12)

    def test_parseval(self):
        cm = build_couplings(square(6), CouplingSpec("powerlaw", alpha=2.5))
        mg = fourier_coupling(cm)
        lhs = (mg.Jk ** 2).sum() / cm.N
        rhs = (cm.values[0] ** 2).sum()
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_transform_is_real(self):
        cm = build_couplings(square(5), CouplingSpec("rydberg", Rb=2.0))
        mg = fourier_coupling(cm)
        assert mg.Jk.dtype == np.float64


class TestHelpers:
    def test_all_to_all_values(self):
        v = all_to_all(5, J=0.3)
        assert_allclose(np.diag(v), 0.0)
        off = v[~np.eye(5, dtype=bool)]
        assert_allclose(off, 0.3)

    def test_coupling_values_passthrough(self):
        cm = nn(4)
        assert coupling_values(cm) is not None
        assert_allclose(coupling_values(cm), cm.values)
        arr = all_to_all(4)
        assert_allclose(coupling_values(arr), arr)
        with pytest.raises(ValueError, match="square"):
            coupling_values(np.zeros((3, 4)))

    def test_dump_csv_roundtrip(self, tmp_path):
        cm = nn(4)
        path = tmp_path / "couplings.csv"
        coupling_dump_csv(cm, path)
        back = np.loadtxt(path, delimiter=",")
        assert_allclose(back, cm.values, rtol=1e-15)
