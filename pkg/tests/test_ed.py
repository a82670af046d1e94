"""Tests for the sector-resolved exact diagonalization engine.

The independent oracle here is a dense full-Hilbert-space construction
via Kronecker products (no sector bookkeeping at all), affordable up to
8 sites, plus hand solutions for the 2-spin pair.
"""

import math

import numpy as np
import pytest
import scipy.linalg as sla
from numpy.testing import assert_allclose

from squeezelab.lattice import (LatticeGeometry, square, CouplingSpec,
                                build_couplings, all_to_all)
from squeezelab.rotor import RotorModel, oat_series
from squeezelab.spinwave import tos_fit
from squeezelab import ed


# ---------------------------------------------------------------------------
# dense full-space oracle (independent construction)
# ---------------------------------------------------------------------------

SX = np.array([[0, 0.5], [0.5, 0]])
SY = np.array([[0, -0.5j], [0.5j, 0]])
SZ = np.array([[0.5, 0], [0, -0.5]])


def site_op(op, i, N):
    out = np.array([[1.0]])
    for j in range(N):
        out = np.kron(out, op if j == i else np.eye(2))
    return out


def dense_hamiltonian(cm, Delta):
    """Full 2^N x 2^N XXZ Hamiltonian, built pair by pair."""
    vals = np.asarray(getattr(cm, "values", cm))
    N = vals.shape[0]
    H = np.zeros((2 ** N, 2 ** N), dtype=complex)
    ops = [(site_op(SX, i, N), site_op(SY, i, N), site_op(SZ, i, N))
           for i in range(N)]
    for i in range(N):
        for j in range(i + 1, N):
            if vals[i, j] == 0.0:
                continue
            xi, yi, zi = ops[i]
            xj, yj, zj = ops[j]
            H -= vals[i, j] * (xi @ xj + yi @ yj + Delta * (zi @ zj))
    return H


def dense_css(N):
    plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
    psi = np.array([1.0])
    for _ in range(N):
        psi = np.kron(psi, plus)
    return psi


def pair_cm(J=1.0):
    v = np.array([[0.0, J], [J, 0.0]])
    return v


# ---------------------------------------------------------------------------
# basis and guards
# ---------------------------------------------------------------------------

class TestBasis:
    def test_sector_dimensions(self):
        for N in (2, 5, 8):
            total = sum(ed.sector_dim(N, k) for k in range(N + 1))
            assert total == 2 ** N

    def test_sector_states_have_right_bit_count(self):
        states = ed.sector_basis(8, 3)
        assert len(states) == ed.sector_dim(8, 3)
        assert np.all(np.bitwise_count(states) == 3)
        assert np.all(np.diff(states) > 0)    # sorted, unique

    def test_size_guard(self):
        with pytest.raises(ValueError, match="beyond supported size 20"):
            ed.sector_basis(21, 10)
        with pytest.raises(ValueError, match="beyond supported size 20"):
            ed.SectorSpace(all_to_all(25), 0.5)

    def test_memory_guard_reports_requirement(self):
        cm = build_couplings(square(4), CouplingSpec("nn")).values
        with pytest.raises(ed.MemoryGuardError, match="bytes"):
            ed.build_sector(cm, 0.5, 16, 8, max_gib=1e-7)
        assert issubclass(ed.MemoryGuardError, MemoryError)

    def test_byte_estimate_orders(self):
        sparse = ed.estimate_sector_bytes(16, 8)
        dense = ed.estimate_sector_bytes(16, 8, dense=True)
        assert 0 < sparse < dense


# ---------------------------------------------------------------------------
# Hamiltonian blocks
# ---------------------------------------------------------------------------

class TestSectorHamiltonian:
    def test_two_spin_spectrum_by_hand(self):
        # pair: singlet/triplet split in the middle sector, polar sectors
        # carry only the Ising energy -Delta/4
        Delta = 0.5
        space = ed.SectorSpace(pair_cm(), Delta)
        e0 = np.linalg.eigvalsh(space.H(0).toarray())
        e1 = np.linalg.eigvalsh(space.H(1).toarray())
        e2 = np.linalg.eigvalsh(space.H(2).toarray())
        assert_allclose(e0, [-Delta / 4])
        assert_allclose(e2, [-Delta / 4])
        assert_allclose(e1, [-0.5 + Delta / 4, 0.5 + Delta / 4], atol=1e-14)

    def test_xx_model_has_no_diagonal(self):
        cm = build_couplings(LatticeGeometry(4, 2), CouplingSpec("nn")).values
        H = ed.build_sector(cm, 0.0, 8, 4)
        assert_allclose(H.diagonal(), 0.0)

    def test_blocks_symmetric(self):
        cm = build_couplings(LatticeGeometry(4, 2),
                             CouplingSpec("rydberg", Rb=1.5)).values
        H = ed.build_sector(cm, 0.3, 8, 3)
        assert (H - H.T).nnz == 0

    def test_matches_dense_full_space_spectrum(self):
        # concatenating all sector spectra reproduces the full spectrum
        cm = build_couplings(LatticeGeometry(3, 2), CouplingSpec("nn"))
        Delta = 0.25
        space = ed.SectorSpace(cm.values, Delta)
        sector_evals = np.sort(np.concatenate(
            [np.linalg.eigvalsh(space.H(k).toarray()) for k in range(7)]))
        full = np.sort(sla.eigvalsh(dense_hamiltonian(cm, Delta)))
        assert_allclose(sector_evals, full, atol=1e-10)


# ---------------------------------------------------------------------------
# coherent state
# ---------------------------------------------------------------------------

class TestCSS:
    def test_sector_weights_two_spins(self):
        space = ed.SectorSpace(pair_cm(), 0.5)
        psi = ed.css_state(space)
        assert_allclose(ed.sector_weights(psi), [0.25, 0.5, 0.25], rtol=1e-14)

    def test_sector_weights_binomial(self):
        cm = build_couplings(square(2), CouplingSpec("nn")).values
        space = ed.SectorSpace(cm, 0.5)
        psi = ed.css_state(space)
        expected = np.array([math.comb(4, k) for k in range(5)]) / 16.0
        assert_allclose(ed.sector_weights(psi), expected, rtol=1e-14)
        assert ed.state_norm2(psi) == pytest.approx(1.0, abs=1e-14)

    def test_css_energy_quarter_of_total_coupling(self):
        cm = build_couplings(square(4), CouplingSpec("nn"))
        assert ed.css_energy(cm) == pytest.approx(-8.0, abs=1e-13)
        # <CSS|H|CSS> carries no Ising part: independent of Delta
        for Delta in (0.0, 0.5, 1.0):
            space = ed.SectorSpace(cm.values, Delta)
            psi = ed.css_state(space)
            assert ed.state_energy(space, psi) == pytest.approx(-8.0, abs=1e-10)

    def test_measured_css_moments(self):
        cm = build_couplings(LatticeGeometry(4, 2), CouplingSpec("nn")).values
        space = ed.SectorSpace(cm, 0.5)
        mom = ed.measure_collective(space, ed.css_state(space))
        assert_allclose(mom.mean, [4.0, 0.0, 0.0], atol=1e-13)
        assert mom.var(1) == pytest.approx(2.0, rel=1e-13)
        assert mom.var(2) == pytest.approx(2.0, rel=1e-13)


# ---------------------------------------------------------------------------
# time evolution
# ---------------------------------------------------------------------------

class TestLanczos:
    def test_matches_dense_propagator(self):
        rng = np.random.default_rng(5)
        import scipy.sparse as sp
        a = rng.normal(size=(120, 120))
        H = sp.csr_matrix((a + a.T) / 2.0)
        v = rng.normal(size=120) + 1j * rng.normal(size=120)
        v /= np.linalg.norm(v)
        out, err = ed.lanczos_expm(H, v, 0.3)
        ref = sla.expm(-0.3j * H.toarray()) @ v
        assert np.linalg.norm(out - ref) < 1e-10
        assert err < 1e-8

    def test_one_dimensional_block(self):
        import scipy.sparse as sp
        H = sp.csr_matrix(np.array([[2.0]]))
        v = np.array([1.0 + 0.0j])
        out, err = ed.lanczos_expm(H, v, 0.7)
        assert out[0] == pytest.approx(np.exp(-0.7j * 2.0), abs=1e-14)
        assert err == 0.0

    def test_krylov_exhaustion_is_exact(self):
        # space smaller than the Krylov budget: propagation is exact and
        # the truncation estimate must not fire
        rng = np.random.default_rng(8)
        import scipy.sparse as sp
        a = rng.normal(size=(6, 6))
        H = sp.csr_matrix((a + a.T) / 2.0)
        v = rng.normal(size=6).astype(complex)
        v /= np.linalg.norm(v)
        out, err = ed.lanczos_expm(H, v, 5.0, m=30)
        ref = sla.expm(-5.0j * H.toarray()) @ v
        assert np.linalg.norm(out - ref) < 1e-12
        assert err == 0.0


class TestEvolve:
    def setup_method(self):
        cm = build_couplings(LatticeGeometry(4, 2), CouplingSpec("nn")).values
        self.space = ed.SectorSpace(cm, 0.5)

    def test_zero_duration_identity(self):
        psi = ed.css_state(self.space)
        out = ed.evolve(self.space, psi, 0.0)
        for k in psi:
            assert_allclose(out[k], psi[k])

    def test_conservation(self):
        psi = ed.css_state(self.space)
        w0 = ed.sector_weights(psi)
        e0 = ed.state_energy(self.space, psi)
        psi = ed.evolve(self.space, psi, 6.0, dt=0.1)
        assert abs(ed.state_norm2(psi) - 1.0) < 1e-10
        assert abs(ed.state_energy(self.space, psi) - e0) / abs(e0) < 1e-8
        assert np.max(np.abs(ed.sector_weights(psi) - w0)) < 1e-12

    def test_coarse_step_substeps_to_same_state(self):
        psi0 = ed.css_state(self.space)
        fine = ed.evolve(self.space, psi0, 2.0, dt=0.02)
        coarse = ed.evolve(self.space, psi0, 2.0, dt=2.0)
        err = sum(np.linalg.norm(fine[k] - coarse[k]) for k in fine)
        assert err < 1e-7


class TestQuenchSeries:
    def test_two_spin_magnetization_hand_solution(self):
        # pair under XXZ: <J^x>(t) = cos((1-Delta) t / 2)
        Delta = 0.7
        space = ed.SectorSpace(pair_cm(), Delta)
        psi = ed.css_state(space)
        for t in (0.0, 0.4, 1.1, 2.5):
            psi_t = ed.evolve(space, ed.css_state(space), t, dt=0.5)
            mom = ed.measure_collective(space, psi_t, t)
            assert mom.mean[0] == pytest.approx(
                math.cos(0.5 * (1 - Delta) * t), abs=1e-12)
            assert abs(mom.mean[1]) < 1e-13
            assert abs(mom.mean[2]) < 1e-13

    def test_all_to_all_matches_collective_ladder(self):
        # uniform couplings close the Dicke manifold: the sector engine
        # must agree with the (N+1)-level ladder to near machine precision
        N, J, Delta = 10, 1.0, 0.5
        space = ed.SectorSpace(all_to_all(N, J), Delta)
        grid = np.array([0.0, 0.3, 0.7, 1.2])
        ts = ed.quench_series(space, grid, dt=0.1, check_conservation=False)
        ref = oat_series(RotorModel(N, J * (1 - Delta) / 2.0), grid)
        for a, b in zip(ts.points, ref.points):
            assert a.m_x == pytest.approx(b.m_x, abs=1e-9)
            assert a.v_perp_min == pytest.approx(b.v_perp_min, abs=1e-9)
            assert a.xi2 == pytest.approx(b.xi2, abs=1e-9)

    def test_transverse_means_stay_zero(self):
        cm = build_couplings(LatticeGeometry(4, 2), CouplingSpec("nn")).values
        space = ed.SectorSpace(cm, 0.5)
        psi = ed.evolve(space, ed.css_state(space), 3.0, dt=0.1)
        mom = ed.measure_collective(space, psi)
        assert abs(mom.mean[1]) < 1e-10
        assert abs(mom.mean[2]) < 1e-10

    def test_uncertainty_floor(self):
        # sum of collective variances is at least N/2 for any state
        cm = build_couplings(LatticeGeometry(4, 2), CouplingSpec("nn")).values
        space = ed.SectorSpace(cm, 0.5)
        ts = ed.quench_series(space, [0.0, 0.5, 1.5, 4.0], dt=0.1,
                              check_conservation=False)
        for p in ts.points:
            total = p.var_e1 + p.var_e2 + p.extras["var_par"]
            assert total >= 8 / 2.0 - 1e-9

    def test_conservation_metadata(self):
        cm = build_couplings(LatticeGeometry(4, 2), CouplingSpec("nn")).values
        space = ed.SectorSpace(cm, 0.5)
        ts = ed.quench_series(space, [0.0, 1.0, 2.0], dt=0.1)
        cons = ts.metadata["conservation"]
        assert cons["norm_drift"] < 1e-10
        assert cons["energy_drift_rel"] < 1e-8
        assert cons["sector_weight_drift"] < 1e-12
        assert ts.points[0].xi2 == pytest.approx(1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# tower of states
# ---------------------------------------------------------------------------

class TestTower:
    def test_polarized_sector_is_ising_energy(self):
        cm = build_couplings(square(4), CouplingSpec("nn"))
        space = ed.SectorSpace(cm.values, 0.5)
        ens = dict(ed.tower_energies(space))
        # all spins up: E = -Delta * sum_{i<j} J_ij / 4 = -Delta N J0 / 8
        assert ens[8] == pytest.approx(-0.5 * 16 * 4.0 / 8.0, abs=1e-12)

    def test_sector_inversion_symmetry(self):
        cm = build_couplings(LatticeGeometry(4, 2), CouplingSpec("nn")).values
        space = ed.SectorSpace(cm, 0.5)
        for k in (0, 1, 2, 3):
            ek = np.linalg.eigvalsh(space.H(k).toarray())
            emk = np.linalg.eigvalsh(space.H(8 - k).toarray())
            assert_allclose(ek, emk, atol=1e-12)

    def test_nearest_neighbor_tower_regression(self):
        cm = build_couplings(square(4), CouplingSpec("nn"))
        ens = ed.tower_energies(ed.SectorSpace(cm.values, 0.5))
        expected = [-8.3863721196, -8.3153206022, -8.1027216878,
                    -7.7501276769, -7.2599501148, -6.6353813875,
                    -5.8804457218, -5.0000000000, -4.0000000000]
        got = [e for _, e in ens]
        assert_allclose(got, expected, atol=5e-8)
        fit = tos_fit(ens)
        assert fit.chi == pytest.approx(0.0700, abs=5e-4)

    def test_rydberg_tower_regression(self):
        cm = build_couplings(square(4), CouplingSpec("rydberg", Rb=2.0))
        ens = ed.tower_energies(ed.SectorSpace(cm.values, 0.0))
        expected = [-21.6622881902, -21.3222516113, -20.3024177186,
                    -18.6036228893, -16.2272933746, -13.1755007852,
                    -9.4510516299, -5.0576223545, 0.0]
        assert_allclose([e for _, e in ens], expected, atol=5e-8)

    def test_iterative_sector_solver_agrees_with_dense(self):
        # 4x3: the half-filling sector (dim 924) goes through the sparse
        # eigensolver; check it against a dense solve
        cm = build_couplings(LatticeGeometry(4, 3), CouplingSpec("nn")).values
        space = ed.SectorSpace(cm, 0.5)
        ens = dict(ed.tower_energies(space))
        dense0 = float(np.linalg.eigvalsh(space.H(6).toarray())[0])
        assert ens[0] == pytest.approx(dense0, abs=1e-8)


# ---------------------------------------------------------------------------
# thermal reference
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def thermal_8():
    cm = build_couplings(LatticeGeometry(4, 2), CouplingSpec("nn"))
    space = ed.SectorSpace(cm.values, 0.5)
    res = ed.thermal_solve(space, compute_var=True)
    return cm, res


class TestThermal:
    def test_matches_full_space_brute_force(self, thermal_8):
        cm, res = thermal_8
        H = dense_hamiltonian(cm, 0.5)
        w, V = np.linalg.eigh(H)
        psi = dense_css(8)
        e_css = float(np.real(psi @ H @ psi))
        assert res.e_css == pytest.approx(e_css, abs=1e-12)
        assert res.ground_energy == pytest.approx(w[0], abs=1e-10)
        # same canonical energy curve
        for T in (0.1, 0.3, 1.0, 5.0):
            z = np.exp(-(w - w[0]) / T)
            e_ref = float((z * w).sum() / z.sum())
            assert res.energy(T) == pytest.approx(e_ref, abs=1e-9)
        # temperature matching the quench energy density
        from scipy.optimize import brentq
        t_ref = brentq(lambda T: float(
            (np.exp(-(w - w[0]) / T) * w).sum()
            / np.exp(-(w - w[0]) / T).sum()) - e_css, 1e-3, 1e3,
            rtol=1e-12)
        assert res.T_css == pytest.approx(t_ref, rel=2e-6)
        # thermal Var(J^x) at T_css
        Jx = sum(site_op(SX, i, 8) for i in range(8))
        Jx2 = np.real(np.einsum("is,ij,js->s", V.conj(), Jx @ Jx, V))
        Jx1 = np.real(np.einsum("is,ij,js->s", V.conj(), Jx, V))
        z = np.exp(-(w - w[0]) / res.T_css)
        var_ref = float((z * Jx2).sum() / z.sum()) \
            - float((z * Jx1).sum() / z.sum()) ** 2
        assert res.var_jx(res.T_css) == pytest.approx(var_ref, rel=1e-8)

    def test_reference_temperature_value(self, thermal_8):
        _, res = thermal_8
        assert res.T_css == pytest.approx(0.3043969801, rel=1e-5)

    def test_energy_curve_limits_and_monotonicity(self, thermal_8):
        _, res = thermal_8
        # T -> 0 recovers the ground state, T -> inf the (traceless) mean
        assert res.energy(1e-3) == pytest.approx(res.ground_energy, abs=1e-6)
        assert abs(res.energy(1e3)) < 0.01
        ts = np.geomspace(1e-2, 1e2, 25)
        es = np.array([res.energy(T) for T in ts])
        assert np.all(np.diff(es) > -1e-12)

    def test_bad_bracket_rejected(self, thermal_8):
        cm, _ = thermal_8
        space = ed.SectorSpace(cm.values, 0.5)
        with pytest.raises(ValueError, match="straddle"):
            ed.thermal_solve(space, compute_var=False, T_bracket=(500.0, 1000.0))

    def test_variance_requires_flag(self, thermal_8):
        cm, _ = thermal_8
        space = ed.SectorSpace(cm.values, 0.5)
        res = ed.thermal_solve(space, compute_var=False)
        with pytest.raises(ValueError, match="compute_var=True"):
            res.var_jx(0.5)
