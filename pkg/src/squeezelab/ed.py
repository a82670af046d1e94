"""Sector-resolved exact diagonalization of the planar XXZ model.

H = -sum_{i<j} J_ij (Sx_i Sx_j + Sy_i Sy_j + Delta Sz_i Sz_j) conserves
total J^z, so states are stored as amplitude blocks over the J^z sectors
(largest block C(16,8) = 12870 at N = 16 instead of 2^16). Quench
evolution uses a Krylov (Lanczos) propagator per sector; collective
moments are assembled from the J^+/J^- blocks that map between adjacent
sectors. Thermal traces diagonalize each sector densely, one at a time,
keeping only eigenvalues and the two ladder norms per eigenstate --
the full eigenbasis of the big sectors never coexists in memory.
"""

from __future__ import annotations

import gc
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.linalg import eigsh, ArpackNoConvergence

from .collective import CollectiveMoments, TimeSeries, squeezing_parameter
from .lattice import coupling_values

MAX_SITES = 20
DENSE_TOWER_CUTOFF = 400


class MemoryGuardError(MemoryError):
    """Estimated working set exceeds the configured budget."""


def sector_basis(N: int, nup: int) -> np.ndarray:
    """Sorted bitmasks of all N-site states with nup up-spins."""
    if N > MAX_SITES:
        raise ValueError(f"N = {N} beyond supported size {MAX_SITES}")
    allstates = np.arange(1 << N, dtype=np.int64)
    return allstates[np.bitwise_count(allstates) == nup]


def sector_dim(N: int, nup: int) -> int:
    from math import comb
    return comb(N, nup)


def estimate_sector_bytes(N: int, nup: int, dense: bool = False) -> int:
    """Rough working-set size: CSR storage, or the dense matrix + eigh work."""
    dim = sector_dim(N, nup)
    if dense:
        return 3 * dim * dim * 8  # matrix + LAPACK divide&conquer workspace
    nnz = dim * (1 + 2 * N)
    return nnz * 12 + 8 * dim


def build_sector(cm: np.ndarray, Delta: float, N: int, nup: int,
                 max_gib: float = 4.0) -> sp.csr_matrix:
    """Sparse symmetric sector Hamiltonian.

    Diagonal: -Delta sum_{i<j} J_ij s_i s_j with s = +-1/2. Off-diagonal:
    -J_ij/2 between states differing by one opposite-spin swap.
    """
    need = estimate_sector_bytes(N, nup)
    if need > max_gib * 2 ** 30:
        raise MemoryGuardError(
            f"sector (N={N}, nup={nup}) needs ~{need} bytes, "
            f"budget {max_gib} GiB")
    states = sector_basis(N, nup)
    dim = len(states)
    bits = ((states[:, None] >> np.arange(N)[None, :]) & 1).astype(np.int8)
    sz = 0.5 * (2 * bits - 1)
    iu, ju = np.triu_indices(N, k=1)
    keep = cm[iu, ju] != 0
    iu, ju, Jij = iu[keep], ju[keep], cm[iu, ju][keep]
    diag = -Delta * np.einsum("p,sp->s", Jij, sz[:, iu] * sz[:, ju])
    rows = [np.arange(dim)]
    cols = [np.arange(dim)]
    vals = [diag]
    for i, j, J in zip(iu, ju, Jij):
        mask = (1 << int(i)) | (1 << int(j))
        src = np.nonzero(bits[:, i] != bits[:, j])[0]
        dst = np.searchsorted(states, states[src] ^ mask)
        rows.append(src)
        cols.append(dst)
        vals.append(np.full(len(src), -0.5 * J))
    H = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(dim, dim))
    return H


class SectorSpace:
    """Bases, Hamiltonians and ladder blocks for every J^z sector, cached."""

    def __init__(self, cm, Delta: float, max_gib: float = 4.0):
        cm = coupling_values(cm)
        self.cm = cm
        self.Delta = float(Delta)
        self.N = cm.shape[0]
        self.max_gib = max_gib
        if self.N > MAX_SITES:
            raise ValueError(f"N = {self.N} beyond supported size {MAX_SITES}")
        self.states = [sector_basis(self.N, k) for k in range(self.N + 1)]
        self._H: dict = {}
        self._Jp: dict = {}

    def H(self, k: int) -> sp.csr_matrix:
        if k not in self._H:
            self._H[k] = build_sector(self.cm, self.Delta, self.N, k,
                                      self.max_gib)
        return self._H[k]

    def Jp(self, k: int) -> sp.csr_matrix:
        """J^+ block mapping sector k to k+1.

        Spin-1/2 raising: S^+_i |down_i> = |up_i>, so every entry is 1.
        """
        if k not in self._Jp:
            st = self.states[k]
            rows, cols = [], []
            for i in range(self.N):
                mask = 1 << i
                src = np.nonzero((st & mask) == 0)[0]
                dst = np.searchsorted(self.states[k + 1], st[src] | mask)
                rows.append(dst)
                cols.append(src)
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            self._Jp[k] = sp.csr_matrix(
                (np.ones(len(rows)), (rows, cols)),
                shape=(len(self.states[k + 1]), len(st)))
        return self._Jp[k]

    def drop_caches(self):
        self._H.clear()
        self._Jp.clear()


def css_state(space: SectorSpace) -> dict:
    """Uniform-superposition blocks of the x-polarized product state."""
    amp = 2.0 ** (-space.N / 2)
    return {k: np.full(len(space.states[k]), amp, dtype=complex)
            for k in range(space.N + 1)}


def css_energy(cm) -> float:
    """<CSS|H|CSS> = -sum_{i<j} J_ij / 4 = -N J0 / 8, Delta-independent."""
    return -coupling_values(cm).sum() / 8.0


def state_norm2(psi: dict) -> float:
    return sum(float(np.vdot(v, v).real) for v in psi.values())


def sector_weights(psi: dict) -> np.ndarray:
    ks = sorted(psi.keys())
    return np.array([float(np.vdot(psi[k], psi[k]).real) for k in ks])


def state_energy(space: SectorSpace, psi: dict) -> float:
    e = 0.0
    for k, v in psi.items():
        if len(v):
            e += float(np.vdot(v, space.H(k) @ v).real)
    return e


# ---------------------------------------------------------------------------
# Krylov propagation
# ---------------------------------------------------------------------------

def lanczos_expm(H, v: np.ndarray, dt: float, m: int = 30):
    """Approximate exp(-i H dt) v in an m-dimensional Krylov space.

    Full reorthogonalization (the blocks are small enough); returns the
    propagated vector and an error estimate from the last Krylov
    coefficient.
    """
    n = len(v)
    m = min(m, n)
    V = np.zeros((m, n), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(max(m - 1, 0))
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return v.copy(), 0.0
    V[0] = v / nrm
    w = H @ V[0]
    alpha[0] = np.vdot(V[0], w).real
    w = w - alpha[0] * V[0]
    used = 1
    for jj in range(1, m):
        b = np.linalg.norm(w)
        if b < 1e-14:
            used = jj
            break
        beta[jj - 1] = b
        V[jj] = w / b
        w = H @ V[jj] - b * V[jj - 1]
        alpha[jj] = np.vdot(V[jj], w).real
        w = w - alpha[jj] * V[jj]
        # reorthogonalize against the whole basis built so far
        w -= V[:jj + 1].T @ (V[:jj + 1].conj() @ w)
        used = jj + 1
    a, bt = alpha[:used], beta[:used - 1]
    ev, evec = eigh_tridiagonal(a, bt)
    coef = evec @ (np.exp(-1j * ev * dt) * evec[0])
    out = nrm * (V[:used].T @ coef)
    # truncation error is meaningful only when the basis was actually
    # truncated; a Krylov space that exhausted the sector (breakdown or
    # used == dim) propagates exactly
    err = float(abs(coef[-1])) if used == m and m < n else 0.0
    return out, err


class KrylovError(RuntimeError):
    pass


def evolve(space: SectorSpace, psi: dict, duration: float, dt: float = 0.1,
           m: int = 30, tol: float = 1e-10) -> dict:
    """Advance all sector blocks by `duration` under the sector Hamiltonians.

    Fixed step dt; any step whose Krylov error estimate exceeds tol is
    re-done with a halved sub-step (up to 10 halvings before giving up).
    """
    psi = {k: v.copy() for k, v in psi.items()}
    t = 0.0
    while t < duration - 1e-12:
        step = min(dt, duration - t)
        for k, v in psi.items():
            if len(v) == 0:
                continue
            H = space.H(k)
            sub = step
            remaining = step
            halvings = 0
            vk = v
            while remaining > 1e-15:
                w, err = lanczos_expm(H, vk, sub, m=m)
                if err > tol:
                    sub /= 2
                    halvings += 1
                    if halvings > 10:
                        raise KrylovError(
                            f"Krylov propagation failed to converge in "
                            f"sector {k} (step {sub:g}, error {err:.2e})")
                    continue
                vk = w
                remaining -= sub
                sub = min(sub, remaining)
            psi[k] = vk
        t += step
    return psi


# ---------------------------------------------------------------------------
# measurement
# ---------------------------------------------------------------------------

def measure_collective(space: SectorSpace, psi: dict, t: float = 0.0) -> CollectiveMoments:
    """Exact <J> and symmetrized second moments across sector blocks."""
    N = space.N
    phi = {"x": {}, "y": {}, "z": {}}
    for k, v in psi.items():
        if len(v) == 0:
            continue
        phi["z"][k] = (k - N / 2.0) * v
        up = space.Jp(k) @ v if k + 1 <= N else None
        dn = space.Jp(k - 1).T @ v if k - 1 >= 0 else None
        if up is not None:
            phi["x"].setdefault(k + 1, np.zeros(len(space.states[k + 1]), complex))
            phi["x"][k + 1] += 0.5 * up
            phi["y"].setdefault(k + 1, np.zeros(len(space.states[k + 1]), complex))
            phi["y"][k + 1] += -0.5j * up
        if dn is not None:
            phi["x"].setdefault(k - 1, np.zeros(len(space.states[k - 1]), complex))
            phi["x"][k - 1] += 0.5 * dn
            phi["y"].setdefault(k - 1, np.zeros(len(space.states[k - 1]), complex))
            phi["y"][k - 1] += 0.5j * dn
    labels = ("x", "y", "z")
    mean = np.zeros(3)
    second = np.zeros((3, 3))
    for a in range(3):
        va = phi[labels[a]]
        mean[a] = sum(np.vdot(psi[k], va[k]).real for k in va if k in psi)
        for b in range(a, 3):
            vb = phi[labels[b]]
            s = sum(np.vdot(va[k], vb[k]) for k in va if k in vb)
            second[a, b] = second[b, a] = s.real
    return CollectiveMoments(t=t, mean=mean, second=second, N=N)


def quench_series(space: SectorSpace, t_grid, dt: float = 0.1,
                  check_conservation: bool = True) -> TimeSeries:
    """CSS quench: evolve and measure on the given output grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    psi = css_state(space)
    e0 = state_energy(space, psi)
    w0 = sector_weights(psi)
    pts = []
    diag = {"norm_drift": 0.0, "energy_drift_rel": 0.0,
            "sector_weight_drift": 0.0}
    t_now = 0.0
    for t in t_grid:
        if t > t_now:
            psi = evolve(space, psi, t - t_now, dt=dt)
            t_now = t
        mom = measure_collective(space, psi, t)
        p = squeezing_parameter(mom)
        p.extras["var_par"] = mom.var(0)
        pts.append(p)
        if check_conservation:
            diag["norm_drift"] = max(diag["norm_drift"],
                                     abs(state_norm2(psi) - 1.0))
            e = state_energy(space, psi)
            diag["energy_drift_rel"] = max(
                diag["energy_drift_rel"], abs(e - e0) / max(abs(e0), 1e-30))
            diag["sector_weight_drift"] = max(
                diag["sector_weight_drift"],
                float(np.max(np.abs(sector_weights(psi) - w0))))
    return TimeSeries(points=pts, metadata={
        "model": "ed", "N": space.N, "Delta": space.Delta,
        "conservation": diag})


# ---------------------------------------------------------------------------
# tower of states
# ---------------------------------------------------------------------------

def tower_energies(space: SectorSpace, seed: int = 7) -> list:
    """Lowest energy per J^z >= 0 sector: list of (Jz, E_min)."""
    N = space.N
    out = []
    rng = np.random.default_rng(seed)
    for k in range(N // 2, N + 1):
        H = space.H(k)
        dim = H.shape[0]
        if dim == 1:
            e = float(H[0, 0])
        elif dim <= DENSE_TOWER_CUTOFF:
            e = float(np.linalg.eigvalsh(H.toarray())[0])
        else:
            e = None
            for attempt in range(5):
                v0 = rng.standard_normal(dim)
                try:
                    e = float(eigsh(H, k=1, which="SA", v0=v0, tol=1e-9,
                                    maxiter=10000,
                                    return_eigenvectors=False)[0])
                    break
                except ArpackNoConvergence:
                    continue
            if e is None:
                raise KrylovError(f"sector {k} ground state did not converge")
        out.append((k - N // 2, e))
    return out


# ---------------------------------------------------------------------------
# thermal observables
# ---------------------------------------------------------------------------

@dataclass
class ThermalResult:
    """Spectral data folded over the spin-flip symmetry (J^z >= 0 kept)."""

    N: int
    e_css: float
    T_css: float
    sectors: list = field(repr=False)   # (Jz, weight, eigenvalues, q_n)
    var_jx_css: float | None = None

    @property
    def ground_energy(self) -> float:
        return min(float(w[0]) for _, _, w, _ in self.sectors)

    def energy(self, T: float) -> float:
        e0 = self.ground_energy
        Z = E = 0.0
        for _, wt, w, _ in self.sectors:
            b = wt * np.exp(-(w - e0) / T)
            Z += b.sum()
            E += (b * w).sum()
        return E / Z

    def var_jx(self, T: float) -> float:
        e0 = self.ground_energy
        Z = S = 0.0
        for _, wt, w, q in self.sectors:
            if q is None:
                raise ValueError("run thermal_solve with compute_var=True")
            b = wt * np.exp(-(w - e0) / T)
            Z += b.sum()
            S += (b * q).sum()
        return S / Z

    def var_jz(self, T: float) -> float:
        e0 = self.ground_energy
        Z = S = 0.0
        for jz, wt, w, _ in self.sectors:
            b = wt * np.exp(-(w - e0) / T)
            Z += b.sum()
            S += b.sum() * jz ** 2
        return S / Z


def _sector_spectral_pass(space: SectorSpace, k: int, compute_var: bool,
                          block: int = 2048):
    """Dense eigendecomposition of one sector; returns (evals, q_n).

    q_n = (||J^- n||^2 + ||J^+ n||^2)/4 = <n|(J^x)^2 + (J^y)^2|n>/2, the
    only eigenvector information the thermal sums need. Everything big
    is freed before returning.
    """
    if not compute_var:
        Hd = space.H(k).toarray()
        w = eigh(Hd, eigvals_only=True, overwrite_a=True, driver="evd")
        del Hd
        gc.collect()
        return w, None
    Hd = space.H(k).toarray()
    w, V = eigh(Hd, overwrite_a=True, driver="evd")
    del Hd
    gc.collect()
    d = V.shape[1]
    q = np.zeros(d)
    if k > 0:
        Jm = space.Jp(k - 1).T.tocsr()
        for j0 in range(0, d, block):
            q[j0:j0 + block] += ((Jm @ V[:, j0:j0 + block]) ** 2).sum(axis=0)
        del Jm
    if k < space.N:
        Jp = space.Jp(k)
        for j0 in range(0, d, block):
            q[j0:j0 + block] += ((Jp @ V[:, j0:j0 + block]) ** 2).sum(axis=0)
        del Jp
    del V
    space._Jp.clear()
    gc.collect()
    return w, 0.25 * q


def thermal_solve(space: SectorSpace, compute_var: bool = True,
                  T_bracket: tuple = (1e-3, 1e3), rel: float = 1e-6,
                  verbose: bool = False) -> ThermalResult:
    """E(T), T_CSS and the thermal transverse variance Var(J^x).

    T_CSS solves E(T) = <CSS|H|CSS> = -N J0/8 by bisection in log T.
    Sectors with J^z < 0 enter through the global spin-flip symmetry
    (weight 2; q_n is flip-invariant since the flip exchanges J^+ and
    J^-). Sectors are diagonalized one at a time and reduced to scalars
    immediately, which keeps the N = 16 run inside a few GiB.
    """
    N = space.N
    e_css = css_energy(space.cm)
    sectors = []
    for k in range(N // 2, N + 1):
        need = estimate_sector_bytes(N, k, dense=True)
        if need > space.max_gib * 2 ** 30:
            raise MemoryGuardError(
                f"dense sector (N={N}, nup={k}) needs ~{need} bytes, "
                f"budget {space.max_gib} GiB")
        w, q = _sector_spectral_pass(space, k, compute_var)
        sectors.append((k - N // 2, 1.0 if 2 * k == N else 2.0, w, q))
        if verbose:
            print(f"  sector Jz={k - N//2} dim={len(w)} done", flush=True)
    res = ThermalResult(N=N, e_css=e_css, T_css=np.nan, sectors=sectors)
    e_ground = res.ground_energy
    if e_css < e_ground - 1e-9 * abs(e_ground):
        raise ValueError(
            f"configured energy {e_css} below ground energy {e_ground}: "
            "no temperature reproduces it")
    lo, hi = T_bracket
    if not (res.energy(lo) < e_css < res.energy(hi)):
        raise ValueError(f"T bracket {T_bracket} does not straddle E = {e_css}")
    while hi / lo > 1 + rel:
        mid = float(np.sqrt(lo * hi))
        if res.energy(mid) < e_css:
            lo = mid
        else:
            hi = mid
    res.T_css = float(np.sqrt(lo * hi))
    if compute_var:
        res.var_jx_css = float(res.var_jx(res.T_css))
    return res
