"""Rotor + spin-wave treatment of the planar-magnet quench.

The zero-momentum collective spin is kept as an exact rotor (module
``rotor``) while every k != 0 mode is a free Bogoliubov boson with

    A_k = (J0 - J_k(1+Delta)/2) / 2
    B_k = -J_k (1-Delta) / 4
    omega_k = sqrt(A_k^2 - B_k^2) = sqrt((J0-J_k)(J0-Delta*J_k)) / 2

which is gapless (Goldstone) for Delta < 1 and reduces to omega = A at
Delta = 1 where the twisting shuts off. A quench from the polarized
product state is a vacuum quench for the bosons, populating each mode as
n_k(t) = (B_k/omega_k)^2 sin^2(omega_k t). The magnetization then takes
the additive form

    m(t) = <K^x>_rotor / N - n_sw(t),

with the transverse covariance carried by the rotor block, while the
twisting rate chi = 1/(2I) may be bare, fitted from sector ground
energies ("tower of states"), or rescaled between sizes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .lattice import CouplingMatrix, fourier_coupling
from .rotor import RotorModel, css_ladder, evolve_ladder, ladder_moments
from .collective import (CollectiveMoments, TimeSeries, squeezing_parameter)

#: spin-wave density beyond which the quadratic theory is uncontrolled
N_SW_VALIDITY = 0.5


class UnstableModeError(ValueError):
    """omega_k^2 came out negative: anisotropy outside [-1, 1] or bad couplings."""


@dataclass(frozen=True)
class SpinWaveSet:
    """Bogoliubov data on the k-grid (flattened, k = 0 excluded)."""

    N: int
    Delta: float
    J0: float
    Jk: np.ndarray = field(repr=False)      # k != 0 entries
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)
    rotor: RotorModel | None = None


def bare_inertia(cm: CouplingMatrix, Delta: float) -> RotorModel:
    """Mean-field twisting rate chi = 1/(2I) = J0 (1-Delta) / (2(N-1))."""
    return RotorModel(N=cm.N, chi=cm.J0 * (1.0 - Delta) / (2.0 * (cm.N - 1)))


def dispersion(cm: CouplingMatrix, Delta: float,
               rotor: RotorModel | None = None) -> SpinWaveSet:
    """Spin-wave coefficients for every nonzero wavevector."""
    if not -1.0 <= Delta <= 1.0:
        raise UnstableModeError(f"anisotropy {Delta} outside [-1, 1]")
    grid = fourier_coupling(cm)
    J0 = grid.J0
    Jk = grid.Jk.ravel()[1:]  # fft layout puts k = 0 first
    A = 0.5 * (J0 - 0.5 * Jk * (1.0 + Delta))
    B = -0.25 * Jk * (1.0 - Delta)
    w2 = A * A - B * B
    if np.any(w2 < -1e-10 * J0 ** 2):
        raise UnstableModeError("unstable spin-wave mode: omega_k^2 < 0 "
                                f"(min {w2.min():.3e})")
    omega = np.sqrt(np.maximum(w2, 0.0))
    return SpinWaveSet(N=cm.N, Delta=Delta, J0=J0, Jk=Jk, A=A, B=B,
                       omega=omega, rotor=rotor)


def spin_wave_density(sw: SpinWaveSet, t) -> np.ndarray:
    """n_sw(t) = (1/N) sum_{k!=0} (B_k/omega_k)^2 sin^2(omega_k t).

    Modes with omega below 1e-12 use the ballistic limit (B_k t)^2.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    small = sw.omega < 1e-12
    amp = np.where(small, 0.0, (sw.B / np.where(small, 1.0, sw.omega)) ** 2)
    n = (amp[None, :] * np.sin(np.outer(t, sw.omega)) ** 2).sum(axis=1)
    if small.any():
        n += (sw.B[small][None, :] ** 2 * t[:, None] ** 2).sum(axis=1)
    return n / sw.N


def rsw_quench(cm: CouplingMatrix, Delta: float, rotor: RotorModel,
               t_grid, suppress_spin_waves: bool = False) -> TimeSeries:
    """Quench series: rotor transverse covariance, composite magnetization.

    With ``suppress_spin_waves`` the boson population is forced to zero
    and the output reduces exactly to the pure twisting series.
    """
    sw = dispersion(cm, Delta, rotor)
    t_grid = np.asarray(t_grid, dtype=float)
    n_sw = np.zeros_like(t_grid) if suppress_spin_waves \
        else spin_wave_density(sw, t_grid)
    N = cm.N
    psi0 = css_ladder(N)
    pts = []
    warned = False
    for t, nsw in zip(t_grid, n_sw):
        rot = ladder_moments(evolve_ladder(psi0, rotor, t), t)
        mx = rot.mean[0] / N - nsw
        mean = np.array([N * mx, 0.0, 0.0])
        second = rot.second.copy()
        second[0, 0] = (N * mx) ** 2 + (rot.second[0, 0] - rot.mean[0] ** 2)
        mom = CollectiveMoments(t=t, mean=mean, second=second, N=N)
        if nsw > N_SW_VALIDITY and not warned:
            warnings.warn(f"spin-wave density {nsw:.2f} > {N_SW_VALIDITY} "
                          f"at t = {t:g}: theory uncontrolled", stacklevel=2)
            warned = True
        pts.append(squeezing_parameter(mom, n_sw=float(nsw)))
    return TimeSeries(points=pts, metadata={
        "model": "rsw", "N": N, "Delta": Delta, "chi": rotor.chi,
        "family": cm.spec.family, "L": cm.geometry.Lx})


# ---------------------------------------------------------------------------
# moment of inertia: tower-of-states fit and size rescaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TowerFit:
    chi: float
    E0: float
    residual_max: float
    quadratic: bool       # False when residuals show structure beyond tol


def tos_fit(sector_energies, rel_tol: float = 0.15) -> TowerFit:
    """Twisting rate from sector ground energies E(Jz) ~ E(0) + chi Jz^2.

    Anchored weighted least squares: the intercept is pinned to the
    Jz = 0 value and sectors are weighted by 1/Jz^4, which makes the
    estimator the mean of the per-sector ratios (E(Jz) - E(0))/Jz^2 --
    the small-Jz slope the rotor picture is about, kept robust against
    the high-Jz edge of the tower bending away from quadratic.
    """
    pairs = sorted((int(jz), float(e)) for jz, e in sector_energies)
    jz = np.array([p[0] for p in pairs])
    en = np.array([p[1] for p in pairs])
    if len(pairs) < 4:
        raise ValueError("need >= 4 sectors for a tower fit")
    if jz[0] != 0:
        raise ValueError("tower fit needs the Jz = 0 sector as anchor")
    e0 = en[0]
    ratios = (en[1:] - e0) / jz[1:] ** 2
    chi = float(ratios.mean())
    resid = np.abs(ratios - chi) / abs(chi) if chi != 0 else np.abs(ratios)
    quadratic = bool(resid.max() <= rel_tol)
    if not quadratic:
        warnings.warn("tower of states not quadratic: worst sector ratio "
                      f"off by {resid.max():.1%}", stacklevel=2)
    return TowerFit(chi=chi, E0=e0, residual_max=float(resid.max()),
                    quadratic=quadratic)


def rescale_inertia(chi_from: float, cm_from: CouplingMatrix,
                    cm_to: CouplingMatrix) -> float:
    """Carry a fitted twisting rate to another size.

    Ratio of the mean-field rates: chi' = chi * [J0'/(N'-1)] / [J0/(N-1)].
    Feeding a bare rate in returns the bare rate of the target size.
    """
    return chi_from * (cm_to.J0 / (cm_to.N - 1)) * ((cm_from.N - 1) / cm_from.J0)


# ---------------------------------------------------------------------------
# low-energy spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumLevel:
    Kz: int
    n_quanta: int
    energy: float
    modes: tuple = ()


def rsw_spectrum(sw: SpinWaveSet, rotor: RotorModel, E0: float,
                 max_Kz: int = 4, max_quanta: int = 1) -> list:
    """Enumerate E = E0 + chi Kz^2 + sum omega_k n_k levels, sorted.

    max_quanta caps the total boson number (0, 1 and 2 are what the
    spectra comparisons use). The reference energy E0 is supplied by the
    caller -- in practice the exact ground energy.
    """
    levels = []
    omegas = np.sort(sw.omega)
    for kz in range(0, max_Kz + 1):
        erot = E0 + rotor.chi * kz ** 2
        levels.append(SpectrumLevel(Kz=kz, n_quanta=0, energy=erot))
        if max_quanta >= 1:
            for i, w in enumerate(omegas):
                levels.append(SpectrumLevel(Kz=kz, n_quanta=1,
                                            energy=erot + w, modes=(i,)))
        if max_quanta >= 2:
            for i in range(len(omegas)):
                for j in range(i, len(omegas)):
                    levels.append(SpectrumLevel(
                        Kz=kz, n_quanta=2,
                        energy=erot + omegas[i] + omegas[j], modes=(i, j)))
    return sorted(levels, key=lambda lv: (lv.Kz, lv.energy))
