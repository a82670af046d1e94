"""Periodic square-lattice geometry and spin-spin coupling matrices.

Three interaction families are supported, all ferromagnetic (J > 0) and
translation invariant under periodic wrap:

* ``nn``       -- nearest neighbor: J on minimum-image distance 1
* ``powerlaw`` -- J / r^alpha
* ``rydberg``  -- J (1 + Rb^6) / (r^6 + Rb^6)  (dressed, distance-1 value = J)

Distances use the minimum-image convention on the torus, components in
(-L/2, L/2]. A single image per pair (no lattice-sum tails).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("nn", "powerlaw", "rydberg")


@dataclass(frozen=True)
class LatticeGeometry:
    """Periodic rectangle of Lx*Ly sites (square when Lx == Ly)."""

    Lx: int
    Ly: int

    def __post_init__(self):
        if self.Lx < 2 or self.Ly < 2:
            raise ValueError("lattice edges must be >= 2 sites")

    @property
    def N(self) -> int:
        return self.Lx * self.Ly

    @property
    def L(self) -> int:
        """Linear size; only defined for square lattices."""
        if self.Lx != self.Ly:
            raise ValueError("non-square lattice has no single linear size")
        return self.Lx

    def coords(self) -> np.ndarray:
        """(N, 2) integer coordinates, site index = x*Ly + y."""
        x, y = np.divmod(np.arange(self.N), self.Ly)
        return np.stack([x, y], axis=1)

    def min_image(self, d: np.ndarray) -> np.ndarray:
        """Map integer displacement components into (-L/2, L/2] per axis."""
        d = np.asarray(d)
        out = np.empty_like(d)
        for a, La in enumerate((self.Lx, self.Ly)):
            c = np.mod(d[..., a], La)
            out[..., a] = np.where(c > La / 2, c - La, c)
        return out


def square(L: int) -> LatticeGeometry:
    return LatticeGeometry(L, L)


@dataclass(frozen=True)
class CouplingSpec:
    """Interaction family and parameters. J is the overall energy scale."""

    family: str
    J: float = 1.0
    alpha: float | None = None   # powerlaw exponent
    Rb: float | None = None      # rydberg blockade radius (lattice units)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown coupling family {self.family!r}; "
                             f"choose from {FAMILIES}")
        if self.J <= 0:
            raise ValueError("coupling scale J must be > 0 (ferromagnetic)")
        if self.family == "powerlaw":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("powerlaw family needs alpha > 0")
        if self.family == "rydberg":
            if self.Rb is None or self.Rb < 0:
                raise ValueError("rydberg family needs Rb >= 0")


@dataclass(frozen=True)
class CouplingMatrix:
    """Dense symmetric N x N couplings with zero diagonal and constant row sum."""

    geometry: LatticeGeometry
    spec: CouplingSpec
    values: np.ndarray = field(repr=False)
    J0: float = 0.0

    @property
    def N(self) -> int:
        return self.geometry.N


def _coupling_row(geom: LatticeGeometry, spec: CouplingSpec) -> np.ndarray:
    """Coupling to site 0 as an (Lx, Ly) array over displacements."""
    dx = np.arange(geom.Lx)
    dx = np.where(dx > geom.Lx / 2, dx - geom.Lx, dx)
    dy = np.arange(geom.Ly)
    dy = np.where(dy > geom.Ly / 2, dy - geom.Ly, dy)
    DX, DY = np.meshgrid(dx, dy, indexing="ij")
    r2 = (DX ** 2 + DY ** 2).astype(float)
    row = np.zeros_like(r2)
    off = r2 > 0
    if spec.family == "nn":
        row[r2 == 1] = spec.J
    elif spec.family == "powerlaw":
        row[off] = spec.J / r2[off] ** (spec.alpha / 2.0)
    else:  # rydberg
        rb6 = spec.Rb ** 6
        row[off] = spec.J * (1.0 + rb6) / (r2[off] ** 3 + rb6)
    return row


def build_couplings(geom: LatticeGeometry, spec: CouplingSpec) -> CouplingMatrix:
    """Assemble the full translation-invariant coupling matrix.

    The matrix element between sites i and j depends only on the
    minimum-image displacement r_i - r_j.
    """
    row = _coupling_row(geom, spec)
    c = geom.coords()
    d = geom.min_image(c[:, None, :] - c[None, :, :])
    vals = row[np.mod(d[..., 0], geom.Lx), np.mod(d[..., 1], geom.Ly)]
    np.fill_diagonal(vals, 0.0)
    vals.setflags(write=False)
    return CouplingMatrix(geometry=geom, spec=spec, values=vals,
                          J0=float(row.sum()))


@dataclass(frozen=True)
class MomentumGrid:
    """Fourier transform J_k of a coupling row over the Brillouin zone.

    Layout follows numpy fft2: entry [nx, ny] is k = 2*pi*(nx/Lx, ny/Ly).
    J_{k=0} = J0 and sum_k J_k = 0 (zero diagonal of the couplings).
    """

    geometry: LatticeGeometry
    Jk: np.ndarray = field(repr=False)

    @property
    def J0(self) -> float:
        return float(self.Jk[0, 0])

    def wavevectors(self) -> np.ndarray:
        kx = 2 * np.pi * np.arange(self.geometry.Lx) / self.geometry.Lx
        ky = 2 * np.pi * np.arange(self.geometry.Ly) / self.geometry.Ly
        KX, KY = np.meshgrid(kx, ky, indexing="ij")
        return np.stack([KX, KY], axis=-1)


def fourier_coupling(cm: CouplingMatrix) -> MomentumGrid:
    """J_k = sum_d e^{i k.d} J(d) -- real by inversion symmetry of J(d)."""
    row = _coupling_row(cm.geometry, cm.spec)
    Jk = np.fft.fft2(row)
    imag_max = np.abs(Jk.imag).max()
    if imag_max > 1e-9 * max(1.0, np.abs(Jk.real).max()):
        raise ValueError("coupling row not inversion symmetric: "
                         f"max imaginary part {imag_max:.3e}")
    Jk = Jk.real.copy()
    Jk.setflags(write=False)
    return MomentumGrid(geometry=cm.geometry, Jk=Jk)


def coupling_dump_csv(cm: CouplingMatrix, path) -> None:
    """Debug dump: one row of the coupling matrix per line."""
    np.savetxt(path, cm.values, delimiter=",")


def all_to_all(N: int, J: float = 1.0) -> np.ndarray:
    """Uniform couplings J between every pair (collective-spin benchmark)."""
    vals = np.full((N, N), J, dtype=float)
    np.fill_diagonal(vals, 0.0)
    return vals


def coupling_values(cm) -> np.ndarray:
    """Accept a CouplingMatrix or a plain square array, return the array."""
    vals = np.asarray(getattr(cm, "values", cm), dtype=float)
    if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
        raise ValueError("coupling matrix must be square")
    return vals
