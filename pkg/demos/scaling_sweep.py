"""Squeezing-optimum scaling and the slow-decay exponent.

Sweeps system size for (i) the pure twisting rotor and (ii) the
rotor + spin-wave composite with the tower-fitted inertia, fits
xi^2_min ~ N^-nu and t_opt ~ N^mu on both, extracts the magnetization
decay exponent lambda, and checks the consistency relation
nu = nu0 - 2 lambda mu between them.

    python demos/scaling_sweep.py --sizes 8 12 16 24 32
"""

import argparse

import numpy as np

from squeezelab.lattice import square, CouplingSpec, build_couplings
from squeezelab.rotor import RotorModel, oat_optimum
from squeezelab.spinwave import rsw_quench, tos_fit, rescale_inertia
from squeezelab.collective import find_optimum
from squeezelab import ed, analysis


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 12, 16, 24, 32])
    p.add_argument("--Delta", type=float, default=0.5)
    args = p.parse_args()

    # twisting rate from the 4x4 tower, carried to each size
    cm4 = build_couplings(square(4), CouplingSpec("nn"))
    chi4 = tos_fit(ed.tower_energies(ed.SectorSpace(cm4.values, args.Delta))).chi
    print(f"tower chi (4x4) = {chi4:.6f}")

    rows_sw, rows_rot, lams = [], [], {}
    for L in args.sizes:
        cm = build_couplings(square(L), CouplingSpec("nn"))
        rotor = RotorModel(N=cm.N, chi=rescale_inertia(chi4, cm4, cm))
        ts = rsw_quench(cm, args.Delta, rotor, analysis.decay_time_grid(3.2 * L))
        opt = find_optimum(ts)
        rows_sw.append((cm.N, opt.xi2_min, opt.t_opt, opt.v_perp_min))
        lam = analysis.fit_lambda(ts)
        lams[L] = lam.exponent
        o = oat_optimum(cm.N, rotor.chi)
        rows_rot.append((cm.N, o.xi2_min, o.t_min, o.v_perp_min))
        print(f"L={L:3d}  xi2_min={opt.xi2_min:.4f} @ t={opt.t_opt:7.3f}   "
              f"rotor alone: {o.xi2_min:.4f} @ t={o.t_min:7.3f}   "
              f"lambda={lam.exponent:.4f} (window {lam.window[0]:.1f}"
              f"..{lam.window[1]:.1f})")

    if len(args.sizes) < 4:
        print("\n(need >= 4 sizes for the exponent fits; stopping here)")
        return
    sc = analysis.fit_optimum_scaling(rows_sw)
    rot = analysis.fit_optimum_scaling(rows_rot)
    print(f"\ncomposite:  nu = {sc.nu.exponent:.4f} +- {sc.nu.se:.4f}   "
          f"mu = {sc.mu.exponent:.4f}   nu0(var) = {sc.nu0.exponent:.4f}")
    print(f"rotor:      nu = {rot.nu.exponent:.4f}   "
          f"mu = {rot.mu.exponent:.4f}   nu0(var) = {rot.nu0.exponent:.4f}")

    lam_bar = float(np.mean([lams[L] for L in args.sizes if L >= 16]))
    rel = analysis.check_exponent_relation(sc.nu.exponent, rot.nu0.exponent,
                                           lam_bar, sc.mu.exponent)
    print(f"\nlambda (L >= 16 mean) = {lam_bar:.4f}")
    print(f"nu predicted = nu0 - 2*lambda*mu = {rel.predicted:.4f}  "
          f"(residual {rel.residual:+.4f})")
    print(f"spin-wave form (1 - lambda)*nu0  = {rel.rsw_predicted:.4f}  "
          f"(residual {rel.rsw_residual:+.4f})")


if __name__ == "__main__":
    main()
