"""Does the quench thermalize? Long-time variance vs the thermal value.

Solves E(T) = E_CSS for the effective temperature of the quench, then
compares the thermal transverse variance Var(J^x) at that temperature
with the long-time average of the same observable along the exact
quench trajectory. Agreement is the thermalization smoking gun; it is
also why the squeezing cannot keep improving forever.

Full 4x4 run takes ~12 min (dense spectra of every sector plus a
t J = 100 evolution); --quick does a 4x2 ladder in seconds.

    python demos/thermal_crossover.py --quick
"""

import argparse
import time

import numpy as np

from squeezelab.lattice import (square, LatticeGeometry, CouplingSpec,
                                build_couplings)
from squeezelab import ed


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--Delta", type=float, default=0.5)
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--quick", action="store_true", help="4x2 instead of 4x4")
    args = p.parse_args()

    geom = LatticeGeometry(4, 2) if args.quick else square(4)
    cm = build_couplings(geom, CouplingSpec("nn"))
    space = ed.SectorSpace(cm.values, args.Delta)

    t0 = time.monotonic()
    th = ed.thermal_solve(space, compute_var=True)
    print(f"N = {th.N}  E_CSS = {th.e_css:.4f}  ground = {th.ground_energy:.4f}")
    print(f"T_CSS = {th.T_css:.6f}   Var(Jx)_thermal = {th.var_jx_css:.4f}   "
          f"[{time.monotonic() - t0:.1f}s]")

    grid = np.arange(0.0, args.t_max + 1e-9, 0.5)
    ts = ed.quench_series(space, grid, dt=0.1)
    var = np.array([pt.extras["var_par"] for pt in ts.points])
    print("conservation over the run:", ts.metadata["conservation"])

    # time averages over progressively later windows
    print(f"\n{'window':>14} {'<Var_par>':>10} {'ratio to thermal':>17}")
    for lo in (0.0, 5.0, 10.0, 0.5 * args.t_max):
        sel = ts.t >= lo
        r = var[sel].mean() / th.var_jx_css
        print(f"[{lo:5.1f},{args.t_max:6.1f}] {var[sel].mean():10.4f} {r:17.4f}")

    print(f"\ntotal {time.monotonic() - t0:.1f}s")


if __name__ == "__main__":
    main()
