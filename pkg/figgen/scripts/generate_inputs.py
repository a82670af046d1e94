"""Produce the CSV inputs for the paper-suite figure recipes.

Shells out to the `squeezelab` CLI — this package deliberately has no
other coupling to the simulator than the documented file formats. Runs
whose CSV already exists are skipped unless --force is given; the DTWA
ensembles dominate the wall time (a few minutes).

    python figgen/scripts/generate_inputs.py [--outdir figgen/data]
"""

import argparse
import os
import subprocess
import sys
import time


def sq(outdir, out, *args, force=False):
    path = os.path.join(outdir, out)
    if not force and os.path.exists(path + ".csv"):
        print(f"  {out}: exists, skipped")
        return
    t0 = time.time()
    cmd = ["squeezelab", *args, "--out", path]
    r = subprocess.run(cmd)
    if r.returncode != 0:
        sys.exit(f"command failed ({r.returncode}): {' '.join(cmd)}")
    print(f"  {out}: done [{time.time() - t0:.1f}s]")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--outdir",
                   default=os.path.join(os.path.dirname(__file__), "..", "data"))
    p.add_argument("--force", action="store_true", help="regenerate everything")
    p.add_argument("--skip-dtwa", action="store_true",
                   help="skip the slow trajectory ensembles")
    args = p.parse_args()
    outdir = os.path.abspath(args.outdir)
    os.makedirs(outdir, exist_ok=True)
    t0 = time.time()

    print("ferromagnetic decay series (rotor + spin waves):")
    for L in (8, 12, 16, 24, 32, 48):
        sq(outdir, f"nn{L}", "quench", "--method", "rsw", "--family", "nn",
           "--L", str(L), "--delta", "0.5", "--inertia-mode", "rescaled-from:4",
           "--t-max", str(3.2 * L), "--t-points", "300", force=args.force)

    print("paramagnetic contrast series:")
    for L in (16, 32, 48):
        sq(outdir, f"para{L}", "quench", "--method", "rsw", "--family", "nn",
           "--L", str(L), "--delta", "-0.5", "--inertia-mode", "bare",
           "--t-max", "6", "--t-points", "200", force=args.force)

    print("4x4 method comparison:")
    sq(outdir, "comp_ed", "quench", "--method", "ed", "--L", "4",
       "--delta", "0.5", "--t-grid", "linear", "--t-max", "3",
       "--t-points", "30", force=args.force)
    sq(outdir, "comp_rsw", "quench", "--method", "rsw", "--L", "4",
       "--delta", "0.5", "--inertia-mode", "tos", "--t-grid", "linear",
       "--t-max", "3", "--t-points", "30", force=args.force)
    if not args.skip_dtwa:
        sq(outdir, "comp_dtwa", "quench", "--method", "dtwa", "--L", "4",
           "--delta", "0.5", "--t-grid", "linear", "--t-max", "3",
           "--t-points", "30", "--ntraj", "4000", force=args.force)

    if not args.skip_dtwa:
        print("long-time trajectory ensembles:")
        for L in (8, 16):
            sq(outdir, f"dtwa{L}_long", "quench", "--method", "dtwa",
               "--family", "nn", "--L", str(L), "--delta", "0.5",
               "--t-grid", "linear", "--t-max", "18", "--t-points", "36",
               "--ntraj", "2000", "--dt", "0.02", force=args.force)

    print("rotor benchmark and spectra:")
    sq(outdir, "oat_scaling", "oat-scaling", "--delta", "0.5",
       "--sizes", "64,100,144,196,256,324,400,484", force=args.force)
    sq(outdir, "tower4", "tower", "--L", "4", "--delta", "0.5",
       force=args.force)
    sq(outdir, "spec4", "spectrum", "--L", "4", "--delta", "0.5",
       force=args.force)

    print(f"all inputs ready in {outdir} [{time.time() - t0:.1f}s]")


if __name__ == "__main__":
    main()
