"""Command-line front end: one executable, one subcommand per task.

Every run writes a CSV (or JSON report) plus a JSON manifest holding the
full configuration, package version, seed, wall time and conservation
diagnostics. The manifest hash covers config + version only, so
identical inputs are recognizable across reruns (campaigns skip them).

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from dataclasses import dataclass, asdict, fields

import numpy as np

from . import __version__
from .lattice import CouplingSpec, square, build_couplings, all_to_all
from .collective import (TimeSeries, FrameUndefinedError, find_optimum,
                         write_series_csv, read_series_csv, CSV_COLUMNS)
from .rotor import RotorModel, oat_series, oat_optimum
from .spinwave import (bare_inertia, dispersion, rsw_quench, tos_fit,
                       rescale_inertia, rsw_spectrum, UnstableModeError)
from . import ed
from . import dtwa as dtwa_mod
from . import analysis

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COLUMN_DOC = """\
CSV columns (time series):
  t           time, units of 1/J
  m_x         |<J>|/N, magnetization along the initial polarization
  var_e1      Var(J.e1) in the polarization-transverse frame
  var_e2      Var(J.e2)
  cov_12      Cov(J.e1, J.e2), symmetrized
  v_perp_min  minimal transverse collective variance
  theta_min   angle of the minimal-variance axis in (e1, e2), rad
  xi2         squeezing parameter N * v_perp_min / |<J>|^2
  n_sw        spin-wave density (rsw runs; empty otherwise)
  var_par     Var(J) along the polarization axis (ed runs)
  *_err       jackknife standard errors (dtwa runs)
Tower CSV: jz, energy. Spectrum CSV: jz, n_quanta, energy.
Scaling CSV: n, xi2_min, t_min, v_perp_min (+ *_err when available).
"""


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything a quench run needs; round-trips through JSON unchanged."""

    method: str = "rsw"           # ed | rsw | dtwa | oat
    family: str = "nn"            # nn | powerlaw | rydberg | alltoall
    L: int = 4
    N: int = 0                    # spin count for lattice-free methods (0 = L*L)
    Delta: float = 0.5
    J: float = 1.0
    alpha: float = 0.0            # powerlaw exponent (0 = unset)
    Rb: float = 0.0               # rydberg blockade radius (0 = point limit)
    inertia_mode: str = "bare"    # bare | tos | rescaled-from:<L0>
    t_max: float = 10.0
    t_points: int = 200
    t_grid: str = "log"           # log | linear
    dt: float = 0.0               # 0 = solver default
    n_traj: int = dtwa_mod.DEFAULT_NTRAJ
    seed: int = 1234
    max_gib: float = 4.0
    out: str = "run"              # output prefix -> <out>.csv, <out>.json

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        bad = set(d) - known
        if bad:
            raise ConfigError(f"unknown config keys: {sorted(bad)}")
        return cls(**d)


def config_hash(cfg: RunConfig) -> str:
    """Deterministic digest of config + code version (wall time excluded)."""
    blob = json.dumps({"config": cfg.to_dict(), "version": __version__},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_manifest(path, cfg: RunConfig, wall: float, extra: dict | None = None):
    doc = {"config": cfg.to_dict(), "version": __version__,
           "seed": cfg.seed, "hash": config_hash(cfg),
           "wall_time_s": wall}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, default=float)
        fh.write("\n")


# ---------------------------------------------------------------------------
# model assembly
# ---------------------------------------------------------------------------

def _spin_count(cfg: RunConfig) -> int:
    return cfg.N if cfg.N > 0 else cfg.L * cfg.L

def build_model(cfg: RunConfig):
    """Coupling matrix object for lattice families, array for all-to-all."""
    try:
        if cfg.family == "alltoall":
            return all_to_all(_spin_count(cfg), cfg.J)
        spec = CouplingSpec(cfg.family, J=cfg.J,
                            alpha=cfg.alpha if cfg.alpha > 0 else None,
                            Rb=cfg.Rb if cfg.family == "rydberg" else None)
        return build_couplings(square(cfg.L), spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def resolve_rotor(cfg: RunConfig, cm) -> RotorModel:
    """Twisting rate per the configured inertia mode."""
    if cfg.inertia_mode == "bare":
        return bare_inertia(cm, cfg.Delta)
    if cfg.inertia_mode == "tos":
        space = ed.SectorSpace(cm, cfg.Delta, max_gib=cfg.max_gib)
        fit = tos_fit(ed.tower_energies(space))
        return RotorModel(N=space.N, chi=fit.chi)
    if cfg.inertia_mode.startswith("rescaled-from:"):
        L0 = int(cfg.inertia_mode.split(":", 1)[1])
        cfg0 = RunConfig(**{**cfg.to_dict(), "L": L0, "N": 0})
        cm0 = build_model(cfg0)
        space = ed.SectorSpace(cm0, cfg.Delta, max_gib=cfg.max_gib)
        fit = tos_fit(ed.tower_energies(space))
        return RotorModel(N=cm.N, chi=rescale_inertia(fit.chi, cm0, cm))
    raise ConfigError(f"unknown inertia mode {cfg.inertia_mode!r}")


def time_grid(cfg: RunConfig) -> np.ndarray:
    if cfg.t_grid == "log":
        return analysis.decay_time_grid(cfg.t_max, cfg.t_points)
    if cfg.t_grid == "linear":
        return np.linspace(0.0, cfg.t_max, cfg.t_points + 1)
    raise ConfigError(f"unknown t_grid {cfg.t_grid!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def run_quench(cfg: RunConfig) -> TimeSeries:
    try:
        grid = time_grid(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.method == "oat":
        if cfg.family == "alltoall":
            rotor = RotorModel(N=_spin_count(cfg),
                               chi=cfg.J * (1.0 - cfg.Delta) / 2.0)
        else:
            rotor = resolve_rotor(cfg, build_model(cfg))
        return oat_series(rotor, grid)
    cm = build_model(cfg)
    if cfg.method == "rsw":
        rotor = resolve_rotor(cfg, cm)
        return rsw_quench(cm, cfg.Delta, rotor, grid)
    if cfg.method == "ed":
        try:
            space = ed.SectorSpace(cm, cfg.Delta, max_gib=cfg.max_gib)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return ed.quench_series(space, grid, dt=cfg.dt if cfg.dt > 0 else 0.1)
    if cfg.method == "dtwa":
        return dtwa_mod.run_ensemble(
            cm, cfg.Delta, grid, n_traj=cfg.n_traj, master_seed=cfg.seed,
            dt=cfg.dt if cfg.dt > 0 else dtwa_mod.DEFAULT_DT)
    raise ConfigError(f"unknown method {cfg.method!r}")


def cmd_quench(cfg: RunConfig) -> int:
    t0 = time.time()
    ts = run_quench(cfg)
    extra_cols = sorted({k for p in ts.points for k in p.extras})
    write_series_csv(ts, cfg.out + ".csv", extra_columns=extra_cols)
    write_manifest(cfg.out + ".json", cfg, time.time() - t0, {
        "columns": CSV_COLUMNS + extra_cols,
        "series_metadata": ts.metadata,
        "conservation": ts.metadata.get("conservation", {})})
    print(f"wrote {cfg.out}.csv ({len(ts.points)} rows) and {cfg.out}.json")
    return EXIT_OK


def cmd_inertia(cfg: RunConfig) -> int:
    cm = build_model(cfg)
    rotor = resolve_rotor(cfg, cm)
    doc = {"family": cfg.family, "Delta": cfg.Delta, "L": cfg.L,
           "inertia_mode": cfg.inertia_mode, "chi": rotor.chi,
           "half_inverse_inertia": rotor.chi}
    json.dump(doc, sys.stdout, indent=1)
    print()
    return EXIT_OK


def cmd_tower(cfg: RunConfig) -> int:
    t0 = time.time()
    cm = build_model(cfg)
    space = ed.SectorSpace(cm, cfg.Delta, max_gib=cfg.max_gib)
    tower = ed.tower_energies(space)
    fit = tos_fit(tower)
    with open(cfg.out + ".csv", "w") as fh:
        fh.write("jz,energy\n")
        for jz, e in tower:
            fh.write(f"{jz},{float(e)!r}\n")
    write_manifest(cfg.out + ".json", cfg, time.time() - t0, {
        "columns": ["jz", "energy"],
        "fit": {"chi": fit.chi, "E0": fit.E0,
                "residual_max": fit.residual_max,
                "quadratic": fit.quadratic}})
    print(f"chi = {fit.chi:.6f} (E0 = {fit.E0:.6f}); wrote {cfg.out}.csv")
    return EXIT_OK


def cmd_tcss(cfg: RunConfig) -> int:
    t0 = time.time()
    cm = build_model(cfg)
    space = ed.SectorSpace(cm, cfg.Delta, max_gib=cfg.max_gib)
    res = ed.thermal_solve(space, compute_var=False)
    write_manifest(cfg.out + ".json", cfg, time.time() - t0, {
        "T_css": res.T_css, "e_css": res.e_css,
        "ground_energy": res.ground_energy})
    print(f"T_CSS = {res.T_css:.6f} (E_CSS = {res.e_css:.6f})")
    return EXIT_OK


def cmd_thermal_varjx(cfg: RunConfig) -> int:
    t0 = time.time()
    cm = build_model(cfg)
    space = ed.SectorSpace(cm, cfg.Delta, max_gib=cfg.max_gib)
    res = ed.thermal_solve(space, compute_var=True)
    N = space.N
    write_manifest(cfg.out + ".json", cfg, time.time() - t0, {
        "T_css": res.T_css, "var_jx": res.var_jx_css,
        "var_jx_per_spin": res.var_jx_css / N})
    print(f"T_CSS = {res.T_css:.6f}  Var(J^x) = {res.var_jx_css:.6f} "
          f"({res.var_jx_css / N:.6f} per spin)")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    t0 = time.time()
    cm = build_model(cfg)
    rotor = resolve_rotor(cfg, cm)
    sw = dispersion(cm, cfg.Delta, rotor)
    E0 = 0.0
    if cfg.inertia_mode == "tos":
        space = ed.SectorSpace(cm, cfg.Delta, max_gib=cfg.max_gib)
        E0 = tos_fit(ed.tower_energies(space)).E0
    levels = rsw_spectrum(sw, rotor, E0)
    with open(cfg.out + ".csv", "w") as fh:
        fh.write("jz,n_quanta,energy\n")
        for lv in levels:
            fh.write(f"{lv.Kz},{lv.n_quanta},{float(lv.energy)!r}\n")
    write_manifest(cfg.out + ".json", cfg, time.time() - t0,
                   {"columns": ["jz", "n_quanta", "energy"],
                    "n_levels": len(levels)})
    print(f"wrote {len(levels)} levels to {cfg.out}.csv")
    return EXIT_OK


def cmd_oat_scaling(cfg: RunConfig, sizes) -> int:
    t0 = time.time()
    rows = []
    for n in sizes:
        # fixed total coupling J0 = J (extensive inertia, as for the
        # short-range rotor), so the twisting rate shrinks as 1/(n-1)
        opt = oat_optimum(n, cfg.J * (1.0 - cfg.Delta) / (2.0 * (n - 1)))
        rows.append((n, opt.xi2_min, opt.t_min, opt.v_perp_min))
    with open(cfg.out + ".csv", "w") as fh:
        fh.write("n,xi2_min,t_min,v_perp_min\n")
        for r in rows:
            fh.write(",".join(repr(float(x)) for x in r) + "\n")
    sc = analysis.fit_optimum_scaling(rows)
    write_manifest(cfg.out + ".json", cfg, time.time() - t0, {
        "columns": ["n", "xi2_min", "t_min", "v_perp_min"],
        "nu": {"value": sc.nu.exponent, "se": sc.nu.se},
        "mu": {"value": sc.mu.exponent, "se": sc.mu.se},
        "nu0": {"value": sc.nu0.exponent, "se": sc.nu0.se}})
    print(f"nu = {sc.nu.exponent:.4f}({sc.nu.se:.4f})  "
          f"mu = {sc.mu.exponent:.4f}({sc.mu.se:.4f})  "
          f"nu0 = {sc.nu0.exponent:.4f}({sc.nu0.se:.4f})")
    return EXIT_OK


def cmd_scaling_fit(csvs, out, window) -> int:
    """Exponent report from existing series CSVs (+ their manifests)."""
    t0 = time.time()
    per_series = []
    optima = []
    for path in csvs:
        ts = read_series_csv(path)
        entry = {"csv": str(path)}
        meta = {}
        try:
            with open(str(path).rsplit(".", 1)[0] + ".json") as fh:
                meta = json.load(fh)
        except OSError:
            pass
        N = (meta.get("series_metadata") or {}).get("N") or meta.get("N")
        try:
            lam = analysis.fit_lambda(ts, window=window)
            entry["lambda"] = {"value": lam.exponent, "se": lam.se,
                               "window": list(lam.window)}
        except ValueError as exc:
            entry["lambda"] = {"error": str(exc)}
        try:
            opt = find_optimum(ts)
            entry["optimum"] = {"t_min": opt.t_min, "t_opt": opt.t_opt,
                                "xi2_min": opt.xi2_min,
                                "v_perp_min": opt.v_perp_min}
            if N:
                optima.append((N, opt.xi2_min, opt.t_opt, opt.v_perp_min))
        except ValueError as exc:
            entry["optimum"] = {"error": str(exc)}
        per_series.append(entry)
    report = {"series": per_series, "wall_time_s": time.time() - t0,
              "version": __version__}
    if len({o[0] for o in optima}) >= 4:
        sc = analysis.fit_optimum_scaling(optima)
        report["scaling"] = {
            "nu": {"value": sc.nu.exponent, "se": sc.nu.se},
            "mu": {"value": sc.mu.exponent, "se": sc.mu.se},
            "nu0": {"value": sc.nu0.exponent, "se": sc.nu0.se}}
        lams = [e["lambda"]["value"] for e in per_series
                if "value" in e.get("lambda", {})]
        if lams:
            rel = analysis.check_exponent_relation(
                sc.nu.exponent, sc.nu0.exponent, float(np.mean(lams)),
                sc.mu.exponent)
            report["relation"] = {"residual": rel.residual,
                                  "predicted": rel.predicted,
                                  "rsw_predicted": rel.rsw_predicted,
                                  "rsw_residual": rel.rsw_residual}
    with open(out, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True, default=float)
        fh.write("\n")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_campaign(config_path) -> int:
    """Run a list of quench configs, skipping ones already done."""
    with open(config_path) as fh:
        doc = json.load(fh)
    runs = doc.get("runs")
    if not isinstance(runs, list) or not runs:
        raise ConfigError("campaign file needs a non-empty 'runs' list")
    base = doc.get("defaults", {})
    status = []
    failed = 0
    for i, override in enumerate(runs):
        cfg = RunConfig.from_dict({**base, **override})
        label = cfg.out
        h = config_hash(cfg)
        try:
            with open(cfg.out + ".json") as fh:
                prev = json.load(fh)
            if prev.get("hash") == h:
                status.append({"run": label, "status": "skipped", "hash": h})
                continue
        except (OSError, json.JSONDecodeError):
            pass
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                cmd_quench(cfg)
            status.append({"run": label, "status": "ok", "hash": h,
                           "warnings": [str(w.message) for w in caught]})
        except Exception as exc:   # keep going; report at the end
            failed += 1
            status.append({"run": label, "status": "failed",
                           "error": f"{type(exc).__name__}: {exc}"})
    report_path = doc.get("report", "campaign_report.json")
    report = {"status": status, "version": __version__,
              "n_failed": failed, "n_total": len(runs)}
    fit_cfg = doc.get("scaling_fit")
    if fit_cfg and not failed:
        csvs = [s["run"] + ".csv" for s in status]
        cmd_scaling_fit(csvs, fit_cfg.get("out", "scaling_report.json"),
                        None)
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    for s in status:
        print(f"{s['run']}: {s['status']}" +
              (f" ({s['error']})" if s["status"] == "failed" else ""))
    return EXIT_NUMERICAL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_model_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file of RunConfig keys; flags override")
    p.add_argument("--method", choices=("ed", "rsw", "dtwa", "oat"))
    p.add_argument("--family", choices=("nn", "powerlaw", "rydberg", "alltoall"))
    p.add_argument("--L", type=int, help="linear lattice size (N = L*L)")
    p.add_argument("--N", type=int, help="spin count for lattice-free runs")
    p.add_argument("--delta", dest="Delta", type=float, help="XXZ anisotropy")
    p.add_argument("--J", type=float, help="coupling scale (energy unit)")
    p.add_argument("--alpha", type=float, help="power-law exponent")
    p.add_argument("--rb", dest="Rb", type=float, help="blockade radius")
    p.add_argument("--inertia-mode", dest="inertia_mode",
                   help="bare | tos | rescaled-from:<L0>")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--t-points", dest="t_points", type=int)
    p.add_argument("--t-grid", dest="t_grid", choices=("log", "linear"))
    p.add_argument("--dt", type=float, help="integrator step (0 = default)")
    p.add_argument("--ntraj", dest="n_traj", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-gib", dest="max_gib", type=float,
                   help="memory guard for ED sectors")
    p.add_argument("--out", help="output prefix")


def _config_from_args(args) -> RunConfig:
    d = {}
    if args.config:
        with open(args.config) as fh:
            d.update(json.load(fh))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            d[f.name] = v
    return RunConfig.from_dict(d)


def main(argv=None) -> int:
    top = argparse.ArgumentParser(
        prog="squeezelab",
        description="Squeezing dynamics of planar XXZ magnets "
                    "(units J = hbar = k_B = 1, time in 1/J).",
        epilog=COLUMN_DOC,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="cmd", required=True)

    for name, hlp in (("quench", "time series from one solver"),
                      ("tower", "ED sector ground energies + inertia fit"),
                      ("tcss", "temperature matching the initial-state energy"),
                      ("thermal-varjx", "thermal transverse variance at T_CSS"),
                      ("spectrum", "rotor + spin-wave low-energy levels"),
                      ("inertia", "twisting rate for a model")):
        p = sub.add_parser(name, help=hlp)
        _add_model_args(p)

    p = sub.add_parser("oat-scaling", help="squeezing optimum vs N (rotor)")
    _add_model_args(p)
    p.add_argument("--sizes", required=True,
                   help="comma-separated spin counts, e.g. 64,144,256")

    p = sub.add_parser("scaling-fit", help="exponent report from series CSVs")
    p.add_argument("csvs", nargs="+", help="TimeSeries CSV paths")
    p.add_argument("--report", default="scaling_report.json")
    p.add_argument("--window", help="lambda fit window 'lo,hi'")

    p = sub.add_parser("campaign", help="run a JSON list of quenches")
    p.add_argument("campaign_config")

    args = top.parse_args(argv)
    try:
        if args.cmd == "scaling-fit":
            window = (tuple(float(x) for x in args.window.split(","))
                      if args.window else None)
            return cmd_scaling_fit(args.csvs, args.report, window)
        if args.cmd == "campaign":
            return cmd_campaign(args.campaign_config)
        cfg = _config_from_args(args)
        if args.cmd == "quench":
            return cmd_quench(cfg)
        if args.cmd == "tower":
            return cmd_tower(cfg)
        if args.cmd == "tcss":
            return cmd_tcss(cfg)
        if args.cmd == "thermal-varjx":
            return cmd_thermal_varjx(cfg)
        if args.cmd == "spectrum":
            return cmd_spectrum(cfg)
        if args.cmd == "inertia":
            return cmd_inertia(cfg)
        if args.cmd == "oat-scaling":
            sizes = [int(s) for s in args.sizes.split(",")]
            return cmd_oat_scaling(cfg, sizes)
        raise ConfigError(f"unhandled command {args.cmd!r}")
    except (ConfigError, ed.MemoryGuardError, OSError,
            json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, FrameUndefinedError, UnstableModeError,
            ed.KrylovError, dtwa_mod.EnergyDriftError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
