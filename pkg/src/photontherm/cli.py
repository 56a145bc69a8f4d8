"""Command-line entry point: ``photontherm <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import birth_death, equilibrium, jump_mc, motion, rates
from .config import RunConfig, parse_config
from .errors import ConfigError, DomainError, QuadratureError, RootFindingError
from .params import HBAR, KB, reduce

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 2, 3
MARGIN_COLUMNS = [f"margin_{k}" for k in equilibrium.MARGIN_NAMES]


# --------------------------------------------------------------------------
# output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % (float(v) + 0.0)
    return str(v)


def csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def emit_csv(envelope, path):
    """Write the payload table to ``path`` and the metadata to ``path + '.meta.json'``.

    ``path`` of None or ``-`` writes the table to stdout without a sidecar.
    """
    text = csv_text(envelope["columns"], envelope["rows"])
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(envelope["metadata"]), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# subcommands; each returns (columns, rows, summary)

def _grid(spec):
    return np.linspace(spec["min"], spec["max"], spec["steps"])


def _offsets(cfg: RunConfig, use_grid):
    """omega_q - omega_L in Gamma units for the rows of a 1D run."""
    if use_grid:
        return [-y for y in _grid(cfg.section("grids")["omega_rel"])]
    return [cfg.section("mode")["offset"]]


def run_rates(cfg: RunConfig, args):
    G = cfg.atom.Gamma
    numeric = cfg.section("flags")["numeric_rates"]
    dn = cfg.section("flags")["doppler_neglected"]
    cols = ["omega_rel", "rabi", "detuning_bar", "temperature", "lambda_plus_L", "lambda_minus_L", "lambda_minus_B",
            "kappa_q", "p0", "p0_prime", "high_T_margin"]
    if numeric:
        cols += ["lambda_plus_numeric", "lambda_minus_numeric"]
    rows = []
    for off in _offsets(cfg, args.grid):
        mode = cfg.mode_at(off)
        rs = rates.assemble_rates(cfg.atom, cfg.drive, mode, cfg.temperature, doppler_neglected=dn)
        row = dict(omega_rel=-off, rabi=cfg.drive.Omega / G, detuning_bar=cfg.drive.detuning_bar / G,
                   temperature=cfg.temperature, **{k: getattr(rs, k) for k in cols[4:11]})
        if numeric:
            row["lambda_plus_numeric"] = rates.lambda_plus_numeric(cfg.atom, cfg.drive, mode, cfg.temperature)
            row["lambda_minus_numeric"] = rates.lambda_minus_numeric(cfg.atom, cfg.drive, mode, cfg.temperature)
        rows.append(row)
    return cols, rows, {"rows": len(rows)}


def _mode_kwargs(cfg):
    m = cfg.section("mode")
    G = cfg.atom.Gamma
    return dict(theta=m["theta"], q=m["q_over_kL"] * cfg.drive.k_L, alpha_q=m["alpha"] * G, kappa_q=m["kappa"] * G)


def run_equilibrium(cfg: RunConfig, args):
    G = cfg.atom.Gamma
    dn = cfg.section("flags")["doppler_neglected"]
    offsets = [o * G for o in _offsets(cfg, True)]
    pts = equilibrium.equilibrium_curve(cfg.atom, cfg.drive, offsets, cfg.temperature, doppler_neglected=dn,
                                        **_mode_kwargs(cfg))
    beta = 1.0 / (KB * cfg.temperature)
    cols = ["omega_rel", "nbar", "beta_eff_over_beta", "t_eff", "t_o", "t_eff_ratio", "delta_mu", "regime"]
    cols += MARGIN_COLUMNS
    rows = []
    for p in pts:
        row = dict(omega_rel=-p.omega_offset / G, nbar=p.nbar, beta_eff_over_beta=p.beta_eff / beta, t_eff=p.T_eff,
                   t_o=p.T_o, t_eff_ratio=p.T_eff / p.T_o, delta_mu=p.delta_mu / (HBAR * G), regime=p.regime)
        row.update({f"margin_{k}": p.margins[k] for k in equilibrium.MARGIN_NAMES})
        rows.append(row)
    oc = pts[0].omega_c if pts else math.nan
    return cols, rows, {"omega_c_over_detuning": oc / abs(cfg.drive.detuning_bar), "omega_c_gamma": oc / G}


def run_phase_diagram(cfg: RunConfig, args):
    G = cfg.atom.Gamma
    grids = cfg.section("grids")
    D = abs(cfg.drive.detuning_bar)
    rabi = _grid(grids["rabi_over_detuning"]) * D
    rel = _grid(grids["omega_rel"]) * G
    t0 = time.time()
    pd = equilibrium.phase_diagram(cfg.atom, cfg.drive, rabi, rel, cfg.temperature,
                                   doppler_neglected=cfg.section("flags")["doppler_neglected"],
                                   threads=cfg.resolved["threads"], **_mode_kwargs(cfg))
    ratio = pd.t_eff_ratio()
    cols = ["omega_rel", "rabi", "nbar", "t_eff_ratio", "regime"] + MARGIN_COLUMNS
    rows = []
    for i, Om in enumerate(pd.rabi):
        for j, y in enumerate(pd.omega_rel):
            c = pd.cells[i][j]
            row = dict(omega_rel=y / G, rabi=Om / D, nbar=c.nbar, t_eff_ratio=ratio[i, j], regime=c.regime)
            row.update({f"margin_{k}": c.margins.get(k, math.nan) for k in equilibrium.MARGIN_NAMES})
            rows.append(row)
    counts = {k: int(sum(r["regime"] == k for r in rows)) for k in equilibrium.REGIMES}
    print(f"photontherm: phase-diagram {len(pd.rabi)}x{len(pd.omega_rel)} in {time.time() - t0:.1f} s",
          file=sys.stderr)
    return cols, rows, {"omega_c_over_detuning": pd.omega_c / D, "regime_counts": counts}


def _trajectory_task(args):
    cfg_dict, idx, p = args
    cfg = parse_config(cfg_dict)
    sim = cfg.section("simulation")
    rec = jump_mc.sample_trajectory(cfg.atom, cfg.drive, cfg.mode, cfg.temperature, sim["n_q"], sim["duration_s"],
                                    sim["seed"], p=p, index=idx, max_jumps=sim["jumps"])
    rate, se = rec.rate("emit_system")
    return dict(index=idx, seed=sim["seed"], n_jumps=rec.n_jumps, **{f"count_{k}": v for k, v in rec.counts.items()},
                emit_rate=rate, emit_se=se, mean_correction=rec.mean_correction)


def run_jump_mc(cfg: RunConfig, args):
    sim = cfg.section("simulation")
    if sim["kind"] == "photon-number":
        rs = rates.assemble_rates(cfg.atom, cfg.drive, cfg.mode, cfg.temperature,
                                  doppler_neglected=cfg.section("flags")["doppler_neglected"])
        lp, lm = rs.lambda_plus_L, rs.total_loss
        rec = birth_death.simulate_photon_number(lp, lm, math.inf if lp + lm > 0 else 1.0, sim["seed"],
                                                 n0=0, max_events=sim["events"])
        P = rec.probabilities
        x = lp / lm if lm > 0 else math.nan
        cols = ["n", "probability", "geometric"]
        rows = [dict(n=n, probability=P[n], geometric=(1 - x) * x**n) for n in range(len(P))]
        return cols, rows, {"mean": rec.mean, "mean_se": rec.mean_se, "analytic_mean": rec.analytic_mean(),
                            "events": rec.events, "overflow_time": rec.overflow_time,
                            "transient_gain": rec.transient_gain}
    p = None
    analytic = jump_mc.renewal_emission_rate(cfg.atom, cfg.drive, cfg.mode, cfg.temperature, sim["n_q"])
    if sim["fixed_momentum"]:
        # atom held at the resonant momentum of the emission process
        p0, _ = rates.energy_roots(cfg.atom, cfg.drive, cfg.mode)
        p = p0 * reduce(cfg.atom, cfg.drive, cfg.mode).nhat()
        analytic = jump_mc.averaged_emission_rate(cfg.atom, cfg.drive, cfg.mode, cfg.temperature, p=p,
                                                  n_q=sim["n_q"])
    tasks = [(cfg.resolved, i, p) for i in range(sim["trajectories"])]
    threads = cfg.resolved["threads"]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_trajectory_task, tasks))
    else:
        rows = [_trajectory_task(t) for t in tasks]
    for r in rows:
        r["analytic_rate"] = analytic
    cols = ["index", "seed", "n_jumps"] + [f"count_{k}" for k in jump_mc.OUTCOMES]
    cols += ["emit_rate", "emit_se", "analytic_rate", "mean_correction"]
    return cols, rows, {"analytic_rate": analytic, "fixed_momentum": sim["fixed_momentum"]}


def run_cooling_mc(cfg: RunConfig, args):
    sim = cfg.section("simulation")
    co = motion.cooling_coefficients(cfg.atom, cfg.drive)
    if not co.zeta > 0:
        raise DomainError("the drive heats (or does nothing): no stationary momentum distribution")
    dt = sim["dt_zeta"] / abs(co.zeta) if co.zeta else None
    ens = motion.langevin_simulate(co, drift_compensated=sim["drift_compensated"], n_particles=sim["particles"],
                                   dt=dt, seed=sim["seed"])
    sd = math.sqrt(co.mass * KB * co.T)
    edges = np.linspace(-5, 5, 101)
    dens, _ = np.histogram(ens.momenta / sd, bins=edges, density=True)
    mid = 0.5 * (edges[1:] + edges[:-1])
    gauss = np.exp(-mid**2 / 2) / math.sqrt(2 * math.pi)
    cols = ["p_over_sd", "density", "gaussian"]
    rows = [dict(p_over_sd=m, density=d, gaussian=g) for m, d, g in zip(mid, dens, gauss)]
    stats = motion.equilibrium_check(ens, co.T, co.mass) if ens.momenta.size >= 10_000 else {}
    return cols, rows, {"coefficients": asdict(co), "stats": stats,
                        "time_s": ens.time, "dt_s": ens.dt}


def run_validate(cfg: RunConfig, args):
    margins = equilibrium.validity_margins(cfg.atom, cfg.drive, cfg.mode, cfg.temperature)
    crit = equilibrium.delta_mu_and_critical(cfg.atom, cfg.drive, cfg.temperature, **_mode_kwargs(cfg))
    above = cfg.drive.Omega >= crit.omega_c
    feasible = equilibrium.margins_ok(margins) and above
    cols = ["check", "value", "threshold", "ok"]
    rows = [dict(check=k, value=v, threshold=equilibrium.MARGIN_THRESHOLD, ok=v < equilibrium.MARGIN_THRESHOLD)
            for k, v in margins.items()]
    rows.append(dict(check="rabi_over_critical", value=cfg.drive.Omega / crit.omega_c, threshold=1.0, ok=above))
    rows.append(dict(check="gce_feasible", value=float(feasible), threshold=1.0, ok=feasible))
    print(f"GCE-feasible={'true' if feasible else 'false'}", file=sys.stderr)
    return cols, rows, {"gce_feasible": feasible, "omega_c_over_detuning": crit.omega_c / abs(cfg.drive.detuning_bar)}


SUBCOMMANDS = {
    "rates": run_rates,
    "equilibrium": run_equilibrium,
    "phase-diagram": run_phase_diagram,
    "jump-mc": run_jump_mc,
    "cooling-mc": run_cooling_mc,
    "validate": run_validate,
}


# --------------------------------------------------------------------------
# argument handling

def build_parser():
    ap = argparse.ArgumentParser(prog="photontherm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config path, or - for stdin")
        p.add_argument("--out", help="CSV output path (sidecar <path>.meta.json); default stdout")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--preset", help="fig4, fig1d or standard")
        p.add_argument("--atom", help="atom preset name (yb-556)")
        if name in ("rates",):
            p.add_argument("--grid", action="store_true", help="one row per omega_rel grid point")
        if name == "phase-diagram":
            for axis in ("rabi", "detuning"):
                p.add_argument(f"--{axis}-min", type=float)
                p.add_argument(f"--{axis}-max", type=float)
                p.add_argument(f"--{axis}-steps", type=int)
        elif name == "equilibrium":
            p.add_argument("--detuning-min", type=float)
            p.add_argument("--detuning-max", type=float)
            p.add_argument("--detuning-steps", type=int)
    return ap


def _overrides(args):
    o = {}
    if args.preset:
        o["preset"] = args.preset
    if args.atom:
        o["atom"] = args.atom
    if args.seed is not None:
        o.setdefault("simulation", {})["seed"] = args.seed
    if args.threads is not None:
        o["threads"] = args.threads
    grids = {}
    for axis, key in (("rabi", "rabi_over_detuning"), ("detuning", "omega_rel")):
        vals = {f: getattr(args, f"{axis}_{f}", None) for f in ("min", "max", "steps")}
        if any(v is not None for v in vals.values()):
            grids[key] = {k: v for k, v in vals.items() if v is not None}
    if grids:
        o["grids"] = grids
    return o


def _load(args):
    return parse_config(args.config, _overrides(args))


def main(argv=None):
    args = build_parser().parse_args(argv)
    t0 = time.time()
    try:
        cfg = _load(args)
        cols, rows, summary = SUBCOMMANDS[args.command](cfg, args)
    except (ConfigError, DomainError, OSError) as exc:
        print(f"photontherm: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (QuadratureError, RootFindingError) as exc:
        print(f"photontherm: did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    out = args.out or cfg.section("output").get("path")
    env = {"columns": cols, "rows": rows,
           "metadata": {"subcommand": args.command, "version": __version__, "seed": cfg.seed,
                        "config": cfg.resolved, "summary": summary, "wall_time_s": time.time() - t0}}
    try:
        emit_csv(env, out)
    except OSError as exc:
        print(f"photontherm: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
