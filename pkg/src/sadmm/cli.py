"""Experiment command line: generate, solve, sweep, compare, doa, audit.

Each command writes delimited data files plus rendered figures into the
output directory.  Configuration comes from flags, optionally layered on
top of a flat ``key = value`` config file; flags win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import plots
from .diagnostics import (
    TraceRecord,
    audit_descent,
    audit_rate_bounds,
    stationarity_gap,
    zeta_constants,
)
from .problems import (
    DoaSpec,
    SparseRecoverySpec,
    doa_grid,
    doa_spectrum,
    gen_doa,
    gen_sparse_recovery,
    load_instance,
    save_instance,
)
from .solver import SolverConfig, compliant_beta, solve

TRACE_COLUMNS = TraceRecord.COLUMNS

_REG_ALIASES = {"lhalf": "l_half", "l_half": "l_half", "l1": "l_one", "l_one": "l_one"}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_trace(path: Path, trace) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in trace:
            fh.write(",".join(_fmt(getattr(row, col)) for col in TRACE_COLUMNS) + "\n")


def write_summary(path: Path, data: dict) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def write_table(path: Path, rows: list[dict], columns) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def load_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="ascii").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, val = line.partition("=")
        else:
            key, _, val = line.partition(" ")
        key = key.strip().replace("-", "_")
        val = val.strip()
        if not key or not val:
            raise ValueError(f"malformed config line: {raw!r}")
        values[key] = val
    return values


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, help="first dual stepsize factor (default 0.65)")
    p.add_argument("--alpha", type=float, help="mixing weight (default 0.32)")
    p.add_argument("--beta0", type=float, help="initial penalty (default 0.04)")
    p.add_argument("--epsilon", type=float, help="IRE stopping tolerance (default 1e-10)")
    p.add_argument("--max-iter", type=int, help="iteration cap (default 2000)")
    p.add_argument("--adaptive-beta", choices=("on", "off"),
                   help="residual balancing of the penalty (default on)")
    p.add_argument("--fixed-beta", type=float,
                   help="use this constant penalty (sets beta0, disables adaptation)")
    p.add_argument("--gamma", type=float,
                   help="constant momentum weight in [0, 0.5); default is the adaptive schedule")


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--l", type=int, help="number of measurements (default 256)")
    p.add_argument("--m", type=int, help="signal dimension (default 768)")
    p.add_argument("--spikes", type=int, help="number of +-1 spikes (default 40)")
    p.add_argument("--noise-sigma", type=float, help="noise level (default 0.01)")
    p.add_argument("--mu-factor", type=float,
                   help="regularization weight as a fraction of ||A^T c||_inf (default 0.1)")
    p.add_argument("--regularizer", choices=sorted(_REG_ALIASES),
                   help="sparsity term (default lhalf)")
    p.add_argument("--instance", help="load a saved instance file instead of generating")
    p.add_argument("--save-instance", help="write the instance to this file for reuse")


_DEFAULTS = {
    "seed": 0, "out": "out", "no_plots": False,
    "tau": 0.65, "alpha": 0.32, "beta0": 0.04, "epsilon": 1e-10, "max_iter": 2000,
    "adaptive_beta": "on", "fixed_beta": None, "gamma": None,
    "l": 256, "m": 768, "spikes": 40, "noise_sigma": 0.01, "mu_factor": 0.1,
    "regularizer": "lhalf", "instance": None, "save_instance": None,
}

_CASTS = {
    "seed": int, "max_iter": int, "l": int, "m": int, "spikes": int,
    "tau": float, "alpha": float, "beta0": float, "epsilon": float,
    "noise_sigma": float, "mu_factor": float, "fixed_beta": float, "gamma": float,
}


def _effective(args: argparse.Namespace) -> dict:
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        for key, val in load_config(args.config).items():
            merged[key] = _CASTS[key](val) if key in _CASTS else val
    for key, val in vars(args).items():
        if val is not None and key in merged:
            merged[key] = val
    return merged


def _solver_config(opts: dict, adapt_override: bool | None = None) -> SolverConfig:
    adapt = opts["adaptive_beta"] == "on"
    beta0 = opts["beta0"]
    if opts["fixed_beta"] is not None:
        beta0 = opts["fixed_beta"]
        adapt = False
    if adapt_override is not None:
        adapt = adapt_override
    gamma_mode = "nesterov" if opts["gamma"] is None else "fixed"
    return SolverConfig(
        tau=opts["tau"], alpha=opts["alpha"], beta0=beta0,
        gamma_mode=gamma_mode,
        fixed_gamma=0.0 if opts["gamma"] is None else opts["gamma"],
        adapt_beta=adapt,
        epsilon=opts["epsilon"], max_iter=opts["max_iter"],
    )


def _make_instance(opts: dict):
    if opts.get("instance"):
        return load_instance(opts["instance"])
    spec = SparseRecoverySpec(
        l=opts["l"], m=opts["m"], spikes=opts["spikes"],
        noise_sigma=opts["noise_sigma"], mu_factor=opts["mu_factor"],
        seed=opts["seed"],
    )
    return gen_sparse_recovery(spec, regularizer=_REG_ALIASES[opts["regularizer"]])


def _outdir(opts: dict) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args: argparse.Namespace) -> int:
    opts = _effective(args)
    out = _outdir(opts)
    prob, x_orig = _make_instance(opts)
    if opts.get("save_instance"):
        save_instance(opts["save_instance"], prob, x_orig)
    cfg = _solver_config(opts)
    t0 = time.perf_counter()
    summary, trace = solve(prob, cfg, x_orig=x_orig)
    elapsed = time.perf_counter() - t0
    write_trace(out / "trace.csv", trace)
    write_summary(out / "summary.json", {
        "it": summary.iterations,
        "final_ire": summary.final_ire,
        "final_equ": summary.final_equ,
        "l2_error": summary.l2_error,
        "terminated_by": summary.terminated_by,
        "beta_final": summary.beta_final,
        "cpu_s": elapsed,
        "mu": prob.mu,
        "seed": opts["seed"],
    })
    np.savetxt(out / "solution.csv", summary.x, fmt="%.17g", header="x", comments="")
    if not opts.get("no_plots"):
        plots.save_convergence_figure(trace, out / "convergence.png")
        plots.save_recovery_figure(summary.x, x_orig, out / "recovery.png")
    err = "n/a" if summary.l2_error is None else f"{summary.l2_error:.3e}"
    print(f"solve: it={summary.iterations} ire={summary.final_ire:.3e} "
          f"equ={summary.final_equ:.3e} l2_error={err} "
          f"({summary.terminated_by}, {elapsed:.2f}s)")
    return 0


def _parse_pairs(text: str) -> list[tuple[float, float]]:
    pairs = []
    for token in text.split(","):
        tau_s, _, alpha_s = token.partition(":")
        pairs.append((float(tau_s), float(alpha_s)))
    return pairs


def cmd_sweep(args: argparse.Namespace) -> int:
    opts = _effective(args)
    out = _outdir(opts)
    pairs = _parse_pairs(args.pairs)
    if not pairs:
        print("sweep: empty (tau, alpha) grid", file=sys.stderr)
        return 1
    prob, x_orig = _make_instance(opts)
    rows = []
    for tau, alpha in pairs:
        in_sum = 0.0 < tau + alpha < 1.0
        in_strict = in_sum and tau >= 0.0 and alpha >= 0.0
        if not in_sum or (not args.allow_outside_domain and not in_strict):
            rows.append({"tau": tau, "alpha": alpha, "status": "skipped",
                         "it": 0, "cpu_s": 0.0, "final_ire": math.nan,
                         "final_equ": math.nan, "l2_error": math.nan})
            continue
        cfg = _solver_config({**opts, "tau": tau, "alpha": alpha})
        t0 = time.perf_counter()
        summary, _ = solve(prob, cfg, x_orig=x_orig)
        elapsed = time.perf_counter() - t0
        status = "converged" if summary.terminated_by == "ire" else "max_iter"
        rows.append({"tau": tau, "alpha": alpha, "status": status,
                     "it": summary.iterations, "cpu_s": elapsed,
                     "final_ire": summary.final_ire,
                     "final_equ": summary.final_equ,
                     "l2_error": math.nan if summary.l2_error is None else summary.l2_error})
    columns = ("tau", "alpha", "status", "it", "cpu_s", "final_ire", "final_equ", "l2_error")
    write_table(out / "sweep.csv", rows, columns)
    if not opts.get("no_plots"):
        plots.save_sweep_figure(rows, out / "sweep.png")
    for row in rows:
        print(f"sweep: ({row['tau']:.2f}, {row['alpha']:.2f}) {row['status']} "
              f"it={row['it']} l2_error={row['l2_error']:.3e}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    opts = _effective(args)
    out = _outdir(opts)
    sizes = [(int(t.partition(":")[0]), int(t.partition(":")[2]))
             for t in args.sizes.split(",")] if args.sizes else [(opts["l"], opts["m"])]
    seeds = ([int(s) for s in args.seeds.split(",")]
             if args.seeds else [opts["seed"]])
    rows = []
    for l, m in sizes:
        for seed in seeds:
            spec = SparseRecoverySpec(l=l, m=m, spikes=opts["spikes"],
                                      noise_sigma=opts["noise_sigma"],
                                      mu_factor=opts["mu_factor"], seed=seed)
            for reg in ("l_half", "l_one"):
                # same seed => identical data; only the sparsity term differs
                prob, x_orig = gen_sparse_recovery(spec, regularizer=reg)
                cfg = _solver_config(opts)
                t0 = time.perf_counter()
                summary, _ = solve(prob, cfg, x_orig=x_orig)
                elapsed = time.perf_counter() - t0
                rows.append({"l": l, "m": m, "seed": seed, "regularizer": reg,
                             "it": summary.iterations,
                             "final_equ": summary.final_equ,
                             "l2_error": summary.l2_error, "cpu_s": elapsed})
    columns = ("l", "m", "seed", "regularizer", "it", "final_equ", "l2_error", "cpu_s")
    write_table(out / "compare.csv", rows, columns)
    if not opts.get("no_plots"):
        plots.save_compare_figure(rows, out / "compare.png")
    for reg in ("l_half", "l_one"):
        errs = sorted(r["l2_error"] for r in rows if r["regularizer"] == reg)
        med = errs[len(errs) // 2] if len(errs) % 2 else 0.5 * (
            errs[len(errs) // 2 - 1] + errs[len(errs) // 2])
        print(f"compare: {reg} median l2_error={med:.3e} over {len(errs)} runs")
    return 0


def cmd_doa(args: argparse.Namespace) -> int:
    opts = _effective(args)
    out = _outdir(opts)
    true_deg = [float(t) for t in args.true_doas_deg.split(",")]
    spec = DoaSpec(
        sensors=args.sensors, grid_size=args.grid_size,
        true_doas=tuple(math.radians(d) for d in true_deg),
        snr_db=math.inf if args.snr_db is None else args.snr_db,
        seed=opts["seed"], mu_factor=args.mu_factor,
    )
    prob, support = gen_doa(spec)
    cfg = _solver_config(opts)
    t0 = time.perf_counter()
    summary, trace = solve(prob, cfg)
    elapsed = time.perf_counter() - t0
    grid = doa_grid(spec.grid_size)
    mags = doa_spectrum(summary.x, spec.grid_size)
    with open(out / "spectrum.csv", "w", encoding="ascii", newline="\n") as fh:
        fh.write("angle_rad,magnitude\n")
        for ang, mag in zip(grid, mags):
            fh.write(f"{ang:.17g},{mag:.17g}\n")
    peaks = np.argsort(mags)[::-1][: len(support)]
    peak_angles = [float(grid[i]) for i in peaks]
    dist = [min(abs(grid[i] - grid[j]) for j in support) for i in peaks]
    write_summary(out / "summary.json", {
        "it": summary.iterations,
        "final_ire": summary.final_ire,
        "final_equ": summary.final_equ,
        "terminated_by": summary.terminated_by,
        "cpu_s": elapsed,
        "true_support": list(support),
        "peak_indices": [int(i) for i in peaks],
        "peak_angles_rad": peak_angles,
        "peak_distance_rad": dist,
        "hit": sorted(int(i) for i in peaks) == sorted(support),
    })
    if not opts.get("no_plots"):
        plots.save_spectrum_figure(grid, mags, support, out / "spectrum.png")
        plots.save_convergence_figure(trace, out / "convergence.png")
    print(f"doa: peaks at {sorted(int(i) for i in peaks)} "
          f"(true {sorted(support)}), it={summary.iterations}, {elapsed:.2f}s")
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    opts = _effective(args)
    out = _outdir(opts)
    prob, x_orig = _make_instance(opts)
    beta = compliant_beta(prob.L_g, prob.sigma_B, opts["tau"], opts["alpha"])
    cfg = _solver_config({**opts, "fixed_beta": beta, "epsilon": 1e-30},
                         adapt_override=False)
    # start from a dual-consistent multiplier so the descent guarantee
    # applies from the very first step
    y0 = np.zeros(prob.n)
    lam0 = np.linalg.lstsq(prob.B.T, prob.g_grad(y0), rcond=None)[0]
    x0 = np.zeros(prob.m)
    summary, trace = solve(prob, cfg, x0=x0, y0=y0, lam0=lam0, x_orig=x_orig)
    gamma_max = max(row.gamma for row in trace)
    zetas = zeta_constants(gamma_max, opts["tau"], opts["alpha"], beta,
                           prob.L_g, prob.sigma_B)
    descent = audit_descent(trace, zetas, l_beta_init=summary.L_beta_init)
    rates = audit_rate_bounds(trace, zetas, prob, (x0, y0, lam0))
    gaps = stationarity_gap((summary.x, summary.y, summary.lam), prob)
    write_trace(out / "trace.csv", trace)
    write_summary(out / "audit.json", {
        "beta": beta,
        "iterations": summary.iterations,
        "zeta1_at_gamma_max": zetas.zeta1,
        "zeta2": zetas.zeta2,
        "zeta3": zetas.zeta3,
        "descent_checked": descent.checked,
        "descent_violations": descent.violations,
        "descent_worst_margin": descent.worst_margin,
        "rate_c0": rates.c0,
        "rate_x_violations": rates.x_violations,
        "rate_y_violations": rates.y_violations,
        "rate_lam_violations": rates.lam_violations,
        "stationarity_gap_x": gaps[0],
        "stationarity_gap_y": gaps[1],
        "stationarity_gap_constraint": gaps[2],
    })
    if not opts.get("no_plots"):
        plots.save_audit_figure(trace, out / "audit.png")
        plots.save_convergence_figure(trace, out / "convergence.png")
    ok = descent.passed and rates.passed
    print(f"audit: descent {'ok' if descent.passed else 'VIOLATED'} "
          f"({descent.checked} steps), rate bounds "
          f"{'ok' if rates.passed else 'VIOLATED'}, gaps=({gaps[0]:.2e}, "
          f"{gaps[1]:.2e}, {gaps[2]:.2e})")
    return 0 if ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sadmm",
        description="Accelerated symmetric ADMM experiments: sparse recovery, "
                    "parameter sweeps, regularizer comparison, DOA estimation, "
                    "and theory audits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one sparse-recovery instance")
    _add_common_args(p_solve)
    _add_solver_args(p_solve)
    _add_instance_args(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="sweep (tau, alpha) pairs on one instance")
    _add_common_args(p_sweep)
    _add_solver_args(p_sweep)
    _add_instance_args(p_sweep)
    p_sweep.add_argument("--pairs", required=True,
                         help="comma list of tau:alpha pairs, e.g. 0.65:0.32,0.3:0.32")
    p_sweep.add_argument("--allow-outside-domain", action="store_true",
                         help="also run pairs with negative stepsizes "
                              "(only 0 < tau+alpha < 1 stays enforced)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="l_half vs l_one on identical data")
    _add_common_args(p_cmp)
    _add_solver_args(p_cmp)
    _add_instance_args(p_cmp)
    p_cmp.add_argument("--sizes", help="comma list of l:m sizes, e.g. 256:768")
    p_cmp.add_argument("--seeds", help="comma list of seeds, e.g. 0,1,2,3,4")
    p_cmp.set_defaults(func=cmd_compare)

    p_doa = sub.add_parser("doa", help="gridded direction-of-arrival estimation")
    _add_common_args(p_doa)
    _add_solver_args(p_doa)
    p_doa.add_argument("--sensors", type=int, default=32, help="array size M")
    p_doa.add_argument("--grid-size", type=int, default=90, help="angle grid size L")
    p_doa.add_argument("--true-doas-deg", default="-30,45",
                       help="comma list of source angles in degrees")
    p_doa.add_argument("--snr-db", type=float, default=20.0,
                       help="sample SNR in dB (omit noise with --snr-db inf)")
    p_doa.add_argument("--mu-factor", type=float, default=0.05,
                       help="regularization fraction (default 0.05)")
    p_doa.set_defaults(func=cmd_doa)

    p_audit = sub.add_parser("audit", help="fixed-penalty run checked against "
                                           "the descent and rate guarantees")
    _add_common_args(p_audit)
    _add_solver_args(p_audit)
    _add_instance_args(p_audit)
    p_audit.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
