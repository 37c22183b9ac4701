"""Command-line front end: scenario runs, parameter sweeps, and accuracy reports."""

from __future__ import annotations

import argparse
import sys

from .config import (
    ESTIMATORS,
    GAMMA_AUTO,
    SCHEME_CHOICES,
    SCHEMES,
    ScenarioConfig,
    load_config,
)
from .fim import assemble_fim, crb_trace
from .sensing import DurationInfeasibleError, minimal_duration
from .simulate import (
    SweepSpec,
    auto_gamma,
    default_gamma_grid,
    draw_truth_targets,
    run_monte_carlo,
    stage_one_covariance,
    summary_rows,
    sweep,
    write_csv,
)

DEFAULT_POWER_DBM = (20.0, 25.0, 30.0, 35.0)
DEFAULT_ANTENNAS = (4, 8, 12, 16)

_PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Plot mean harvested power per scheme from a sweep CSV (standalone)."""
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv_name!r}
series = defaultdict(list)
param = "value"
with open(path, newline="") as fh:
    for row in csv.DictReader(fh):
        param = row["sweep_param"]
        series[row["scheme"]].append(
            (float(row["sweep_value"]), float(row["min_avg_harvested_uw_mean"]))
        )
fig, ax = plt.subplots(figsize=(6.0, 4.0))
for scheme in sorted(series):
    pts = sorted(series[scheme])
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=scheme)
if param == "gamma":
    ax.set_xscale("log")
ax.set_xlabel(param)
ax.set_ylabel("min average harvested power (uW)")
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
out = path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print(out)
'''


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="YAML scenario file")
    parser.add_argument("--seed", type=int, metavar="U64", help="master seed")
    parser.add_argument("--trials", type=int, metavar="N", help="Monte-Carlo trials")
    parser.add_argument("--scheme", choices=SCHEME_CHOICES)
    parser.add_argument("--estimator", choices=ESTIMATORS)
    parser.add_argument(
        "--gamma", metavar="G", help='accuracy target: positive float or "auto"'
    )
    parser.add_argument("--out", metavar="PATH", help="output CSV path")
    parser.add_argument(
        "--emit-plot",
        action="store_true",
        help="also write a standalone plotting script next to the CSV",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensebeam",
        description="Two-stage sensing-assisted energy beamforming simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single-point Monte-Carlo run")
    _add_common(p_run)

    for name, helptext, valtype in (
        ("sweep-gamma", "sweep the accuracy target", float),
        ("sweep-power", "sweep transmit power (dBm)", float),
        ("sweep-antennas", "sweep array size (N_t = N_r)", int),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        p.add_argument(
            "--values", nargs="+", type=valtype, metavar="V", help="swept values"
        )

    p_auto = sub.add_parser("auto-gamma", help="grid-optimize the accuracy target")
    _add_common(p_auto)
    p_auto.add_argument(
        "--values", nargs="+", type=float, metavar="V", help="candidate grid"
    )

    p_crb = sub.add_parser("crb-eval", help="report estimation accuracy bounds")
    _add_common(p_crb)
    return parser


def _build_config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    for key in ("seed", "trials", "scheme", "estimator"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "gamma", None) is not None:
        overrides["gamma"] = (
            GAMMA_AUTO if args.gamma == GAMMA_AUTO else float(args.gamma)
        )
    return cfg.with_overrides(**overrides) if overrides else cfg


def _emit_plot(csv_path: str) -> str:
    script_path = csv_path.rsplit(".", 1)[0] + "_plot.py"
    csv_name = csv_path.rsplit("/", 1)[-1]
    with open(script_path, "w", encoding="utf-8") as fh:
        fh.write(_PLOT_TEMPLATE.format(csv_name=csv_name))
    return script_path


def _finish_csv(rows: list, out: str, emit_plot: bool) -> None:
    write_csv(rows, out)
    print(f"wrote {out}")
    if emit_plot:
        print(f"wrote {_emit_plot(out)}")


def _print_rows(rows: list) -> None:
    cols = (
        "sweep_value",
        "scheme",
        "tau_star",
        "min_avg_harvested_uw_mean",
        "min_avg_harvested_uw_std",
        "infeasible_count",
    )
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    print("  ".join(c.ljust(widths[c]) for c in cols))
    for row in rows:
        print("  ".join(str(row[c]).ljust(widths[c]) for c in cols))


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    summary = run_monte_carlo(cfg)
    if summary.gamma_used:
        print(f"gamma: {summary.gamma_used:.6g}")
    for scheme, stats in summary.per_scheme.items():
        print(
            f"{scheme:<11} mean {stats.mean_w * 1e6:10.4f} uW   "
            f"std {stats.std_w * 1e6:9.4f} uW   tau {stats.tau:4d}   "
            f"infeasible {stats.infeasible_count}/{stats.trials + stats.infeasible_count}"
        )
    if args.out:
        _finish_csv(summary_rows(summary), args.out, args.emit_plot)
    elif args.emit_plot:
        print("--emit-plot requires --out", file=sys.stderr)
        return 2
    return 0


def cmd_sweep(args: argparse.Namespace, param: str) -> int:
    cfg = _build_config(args)
    if args.values:
        values = tuple(args.values)
    elif param == "gamma":
        values = default_gamma_grid(cfg)
    elif param == "p_max_dbm":
        values = DEFAULT_POWER_DBM
    else:
        values = DEFAULT_ANTENNAS
    schemes = SCHEMES if cfg.scheme == "all" else (cfg.scheme,)
    rows = sweep(cfg, SweepSpec(param=param, values=values, schemes=schemes))
    _print_rows(rows)
    default_name = {
        "gamma": "sweep-gamma.csv",
        "p_max_dbm": "sweep-power.csv",
        "n_antennas": "sweep-antennas.csv",
    }[param]
    _finish_csv(rows, args.out or default_name, args.emit_plot)
    return 0


def cmd_auto_gamma(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    grid = tuple(args.values) if args.values else default_gamma_grid(cfg)
    gamma = auto_gamma(cfg, grid)
    cov = stage_one_covariance(cfg)
    tau = minimal_duration(cov.crb_unit, gamma, cfg.geometry, cfg.horizon_symbols)
    print(f"gamma_star: {gamma:.6g}")
    print(f"crb_unit: {cov.crb_unit:.6g}")
    print(f"tau_star: {tau}")
    print(f"crb_at_tau: {cov.crb_unit / tau:.6g}")
    return 0


def cmd_crb_eval(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    cov = stage_one_covariance(cfg)
    print(f"crb_unit_priors: {cov.crb_unit:.6g}")
    if cfg.gamma != GAMMA_AUTO:
        tau = minimal_duration(
            cov.crb_unit, float(cfg.gamma), cfg.geometry, cfg.horizon_symbols
        )
        print(f"tau_star: {tau}")
        print(f"crb_at_tau: {cov.crb_unit / tau:.6g}")
    else:
        tau = cfg.n_tx
        print('gamma: auto (run the auto-gamma subcommand to optimize)')
    targets = draw_truth_targets(cfg, trial=0)
    fim = assemble_fim(targets, cov.s_x, tau, cfg.noise_var)
    print(f"crb_truth_draw_tau_{tau}: {crb_trace(fim):.6g}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "sweep-gamma": lambda a: cmd_sweep(a, "gamma"),
        "sweep-power": lambda a: cmd_sweep(a, "p_max_dbm"),
        "sweep-antennas": lambda a: cmd_sweep(a, "n_antennas"),
        "auto-gamma": cmd_auto_gamma,
        "crb-eval": cmd_crb_eval,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, DurationInfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
