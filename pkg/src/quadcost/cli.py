"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 domain error, 4 I/O error, 5 stability-guard refusal.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import expansion as ex
from .config import RunConfig, load_config
from .merton import merton_value
from .model import ConfigError, DomainError, MarketState, merton_line_xi
from .output import render_paths_svg, render_surface_svg, write_csv, write_json
from .simulator import (
    StabilityGuardError,
    check_stability,
    path_stats,
    simulate_merton_benchmark,
    simulate_paths,
)
from .strategy import Strategy, control_corrected, control_leading
from . import verify

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4
EXIT_GUARD = 5

PATHS_HEADER = ["path_id", "t", "S", "H", "W", "h", "cost_cum", "exited"]
SURFACE_HEADER = ["s", "xi", "g0", "g1", "c_of_s", "g_approx", "g1_xi", "g2_xi"]


def _global_parser(top: bool):
    # Global flags are accepted before or after the subcommand; the copies on
    # the subcommands must not overwrite values given at the top level.
    default = None if top else argparse.SUPPRESS
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", default=default, help="JSON configuration file")
    g.add_argument("--out", default=default, help="output directory (default: current directory)")
    g.add_argument("--seed", type=int, default=default, help="override the configured seed")
    g.add_argument("--threads", type=int, default=default, help="worker threads for path simulation")
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_parser(top=False)
    parser = argparse.ArgumentParser(prog="quadcost", description=__doc__, parents=[_global_parser(top=True)],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", parents=[common], help="print expansion terms and controls at a point")
    p_eval.add_argument("--s", type=float, default=None, help="price (default: s0)")
    p_eval.add_argument("--xi", type=float, default=None, help="inventory (default: Merton line)")
    p_eval.add_argument("--w", type=float, default=None, help="wealth (default: w0)")

    p_surf = sub.add_parser("surface", parents=[common], help="expansion surface over an (s, xi) grid")
    p_surf.add_argument("--s-min", type=float, default=50.0)
    p_surf.add_argument("--s-max", type=float, default=150.0)
    p_surf.add_argument("--n-s", type=int, default=50)
    p_surf.add_argument("--xi-min", type=float, default=0.0)
    p_surf.add_argument("--xi-max", type=float, default=5.0)
    p_surf.add_argument("--n-xi", type=int, default=50)
    p_surf.add_argument("--svg", action="store_true", help="also render surface.svg")

    p_sim = sub.add_parser("simulate", parents=[common], help="simulate strategy paths")
    p_sim.add_argument("--strategy", choices=["leading", "corrected", "merton", "hold"], default="leading")
    p_sim.add_argument("--paired", action="store_true", help="also run the Merton benchmark on the same streams")
    p_sim.add_argument("--benchmark-mode", choices=["charged", "hypothetical"], default="charged")
    p_sim.add_argument("--exit-m", type=float, default=None, help="stop paths on leaving the exit domain")
    p_sim.add_argument("--override-guard", action="store_true", help="run even if the stability guard fails")
    p_sim.add_argument("--svg", action="store_true", help="also render wealth paths for path 0")

    p_ver = sub.add_parser("verify", parents=[common], help="run numerical verification suites")
    p_ver.add_argument("--suite", choices=["identities", "fd", "residual", "sandwich", "g2", "all"], default="all")
    p_ver.add_argument("--sandwich-paths", type=int, default=10_000)
    p_ver.add_argument("--exit-m", type=float, default=2e4)
    p_ver.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    p_conv = sub.add_parser("convergence", parents=[common], help="eps sweep of tracking and wealth statistics")
    p_conv.add_argument("--eps-list", default="1e-4,1e-3,5e-3,1e-2")
    p_conv.add_argument("--override-guard", action="store_true")
    p_conv.add_argument("--svg", action="store_true", help="also render wealth of path 0 for each eps")
    return parser


def _load(args) -> RunConfig:
    return load_config(args.config, seed=args.seed)


def _out_dir(args) -> Path:
    return Path(args.out or ".")


def cmd_eval(args) -> int:
    rc = _load(args)
    p = rc.model
    s = rc.sim.s0 if args.s is None else args.s
    xi = merton_line_xi(p, s) if args.xi is None else args.xi
    w = rc.sim.w0 if args.w is None else args.w
    state = MarketState(w=w, s=s, xi=xi)
    terms = ex.expansion_terms(p, s, xi)
    record = {
        "s": s,
        "xi": xi,
        "w": w,
        "merton_xi": merton_line_xi(p, s),
        "merton_dollars": p.merton_dollars,
        "g0": terms.g0,
        "c_of_s": terms.c_of_s,
        "g1": terms.g1,
        "g1_xi": terms.g1_xi,
        "g2_xi": terms.g2_xi,
        "g_approx": ex.g_approx(p, s, xi),
        "value_approx": ex.value_approx(p, state),
        "merton_value": merton_value(p, w),
        "control_leading": control_leading(p, s, xi),
        "control_corrected": control_corrected(p, s, xi),
        "regime": terms.regime.kind.value,
        "discriminant": terms.regime.discriminant,
        "near_line": terms.near_line,
        **rc.echo(),
    }
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def cmd_surface(args) -> int:
    rc = _load(args)
    p = rc.model
    if args.n_s < 2 or args.n_xi < 2:
        raise ConfigError("surface grid needs at least 2 points per axis")
    if not (0 < args.s_min < args.s_max) or not (args.xi_min < args.xi_max):
        raise ConfigError("surface bounds must be increasing with positive prices")
    s = np.linspace(args.s_min, args.s_max, args.n_s)
    xi = np.linspace(args.xi_min, args.xi_max, args.n_xi)
    S, XI = np.meshgrid(s, xi, indexing="ij")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ex.NearLineWarning)
        g2 = ex.g2_xi(p, S, XI, "ratio")
    g1v = ex.g1(p, S, XI)
    cols = [S, XI, np.full_like(S, ex.g0(p)), g1v, np.broadcast_to(ex.c_of_s(p, S), S.shape),
            ex.g_approx(p, S, XI), ex.g1_xi(p, S, XI), g2]
    rows = zip(*(np.ravel(c) for c in cols))
    out = _out_dir(args)
    write_csv(out / "surface.csv", SURFACE_HEADER, rows)
    rc.options.update(s_min=args.s_min, s_max=args.s_max, n_s=args.n_s, xi_min=args.xi_min,
                      xi_max=args.xi_max, n_xi=args.n_xi)
    write_json(out / "surface.json", rc.echo())
    if args.svg:
        render_surface_svg(out / "surface.svg", S, XI, ex.g_approx(p, S, XI), p.merton_dollars)
    return EXIT_OK


def _path_rows(paths):
    for path in paths:
        n = len(path.times)
        for k in range(n):
            exited = path.exited_at is not None and k == n - 1
            yield (path.path_index, path.times[k], path.S[k], path.H[k], path.W[k], path.h_applied[k],
                   path.cost_cum[k], exited)


def _summarize(paths, p):
    good = [pa for pa in paths if not pa.degenerate]
    stats = [path_stats(pa, p) for pa in good]
    return {
        "n_paths": len(paths),
        "n_degenerate": len(paths) - len(good),
        "n_negative_inventory": sum(pa.negative_inventory_flag for pa in paths),
        "n_exited": sum(pa.exited_at is not None for pa in paths),
        "mean_terminal_wealth": float(np.mean([s["terminal_wealth"] for s in stats])) if stats else None,
        "median_mad": float(np.median([s["mad"] for s in stats])) if stats else None,
        "paths": stats,
    }


def cmd_simulate(args) -> int:
    rc = _load(args)
    p = rc.model
    sim = rc.sim.replace(exit_M=args.exit_m, allow_unstable=args.override_guard)
    guard = check_stability(p, sim)
    threads = args.threads or 1
    strategy = Strategy.from_name(args.strategy, p)
    paths = simulate_paths(p, strategy, sim, threads=threads)
    out = _out_dir(args)
    write_csv(out / "paths.csv", PATHS_HEADER, _path_rows(paths))
    rc.options.update(strategy=args.strategy, paired=args.paired, exit_M=args.exit_m,
                      benchmark_mode=args.benchmark_mode, override_guard=args.override_guard)
    summary = {**rc.echo(), "stability_guard": guard, "strategy": _summarize(paths, p)}
    if args.paired:
        bench = simulate_merton_benchmark(p, sim, mode=args.benchmark_mode, threads=threads)
        write_csv(out / "paths_benchmark.csv", PATHS_HEADER, _path_rows(bench))
        summary["benchmark"] = _summarize(bench, p)
        diffs = [a.W[-1] - b.W[-1] for a, b in zip(paths, bench) if not (a.degenerate or b.degenerate)]
        summary["paired_terminal_wealth_difference"] = {
            "mean": float(np.mean(diffs)),
            "std_error": float(np.std(diffs, ddof=1) / math.sqrt(len(diffs))) if len(diffs) > 1 else None,
        }
    write_json(out / "summary.json", summary)
    if args.svg and paths:
        series = {f"{args.strategy} wealth": paths[0].W}
        if args.paired:
            series["Merton benchmark wealth"] = bench[0].W
        render_paths_svg(out / "wealth.svg", paths[0].times, series)
    return EXIT_OK


def cmd_verify(args) -> int:
    rc = _load(args)
    p = rc.model
    suites = ["identities", "fd", "residual", "sandwich"] if args.suite == "all" else [args.suite]
    reports = []
    if "sandwich" in suites:
        # refuse before any other work if the guard fails for any eps
        for e in (1e-2, 1e-3, 1e-4):
            pe = p.replace(eps=e)
            check_stability(pe, rc.sim)
    for name in suites:
        if name == "identities":
            reports.append(verify.identity_suite(p, g1_shift=1e-3 if args.inject_fault else 0.0))
        elif name == "fd":
            reports.append(verify.fd_oracle(p))
        elif name == "residual":
            reports.append(verify.residual_scaling(p)[1])
        elif name == "g2":
            reports.append(verify.g2_cross_validation(p))
        else:
            reports.append(
                verify.sandwich_check(p, exit_M=args.exit_m, n_paths=args.sandwich_paths, dt=rc.sim.dt,
                                      s0=rc.sim.s0, seed=rc.sim.seed, threads=args.threads or 1)
            )
    rc.options.update(suite=args.suite, inject_fault=args.inject_fault)
    passed = all(r.passed for r in reports)
    doc = {**rc.echo(), "passed": passed, "reports": [r.to_dict() for r in reports]}
    write_json(_out_dir(args) / "report.json", doc)
    for r in reports:
        for c in r.checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {r.suite}.{c.name} worst={c.worst:.3g} threshold={c.threshold:.3g}")
    return EXIT_OK if passed else EXIT_VERIFY


def _nanmedian(values) -> float:
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    return float(np.median(values)) if values.size else float("nan")


def cmd_convergence(args) -> int:
    rc = _load(args)
    try:
        eps_list = [float(x) for x in args.eps_list.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad --eps-list {args.eps_list!r}") from None
    threads = args.threads or 1
    sim = rc.sim.replace(allow_unstable=args.override_guard)
    for e in eps_list:
        check_stability(rc.model.replace(eps=e), sim)
    rows = []
    svg_series = {}
    for e in eps_list:
        pe = rc.model.replace(eps=e)
        aim = simulate_paths(pe, Strategy.from_name("leading", pe), sim, threads=threads)
        bench = simulate_merton_benchmark(pe, sim, threads=threads)
        a_sum = _summarize(aim, pe)
        b_sum = _summarize(bench, pe)
        stats = a_sum["paths"]
        rows.append((
            e,
            a_sum["median_mad"],
            _nanmedian([s["autocorr_time"] for s in stats]),
            a_sum["mean_terminal_wealth"],
            b_sum["mean_terminal_wealth"],
            float(np.mean([s["total_cost"] for s in stats])),
            float(np.median([s["wealth_vol"] for s in stats])),
            a_sum["n_paths"],
            a_sum["n_negative_inventory"],
        ))
        svg_series[f"eps={e:g}"] = aim[0].W
        svg_series.setdefault("Merton (eps=%g)" % e, bench[0].W)
    out = _out_dir(args)
    header = ["eps", "median_mad", "median_autocorr_time", "mean_terminal_wealth",
              "mean_benchmark_terminal_wealth", "mean_total_cost", "median_wealth_vol", "n_paths",
              "n_negative_inventory"]
    write_csv(out / "convergence.csv", header, rows)
    rc.options.update(eps_list=eps_list, override_guard=args.override_guard)
    write_json(out / "convergence.json", rc.echo())
    if args.svg:
        times = sim.dt * np.arange(sim.n_steps + 1)
        render_paths_svg(out / "convergence.svg", times, svg_series, title="path 0 wealth by eps")
    return EXIT_OK


COMMANDS = {
    "eval": cmd_eval,
    "surface": cmd_surface,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StabilityGuardError as exc:
        print(f"stability guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
