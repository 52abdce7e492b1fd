"""Command-line entry point: generate, ingest, calibrate, run, compare."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import date
from pathlib import Path

from . import __version__
from .calibrate import bridge_k, comparison_window, grid, tune_ba, tune_er
from .graph import write_edgelist
from .ingest import IngestSpec, build_contact_graph, graph_stats, parse_log, parse_timestamp, write_stats
from .netgen import GenSpec
from .ode import SeirParams, fit_beta, integrate_seir, read_case_series
from .runner import atomic_write, compare_runs, read_curves, run_scenario, write_outputs
from .scenario import load_scenario, scenario_from_dict

log = logging.getLogger("contactseir")


def cmd_generate(args) -> int:
    spec = GenSpec(family=args.family, n=args.n, k=args.k, p_er=args.p_er,
                   m_ba=args.m_ba, seed=args.seed)
    g = spec.build()
    write_edgelist(g, args.out, header=f"contactseir {__version__} generate {spec}")
    stats = graph_stats(g, args.path_samples, args.seed)
    write_stats(stats, f"{args.out}.stats.json")
    print(json.dumps(stats, sort_keys=True))
    return 0


def _timestamp(value: str) -> float:
    return parse_timestamp(value, epoch=value.strip().lstrip("-").isdigit())


def cmd_ingest(args) -> int:
    records, skipped = parse_log(args.log)
    spec = IngestSpec(_timestamp(args.window_start), _timestamp(args.window_end),
                      args.target_nodes, args.seed, args.slack_seconds)
    g = build_contact_graph(records, spec)
    write_edgelist(g, args.out, header=f"contactseir {__version__} ingest {args.log}")
    stats = graph_stats(g, args.path_samples, args.seed)
    stats.update(records=len(records), malformed_rows=skipped)
    write_stats(stats, f"{args.out}.stats.json")
    node_map = "node,user_id\n" + "".join(f"{i},{u}\n" for i, u in enumerate(g.original_ids))
    atomic_write(Path(f"{args.out}.nodes.csv"), node_map)
    print(json.dumps(stats, sort_keys=True))
    return 0


def cmd_calibrate(args) -> int:
    cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    sigma = cfg.get("sigma", 1 / 5)
    gamma = cfg.get("gamma", 1 / 14)
    n = int(cfg.get("n", 17800))
    init = tuple(cfg.get("initial", (n - 4, 3, 1, 0)))
    seeds = int(args.seeds if args.seeds is not None else cfg.get("seeds", 10))
    graph_seed = int(cfg.get("graph_seed", 0))
    report: dict = {"version": __version__, "n": n, "sigma": sigma, "gamma": gamma,
                    "initial": list(init), "seeds": seeds}

    beta = args.beta if args.beta is not None else cfg.get("beta")
    cases = args.cases or cfg.get("cases")
    if cases:
        fit_cfg = cfg.get("fit", {})
        series = read_case_series(cases)
        end = fit_cfg.get("end_date")
        series = series.window(fit_cfg.get("threshold", 100),
                               date.fromisoformat(end) if end else None)
        beta, betas, errors = fit_beta(series, sigma, gamma, n, init,
                                       tuple(fit_cfg.get("grid", (0.5, 1.0, 0.01))),
                                       cumulative=args.fit_cumulative or fit_cfg.get("cumulative", False))
        report["beta_fit"] = {"window_start": series.start.isoformat(), "days": len(series),
                              "grid": [{"value": float(b), "mse": float(e)} for b, e in zip(betas, errors)],
                              "best": beta}
    if beta is None:
        raise ValueError("calibrate needs beta (config or --beta) or a case series (--cases)")
    report["beta"] = beta

    horizon = int(cfg.get("days", 200))
    reference = integrate_seir(SeirParams(beta, sigma, gamma, n), init, horizon)
    window = cfg.get("window_day", comparison_window(reference))
    report["window_day"] = window

    k_lo, k_hi = cfg.get("k_range", (18, 23))
    bridge = bridge_k(beta, sigma, gamma, n, init, range(k_lo, k_hi + 1), seeds, reference,
                      window, graph_seed, args.threads)
    report["bridge"] = {"k_star": bridge.k_star, "phi_star": bridge.phi_star,
                        **bridge.fit.as_dict()}
    phi = bridge.phi_star
    if not args.skip_tuning:
        m_lo, m_hi = cfg.get("m_range", (5, 15))
        ba = tune_ba(phi, sigma, gamma, n, init, range(m_lo, m_hi + 1), seeds, reference,
                     window, graph_seed, args.threads)
        p_lo, p_hi, p_step = cfg.get("p_range", (0.0013, 0.0015, 0.00005))
        er = tune_er(phi, sigma, gamma, n, init, grid(p_lo, p_hi, p_step), seeds, reference,
                     window, graph_seed, args.threads)
        report["ba"] = ba.as_dict()
        report["er"] = er.as_dict()

    atomic_write(Path(args.out), json.dumps(report, indent=2) + "\n")
    print(json.dumps({k: report[k] for k in ("beta", "window_day")} |
                     {"k_star": bridge.k_star, "phi_star": round(bridge.phi_star, 6)} |
                     ({"m_ba": report["ba"]["best"], "p_er": report["er"]["best"]} if "ba" in report else {})))
    return 0


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    overrides = {}
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        scenario = scenario_from_dict(scenario.raw | overrides, base_dir=scenario.base_dir)
    curves, stats = run_scenario(scenario, threads=args.threads)
    write_outputs(args.out, curves, stats, scenario.replicates, scenario.digest())
    print(json.dumps({"peak_infected": round(stats.peak_infected, 4), "peak_day": stats.peak_day,
                      "final_attack_rate": round(stats.final_attack_rate, 6),
                      "out": str(args.out)}))
    return 0


def cmd_compare(args) -> int:
    a = read_curves(Path(args.a) / "curves.csv" if Path(args.a).is_dir() else args.a)
    b = read_curves(Path(args.b) / "curves.csv" if Path(args.b).is_dir() else args.b)
    report = compare_runs(a, b)
    if args.out:
        atomic_write(Path(args.out), report.to_csv())
    print(json.dumps({"final_attack_rate_diff": round(report.attack_rate_diff, 6),
                      "max_cum_infected_diff": round(float(abs(report.cum_diff).max()), 4)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contactseir", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic contact graph as an edge list")
    p.add_argument("--family", required=True, choices=["regular", "er", "ba"])
    p.add_argument("--n", type=int, default=17800)
    p.add_argument("--k", type=int, help="degree (regular)")
    p.add_argument("--p-er", type=float, help="edge probability (er)")
    p.add_argument("--m-ba", type=int, help="edges per arriving node (ba)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--path-samples", type=int, default=64, help="BFS sources for the path-length estimate")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="build a contact graph from a co-location log")
    p.add_argument("--log", required=True, help="CSV: connection_id,user_id,hub_id,ts_in,ts_out")
    p.add_argument("--window-start", required=True, help="ISO-8601 or epoch seconds")
    p.add_argument("--window-end", required=True, help="ISO-8601 or epoch seconds")
    p.add_argument("--target-nodes", type=int, default=17800)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slack-seconds", type=float, default=0.0)
    p.add_argument("--path-samples", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("calibrate", help="fit beta, bridge to k* and phi*, tune BA/ER parameters")
    p.add_argument("--config", help="JSON with n, sigma, gamma, initial, ranges, seeds, ...")
    p.add_argument("--beta", type=float, help="skip the case-series fit and use this beta")
    p.add_argument("--cases", help="CSV date,infected to fit beta against")
    p.add_argument("--fit-cumulative", action="store_true", help="treat the case series as cumulative")
    p.add_argument("--seeds", type=int, help="replicates per candidate")
    p.add_argument("--skip-tuning", action="store_true", help="stop after the k* bridge")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="report file (JSON)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("run", help="run a scenario and write curves.csv and summary.csv")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="difference of cumulative infections between two runs")
    p.add_argument("a", help="run directory or curves.csv")
    p.add_argument("b", help="run directory or curves.csv")
    p.add_argument("--out", help="write the per-day report CSV here")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"contactseir {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
