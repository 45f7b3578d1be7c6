"""Command-line front end.

    lrqsim run    --scenario FILE --out DIR
    lrqsim bounds --params FILE
    lrqsim sweep  --scenario FILE --seeds N|a,b,c --out DIR

Exit codes: 0 success (warnings included), 1 usage/parse error,
2 bound violation. Output is byte-stable for fixed inputs; worker count for
sweeps comes from the LRQSIM_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import bounds as B
from .model import ArrivalCurve
from .netsim import build_network, generate_sources, run
from .rational import format_rational, rational
from .scenario import ScenarioError, parse_scenario_file
from .service import GRParams
from .trace_io import serialize_packets
from .verify import verdict_for_run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _run_scenario(scenario_file: str, seed_offset: int = 0):
    scenario_id, approach, topo, horizon = parse_scenario_file(
        scenario_file, seed_offset=seed_offset
    )
    network = build_network(topo, approach)
    sources = generate_sources(topo)
    report, log = run(network, sources, horizon=horizon)
    verdict = verdict_for_run(network, report, scenario_id)
    return network, sources, report, log, verdict


def cmd_run(args) -> int:
    try:
        network, sources, report, log, verdict = _run_scenario(args.scenario)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    _write(out / "event.log", "\n".join(log) + "\n")
    _write(out / "measurements.txt", report.as_text())
    _write(out / "verdict.txt", verdict.as_text())
    traces = []
    for fid in sorted(sources):
        traces.append(f"## flow {fid}")
        traces.append(serialize_packets(sources[fid]).rstrip("\n"))
    _write(out / "sources.txt", "\n".join(traces) + "\n")
    for warning in network.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(verdict.as_text(), end="")
    if not verdict.all_pass:
        print("bound violation detected", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _flow_params(entries) -> list[B.FlowParams]:
    return [
        B.FlowParams(
            sigma=rational(e.get("sigma", 0)),
            rho=rational(e.get("rho", 0)),
            rate=rational(e.get("rate", 1)),
            l_min=rational(e.get("l_min", 0)),
            l_max=rational(e.get("l_max", 0)),
        )
        for e in entries
    ]


def _req_rat(req: dict, *names, default=None):
    for name in names:
        if name in req:
            return rational(req[name])
    if default is None:
        raise KeyError(names[0])
    return rational(default)


def _eval_bound_request(req: dict) -> list[B.BoundReport]:
    formula = req.get("formula")
    if formula in ("gr-delay", "gr-backlog"):
        curve = ArrivalCurve.affine(_req_rat(req, "rho"), _req_rat(req, "sigma"))
        gr = GRParams(_req_rat(req, "rate", "r"), _req_rat(req, "error", "e"))
        if formula == "gr-delay":
            return [B.gr_delay_bound(curve, gr)]
        return [B.gr_backlog_bound(curve, gr, _req_rat(req, "l_max"))]
    if formula == "backlog-from-delay":
        curve = ArrivalCurve.affine(_req_rat(req, "rho"), _req_rat(req, "sigma"))
        return [B.backlog_from_delay(curve, _req_rat(req, "T", "delay"))]
    if formula == "ilrq-minrate":
        return list(
            B.interleaved_minrate_bounds(_flow_params(req["flows"]), _req_rat(req, "l_max"))
        )
    if formula == "ilrq-weighted":
        return [B.interleaved_weighted_delay(_flow_params(req["flows"]))]
    if formula == "pflrq":
        return list(
            B.pflrq_bounds(
                _req_rat(req, "sigma"),
                _req_rat(req, "rho"),
                _req_rat(req, "rate"),
                _req_rat(req, "l_min"),
            )
        )
    if formula == "shaped-agg":
        out = B.shaped_aggregation_bounds(
            _flow_params(req["flows"]),
            GRParams(_req_rat(req, "rate", "r"), _req_rat(req, "error", "e")),
            _req_rat(req, "l_max"),
        )
        return list(out.values())
    if formula == "sp":
        rho_f = rational(req["rho_f"]) if "rho_f" in req else None
        return list(
            B.sp_bounds(
                _req_rat(req, "capacity", "c"),
                _req_rat(req, "sigma_f"),
                _req_rat(req, "rho_u"),
                _req_rat(req, "sigma_u"),
                _req_rat(req, "l_l_max"),
                _req_rat(req, "l_f_min"),
                _req_rat(req, "l_max"),
                rho_f=rho_f,
            )
        )
    if formula == "compare":
        nodes = [
            B.ApproachNode(
                rate=rational(n["rate"]),
                error=rational(n.get("error", 0)),
                flow_count=int(n["flows"]),
                agg_count=int(n["aggs"]),
                link_count=int(n["links"]),
            )
            for n in req["nodes"]
        ]
        rows = B.compare_approaches(
            nodes,
            _req_rat(req, "sigma"),
            [rational(p) for p in req.get("prop", [])],
            int(req["ingress_agg_count"]),
            int(req["ingress_flow_count"]),
            _req_rat(req, "ingress_rate"),
        )
        return [
            B.BoundReport("delay", f"compare:{app}:{term}", value)
            for app, terms in rows.items()
            for term, value in terms.items()
        ]
    raise KeyError(f"unknown formula id {formula!r}")


def cmd_bounds(args) -> int:
    try:
        data = tomllib.loads(Path(args.params).read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print("formula\tkind\tvalue\tcondition")
    requests = data.get("bounds", [])
    for req in requests:
        try:
            reports = _eval_bound_request(req)
        except KeyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        for rep in reports:
            print(rep.describe())
    return EXIT_OK


def _parse_seeds(spec: str) -> list[int]:
    if "," in spec:
        return [int(s) for s in spec.split(",") if s.strip()]
    n = int(spec)
    return list(range(n))


def cmd_sweep(args) -> int:
    try:
        seeds = _parse_seeds(args.seeds)
    except ValueError:
        print("error: --seeds must be an int or a comma list", file=sys.stderr)
        return EXIT_USAGE

    def one(seed: int):
        _, _, report, _, verdict = _run_scenario(args.scenario, seed_offset=seed)
        return seed, report, verdict

    workers = int(os.environ.get("LRQSIM_WORKERS", "1"))
    try:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(one, seeds))
        else:
            results = [one(s) for s in seeds]
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    max_slack = None
    violation = None
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["seed", "flow", "formula", "bound", "measured", "status", "slack"]
        )
        for seed, report, verdict in results:
            for row in verdict.rows:
                writer.writerow(
                    [
                        seed,
                        row.flow_id,
                        row.formula,
                        "" if row.bound is None else str(row.bound),
                        str(row.measured),
                        row.status,
                        "" if row.slack is None else str(row.slack),
                    ]
                )
                if row.status == "fail" and violation is None:
                    violation = (seed, row)
                if row.slack is not None and (
                    max_slack is None or row.slack > max_slack
                ):
                    max_slack = row.slack
    summary = (
        f"runs: {len(results)}\n"
        f"max slack: {'-' if max_slack is None else format_rational(max_slack)}\n"
        f"violations: {'none' if violation is None else violation[0]}\n"
    )
    _write(out / "summary.txt", summary)
    print(summary, end="")
    if violation is not None:
        seed, row = violation
        print(
            f"bound violation at seed {seed}: flow {row.flow_id} formula "
            f"{row.formula}; rerun with seed offset {seed} to reproduce",
            file=sys.stderr,
        )
        return EXIT_VIOLATION
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lrqsim",
        description="LRQ shaping simulator and latency bound verifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and verify bounds")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out", required=True)
    p_run.set_defaults(func=cmd_run)

    p_bounds = sub.add_parser("bounds", help="evaluate closed-form bounds")
    p_bounds.add_argument("--params", required=True)
    p_bounds.set_defaults(func=cmd_bounds)

    p_sweep = sub.add_parser("sweep", help="run a scenario over many seeds")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--seeds", required=True, help="count or comma list")
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
