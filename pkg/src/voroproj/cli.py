"""Command-line front end.

Subcommands: `run` (simulate a scenario file and write artifacts),
`bench` (timing sweep), `project` (single-shot projection), and `serve`
(start the HTTP service).  With --server URL the first three become thin
HTTP clients of a running service; otherwise they call the same handler
functions in-process.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import yaml
from pydantic import TypeAdapter, ValidationError

from .errors import ScenarioError, VoroprojError
from .scenario_io import (
    ScenarioModel,
    load_scenario,
    write_collision_report,
    write_metrics_json,
    write_trace_csv,
)
from .service.models import (
    AtomModel,
    BenchRequest,
    ProjectRequest,
    SimulateRequest,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_IO = 3

_FMT = "%.9g"


def _parse_point(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ScenarioError(f"not a point: {text!r}")


def _load_atoms_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise OSError(f"cannot read atoms file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"atoms file is not valid YAML: {exc}") from exc
    if isinstance(raw, dict) and "atoms" in raw:
        raw = raw["atoms"]
    if not isinstance(raw, list):
        raise ScenarioError("atoms file must hold a list of atoms")
    try:
        return TypeAdapter(list[AtomModel]).validate_python(raw)
    except ValidationError as exc:
        raise ScenarioError(f"invalid atom description: {exc}") from exc


def _post(server, route, payload):
    import httpx

    resp = httpx.post(server.rstrip("/") + route, json=payload, timeout=600.0)
    resp.raise_for_status()
    return resp.json()


def cmd_run(args):
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.seed is not None:
        scenario = ScenarioModel.from_scenario(scenario).model_copy(
            update={"seed": args.seed}
        ).to_scenario()
    if args.epsilon is not None:
        scenario = ScenarioModel.from_scenario(scenario).model_copy(
            update={"epsilon_m": args.epsilon}
        ).to_scenario()

    req = SimulateRequest(
        scenario=ScenarioModel.from_scenario(scenario), include_trace=True
    )
    if args.server:
        data = _post(args.server, "/simulate", req.model_dump())
        metrics = data["metrics"]
        collisions = [
            (c["step"], c["agent_a"], c["agent_b"], c["distance"])
            for c in data["collisions"]
        ]
        trace_rows = data["trace"]
    else:
        from .service.app import handle_simulate

        resp = handle_simulate(req)
        metrics = resp.metrics
        collisions = [
            (c.step, c.agent_a, c.agent_b, c.distance) for c in resp.collisions
        ]
        trace_rows = [r.model_dump() for r in resp.trace]

    out_dir = args.out or "."
    try:
        os.makedirs(out_dir, exist_ok=True)
        _write_trace_rows(trace_rows, scenario.dimension, os.path.join(out_dir, "trace.csv"))
        write_metrics_json(metrics, os.path.join(out_dir, "metrics.json"))
        write_collision_report(collisions, os.path.join(out_dir, "collisions.txt"))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    n_steps = metrics.get("steps_executed")
    print(f"steps executed: {n_steps}")
    dmin = metrics.get("min_pairwise_distance")
    if dmin is not None:
        print(f"min pairwise distance: {_FMT % dmin} m")
    print(f"collisions: {len(collisions)}")
    return EXIT_OK if not collisions else EXIT_FAIL


def _write_trace_rows(rows, dimension, path):
    from .sim import TraceRecord

    records = [
        TraceRecord(
            step=r["step"],
            agent_id=r["agent_id"],
            position=np.asarray(r["position"], dtype=float),
            status=r["status"],
            solve_time_us=r["solve_time_us"],
            min_neighbor_dist=(
                r["min_neighbor_dist_m"]
                if r["min_neighbor_dist_m"] is not None
                else float("inf")
            ),
        )
        for r in rows
    ]
    write_trace_csv(records, dimension, path)


def cmd_bench(args):
    counts = [int(c) for c in args.counts.split(",")] if args.counts else [1, 3, 10, 30, 100]
    req = BenchRequest(
        counts=counts,
        instances=args.instances,
        seed=args.seed if args.seed is not None else 0,
    )
    if args.server:
        data = _post(args.server, "/bench", req.model_dump())
    else:
        from .service.app import handle_bench

        data = handle_bench(req).model_dump()

    print(f"{'count':>6} {'min_ms':>10} {'median_ms':>10} {'mean_ms':>10} {'max_ms':>10} {'fail':>5}")
    for row in data["rows"]:
        print(
            f"{row['count']:>6} {row['min_ms']:>10.3f} {row['median_ms']:>10.3f} "
            f"{row['mean_ms']:>10.3f} {row['max_ms']:>10.3f} {row['failures']:>5}"
        )
    if data["loglog_slope"] is not None:
        print(f"log-log slope: {data['loglog_slope']:.3f}")
    out_path = args.out or "bench.json"
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_project(args):
    try:
        current = _parse_point(args.current)
        goal = _parse_point(args.goal)
        atoms = _load_atoms_file(args.atoms) if args.atoms else []
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    req = ProjectRequest(
        current=current,
        goal=goal,
        u_max=args.u_max,
        epsilon=args.epsilon if args.epsilon is not None else 0.0,
        atoms=atoms,
    )
    if args.server:
        data = _post(args.server, "/project", req.model_dump())
    else:
        from .service.app import handle_project

        try:
            data = handle_project(req).model_dump()
        except VoroprojError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
    if data["ok"]:
        print(" ".join(_FMT % v for v in data["point"]))
        return EXIT_OK
    print(f"FAIL {data['reason']}")
    return EXIT_FAIL


def cmd_serve(args):
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="voroproj",
        description="Safe waypoint projection onto generalized Voronoi cells",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario file")
    p_run.add_argument("--scenario", required=True, help="scenario YAML path")
    p_run.add_argument("--out", help="output directory (default: cwd)")
    p_run.add_argument("--seed", type=int, help="override the scenario seed")
    p_run.add_argument("--epsilon", type=float, help="override the scenario margin")
    p_run.add_argument("--server", help="URL of a running service")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="timing sweep over obstacle counts")
    p_bench.add_argument("--counts", help="comma-separated counts (default 1,3,10,30,100)")
    p_bench.add_argument("--instances", type=int, default=285)
    p_bench.add_argument("--seed", type=int, help="benchmark seed (default 0)")
    p_bench.add_argument("--out", help="JSON output path (default bench.json)")
    p_bench.add_argument("--server", help="URL of a running service")
    p_bench.set_defaults(func=cmd_bench)

    p_proj = sub.add_parser("project", help="single-shot projection")
    p_proj.add_argument("--current", required=True, help='e.g. "0,0"')
    p_proj.add_argument("--goal", required=True)
    p_proj.add_argument("--atoms", help="YAML file with a list of atoms")
    p_proj.add_argument("--u-max", type=float, required=True, dest="u_max")
    p_proj.add_argument("--epsilon", type=float)
    p_proj.add_argument("--server", help="URL of a running service")
    p_proj.set_defaults(func=cmd_project)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits 2 on usage errors
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
