"""Command-line interface: generate, solve, evaluate, report."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .formats import (
    FormatError,
    format_table,
    local_bks,
    problem_to_dict,
    read_instance,
    read_json,
    report_to_record,
    result_file,
    route_svg,
    summary_table,
    write_json,
)
from .geometry import GeometryError, shortest_path_matrix
from .gspt import build_instance
from .milaps import MethodError, dets_objective, ets_objective, parse_method, solve_ets
from .placement import GuardSet, PlacementError, guard_metrics, place_guards
from .synthetic import comb_corridor, random_problem, u_corridor, uniform_problem

EXIT_OK, EXIT_INFEASIBLE, EXIT_ARGS = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _emit(data: dict, out: str | None) -> None:
    if out:
        write_json(out, data)
    else:
        json.dump(data, sys.stdout, indent=1)
        sys.stdout.write("\n")


def _synthetic(args):
    kind = args.synthetic
    r_vis = math.inf if args.r_vis is None else args.r_vis
    if kind == "random":
        return random_problem(args.map_seed, n_holes=args.holes, size=args.size, r_vis=r_vis,
                              t_ang=args.t_ang, epsilon=args.epsilon)
    env = u_corridor() if kind == "u-corridor" else comb_corridor()
    start = (1.0, 9.0) if kind == "u-corridor" else (0.75, 0.75)
    return uniform_problem(env, start, r_vis=r_vis, t_ang=args.t_ang, epsilon=args.epsilon, start_heading=0.0)


def cmd_generate(args) -> int:
    if args.instance:
        problem, _ = read_instance(args.instance)
    elif args.synthetic:
        problem = _synthetic(args)
    else:
        raise FormatError("give an instance file or --synthetic")
    gs = place_guards(problem, args.method, args.seed)
    n_g, o_g = guard_metrics(gs)
    meta = {"guard_method": args.method, "seed": args.seed, "n_G": n_g, "o_G": o_g}
    _emit(problem_to_dict(problem, gs.guards, meta), args.out)
    return EXIT_OK


def _guards(problem, guards, args):
    if guards is None:
        return place_guards(problem, args.placement, args.seed)
    return GuardSet.from_points(problem, guards)


def cmd_solve(args) -> int:
    config = parse_method(args.method)
    problem, guards = read_instance(args.instance)
    gs = _guards(problem, guards, args)
    objective = "D-ETS" if args.problem == "dets" else "ETS"
    rep = solve_ets(problem, config, seed=args.seed, t_max=args.t_max, virtual_time=args.virtual_time, guards=gs,
                    objective=objective)
    rec = report_to_record(rep, args.seed, objective)
    _emit(result_file(problem, [rec], Path(args.instance).stem), args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    problem, _ = read_instance(args.instance)
    data = read_json(args.result)
    rows = []
    for rec in data["records"]:
        route = np.asarray(rec["route"], dtype=float)
        et, cov = ets_objective(problem, route)
        row = {"method": rec["method"], "ets": et, "covered_prob": cov}
        if "perm" in rec:
            gs = GuardSet.from_points(problem, rec["guards"])
            matrix = shortest_path_matrix(problem.env, gs.guards)
            inst = build_instance(gs.guards, matrix, problem.time_model, problem.start_heading)
            row["dets"] = dets_objective(problem, gs, inst, rec["perm"])
        rows.append(row)
    _emit({"evaluations": rows}, args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    results = [read_json(p) for p in args.results]
    bks = None
    if args.bks:
        bks = read_json(args.bks)
    elif args.local_bks:
        bks = local_bks(results)
    table = summary_table(results, bks)
    print(format_table(table))
    if args.svg_dir:
        from .formats import problem_from_dict

        out = Path(args.svg_dir)
        out.mkdir(parents=True, exist_ok=True)
        for path, r in zip(args.results, results):
            problem, _ = problem_from_dict(r["problem"])
            for k, rec in enumerate(r["records"]):
                gs = GuardSet.from_points(problem, rec["guards"]) if args.coverage else None
                svg = route_svg(problem, rec, covered=gs.vis_regions if gs else ())
                name = f"{Path(path).stem}-{k}-{rec['method'].replace('+', 'plus')}.svg"
                (out / name).write_text(svg, encoding="utf-8")
    if args.out:
        write_json(args.out, {"table": table})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="milaps", description="Expected-time search route planning over guard sets.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="place guards and write an instance with them")
    g.add_argument("instance", nargs="?", help="instance file (guards are replaced)")
    g.add_argument("--synthetic", choices=["random", "u-corridor", "comb"], help="build a synthetic instance instead")
    g.add_argument("--map-seed", type=int, default=0)
    g.add_argument("--holes", type=int, default=8)
    g.add_argument("--size", type=float, default=20.0)
    g.add_argument("--r-vis", type=float, default=None)
    g.add_argument("--t-ang", type=float, default=0.0)
    g.add_argument("--epsilon", type=float, default=1e-5)
    g.add_argument("--method", default="ReflexGreedy", choices=["ReflexGreedy", "IRS"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="plan a route with a named method")
    s.add_argument("instance")
    s.add_argument("--method", default="Milaps-DisGreedy")
    s.add_argument("--t-max", type=float, default=None, help="seconds; default n_G/10")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--virtual-time", action="store_true", help="deterministic work-based clock")
    s.add_argument("--placement", default="ReflexGreedy", choices=["ReflexGreedy", "IRS"])
    s.add_argument("--problem", default="ets", choices=["ets", "dets"])
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="re-score the routes of a result file")
    e.add_argument("instance")
    e.add_argument("result")
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="aggregate result files and draw routes")
    r.add_argument("results", nargs="+")
    r.add_argument("--bks", help="JSON mapping instance name to best-known ET")
    r.add_argument("--local-bks", action="store_true", help="use the best ET among the given results")
    r.add_argument("--svg-dir")
    r.add_argument("--coverage", action="store_true", help="shade guard views in the SVG")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MethodError, FormatError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        if isinstance(exc, GeometryError):
            print(f"milaps: infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        print(f"milaps: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except PlacementError as exc:
        print(f"milaps: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
