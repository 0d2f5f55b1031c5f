"""JSON instance and result files, gap metrics and SVG route plots."""
from __future__ import annotations

import json
import math
import os
import tempfile
import warnings
from pathlib import Path
from typing import Any, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .geometry import PolygonalEnvironment, Region
from .model import EtsProblem, TargetDistribution, TravelTimeModel

VERSION = "milaps/1"


class FormatError(ValueError):
    pass


def _ring(r) -> list[list[float]]:
    return [[float(x), float(y)] for x, y in np.asarray(r, dtype=float)]


def _region_to_json(r: Region) -> list[dict]:
    return [{"outer": _ring(o), "holes": [_ring(h) for h in hs]} for o, hs in r.parts]


def _region_from_json(parts) -> Region:
    return Region.from_parts((p["outer"], p.get("holes", [])) for p in parts)


def problem_to_dict(problem: EtsProblem, guards=None, meta: dict | None = None) -> dict:
    env = problem.env
    d: dict[str, Any] = {
        "version": VERSION,
        "map": {"outer": _ring(env.outer), "holes": [_ring(h) for h in env.holes]},
        "r_vis": None if math.isinf(problem.r_vis) else float(problem.r_vis),
        "r_fp": float(problem.r_fp),
        "t_lin": float(problem.time_model.t_lin),
        "t_ang": float(problem.time_model.t_ang),
        "epsilon": float(problem.epsilon),
        "start": {"x": problem.start[0], "y": problem.start[1], "heading": problem.start_heading},
        "targets": [{"weight": float(p), "region": _region_to_json(r)} for p, r in problem.targets.regions],
    }
    if guards is not None:
        d["guards"] = [[float(x), float(y)] for x, y in guards]
    if meta:
        d["meta"] = meta
    return d


def problem_from_dict(d: dict) -> tuple[EtsProblem, list[tuple[float, float]] | None]:
    if d.get("version") != VERSION:
        raise FormatError(f"unsupported or missing version tag {d.get('version')!r}; expected {VERSION!r}")
    try:
        env = PolygonalEnvironment(d["map"]["outer"], d["map"].get("holes", []))
        targets = d.get("targets")
        if targets:
            dist = TargetDistribution(tuple((float(t["weight"]), _region_from_json(t["region"])) for t in targets))
        else:
            dist = TargetDistribution.uniform(env)
        s = d["start"]
        problem = EtsProblem(
            env=env,
            targets=dist,
            start=(float(s["x"]), float(s["y"])),
            r_vis=math.inf if d.get("r_vis") is None else float(d["r_vis"]),
            r_fp=float(d.get("r_fp", 0.0)),
            time_model=TravelTimeModel(float(d.get("t_lin", 1.0)), float(d.get("t_ang", 0.0))),
            start_heading=None if s.get("heading") is None else float(s["heading"]),
            epsilon=float(d.get("epsilon", 1e-5)),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed instance: {exc}") from exc
    guards = d.get("guards")
    return problem, None if guards is None else [(float(x), float(y)) for x, y in guards]


def problems_equal(a: EtsProblem, b: EtsProblem) -> bool:
    """Field-level equality of two problems (regions compared by symmetric difference)."""
    if not (a.env == b.env and a.start == b.start and a.r_vis == b.r_vis and a.r_fp == b.r_fp):
        return False
    if a.time_model != b.time_model or a.start_heading != b.start_heading or a.epsilon != b.epsilon:
        return False
    if len(a.targets.regions) != len(b.targets.regions):
        return False
    for (pa, ra), (pb, rb) in zip(a.targets.regions, b.targets.regions):
        if pa != pb or not ra.geom.equals(rb.geom):
            return False
    return True


def write_json(path, data: dict) -> None:
    """Write atomically so concurrent readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    with os.fdopen(fd, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=1, sort_keys=False)
        f.write("\n")
    os.replace(tmp, path)


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def read_instance(path):
    return problem_from_dict(read_json(path))


# ---------------------------------------------------------------- results

def gap(et: float, bks: float) -> float:
    """Percentage gap of ``et`` to the best-known value."""
    if bks == 0:
        return 0.0 if et == 0 else math.inf
    return 100.0 * (et - bks) / bks


def rel_time(t: float, t_max: float) -> float:
    return t / t_max


def report_to_record(report, seed, objective: str = "ETS") -> dict:
    res = report.result
    legs = []
    perm = [int(k) for k in res.perm]
    for u, v in zip(perm, perm[1:]):
        legs.append(_ring(report.matrix[u][v].vertices))
    trace = []
    for k in range(len(res.perms)):
        e = {"time": res.times[k], "gspt": res.gspt_costs[k]}
        if res.dets is not None:
            e["dets"] = res.dets[k]
        if res.ets is not None:
            e["ets"] = res.ets[k]
        trace.append(e)
    return {
        "method": report.method,
        "seed": seed,
        "objective": objective,
        "t_max": report.t_max,
        "n_G": report.n_guards,
        "o_G": report.overlap,
        "timeout": bool(res.timeout),
        "replans": res.replans,
        "best": res.best,
        "et": report.et,
        "covered_prob": report.covered_prob,
        "rel": rel_time(res.times[res.best], report.t_max),
        "trace": trace,
        "perm": perm,
        "guards": [[float(x), float(y)] for x, y in report.guards.guards],
        "route": _ring(report.route),
        "legs": legs,
        "timings": report.timings,
    }


def result_file(problem: EtsProblem, records: list[dict], instance_name: str = "") -> dict:
    return {"version": VERSION, "instance": instance_name, "problem": problem_to_dict(problem), "records": records}


def local_bks(results: Sequence[dict]) -> dict[str, float]:
    """Best ET per instance over every record of every result file."""
    out: dict[str, float] = {}
    for r in results:
        for rec in r["records"]:
            key = r.get("instance", "")
            out[key] = min(out.get(key, math.inf), rec["et"])
    return out


def summary_table(results: Sequence[dict], bks: dict[str, float] | None = None) -> list[dict]:
    """Mean gap and relative time per method; gaps are omitted when no BKS is known."""
    rows: dict[str, dict] = {}
    for r in results:
        inst = r.get("instance", "")
        b = None if bks is None else bks.get(inst)
        if bks is not None and b is None:
            warnings.warn(f"no best-known value for instance {inst!r}; gap omitted", stacklevel=2)
        for rec in r["records"]:
            row = rows.setdefault(rec["method"], {"method": rec["method"], "runs": 0, "et": [], "gap": [], "rel": []})
            row["runs"] += 1
            row["et"].append(rec["et"])
            row["rel"].append(rec["rel"])
            if b is not None:
                row["gap"].append(gap(rec["et"], b))
    table = []
    for row in rows.values():
        table.append({
            "method": row["method"],
            "runs": row["runs"],
            "mean_et": float(np.mean(row["et"])),
            "mean_gap": float(np.mean(row["gap"])) if row["gap"] else None,
            "mean_rel": float(np.mean(row["rel"])),
        })
    return sorted(table, key=lambda r: r["method"])


def format_table(table: list[dict]) -> str:
    lines = [f"{'method':<34} {'runs':>4} {'mean ET':>12} {'gap %':>9} {'rel t':>7}"]
    for r in table:
        g = "-" if r["mean_gap"] is None else f"{r['mean_gap']:.2f}"
        lines.append(f"{r['method']:<34} {r['runs']:>4} {r['mean_et']:>12.4f} {g:>9} {r['mean_rel']:>7.3f}")
    return "\n".join(lines)


# ---------------------------------------------------------------- svg

def _shade(f: float) -> str:
    """Dark navy for early legs fading to pale amber for late ones."""
    a = np.array([20, 30, 90])
    b = np.array([250, 210, 120])
    c = (a + (b - a) * min(max(f, 0.0), 1.0)).astype(int)
    return "#%02x%02x%02x" % tuple(c)


def _pts(ring, tf) -> str:
    return " ".join(f"{x:.4f},{y:.4f}" for x, y in (tf(p) for p in ring))


def route_svg(problem: EtsProblem, record: dict, width: int = 640, covered: Sequence[Region] = ()) -> str:
    """SVG of the environment, covered area, guards and the route legs colored by time."""
    env = problem.env
    x0, y0, x1, y1 = env.bounds
    span = max(x1 - x0, y1 - y0) or 1.0
    s = (width - 20) / span
    height = int((y1 - y0) * s) + 20

    def tf(p):
        return (10 + (p[0] - x0) * s, height - 10 - (p[1] - y0) * s)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<title>{escape(str(record.get('method', 'route')))}</title>",
        f'<polygon points="{_pts(env.outer, tf)}" fill="#ffffff" stroke="#222222" stroke-width="1.5"/>',
    ]
    for r in covered:
        for o, _ in r.parts:
            out.append(f'<polygon points="{_pts(o, tf)}" fill="#9ecae1" fill-opacity="0.15" stroke="none"/>')
    for h in env.holes:
        out.append(f'<polygon points="{_pts(h, tf)}" fill="#777777" stroke="#222222" stroke-width="1"/>')
    legs = record.get("legs", [])
    lengths = [sum(math.dist(a, b) for a, b in zip(leg, leg[1:])) for leg in legs]
    total = sum(lengths) or 1.0
    acc = 0.0
    for leg, ln in zip(legs, lengths):
        d = "M " + " L ".join(f"{x:.4f} {y:.4f}" for x, y in (tf(p) for p in leg))
        out.append(f'<path d="{d}" fill="none" stroke="{_shade(acc / total)}" stroke-width="2.5"/>')
        acc += ln
    for k, g in enumerate(record.get("guards", [])):
        cx, cy = tf(g)
        fill = "#d62728" if k == 0 else "#2ca02c"
        out.append(f'<circle cx="{cx:.4f}" cy="{cy:.4f}" r="3.5" fill="{fill}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
