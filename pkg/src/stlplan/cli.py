"""Command-line front end: plan, check, export-lp, plot, bench.

Exit codes: 0 success, 1 bad input or I/O error, 2 no plan / check failed.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
import time
from typing import List, Optional

from .milp import export_lp
from .monitor import check, pairwise_clearances
from .planner import SOLVED, build_model, plan
from .plot import render_svg
from .scenario import ScenarioError, load_scenario, load_solution
from .solver.bnb import MilpParams

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 2

PACK_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "benchmarks")
CLEARANCE_TOL = 1e-6


def _params(sc, args) -> MilpParams:
    p = sc.solver.params()
    if getattr(args, "mip_gap", None) is not None:
        p.mip_gap = args.mip_gap
    if getattr(args, "time_limit", None) is not None:
        p.time_limit_s = args.time_limit
    if getattr(args, "seed", None) is not None:
        p.seed = args.seed
    return p


def _apply_overrides(sc, args):
    if getattr(args, "kmax", None) is not None:
        if args.kmax < sc.problem.K0:
            raise ScenarioError("Kmax", f"--kmax {args.kmax} is below K0={sc.problem.K0}")
        sc.problem.Kmax = args.kmax


def _write_json(path: Optional[str], doc: dict):
    text = json.dumps(doc, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def run_plan(scenario_path: str, out: Optional[str], backend: Optional[str] = None, args=None,
             lp_path: Optional[str] = None) -> int:
    sc = load_scenario(scenario_path)
    _apply_overrides(sc, args)
    backend = backend or sc.solver.backend
    if backend in ("lpfile", "lp-file"):
        if lp_path is None:
            base = out if out not in (None, "-") else os.path.splitext(scenario_path)[0]
            lp_path = os.path.splitext(base)[0] + ".lp"
        res = plan(sc.problem, _params(sc, args), "lp-file", lp_path=lp_path)
    else:
        res = plan(sc.problem, _params(sc, args))
    doc = res.to_json()
    _write_json(out, doc)
    if res.message:
        print(res.message, file=sys.stderr)
    return EXIT_OK if res.status == SOLVED else EXIT_FAIL


def check_report(sc, sol) -> dict:
    """Monitor verdict for a solution: task satisfaction and pairwise clearance."""
    prob = sc.problem
    paths = sol["paths"]
    if len(paths) != prob.num_agents or sol["agents"] != list(range(1, prob.num_agents + 1)):
        raise ScenarioError("paths", f"expected paths for agents 1..{prob.num_agents}, got {sol['agents']}")
    eps = [a.eps for a in prob.agents]
    rep = check(prob.spec, paths, eps, prob.regions)
    clear = pairwise_clearances(paths, [a.size for a in prob.agents], eps)
    for c in clear:
        c["ok"] = bool(c["distance"] >= c["required"] - CLEARANCE_TOL)
    rep.min_clearances = clear
    doc = rep.to_json()
    doc["clearance_ok"] = all(c["ok"] for c in clear)
    doc["path_checks"] = {str(i + 1): p.check(prob.vmax, prob.T) for i, p in enumerate(paths)}
    doc["passed"] = bool(rep.satisfied and doc["clearance_ok"])
    return doc


def run_check(scenario_path: str, solution_path: str, report: Optional[str] = None) -> int:
    sc = load_scenario(scenario_path)
    sol = load_solution(solution_path)
    if not sol["paths"]:
        raise ScenarioError("paths", f"solution has no paths (status {sol.get('status')!r})")
    doc = check_report(sc, sol)
    _write_json(report, doc)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def run_export_lp(scenario_path: str, K: int, out: str) -> int:
    sc = load_scenario(scenario_path)
    built = build_model(sc.problem, K)
    with open(out, "w") as fh:
        fh.write(export_lp(built.model))
    m = built.model
    print(f"wrote {out}: {len(m.pool)} variables, {m.num_binaries} binaries, {len(m.constraints)} rows")
    return EXIT_OK


def run_plot(scenario_path: str, solution_path: Optional[str], out: str) -> int:
    sc = load_scenario(scenario_path)
    paths = load_solution(solution_path)["paths"] if solution_path else []
    svg = render_svg(sc.problem.workspace, sc.problem.regions, paths, title=sc.name or os.path.basename(scenario_path))
    with open(out, "w") as fh:
        fh.write(svg)
    return EXIT_OK


def bench_files(pack: str, full: bool = False, only: Optional[List[str]] = None) -> List[str]:
    files = sorted(glob.glob(os.path.join(pack, "*.json")))
    files = [f for f in files if os.path.basename(f).endswith("-full.json") == full]
    if only:
        files = [f for f in files if os.path.splitext(os.path.basename(f))[0] in only]
    return files


def bench_one(path: str, params_override: Optional[dict] = None) -> dict:
    sc = load_scenario(path)
    params = sc.solver.params()
    for k, v in (params_override or {}).items():
        if v is not None:
            setattr(params, k, v)
    t0 = time.perf_counter()
    res = plan(sc.problem, params)
    wall = time.perf_counter() - t0
    row = {"benchmark": os.path.splitext(os.path.basename(path))[0], "runtime_s": wall, "K": res.K,
           "objective": res.objective, "status": res.status, "solver_status": res.solver_status,
           "check": None}
    if res.status == SOLVED:
        sol = {"paths": res.paths, "agents": list(range(1, len(res.paths) + 1))}
        row["check"] = check_report(sc, sol)["passed"]
    return row


def export_one(path: str, lp_dir: str) -> dict:
    """Write the model of a (full-scale) scenario at its ``K0`` without solving it."""
    sc = load_scenario(path)
    name = os.path.splitext(os.path.basename(path))[0]
    K = sc.problem.K0
    t0 = time.perf_counter()
    m = build_model(sc.problem, K).model
    out = os.path.join(lp_dir, name + ".lp")
    with open(out, "w") as fh:
        fh.write(export_lp(m))
    return {"benchmark": name, "runtime_s": time.perf_counter() - t0, "K": K, "variables": len(m.pool),
            "binaries": m.num_binaries, "rows": len(m.constraints), "lp": out}


def run_bench(pack: Optional[str], full: bool = False, only=None, jobs: int = 1, args=None, out=None,
              lp_dir: Optional[str] = None) -> int:
    pack = pack or PACK_DIR
    files = bench_files(pack, full, only)
    if not files:
        raise ScenarioError("", f"no scenario files in {pack}")
    if full:
        lp_dir = lp_dir or "."
        os.makedirs(lp_dir, exist_ok=True)
        rows = [export_one(f, lp_dir) for f in files]
        print(f"{'benchmark':<20} {'K':>3} {'variables':>9} {'binaries':>8} {'rows':>6}  lp file")
        for r in rows:
            print(f"{r['benchmark']:<20} {r['K']:>3} {r['variables']:>9} {r['binaries']:>8} {r['rows']:>6}  {r['lp']}")
        if out:
            _write_json(out, {"rows": rows})
        return EXIT_OK
    override = {"time_limit_s": getattr(args, "time_limit", None), "mip_gap": getattr(args, "mip_gap", None),
                "seed": getattr(args, "seed", None)}
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as ex:
            rows = list(ex.map(bench_one, files, [override] * len(files)))
    else:
        rows = [bench_one(f, override) for f in files]
    print(f"{'benchmark':<16} {'runtime (s)':>11} {'K':>3} {'objective':>10} {'status':>10} {'solver':>10} {'check':>6}")
    for r in rows:
        obj = "-" if r["objective"] is None else f"{r['objective']:.3f}"
        K = "-" if r["K"] is None else str(r["K"])
        chk = {True: "pass", False: "FAIL", None: "-"}[r["check"]]
        print(f"{r['benchmark']:<16} {r['runtime_s']:>11.2f} {K:>3} {obj:>10} {r['status']:>10} "
              f"{r['solver_status'] or '-':>10} {chk:>6}")
    if out:
        _write_json(out, {"rows": rows})
    ok = all(r["status"] == SOLVED and r["check"] for r in rows)
    return EXIT_OK if ok else EXIT_FAIL


def _solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--mip-gap", type=float, default=None, help="relative optimality gap")
    p.add_argument("--time-limit", type=float, default=None, help="seconds per plan() call")
    p.add_argument("--seed", type=int, default=None, help="branching tie-break seed")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stlplan", description="STL multi-agent planning via MILP")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("plan", help="solve a scenario")
    p.add_argument("scenario")
    p.add_argument("--out", "-o", default="-", help="solution JSON (default stdout)")
    p.add_argument("--backend", choices=["builtin", "lpfile"], default=None)
    p.add_argument("--lp", default=None, help="LP file for the lpfile backend (solution read from <lp>.sol)")
    p.add_argument("--kmax", type=int, default=None)
    _solver_flags(p)

    p = sub.add_parser("check", help="verify a solution with the monitor")
    p.add_argument("scenario")
    p.add_argument("solution")
    p.add_argument("--report", default="-", help="report JSON (default stdout)")

    p = sub.add_parser("export-lp", help="write the MILP for a fixed K")
    p.add_argument("scenario")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("out")

    p = sub.add_parser("plot", help="render an SVG")
    p.add_argument("scenario")
    p.add_argument("solution", nargs="?", default=None)
    p.add_argument("--out", "-o", required=True)

    p = sub.add_parser("bench", help="run a benchmark pack")
    p.add_argument("pack", nargs="?", default=None, help="directory of scenario files (default: bundled pack)")
    p.add_argument("--full", action="store_true",
                   help="full-scale variants: export each model at its K0 instead of solving")
    p.add_argument("--lp-dir", default=None, help="where --full writes LP files (default: current directory)")
    p.add_argument("--only", nargs="*", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="also write rows as JSON")
    _solver_flags(p)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.cmd == "plan":
            return run_plan(args.scenario, args.out, args.backend, args, args.lp)
        if args.cmd == "check":
            return run_check(args.scenario, args.solution, args.report)
        if args.cmd == "export-lp":
            if args.K < 1:
                raise ScenarioError("K", "must be at least 1")
            return run_export_lp(args.scenario, args.K, args.out)
        if args.cmd == "plot":
            return run_plot(args.scenario, args.solution, args.out)
        if args.cmd == "bench":
            return run_bench(args.pack, args.full, args.only, args.jobs, args, args.out, args.lp_dir)
    except (ScenarioError, OSError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
