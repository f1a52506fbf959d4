import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from stlplan.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, PACK_DIR, bench_files, main
from stlplan.milp import import_solution, write_solution
from stlplan.planner import build_model
from stlplan.scenario import load_scenario
from stlplan.solver.bnb import solve_milp

REACH = {
    "name": "reach",
    "workspace": {"dim": 2, "lo": [-1, -1], "hi": [10, 10]},
    "regions": {"goal": {"box": {"lo": [4, 0], "hi": [5, 1]}}, "obs": {"box": {"lo": [2, -1], "hi": [3, 0.5]}}},
    "agents": [{"init": [0, 0], "size": 0.2, "eps": 0.1}],
    "spec": "A1(F[0,10] goal & G[0,10] !obs)",
    "T": 10,
    "vmax": 1.0,
    "objective": "TotalTravelTime",
    "Kmax": 4,
    "solver": {"backend": "builtin", "mip_gap": 0.01, "time_limit_s": 60},
}

PAIR = {
    "workspace": {"dim": 2, "lo": [0, 0], "hi": [10, 10]},
    "regions": {"A": {"box": {"lo": [0, 0], "hi": [3, 3]}}},
    "agents": [{"init": [1, 1], "size": 0.3, "eps": 0.1}, {"init": [2, 2], "size": 0.3, "eps": 0.1}],
    "spec": "A1(G[0,5] A) & A2(G[0,5] A)",
    "T": 5,
    "vmax": 1.0,
}


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def reach_solved(tmp_path):
    sc = write(tmp_path, "reach.json", REACH)
    out = tmp_path / "sol.json"
    assert run("plan", sc, "--out", out) == EXIT_OK
    return sc, out


def test_plan_then_check(reach_solved, tmp_path):
    sc, out = reach_solved
    sol = json.loads(out.read_text())
    assert sol["status"] == "solved" and sol["K"] >= 1
    assert sol["paths"][0]["agent"] == 1
    assert all(len(w) == 3 for w in sol["paths"][0]["waypoints"])
    rep = tmp_path / "rep.json"
    assert run("check", sc, out, "--report", rep) == EXIT_OK
    doc = json.loads(rep.read_text())
    assert doc["satisfied"] and doc["passed"]


def test_unknown_region_exit_1(tmp_path, capsys):
    sc = write(tmp_path, "bad.json", dict(REACH, spec="A1(F[0,10] nowhere)"))
    assert run("plan", sc) == EXIT_ERROR
    assert "nowhere" in capsys.readouterr().err


def test_field_path_in_errors(tmp_path, capsys):
    doc = json.loads(json.dumps(REACH))
    doc["agents"][0]["size"] = -1
    assert run("plan", write(tmp_path, "bad.json", doc)) == EXIT_ERROR
    assert "agents[0]" in capsys.readouterr().err


def test_infeasible_exit_2(tmp_path):
    sc = write(tmp_path, "short.json", dict(REACH, T=3, spec="A1(F[0,3] goal)", Kmax=3))
    out = tmp_path / "sol.json"
    assert run("plan", sc, "--out", out) == EXIT_FAIL
    doc = json.loads(out.read_text())
    assert doc["status"] == "infeasible"
    assert doc["K_tried"] == [1, 2, 3]


def test_check_names_violating_agent(reach_solved, tmp_path):
    sc, out = reach_solved
    sol = json.loads(out.read_text())
    # push every waypoint after the start into the obstacle
    for w in sol["paths"][0]["waypoints"][1:]:
        w[1], w[2] = 2.5, 0.0
    bad = write(tmp_path, "bad.json", sol)
    rep = tmp_path / "rep.json"
    assert run("check", sc, bad, "--report", rep) == EXIT_FAIL
    doc = json.loads(rep.read_text())
    assert not doc["satisfied"]
    assert doc["per_atom"] == [{"agent": 1, "formula": doc["per_atom"][0]["formula"], "satisfied": False}]
    assert "obs" in doc["per_atom"][0]["formula"]


def test_check_reports_clearance(tmp_path):
    sc = write(tmp_path, "pair.json", PAIR)
    sol = {"paths": [{"agent": i, "waypoints": [[0, 1.5, 1.5], [5, 1.5, 1.5]]} for i in (1, 2)]}
    rep = tmp_path / "rep.json"
    assert run("check", sc, write(tmp_path, "sol.json", sol), "--report", rep) == EXIT_FAIL
    doc = json.loads(rep.read_text())
    assert doc["satisfied"] and not doc["clearance_ok"]
    (c,) = doc["min_clearances"]
    assert c["agents"] == [1, 2] and c["distance"] == 0.0 and c["required"] == pytest.approx(0.8)


def test_check_wrong_agent_count(tmp_path, capsys):
    sc = write(tmp_path, "pair.json", PAIR)
    sol = {"paths": [{"agent": 1, "waypoints": [[0, 1, 1], [5, 1, 1]]}]}
    assert run("check", sc, write(tmp_path, "sol.json", sol)) == EXIT_ERROR
    assert "paths" in capsys.readouterr().err


def test_export_then_import(tmp_path):
    sc = write(tmp_path, "reach.json", REACH)
    lp = tmp_path / "m.lp"
    # the obstacle forces a detour, so the first feasible K is 3
    assert run("export-lp", sc, "--K", 3, lp) == EXIT_OK
    built = build_model(load_scenario(sc).problem, 3)
    res = solve_milp(built.model)
    x = import_solution(write_solution(built.model, res.x), built.model)
    assert built.model.objective_value(x) == pytest.approx(res.objective)
    assert lp.read_text().startswith("\\ stlplan model\nMinimize")
    assert run("export-lp", sc, "--K", 0, lp) == EXIT_ERROR


def test_lpfile_backend_round_trip(tmp_path):
    sc = write(tmp_path, "reach.json", dict(REACH, K0=3))
    out = tmp_path / "sol.json"
    lp = tmp_path / "ext.lp"
    assert run("plan", sc, "--backend", "lpfile", "--lp", lp, "--out", out) == EXIT_FAIL
    assert json.loads(out.read_text())["status"] == "awaiting_solution"
    built = build_model(load_scenario(sc).problem, 3)
    res = solve_milp(built.model)
    (tmp_path / "ext.lp.sol").write_text(write_solution(built.model, res.x))
    assert run("plan", sc, "--backend", "lpfile", "--lp", lp, "--out", out) == EXIT_OK
    assert run("check", sc, out, "--report", tmp_path / "r.json") == EXIT_OK


def test_plot_structure(reach_solved, tmp_path):
    sc, out = reach_solved
    svg = tmp_path / "p.svg"
    assert run("plot", sc, out, "--out", svg) == EXIT_OK
    root = ET.fromstring(svg.read_text())
    ns = "{http://www.w3.org/2000/svg}"
    polys = [e for e in root.iter(ns + "polygon") if e.get("class") == "region"]
    lines = [e for e in root.iter(ns + "polyline") if e.get("class") == "path"]
    assert len(polys) == 2 and len(lines) == 1


def test_bench_two_smallest(tmp_path, capsys):
    files = bench_files(PACK_DIR)
    assert len(files) == 8
    # stlcg-2 and doorpuzzle-1 solve in about a second each
    out = tmp_path / "rows.json"
    code = run("bench", "--only", "stlcg-2", "doorpuzzle-1", "--time-limit", 120, "--out", out)
    assert code == EXIT_OK
    rows = json.loads(out.read_text())["rows"]
    assert [r["benchmark"] for r in rows] == ["doorpuzzle-1", "stlcg-2"]
    assert all(r["status"] == "Solved" and r["check"] for r in rows)
    assert all(r["runtime_s"] < 120 for r in rows)
    table = capsys.readouterr().out
    assert "runtime (s)" in table and "objective" in table


def test_bench_full_exports(tmp_path):
    assert run("bench", "--full", "--only", "stlcg-2-full", "--lp-dir", tmp_path) == EXIT_OK
    assert (tmp_path / "stlcg-2-full.lp").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stlplan", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("plan", "check", "export-lp", "plot", "bench"):
        assert cmd in proc.stdout
