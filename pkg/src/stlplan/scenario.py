"""Scenario and solution JSON files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .geometry import Polytope, Workspace, box
from .parser import SpecError, parse_spec
from .planner import MAKESPAN, TOTAL_TRAVEL_TIME, Agent, Problem
from .solver.bnb import MilpParams
from .trajectory import PwlPath


class ScenarioError(ValueError):
    """Validation failure; ``path`` locates the offending field, e.g. ``agents[1].size``."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass
class SolverConfig:
    backend: str = "builtin"
    mip_gap: float = 1e-4
    time_limit_s: Optional[float] = None
    seed: Optional[int] = None

    def params(self) -> MilpParams:
        return MilpParams(mip_gap=self.mip_gap, time_limit_s=self.time_limit_s, seed=self.seed)


@dataclass
class Scenario:
    problem: Problem
    solver: SolverConfig = field(default_factory=SolverConfig)
    name: str = ""
    spec_text: str = ""
    raw: Dict[str, Any] = field(default_factory=dict, repr=False)


def _need(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise ScenarioError(where, "expected an object")
    if key not in obj:
        raise ScenarioError(f"{where}.{key}" if where else key, "missing")
    return obj[key]


def _number(x, where: str, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(where, f"expected a number, got {x!r}")
    x = float(x)
    if positive and not x > 0:
        raise ScenarioError(where, f"must be positive, got {x:g}")
    if nonneg and not x >= 0:
        raise ScenarioError(where, f"must be non-negative, got {x:g}")
    return x


def _vector(x, where: str, dim: Optional[int] = None) -> List[float]:
    if not isinstance(x, list):
        raise ScenarioError(where, "expected a list of numbers")
    out = [_number(v, f"{where}[{i}]") for i, v in enumerate(x)]
    if dim is not None and len(out) != dim:
        raise ScenarioError(where, f"expected {dim} entries, got {len(out)}")
    return out


def _region(obj, where: str, dim: int) -> Polytope:
    if not isinstance(obj, dict):
        raise ScenarioError(where, "expected an object")
    try:
        if "box" in obj:
            spec = obj["box"]
            poly = box(_vector(_need(spec, "lo", f"{where}.box"), f"{where}.box.lo", dim),
                       _vector(_need(spec, "hi", f"{where}.box"), f"{where}.box.hi", dim))
        elif "lo" in obj and "hi" in obj:
            poly = box(_vector(obj["lo"], f"{where}.lo", dim), _vector(obj["hi"], f"{where}.hi", dim))
        elif "H" in obj and "b" in obj:
            poly = Polytope(obj["H"], obj["b"])
        else:
            raise ScenarioError(where, 'needs "box", "lo"/"hi" or "H"/"b"')
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(where, str(exc)) from None
    if poly.dim != dim:
        raise ScenarioError(where, f"dimension {poly.dim} does not match the workspace ({dim})")
    return poly


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    ws_doc = _need(doc, "workspace", "")
    lo = _vector(_need(ws_doc, "lo", "workspace"), "workspace.lo")
    dim = int(ws_doc.get("dim", len(lo)))
    if dim not in (1, 2, 3):
        raise ScenarioError("workspace.dim", f"must be 1, 2 or 3, got {dim}")
    lo = _vector(lo, "workspace.lo", dim)
    hi = _vector(_need(ws_doc, "hi", "workspace"), "workspace.hi", dim)
    try:
        ws = Workspace(tuple(lo), tuple(hi))
    except ValueError as exc:
        raise ScenarioError("workspace", str(exc)) from None

    reg_doc = doc.get("regions", {})
    if not isinstance(reg_doc, dict):
        raise ScenarioError("regions", "expected an object mapping names to polytopes")
    regions = {name: _region(r, f"regions.{name}", dim) for name, r in reg_doc.items()}

    agents_doc = _need(doc, "agents", "")
    if not isinstance(agents_doc, list) or not agents_doc:
        raise ScenarioError("agents", "expected a non-empty list")
    agents = []
    for i, a in enumerate(agents_doc):
        where = f"agents[{i}]"
        init = _vector(_need(a, "init", where), f"{where}.init", dim)
        if not ws.contains(init):
            raise ScenarioError(f"{where}.init", f"{init} lies outside the workspace")
        size = _number(_need(a, "size", where), f"{where}.size", positive=True)
        eps = _number(a.get("eps", 0.0), f"{where}.eps", nonneg=True)
        K0 = a.get("K0")
        if K0 is not None and (not isinstance(K0, int) or K0 < 1):
            raise ScenarioError(f"{where}.K0", f"must be a positive integer, got {K0!r}")
        agents.append(Agent(tuple(init), size, eps, K0))

    spec_text = _need(doc, "spec", "")
    if not isinstance(spec_text, str):
        raise ScenarioError("spec", "expected a string")
    try:
        spec = parse_spec(spec_text, regions, len(agents))
    except SpecError as exc:
        raise ScenarioError("spec", str(exc)) from None

    T = _number(_need(doc, "T", ""), "T", positive=True)
    vmax = _number(_need(doc, "vmax", ""), "vmax", positive=True)
    objective = doc.get("objective", TOTAL_TRAVEL_TIME)
    if objective not in (TOTAL_TRAVEL_TIME, MAKESPAN):
        raise ScenarioError("objective", f"must be {TOTAL_TRAVEL_TIME} or {MAKESPAN}, got {objective!r}")
    Kmax = doc.get("Kmax", 8)
    if not isinstance(Kmax, int) or Kmax < 1:
        raise ScenarioError("Kmax", f"must be a positive integer, got {Kmax!r}")
    # agents share one K in the search; start from the largest requested guess
    K0 = doc.get("K0", max([a.K0 for a in agents if a.K0 is not None], default=1))
    if not isinstance(K0, int) or not 1 <= K0 <= Kmax:
        raise ScenarioError("K0", f"must be an integer in [1, Kmax], got {K0!r}")

    s_doc = doc.get("solver", {})
    if not isinstance(s_doc, dict):
        raise ScenarioError("solver", "expected an object")
    backend = s_doc.get("backend", "builtin")
    if backend not in ("builtin", "lpfile", "lp-file"):
        raise ScenarioError("solver.backend", f"must be builtin or lpfile, got {backend!r}")
    mip_gap = _number(s_doc.get("mip_gap", 1e-4), "solver.mip_gap", nonneg=True)
    tl = s_doc.get("time_limit_s")
    tl = None if tl is None else _number(tl, "solver.time_limit_s", positive=True)
    seed = s_doc.get("seed")

    problem = Problem(ws, regions, agents, spec, T, vmax, objective, K0, Kmax)
    return Scenario(problem, SolverConfig(backend, mip_gap, tl, seed), str(doc.get("name", "")), spec_text, doc)


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError("", f"invalid JSON: {exc}") from None
    return scenario_from_dict(doc)


def load_solution(path: str) -> dict:
    """Solution JSON with ``paths`` turned into :class:`PwlPath` objects (``status`` kept)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError("", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("", "solution must be a JSON object")
    entries = doc.get("paths", [])
    if not isinstance(entries, list):
        raise ScenarioError("paths", "expected a list")
    paths = {}
    for i, e in enumerate(entries):
        where = f"paths[{i}]"
        agent = _need(e, "agent", where)
        if not isinstance(agent, int) or agent < 1:
            raise ScenarioError(f"{where}.agent", f"expected a 1-based agent index, got {agent!r}")
        try:
            paths[agent] = PwlPath.from_waypoints(_need(e, "waypoints", where))
        except ValueError as exc:
            raise ScenarioError(f"{where}.waypoints", str(exc)) from None
    doc = dict(doc)
    doc["paths"] = [paths[k] for k in sorted(paths)]
    doc["agents"] = sorted(paths)
    return doc
