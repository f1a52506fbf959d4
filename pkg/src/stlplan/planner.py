"""Problem assembly, the K-increment search loop and path extraction."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .collision import encode_inter_agent, sign_vectors
from .encoding import ROBUST_PAD, PathVars, ZCache, encode_ma, make_path_vars
from .formula import agents_of, regions_of
from .geometry import Polytope, Workspace
from .lcf import LcfArena, LinearExpr, VarPool
from .milp import InfeasibleSolutionError, MilpModel, eliminate_disjunctions, export_lp, import_solution
from .solver.bnb import MilpParams, solve_milp
from .trajectory import PwlPath

TOTAL_TRAVEL_TIME = "TotalTravelTime"
MAKESPAN = "Makespan"

SOLVED = "Solved"
INFEASIBLE = "Infeasible"
TIME_LIMIT = "TimeLimit"
PENDING = "AwaitingSolution"
# spelling used in solution files
STATUS_TEXT = {SOLVED: "solved", INFEASIBLE: "infeasible", TIME_LIMIT: "time_limit", PENDING: "awaiting_solution"}

# negative durations down to this size are treated as solver noise
SNAP_TOL = 1e-9


@dataclass(frozen=True)
class Agent:
    init: tuple
    size: float
    eps: float = 0.0
    K0: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "init", tuple(float(v) for v in self.init))
        if not self.size > 0:
            raise ValueError(f"agent size must be positive, got {self.size}")
        if not self.eps >= 0:
            raise ValueError(f"tracking error must be non-negative, got {self.eps}")


@dataclass
class Problem:
    workspace: Workspace
    regions: Dict[str, Polytope]
    agents: List[Agent]
    spec: object  # multi-agent formula
    T: float
    vmax: float
    objective: str = TOTAL_TRAVEL_TIME
    K0: int = 1
    Kmax: int = 8

    def __post_init__(self):
        d = self.workspace.dim
        if not self.agents:
            raise ValueError("problem needs at least one agent")
        for i, a in enumerate(self.agents):
            if len(a.init) != d:
                raise ValueError(f"agent {i + 1}: initial position has dimension {len(a.init)}, workspace has {d}")
            if not self.workspace.contains(a.init):
                raise ValueError(f"agent {i + 1}: initial position {a.init} lies outside the workspace")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.vmax > 0:
            raise ValueError(f"vmax must be positive, got {self.vmax}")
        if self.objective not in (TOTAL_TRAVEL_TIME, MAKESPAN):
            raise ValueError(f"unknown objective {self.objective!r}")
        if not 1 <= self.K0 <= self.Kmax:
            raise ValueError(f"need 1 <= K0 <= Kmax, got K0={self.K0}, Kmax={self.Kmax}")
        missing = sorted(regions_of(self.spec) - set(self.regions))
        if missing:
            raise KeyError(f"unknown region {missing[0]!r}")
        for name, poly in self.regions.items():
            if poly.dim != d:
                raise ValueError(f"region {name!r} has dimension {poly.dim}, workspace has {d}")
        bad = [i for i in agents_of(self.spec) if not 1 <= i <= len(self.agents)]
        if bad:
            raise ValueError(f"specification mentions agent {bad[0]} but there are {len(self.agents)} agents")

    @property
    def num_agents(self) -> int:
        return len(self.agents)

    @property
    def dim(self) -> int:
        return self.workspace.dim


@dataclass
class BuiltModel:
    model: MilpModel
    paths: List[PathVars]
    arena: LcfArena
    root: int


def _K_list(problem: Problem, K) -> List[int]:
    if np.ndim(K) == 0:
        Ks = [int(K)] * problem.num_agents
    else:
        Ks = [int(k) for k in K]
    if len(Ks) != problem.num_agents:
        raise ValueError(f"expected {problem.num_agents} segment counts, got {len(Ks)}")
    if min(Ks) < 1:
        raise ValueError("need K >= 1 for every agent")
    return Ks


def build_model(problem: Problem, K, pad: float = ROBUST_PAD) -> BuiltModel:
    """Variables, structural constraints, task and collision formulas, big-M image."""
    Ks = _K_list(problem, K)
    pool = VarPool()
    arena = LcfArena(pool)
    ws = problem.workspace
    d = problem.dim
    paths = []
    for i, (agent, Ki) in enumerate(zip(problem.agents, Ks)):
        pv = make_path_vars(pool, i, Ki, d, problem.T, ws.lo, ws.hi)
        pool.set_bounds(pv.t[0], 0.0, 0.0)
        for ax, v in enumerate(pv.p[0]):
            pool.set_bounds(v, agent.init[ax], agent.init[ax])
        paths.append(pv)

    parts = []
    signs = sign_vectors(d)
    for pv in paths:
        for k in range(pv.K):
            dt = pv.t_expr(k + 1) - pv.t_expr(k)
            parts.append(arena.leaf(dt))
            p0, p1 = pv.p_expr(k), pv.p_expr(k + 1)
            for sigma in signs:
                step = sum((s * (b - a) for s, a, b in zip(sigma, p0, p1)), LinearExpr())
                parts.append(arena.leaf(problem.vmax * dt - step))
    eps = [a.eps for a in problem.agents]
    caches: Dict[int, ZCache] = {}
    parts.append(encode_ma(arena, problem.spec, paths, problem.regions, eps, caches, pad))
    parts.append(encode_inter_agent(arena, paths, [a.size for a in problem.agents], eps, ws.lo, ws.hi, pad))
    root = arena.and_(parts)

    ends = [pv.t_expr(pv.K) for pv in paths]
    if problem.objective == TOTAL_TRAVEL_TIME:
        objective = sum(ends, LinearExpr())
        model = MilpModel(pool, objective)
    else:
        span = pool.aux(0.0, problem.T)
        model = MilpModel(pool, LinearExpr.var(span))
        for e in ends:
            model.add(LinearExpr.var(span) - e)
    eliminate_disjunctions(arena, root, model)
    return BuiltModel(model, paths, arena, root)


def extract_paths(assignment, paths: Sequence[PathVars], pool: Optional[VarPool] = None) -> List[PwlPath]:
    """Waypoints from an assignment (array by variable id, or name -> value with ``pool``)."""
    if isinstance(assignment, Mapping):
        if pool is None:
            raise ValueError("a name -> value assignment needs the variable pool")
        names = pool.names()

        def val(vid):
            try:
                return float(assignment[names[vid]])
            except KeyError:
                raise KeyError(f"assignment has no value for {names[vid]}") from None
    else:
        x = np.asarray(assignment, dtype=float)

        def val(vid):
            if vid >= x.size:
                raise KeyError(f"assignment has no value for variable {vid}")
            return float(x[vid])

    out = []
    for pv in paths:
        ts = [val(v) for v in pv.t]
        for k in range(1, len(ts)):
            dt = ts[k] - ts[k - 1]
            if dt < 0:
                if dt < -SNAP_TOL:
                    raise ValueError(f"agent {pv.agent + 1}: segment {k - 1} has negative duration {dt:.3g}")
                ts[k] = ts[k - 1]
        pts = [[val(v) for v in row] for row in pv.p]
        out.append(PwlPath(ts, pts))
    return out


@dataclass
class KAttempt:
    K: int
    status: str
    binaries: int
    rows: int
    nodes: int = 0
    time_s: float = 0.0
    gap: float = math.inf

    def to_json(self):
        return {"K": self.K, "status": self.status, "binaries": self.binaries, "rows": self.rows,
                "nodes": self.nodes, "time_s": round(self.time_s, 4),
                "gap": None if math.isinf(self.gap) else self.gap}


@dataclass
class PlanResult:
    status: str
    K: Optional[int] = None
    objective: Optional[float] = None
    paths: List[PwlPath] = field(default_factory=list)
    attempts: List[KAttempt] = field(default_factory=list)
    solver_status: Optional[str] = None
    message: str = ""
    time_s: float = 0.0

    @property
    def solved(self) -> bool:
        return self.status == SOLVED

    @property
    def K_tried(self) -> List[int]:
        return [a.K for a in self.attempts]

    def to_json(self) -> dict:
        out = {
            "status": STATUS_TEXT.get(self.status, self.status),
            "K": self.K,
            "objective": self.objective,
            "paths": [{"agent": i + 1, "waypoints": p.to_waypoints()} for i, p in enumerate(self.paths)],
            "K_tried": self.K_tried,
            "stats": {
                "attempts": [a.to_json() for a in self.attempts],
                "solver_status": self.solver_status,
                "time_s": round(self.time_s, 4),
            },
        }
        if self.message:
            out["message"] = self.message
        return out


def plan(problem: Problem, params: Optional[MilpParams] = None, backend: str = "builtin",
         lp_path: Optional[str] = None, solution_path: Optional[str] = None) -> PlanResult:
    """Search K = K0..Kmax (same K for every agent) and return the first solved plan.

    ``backend="lp-file"`` writes the model for ``K0`` to ``lp_path`` and
    reads ``solution_path`` (default ``lp_path + ".sol"``) if it exists;
    otherwise the result is ``AwaitingSolution``.
    """
    params = params or MilpParams()
    if backend == "builtin":
        return _plan_builtin(problem, params)
    if backend in ("lp-file", "lpfile"):
        if lp_path is None:
            raise ValueError("the lp-file backend needs lp_path")
        return _plan_lp_file(problem, lp_path, solution_path or lp_path + ".sol")
    raise ValueError(f"unknown backend {backend!r}")


def _plan_builtin(problem: Problem, params: MilpParams) -> PlanResult:
    start = time.perf_counter()
    result = PlanResult(INFEASIBLE)
    for K in range(problem.K0, problem.Kmax + 1):
        local = MilpParams(**vars(params))
        if params.time_limit_s is not None:
            left = params.time_limit_s - (time.perf_counter() - start)
            if left <= 0:
                result.status = TIME_LIMIT
                result.message = f"time limit reached before K={K}"
                break
            local.time_limit_s = left
        built = build_model(problem, K)
        res = solve_milp(built.model, local)
        attempt = KAttempt(K, res.status, built.model.num_binaries, len(built.model.constraints),
                           res.nodes, res.time_s, res.gap)
        result.attempts.append(attempt)
        if res.x is not None:
            _accept(result, built, res.x, K)
            result.solver_status = res.status
            break
        if res.status == "Infeasible":
            continue
        # limits without an incumbent: stop and report
        result.status = TIME_LIMIT
        result.solver_status = res.status
        result.message = f"solver stopped with {res.status} at K={K} without a feasible plan"
        break
    else:
        result.message = f"no feasible plan for K in [{problem.K0}, {problem.Kmax}]"
    result.time_s = time.perf_counter() - start
    return result


def _accept(result: PlanResult, built: BuiltModel, x, K: int):
    result.status = SOLVED
    result.K = K
    result.objective = float(built.model.objective_value(x))
    result.paths = extract_paths(x, built.paths)


def _import_robust(text: str, model: MilpModel) -> np.ndarray:
    # external solvers round binaries within their own tolerance; a big-M row can
    # turn that into slack larger than the robustness pad, so check again
    # with the binaries made exact
    x = import_solution(text, model, tol=ROBUST_PAD / 2, missing="zero")
    bins = model.binaries
    x[bins] = np.round(x[bins])
    worst, where = model.violations(x)
    if worst > ROBUST_PAD / 2:
        raise InfeasibleSolutionError(
            f"with binaries rounded the solution violates {where} by {worst:.3g}", where, worst)
    return x


def _plan_lp_file(problem: Problem, lp_path: str, solution_path: str) -> PlanResult:
    start = time.perf_counter()
    K = problem.K0
    built = build_model(problem, K)
    with open(lp_path, "w") as fh:
        fh.write(export_lp(built.model))
    result = PlanResult(PENDING, attempts=[KAttempt(K, PENDING, built.model.num_binaries, len(built.model.constraints))])
    if os.path.exists(solution_path):
        with open(solution_path) as fh:
            x = _import_robust(fh.read(), built.model)
        _accept(result, built, x, K)
        result.attempts[-1].status = SOLVED
        result.solver_status = "external"
    else:
        result.message = (f"wrote {lp_path} (K={K}); solve it with any MILP solver and save "
                          f"'name value' lines to {solution_path}, then run again")
    result.time_s = time.perf_counter() - start
    return result
