"""Branch-and-bound over binary variables on top of :class:`DualSimplex`.

Search order: depth-first dives until the first incumbent, then best-bound.
Ties in the best-bound order go to the child of the node just solved, then to
the lowest node id. Reduced costs do not depend on variable bounds, so the
basis left by the previous node is dual feasible for any other node and the
dual simplex simply continues from it. Once an incumbent exists, a
neighbourhood search runs every ``rins_every`` nodes: binaries on which the
node LP and the incumbent agree are fixed and the rest is searched with a
small node budget. Every incumbent is
polished by re-solving the LP with its binaries fixed to their rounded
values, so reported solutions satisfy gated rows exactly up to round-off.
When that LP is infeasible the node is not an incumbent and branching goes on
over the binaries that are not exactly integral.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .propagate import Propagator
from .simplex import INFEASIBLE, NUMERICAL, OPTIMAL, UNBOUNDED, DualSimplex

FEASIBLE = "Feasible"
TIME_LIMIT = "TimeLimit"
NODE_LIMIT = "NodeLimit"


@dataclass
class MilpParams:
    mip_gap: float = 1e-4
    time_limit_s: Optional[float] = None
    node_limit: Optional[int] = None
    feas_tol: float = 1e-6
    int_tol: float = 1e-6
    seed: Optional[int] = None
    branching: str = "pseudocost"  # or "most_fractional"
    propagate: bool = True
    # relaxation-induced neighbourhood search every this many nodes (0 disables)
    rins_every: int = 200
    rins_nodes: int = 300
    # prune nodes whose bound is not below this objective value
    cutoff: float = float("inf")


@dataclass
class MilpResult:
    status: str
    x: Optional[np.ndarray] = None
    objective: float = float("inf")
    bound: float = -float("inf")
    gap: float = float("inf")
    nodes: int = 0
    iterations: int = 0
    time_s: float = 0.0
    bound_history: List[float] = field(default_factory=list, repr=False)
    incumbent_history: List[Tuple[int, float]] = field(default_factory=list, repr=False)
    numerical_failures: int = 0

    @property
    def has_solution(self) -> bool:
        return self.x is not None


@dataclass
class _Node:
    id: int
    depth: int
    lo: np.ndarray  # bounds of the integer variables
    hi: np.ndarray
    bound: float
    parent: int
    # (binary index, distance moved, went up, parent LP objective)
    branch: Optional[Tuple[int, float, bool, float]] = None


def _gap(inc: float, bound: float) -> float:
    if not np.isfinite(inc):
        return float("inf")
    return max(0.0, (inc - bound) / max(1.0, abs(inc)))


def solve_milp_arrays(c, c0, A, r, lo, hi, integer, params: Optional[MilpParams] = None) -> MilpResult:
    """``min c x + c0`` s.t. ``A x >= r``, ``lo <= x <= hi``, ``x[integer]`` in {0, 1}."""
    params = params or MilpParams()
    t_start = time.perf_counter()
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    integer = np.asarray(integer, dtype=bool)
    ints = np.flatnonzero(integer)
    lo[ints] = np.maximum(lo[ints], 0.0)
    hi[ints] = np.minimum(hi[ints], 1.0)
    lo[ints] = np.ceil(lo[ints] - params.int_tol)
    hi[ints] = np.floor(hi[ints] + params.int_tol)
    result = MilpResult(INFEASIBLE)
    if np.any(lo > hi):
        result.time_s = time.perf_counter() - t_start
        return result
    rng = np.random.default_rng(params.seed) if params.seed is not None else None

    prop = Propagator(A, r, integer, params.feas_tol, params.int_tol) if params.propagate else None
    base_lo, base_hi = lo, hi
    if prop is not None:
        ok, base_lo, base_hi = prop.run(lo, hi)
        if not ok:
            result.time_s = time.perf_counter() - t_start
            return result
    all_idx = np.arange(c.size)
    lp = DualSimplex(c, A, r, base_lo, base_hi)
    pc = _PseudoCosts(ints.size)
    inc_x: Optional[np.ndarray] = None
    inc_obj = float("inf")
    cutoff = params.cutoff
    next_id = 1
    root = _Node(0, 0, base_lo[ints].copy(), base_hi[ints].copy(), -float("inf"), -1)
    stack: List[_Node] = []  # dive phase
    heap: list = []  # best-bound phase: (bound, id, node)
    pruned_bound = float("inf")
    current: Optional[_Node] = root
    nodes = 0
    status = None

    def open_bound() -> float:
        vals = [n.bound for n in stack]
        if heap:
            vals.append(heap[0][0])
        return min(vals) if vals else float("inf")

    def feasible(x) -> bool:
        if A.shape[0] and np.any(A @ x - r < -params.feas_tol):
            return False
        if np.any(x < lo - params.feas_tol) or np.any(x > hi + params.feas_tol):
            return False
        return bool(np.all(np.abs(x[ints] - np.round(x[ints])) <= params.int_tol))

    def polish(x, node: _Node) -> Optional[np.ndarray]:
        fixed = np.round(x[ints])
        lp.set_bounds(ints, fixed, fixed)
        res = lp.solve()
        lp.set_bounds(ints, node.lo, node.hi)
        if res.status == OPTIMAL:
            y = res.x.copy()
            y[ints] = fixed
            if feasible(y):
                return y
        if res.status != NUMERICAL:
            # the rounded binaries admit no point: x only looked feasible
            # because a big-M row absorbed its integrality error
            return None
        y = x.copy()
        y[ints] = fixed
        return y if feasible(y) else None

    while True:
        if current is None:
            if stack:
                current = stack.pop()
            elif heap:
                current = heapq.heappop(heap)[2]
            else:
                break
        node = current
        current = None
        if params.time_limit_s is not None and time.perf_counter() - t_start > params.time_limit_s:
            status = TIME_LIMIT
            _reopen(node, stack, heap, inc_x is not None)
            break
        if params.node_limit is not None and nodes >= params.node_limit:
            status = NODE_LIMIT
            _reopen(node, stack, heap, inc_x is not None)
            break
        if (inc_x is not None and _gap(inc_obj, node.bound) <= params.mip_gap) or node.bound >= cutoff:
            pruned_bound = min(pruned_bound, node.bound)
            continue
        nodes += 1
        if prop is not None:
            nlo, nhi = base_lo.copy(), base_hi.copy()
            nlo[ints], nhi[ints] = node.lo, node.hi
            ok, nlo, nhi = prop.run(nlo, nhi)
            if not ok:
                result.bound_history.append(min(open_bound(), pruned_bound, inc_obj))
                continue
            node.lo, node.hi = nlo[ints], nhi[ints]
            lp.set_bounds(all_idx, nlo, nhi)
        else:
            lp.set_bounds(ints, node.lo, node.hi)
        res = lp.solve()
        if res.status == NUMERICAL:
            result.numerical_failures += 1
            saved = lp.get_bounds()
            lp._reset_to_slack_basis()
            lp.set_bounds(all_idx, *saved)
            res = lp.solve()
        if res.status == UNBOUNDED:
            status = UNBOUNDED
            break
        if res.status != OPTIMAL:
            if res.status == NUMERICAL:
                result.numerical_failures += 1
            result.bound_history.append(min(open_bound(), inc_obj))
            continue
        if node.branch is not None:
            pc.update(node.branch, res.objective)
        bound = max(node.bound, res.objective + c0)
        x = res.x
        if (inc_x is not None and _gap(inc_obj, bound) <= params.mip_gap) or bound >= cutoff:
            pruned_bound = min(pruned_bound, bound)
            result.bound_history.append(min(open_bound(), pruned_bound, inc_obj))
            continue
        if inc_x is not None and params.rins_every and nodes % params.rins_every == 0:
            y = _rins(c, c0, A, r, lo, hi, integer, ints, x, inc_x, inc_obj, params, t_start)
            if y is not None:
                inc_x, inc_obj = y, float(c @ y + c0)
                result.incumbent_history.append((nodes, inc_obj))
                if _gap(inc_obj, bound) <= params.mip_gap:
                    pruned_bound = min(pruned_bound, bound)
                    result.bound_history.append(min(open_bound(), pruned_bound, inc_obj))
                    continue
        frac = np.abs(x[ints] - np.round(x[ints]))
        cand = frac > params.int_tol
        if not cand.any():
            y = polish(x, node)
            if y is not None:
                obj = float(c @ y + c0)
                if obj < inc_obj:
                    first = inc_x is None
                    inc_x, inc_obj = y, obj
                    result.incumbent_history.append((nodes, obj))
                    if first:
                        for n in stack:
                            heapq.heappush(heap, (n.bound, n.id, n))
                        stack.clear()
                result.bound_history.append(min(open_bound(), pruned_bound, inc_obj))
                continue
            # big-M rows can turn a tiny integrality error into a real violation;
            # keep branching on whatever is not exactly integral
            cand = (frac > 0) & (node.lo < node.hi)
            if not cand.any():
                result.numerical_failures += 1
                result.bound_history.append(min(open_bound(), pruned_bound, inc_obj))
                continue
        xi = x[ints]
        if params.branching == "pseudocost":
            score = pc.scores(xi, cand)
        else:
            score = np.where(cand, frac, -1.0)
        best = score.max()
        ties = np.flatnonzero(score >= best - 1e-12 * max(1.0, abs(best)))
        if ties.size > 1:
            # prefer the most fractional among equally scored candidates
            ties = ties[frac[ties] >= frac[ties].max() - 1e-12]
        k = int(ties[0]) if rng is None else int(rng.choice(ties))
        j_val = xi[k]
        kids = []
        for up in (j_val >= 0.5, j_val < 0.5):
            nlo, nhi = node.lo.copy(), node.hi.copy()
            if up:
                nlo[k] = 1.0
            else:
                nhi[k] = 0.0
            dist = (1.0 - j_val) if up else j_val
            kids.append(_Node(next_id, node.depth + 1, nlo, nhi, bound, node.id, (k, dist, up, res.objective)))
            next_id += 1
        first_kid, second_kid = kids
        if inc_x is None:
            stack.append(second_kid)
            current = first_kid
        else:
            heapq.heappush(heap, (second_kid.bound, second_kid.id, second_kid))
            if bound <= heap[0][0]:  # the first child is a best-bound choice
                current = first_kid
            else:
                heapq.heappush(heap, (first_kid.bound, first_kid.id, first_kid))
        result.bound_history.append(min(open_bound(), bound if current is not None else float("inf"),
                                        pruned_bound, inc_obj))

    result.nodes = nodes
    result.iterations = lp.total_iterations
    result.time_s = time.perf_counter() - t_start
    if status == UNBOUNDED:
        result.status = UNBOUNDED
        return result
    remaining = min(open_bound(), pruned_bound)
    if inc_x is None:
        result.status = status or INFEASIBLE
        result.bound = remaining if status else float("inf")
        return result
    result.x = inc_x
    result.objective = inc_obj
    result.bound = min(remaining, inc_obj)
    result.gap = _gap(inc_obj, result.bound)
    if status is None:
        result.status = OPTIMAL
    elif result.gap <= params.mip_gap:
        result.status = OPTIMAL
    else:
        result.status = status if status == TIME_LIMIT else FEASIBLE
    return result


def _rins(c, c0, A, r, lo, hi, integer, ints, x, inc_x, inc_obj, params: MilpParams, t_start: float):
    """Sub-MIP over the binaries where ``x`` and the incumbent disagree."""
    agree = np.abs(x[ints] - inc_x[ints]) <= params.int_tol
    if agree.mean() < 0.5 or agree.all():
        return None
    sub_lo, sub_hi = lo.copy(), hi.copy()
    fix = ints[agree]
    sub_lo[fix] = sub_hi[fix] = np.round(inc_x[fix])
    left = None
    if params.time_limit_s is not None:
        left = params.time_limit_s - (time.perf_counter() - t_start)
        if left <= 0:
            return None
    # require a real improvement
    cutoff = inc_obj - max(1e-6, params.mip_gap * 0.5 * max(1.0, abs(inc_obj)))
    sub = MilpParams(mip_gap=params.mip_gap, time_limit_s=left, node_limit=params.rins_nodes,
                     feas_tol=params.feas_tol, int_tol=params.int_tol, seed=params.seed,
                     branching=params.branching, propagate=params.propagate, rins_every=0, cutoff=cutoff)
    res = solve_milp_arrays(c, c0, A, r, sub_lo, sub_hi, integer, sub)
    if res.x is None or res.objective >= inc_obj:
        return None
    return res.x


class _PseudoCosts:
    """Average objective change per unit of rounding, per binary and direction."""

    def __init__(self, n: int):
        self.sum = np.zeros((2, n))
        self.cnt = np.zeros((2, n))

    def update(self, branch, child_obj: float):
        k, dist, up, parent_obj = branch
        if dist <= 1e-9:
            return
        d = int(up)
        self.sum[d, k] += max(0.0, child_obj - parent_obj) / dist
        self.cnt[d, k] += 1

    def scores(self, xi: np.ndarray, cand: np.ndarray) -> np.ndarray:
        known = self.cnt > 0
        avg = np.where(known, self.sum / np.maximum(self.cnt, 1), 0.0)
        # unseen directions borrow the mean of the seen ones
        fill = [avg[d][known[d]].mean() if known[d].any() else 1.0 for d in (0, 1)]
        down = np.where(known[0], avg[0], fill[0]) * xi
        up = np.where(known[1], avg[1], fill[1]) * (1.0 - xi)
        score = np.maximum(down, 1e-6) * np.maximum(up, 1e-6)
        return np.where(cand, score, -1.0)


def _reopen(node: _Node, stack, heap, have_incumbent: bool):
    if have_incumbent:
        heapq.heappush(heap, (node.bound, node.id, node))
    else:
        stack.append(node)


def solve_milp(model, params: Optional[MilpParams] = None) -> MilpResult:
    """Solve a :class:`~stlplan.milp.MilpModel`; the incumbent is re-checked
    against the model's rows before it is returned."""
    params = params or MilpParams()
    c, c0, A, r, lo, hi, integer = model.to_arrays()
    res = solve_milp_arrays(c, c0, A, r, lo, hi, integer, params)
    if res.x is not None:
        worst, where = model.violations(res.x)
        if worst > params.feas_tol:
            raise RuntimeError(f"solver returned a point violating {where} by {worst:.3g}")
    return res
