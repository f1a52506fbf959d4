"""MILP models, big-M disjunction elimination and the LP-file boundary."""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

import numpy as np

from .lcf import BINARY, LcfArena, LinearExpr, VarPool


class UnboundedVariableError(ValueError):
    pass


class SolutionParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleSolutionError(ValueError):
    def __init__(self, message: str, constraint: Optional[str] = None, violation: float = 0.0):
        self.constraint = constraint
        self.violation = violation
        super().__init__(message)


class MilpModel:
    """``minimize objective`` subject to ``expr >= 0`` rows and variable bounds.

    Variables live in ``pool`` (shared with the LCF arena the model came from).
    """

    def __init__(self, pool: VarPool, objective: Optional[LinearExpr] = None):
        self.pool = pool
        self.objective = objective if objective is not None else LinearExpr()
        self.constraints: List[LinearExpr] = []
        self.big_m: List[float] = []  # per row; 0 for ungated rows
        self.num_disjunctions = 0

    @property
    def num_vars(self) -> int:
        return len(self.pool)

    @property
    def binaries(self) -> List[int]:
        return [v.id for v in self.pool.vars if v.kind == BINARY]

    @property
    def num_binaries(self) -> int:
        return len(self.binaries)

    def add(self, e: LinearExpr, big_m: float = 0.0):
        self.constraints.append(e)
        self.big_m.append(float(big_m))

    def add_ge(self, lhs, rhs, big_m: float = 0.0):
        self.add(_expr(lhs) - _expr(rhs), big_m)

    def to_arrays(self):
        """Dense form: ``min c x + c0`` with ``A x >= r`` and ``lo <= x <= hi``."""
        n = len(self.pool)
        m = len(self.constraints)
        A = np.zeros((m, n))
        r = np.zeros(m)
        for i, e in enumerate(self.constraints):
            for vid, c in e.terms:
                A[i, vid] = c
            r[i] = -e.constant
        c = np.zeros(n)
        for vid, coef in self.objective.terms:
            c[vid] = coef
        lo, hi = self.pool.bounds()
        integer = np.array([v.kind == BINARY for v in self.pool.vars], dtype=bool)
        return c, self.objective.constant, A, r, lo, hi, integer

    def objective_value(self, x) -> float:
        return self.objective.evaluate(x)

    def violations(self, x) -> Tuple[float, str]:
        """Largest violation over rows, bounds and integrality, with its location."""
        x = np.asarray(x, dtype=float)
        worst, where = 0.0, ""
        for i, e in enumerate(self.constraints):
            v = -e.evaluate(x)
            if v > worst:
                worst, where = v, f"c{i}"
        for v in self.pool.vars:
            val = x[v.id]
            amt = max(v.lo - val, val - v.hi)
            if v.kind == BINARY:
                amt = max(amt, abs(val - round(val)))
            if amt > worst:
                worst, where = amt, f"bound of {v.name}"
        return worst, where

    def is_feasible(self, x, tol: float = 1e-6) -> bool:
        return self.violations(x)[0] <= tol


def _expr(x) -> LinearExpr:
    return x if isinstance(x, LinearExpr) else LinearExpr.const(float(x))


# --- big-M --------------------------------------------------------------------


def leaf_big_m(e: LinearExpr, lo: np.ndarray, hi: np.ndarray, names=None) -> float:
    """Smallest safe M (plus one) for gating ``e >= 0`` over the box ``[lo, hi]``."""
    for vid, c in e.terms:
        if not (math.isfinite(lo[vid]) and math.isfinite(hi[vid])):
            nm = names[vid] if names is not None else str(vid)
            raise UnboundedVariableError(f"variable {nm} is unbounded; cannot derive big-M")
    mn, _ = e.bounds(lo, hi)
    return max(0.0, -mn) + 1.0


def choose_big_m(arena: LcfArena, root: int, lo=None, hi=None) -> Dict[int, float]:
    """M for every leaf that sits below some OR node (those are the gated ones)."""
    if lo is None or hi is None:
        lo, hi = arena.pool.bounds()
    names = arena.pool.names()
    out = {}
    for n in arena.reachable(root):
        if arena.kind(n) != "or":
            continue
        stack = list(arena.children(n))
        seen = set()
        while stack:
            c = stack.pop()
            if c in seen:
                continue
            seen.add(c)
            if arena.kind(c) == "leaf":
                if c not in out:
                    out[c] = leaf_big_m(arena.expr(c), lo, hi, names)
            else:
                stack.extend(arena.children(c))
    return out


def _ungated_nodes(arena: LcfArena, root: int):
    """Nodes reachable from the root through AND nodes only; they must always hold."""
    out = {root}
    stack = [root]
    while stack:
        n = stack.pop()
        if arena.kind(n) == "and":
            for c in arena.children(n):
                if c not in out:
                    out.add(c)
                    stack.append(c)
    return out


def eliminate_disjunctions(arena: LcfArena, root: int, model: Optional[MilpModel] = None,
                           big_m: Optional[float] = None) -> MilpModel:
    """Append the big-M image of ``root`` to ``model`` (new model if omitted).

    ``big_m`` replaces the per-leaf constant with one fixed value; it is the
    caller's job to make it large enough.

    Each OR child ``c`` gets a binary ``w_c`` with ``sum w_c >= gate``; every
    leaf under ``c`` is relaxed by ``(1 - w_c) M``. A non-leaf node reached
    from several gated places is emitted once under a continuous indicator
    ``y`` in [0, 1] with ``y >= gate`` for each reference.
    """
    pool = arena.pool
    if model is None:
        model = MilpModel(pool)
    elif model.pool is not pool:
        raise ValueError("model and arena must share one variable pool")
    lo, hi = pool.bounds()
    names = pool.names()
    nodes = arena.reachable(root)
    refs = defaultdict(int)
    for n in nodes:
        for c in arena.children(n):
            refs[c] += 1
    ungated = _ungated_nodes(arena, root)
    indicator: Dict[int, int] = {}
    emitted_leaf = set()
    linked = set()
    done = set()

    def gated_leaf(e: LinearExpr, gate: Optional[int]):
        if gate is None:
            model.add(e)
            return
        M = leaf_big_m(e, lo, hi, names) if big_m is None else float(big_m)
        # e + M (1 - g) >= 0
        model.add(e + M - LinearExpr.var(gate, M), M)

    def emit(n: int, gate: Optional[int]):
        kind = arena.kind(n)
        if kind == "true":
            return
        if kind == "false":
            if gate is None:
                model.add(LinearExpr.const(-1.0))
            else:
                model.add(LinearExpr.var(gate, -1.0))
            return
        if kind == "leaf":
            if (n, gate) in emitted_leaf or (gate is not None and n in ungated):
                return
            emitted_leaf.add((n, gate))
            gated_leaf(arena.expr(n), gate)
            return
        if gate is None:
            if n in done:
                return
            done.add(n)
        elif n in ungated:
            return  # enforced unconditionally elsewhere
        if gate is not None and refs[n] > 1:
            y = indicator.get(n)
            first = y is None
            if first:
                y = indicator[n] = pool.aux(0.0, 1.0)
            if (n, gate) not in linked:
                linked.add((n, gate))
                model.add(LinearExpr.var(y) - LinearExpr.var(gate))
            if not first:
                return
            gate = y
        if kind == "and":
            for c in arena.children(n):
                emit(c, gate)
            return
        # or
        ws = []
        for c in arena.children(n):
            w = pool.binary()
            ws.append(w)
            emit(c, w)
        model.num_disjunctions += 1
        total = LinearExpr([(w, 1.0) for w in ws])
        model.add(total - (1.0 if gate is None else LinearExpr.var(gate)))

    emit(root, None)
    return model


# --- LP files -----------------------------------------------------------------


def _fmt(x: float) -> str:
    s = f"{x:.17g}"
    return "0" if s == "-0" else s


def _terms_text(e: LinearExpr, names) -> List[str]:
    out = []
    for k, (vid, c) in enumerate(e.terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = names[vid] if mag == 1.0 else f"{_fmt(mag)} {names[vid]}"
        if k == 0:
            out.append(body if sign == "+" else f"- {body}")
        else:
            out.append(f"{sign} {body}")
    return out


def _wrap(head: str, parts: List[str], tail: str, width: int = 200) -> List[str]:
    lines = []
    cur = head
    for p in parts + ([tail] if tail else []):
        if len(cur) + 1 + len(p) > width and cur.strip():
            lines.append(cur)
            cur = "   " + p
        else:
            cur = f"{cur} {p}" if cur else p
    lines.append(cur)
    return lines


def export_lp(model: MilpModel) -> str:
    """CPLEX LP text: Minimize, Subject To, Bounds, Binaries, End."""
    names = model.pool.names()
    if not names:
        raise ValueError("model has no variables")
    out = ["\\ stlplan model", "Minimize"]
    obj = _terms_text(model.objective, names) or [f"0 {names[0]}"]
    out.extend(_wrap(" obj:", obj, ""))
    if model.objective.constant:
        out.append(f"\\ objective constant {_fmt(model.objective.constant)}")
    out.append("Subject To")
    for i, e in enumerate(model.constraints):
        terms = _terms_text(e, names) or [f"0 {names[0]}"]
        out.extend(_wrap(f" c{i}:", terms, f">= {_fmt(-e.constant)}"))
    out.append("Bounds")
    for v in model.pool.vars:
        if v.kind == BINARY and (v.lo, v.hi) == (0.0, 1.0):
            continue
        if v.lo == v.hi:
            out.append(f" {v.name} = {_fmt(v.lo)}")
        elif math.isinf(v.lo) and math.isinf(v.hi):
            out.append(f" {v.name} free")
        else:
            lo = "-inf" if math.isinf(v.lo) else _fmt(v.lo)
            hi = "+inf" if math.isinf(v.hi) else _fmt(v.hi)
            out.append(f" {lo} <= {v.name} <= {hi}")
    bins = [v.name for v in model.pool.vars if v.kind == BINARY]
    if bins:
        out.append("Binaries")
        for k in range(0, len(bins), 10):
            out.append(" " + " ".join(bins[k:k + 10]))
    out.append("End")
    return "\n".join(out) + "\n"


def parse_solution(text: str) -> Dict[str, float]:
    """``name value`` pairs, one per line; ``#`` starts a comment."""
    values: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionParseError(f"expected 'name value', got {raw.strip()!r}", lineno)
        name, val = parts
        try:
            x = float(val)
        except ValueError:
            raise SolutionParseError(f"bad number {val!r} for {name}", lineno) from None
        if not math.isfinite(x):
            raise SolutionParseError(f"non-finite value for {name}", lineno)
        if name in values:
            raise SolutionParseError(f"duplicate variable {name}", lineno)
        values[name] = x
    return values


def import_solution(text: str, model: MilpModel, tol: float = 1e-6, missing: str = "error") -> np.ndarray:
    """Parse a solution file and check it against ``model``.

    Returns the assignment indexed by variable id. ``missing="zero"`` treats
    absent variables as 0 (some solvers omit them).
    """
    values = parse_solution(text)
    pool = model.pool
    unknown = sorted(set(values) - set(pool.by_name))
    if unknown:
        raise SolutionParseError(f"unknown variable {unknown[0]}")
    x = np.zeros(len(pool))
    for v in pool.vars:
        if v.name in values:
            x[v.id] = values[v.name]
        elif missing != "zero":
            raise SolutionParseError(f"no value for variable {v.name}")
    worst, where = model.violations(x)
    if worst > tol:
        raise InfeasibleSolutionError(f"solution violates {where} by {worst:.3g}", where, worst)
    return x


def write_solution(model: MilpModel, x) -> str:
    return "".join(f"{v.name} {_fmt(float(x[v.id]))}\n" for v in model.pool.vars)
