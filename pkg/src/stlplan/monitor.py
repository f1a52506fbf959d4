"""Exact STL monitoring of piecewise-linear paths with interval arithmetic.

Satisfaction sets are finite unions of closed intervals. By default a path is
held at its last waypoint forever, so sets may end in ``+inf``; beyond ``t_K``
the signal is constant and every formula has a constant truth value there.
With ``hold_last=False`` the signal is cut at ``domain_end`` instead and any
temporal window reaching past it fails.

Predicates are evaluated robustly: ``Atom`` at margin ``eps`` means the
``eps``-ball around the position is inside the region, ``NegAtom`` means it is
outside (the complement of the ``eps``-bloated region, closed).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .formula import (
    AgentAtom,
    Always,
    And,
    Atom,
    Eventually,
    FalseF,
    Formula,
    MaAnd,
    MaOr,
    NegAtom,
    Not,
    Or,
    Release,
    TrueF,
    Until,
    horizon,
    to_nnf,
    to_text,
)
from .geometry import Polytope, contains, excluded, segment_excluded_intervals, segment_inside_interval
from .trajectory import PwlPath, as_path

INF = math.inf


class MonitorClipWarning(UserWarning):
    """A temporal window reaches past the end of a truncated signal."""


class IntervalSet:
    """Sorted, disjoint, non-adjacent closed intervals (upper ends may be inf)."""

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[Tuple[float, float]] = ()):
        items = sorted((float(a), float(b)) for a, b in intervals if a <= b)
        merged: List[Tuple[float, float]] = []
        for a, b in items:
            if merged and a <= merged[-1][1]:
                if b > merged[-1][1]:
                    merged[-1] = (merged[-1][0], b)
            else:
                merged.append((a, b))
        self.intervals = tuple(merged)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self.intervals == other.intervals

    def __repr__(self) -> str:
        return "IntervalSet(" + ", ".join(f"[{a:g}, {b:g}]" for a, b in self.intervals) + ")"

    def to_list(self):
        return [list(iv) for iv in self.intervals]

    def contains(self, t: float) -> bool:
        for a, b in self.intervals:
            if a <= t <= b:
                return True
            if a > t:
                break
        return False

    def contains_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if not self.intervals:
            return np.zeros(ts.shape, dtype=bool)
        starts = np.array([a for a, _ in self.intervals])
        ends = np.array([b for _, b in self.intervals])
        idx = np.searchsorted(starts, ts, side="right") - 1
        ok = idx >= 0
        out = np.zeros(ts.shape, dtype=bool)
        out[ok] = ts[ok] <= ends[idx[ok]]
        return out

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        A, B = self.intervals, other.intervals
        while i < len(A) and j < len(B):
            lo = max(A[i][0], B[j][0])
            hi = min(A[i][1], B[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if A[i][1] < B[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def clip(self, lo: float, hi: float) -> "IntervalSet":
        return self.intersect(IntervalSet([(lo, hi)]))

    def measure(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def endpoints(self) -> List[float]:
        out = []
        for a, b in self.intervals:
            out.append(a)
            if b < INF:
                out.append(b)
        return out


def _union_all(sets: Iterable[IntervalSet]) -> IntervalSet:
    items = []
    for s in sets:
        items.extend(s.intervals)
    return IntervalSet(items)


# --- predicates -----------------------------------------------------------------


def _seg_time(t0: float, t1: float, lam: float) -> float:
    if lam <= 0.0:
        return t0
    if lam >= 1.0:
        return t1
    return t0 + lam * (t1 - t0)


def predicate_set(path: PwlPath, poly: Polytope, eps: float, negated: bool) -> IntervalSet:
    """Times at which the (robust) predicate holds, on ``[0, inf)``.

    A zero-duration segment contributes its instant only when the whole
    segment satisfies the predicate.
    """
    ts, ps = path.times, path.points
    pieces = []
    holds = (lambda x: excluded(poly, x, eps)) if negated else (lambda x: contains(poly, x, eps))
    if ts[0] > 0 and holds(ps[0]):
        pieces.append((0.0, ts[0]))
    for k in range(path.K):
        t0, t1 = ts[k], ts[k + 1]
        if negated:
            lams = segment_excluded_intervals(ps[k], ps[k + 1], poly, eps)
        else:
            iv = segment_inside_interval(ps[k], ps[k + 1], poly, eps)
            lams = [] if iv is None else [iv]
        if t1 == t0:
            if lams and lams[0][0] <= 0.0 and lams[-1][1] >= 1.0 and len(lams) == 1:
                pieces.append((t0, t0))
            continue
        for lo, hi in lams:
            pieces.append((_seg_time(t0, t1, lo), _seg_time(t0, t1, hi)))
    if holds(ps[-1]):
        pieces.append((ts[-1], INF))
    return IntervalSet(pieces)


# --- temporal operators -----------------------------------------------------------


def eventually_set(S: IntervalSet, a: float, b: float) -> IntervalSet:
    return IntervalSet((max(0.0, s - b), e - a) for s, e in S if e - a >= 0)


def always_set(S: IntervalSet, a: float, b: float) -> IntervalSet:
    return IntervalSet((max(0.0, s - a), e - b) for s, e in S if e - s >= b - a and e - b >= 0)


def until_set(S1: IntervalSet, S2: IntervalSet, a: float, b: float) -> IntervalSet:
    out = []
    for c, d in S1:
        for p, q in S2.clip(c, d):
            lo, hi = max(c, p - b), min(d, q - a)
            if lo <= hi:
                out.append((max(0.0, lo), hi))
    return IntervalSet(out)


def release_set(S1: IntervalSet, S2: IntervalSet, a: float, b: float) -> IntervalSet:
    """Sweep over the gaps of ``S1``: inside a gap ending where ``S1`` resumes
    at ``s``, the first later instant satisfying the left operand is ``s``."""
    box2 = always_set(S2, a, b)
    out = list(S1.intervals)
    gaps = []
    prev = 0.0
    for c, d in S1:
        if c > prev:
            gaps.append((prev, c))
        prev = d
    if prev < INF:
        gaps.append((prev, INF))
    for g_lo, g_hi in gaps:
        if g_hi == INF:
            out.extend(box2.clip(g_lo, INF).intervals)
            continue
        s = g_hi
        out.append((max(g_lo, s - a), g_hi))
        out.extend(box2.clip(g_lo, s - b).intervals)
        for c, d in S2:
            if c <= s <= d:
                lo = max(g_lo, c - a, s - b)
                if lo <= g_hi:
                    out.append((lo, g_hi))
                break
    return IntervalSet((max(0.0, x), y) for x, y in out if y >= 0)


# --- formulas -----------------------------------------------------------------------


def sat_set(phi: Formula, path, eps: float, domain_end: Optional[float] = None,
            regions: Optional[Mapping[str, Polytope]] = None, hold_last: bool = True) -> IntervalSet:
    """Times in ``[0, domain_end]`` at which ``phi`` holds robustly at ``eps``.

    ``domain_end`` defaults to the path's last timestamp. ``regions`` maps the
    region names used in ``phi`` to polytopes.
    """
    path = as_path(path)
    if regions is None:
        raise ValueError("regions are required to evaluate predicates")
    if domain_end is None:
        domain_end = path.end_time
    cut = None
    if not hold_last:
        cut = float(domain_end)
        if horizon(phi) > 0 and horizon(phi) > cut:
            warnings.warn(f"formula horizon {horizon(phi):g} exceeds the signal end {cut:g}", MonitorClipWarning)
    memo = {}
    full = _sat(to_nnf(phi), path, eps, regions, cut, memo)
    return full.clip(0.0, float(domain_end))


def _sat(phi: Formula, path: PwlPath, eps: float, regions, cut, memo) -> IntervalSet:
    hit = memo.get(phi)
    if hit is not None:
        return hit
    top = INF if cut is None else cut
    if isinstance(phi, TrueF):
        out = IntervalSet([(0.0, top)])
    elif isinstance(phi, FalseF):
        out = IntervalSet()
    elif isinstance(phi, (Atom, NegAtom)):
        try:
            poly = regions[phi.region]
        except KeyError:
            raise KeyError(f"unknown region {phi.region!r}") from None
        out = predicate_set(path, poly, eps, isinstance(phi, NegAtom))
        if cut is not None:
            out = out.clip(0.0, cut)
    elif isinstance(phi, And):
        parts = [_sat(c, path, eps, regions, cut, memo) for c in phi.children]
        out = parts[0]
        for p in parts[1:]:
            out = out.intersect(p)
    elif isinstance(phi, Or):
        out = _union_all(_sat(c, path, eps, regions, cut, memo) for c in phi.children)
    elif isinstance(phi, Always):
        out = always_set(_sat(phi.child, path, eps, regions, cut, memo), phi.a, phi.b)
    elif isinstance(phi, Eventually):
        out = eventually_set(_sat(phi.child, path, eps, regions, cut, memo), phi.a, phi.b)
    elif isinstance(phi, Until):
        out = until_set(_sat(phi.left, path, eps, regions, cut, memo),
                        _sat(phi.right, path, eps, regions, cut, memo), phi.a, phi.b)
    elif isinstance(phi, Release):
        S1 = _sat(phi.left, path, eps, regions, cut, memo)
        S2 = _sat(phi.right, path, eps, regions, cut, memo)
        out = release_set(S1, S2, phi.a, phi.b)
    elif isinstance(phi, Not):
        raise ValueError("formula must be in negation normal form")
    else:
        raise TypeError(f"cannot monitor {phi!r}")
    if cut is not None:
        out = out.clip(0.0, cut)
    memo[phi] = out
    return out


def satisfies(phi: Formula, path, eps: float, regions, t: float = 0.0) -> bool:
    path = as_path(path)
    end = max(path.end_time, t)
    return sat_set(phi, path, eps, end, regions).contains(t)


# --- multi-agent check ----------------------------------------------------------------


@dataclass
class AtomReport:
    agent: int
    formula: str
    satisfied: bool

    def to_json(self):
        return {"agent": self.agent, "formula": self.formula, "satisfied": self.satisfied}


@dataclass
class CheckReport:
    satisfied: bool
    per_atom: List[AtomReport] = field(default_factory=list)
    min_clearances: List[dict] = field(default_factory=list)

    def to_json(self):
        return {
            "satisfied": self.satisfied,
            "per_atom": [a.to_json() for a in self.per_atom],
            "min_clearances": self.min_clearances,
        }


def check(psi, paths: Sequence, eps, regions: Mapping[str, Polytope]) -> CheckReport:
    """Evaluate a multi-agent formula at time 0 (agents are 1-based in ``psi``)."""
    paths = [as_path(p) for p in paths]
    n = len(paths)
    eps_list = [float(eps)] * n if np.ndim(eps) == 0 else [float(e) for e in eps]
    report = CheckReport(False)

    def go(node) -> bool:
        if isinstance(node, AgentAtom):
            if not 1 <= node.agent <= n:
                raise KeyError(f"no path for agent {node.agent}")
            p = paths[node.agent - 1]
            ok = sat_set(node.phi, p, eps_list[node.agent - 1], p.end_time, regions).contains(0.0)
            report.per_atom.append(AtomReport(node.agent, to_text(node.phi), ok))
            return ok
        if isinstance(node, MaAnd):
            return all([go(c) for c in node.children])
        if isinstance(node, MaOr):
            return any([go(c) for c in node.children])
        raise TypeError(f"not a multi-agent formula: {node!r}")

    report.satisfied = go(psi)
    return report


# --- clearance --------------------------------------------------------------------------


def min_pairwise_distance(path_a, path_b) -> Tuple[float, float]:
    """Exact minimum Euclidean distance over time, as ``(t*, dist)``.

    Both paths are held at their ends; on each slice between consecutive
    breakpoints the difference is affine in time, so the squared distance is a
    quadratic minimised in closed form.
    """
    A, B = as_path(path_a), as_path(path_b)
    if A.dim != B.dim:
        raise ValueError("paths have different dimensions")
    bps = np.unique(np.concatenate([[0.0], A.times, B.times]))
    bps = bps[bps >= 0.0]
    best_t, best_d2 = 0.0, INF
    for k in range(bps.size):
        t0 = bps[k]
        t1 = bps[k + 1] if k + 1 < bps.size else t0
        # positions at both ends of the slice, taken from inside the slice
        da = _pos_in_slice(A, t0, t1)
        db = _pos_in_slice(B, t0, t1)
        d0 = da[0] - db[0]
        d1 = da[1] - db[1]
        v = d1 - d0
        vv = float(v @ v)
        s = 0.0 if vv == 0.0 else min(1.0, max(0.0, -float(d0 @ v) / vv))
        w = d0 + s * v
        d2 = float(w @ w)
        if d2 < best_d2:
            best_d2, best_t = d2, t0 + s * (t1 - t0)
        # instants with several waypoints (zero-duration segments)
        for P, other in ((A, B), (B, A)):
            same = np.flatnonzero(P.times == t0)
            if same.size > 1:
                q = other.position(t0)
                for i in same:
                    dd = P.points[i] - q
                    if float(dd @ dd) < best_d2:
                        best_d2, best_t = float(dd @ dd), t0
    return best_t, math.sqrt(best_d2)


def _pos_in_slice(P: PwlPath, t0: float, t1: float):
    """Endpoints of ``P`` restricted to ``[t0, t1]`` using the segment that covers it."""
    ts = P.times
    if t0 >= ts[-1]:
        return P.points[-1], P.points[-1]
    if t1 <= ts[0]:
        return P.points[0], P.points[0]
    # last segment with positive duration starting at or before t0
    k = int(np.searchsorted(ts, t0, side="right")) - 1
    k = min(max(k, 0), P.K - 1)
    while k < P.K - 1 and ts[k + 1] <= t0:
        k += 1
    a, b = ts[k], ts[k + 1]
    if b <= a:
        return P.points[k + 1], P.points[k + 1]

    def at(t):
        lam = (t - a) / (b - a)
        return P.points[k] + lam * (P.points[k + 1] - P.points[k])

    return at(t0), at(t1)


def pairwise_clearances(paths: Sequence, sizes: Sequence[float], eps) -> List[dict]:
    paths = [as_path(p) for p in paths]
    n = len(paths)
    eps_list = [float(eps)] * n if np.ndim(eps) == 0 else [float(e) for e in eps]
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            t, d = min_pairwise_distance(paths[i], paths[j])
            need = sizes[i] + sizes[j] + eps_list[i] + eps_list[j]
            out.append({"agents": [i + 1, j + 1], "time": t, "distance": d, "required": need, "ok": bool(d >= need - 1e-6)})
    return out
