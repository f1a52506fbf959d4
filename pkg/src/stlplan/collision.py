"""Pairwise inter-agent separation constraints.

Two segments are safe when their time intervals are disjoint or when their
centres are far enough apart in 1-norm that the segments, inflated by the
required clearance, cannot meet. The 1-norm lower bound is a disjunction over
sign vectors; each segment's half-length is an auxiliary variable shared by
every pair that mentions it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .encoding import PathVars, _per_agent, _pleaf, nonoverlap_lcf
from .lcf import TRUE, LcfArena, LinearExpr

MAX_DIM = 3


@dataclass(frozen=True)
class SegVars:
    """Endpoint expressions of one segment; ``t1=None`` means it never ends."""

    t0: LinearExpr
    t1: Optional[LinearExpr]
    p0: Tuple[LinearExpr, ...]
    p1: Tuple[LinearExpr, ...]
    half: LinearExpr  # upper bound on |p1 - p0|_1 / 2


def sign_vectors(d: int):
    if d > MAX_DIM:
        raise ValueError(f"sign enumeration supports dimension <= {MAX_DIM}, got {d}")
    return list(itertools.product((1.0, -1.0), repeat=d))


def safe_lcf(arena: LcfArena, a: SegVars, b: SegVars, margin: float, pad: float = 0.0) -> int:
    d = len(a.p0)
    if len(b.p0) != d:
        raise ValueError(f"segments have dimensions {d} and {len(b.p0)}")
    if margin <= 0:
        raise ValueError("margin must be positive")
    diff = [0.5 * (a.p0[x] + a.p1[x] - b.p0[x] - b.p1[x]) for x in range(d)]
    thresh = margin * math.sqrt(d)
    alts = [nonoverlap_lcf(arena, a.t0, a.t1, b.t0, b.t1, pad)]
    for sigma in sign_vectors(d):
        e = sum((s * c for s, c in zip(sigma, diff)), LinearExpr()) - a.half - b.half - thresh
        alts.append(_pleaf(arena, e, pad))
    return arena.or_(alts)


class HalfLengths:
    """Shared per-(agent, segment) half-length variables and their bounds."""

    def __init__(self, arena: LcfArena, ws_lo: Sequence[float], ws_hi: Sequence[float]):
        self.arena = arena
        self.cap = 0.5 * float(np.sum(np.asarray(ws_hi, float) - np.asarray(ws_lo, float)))
        self.vars: Dict[Tuple[int, int], int] = {}
        self.constraints = []

    def get(self, path: PathVars, k: int) -> LinearExpr:
        key = (path.agent, k)
        vid = self.vars.get(key)
        if vid is None:
            vid = self.arena.pool.aux(0.0, self.cap)
            self.vars[key] = vid
            L = LinearExpr.var(vid)
            p0, p1 = path.p_expr(k), path.p_expr(k + 1)
            for sigma in sign_vectors(path.dim):
                proj = sum((s * (u - v) for s, u, v in zip(sigma, p0, p1)), LinearExpr())
                self.constraints.append(self.arena.leaf(L - 0.5 * proj))
        return LinearExpr.var(vid)

    def segment(self, path: PathVars, k: int) -> SegVars:
        t0, t1 = path.seg_times(k)
        return SegVars(t0, t1, path.p_expr(k), path.p_expr(k + 1), self.get(path, k))


def encode_inter_agent(arena: LcfArena, paths: Sequence[PathVars], sizes: Sequence[float], eps,
                       ws_lo: Sequence[float], ws_hi: Sequence[float], pad: float = 0.0) -> int:
    """Separation of every agent pair over every pair of segments.

    Clearance for agents ``i, j`` is ``s_i + s_j + eps_i + eps_j`` (``2 eps``
    when tracking errors agree). Returns TRUE for a single agent.
    """
    n = len(paths)
    if len(sizes) != n:
        raise ValueError(f"{n} paths but {len(sizes)} sizes")
    if n < 2:
        return TRUE
    eps_list = _per_agent(eps, n)
    dims = {p.dim for p in paths}
    if len(dims) != 1:
        raise ValueError("all paths must share one dimension")
    sign_vectors(dims.pop())
    halves = HalfLengths(arena, ws_lo, ws_hi)
    terms = []
    for i in range(n):
        for j in range(i + 1, n):
            margin = sizes[i] + sizes[j] + eps_list[i] + eps_list[j]
            for k in range(paths[i].K):
                for l in range(paths[j].K):
                    terms.append(safe_lcf(arena, halves.segment(paths[i], k), halves.segment(paths[j], l), margin, pad))
    return arena.and_(halves.constraints + terms)


def count_pair_terms(num_agents: int, K: Sequence[int]) -> int:
    """Number of ``safe`` conjuncts for the given per-agent segment counts."""
    return sum(K[i] * K[j] for i in range(num_agents) for j in range(i + 1, num_agents))
