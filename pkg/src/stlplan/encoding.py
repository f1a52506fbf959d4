"""STL to linear-constraint-formula encoding over timed waypoint variables.

For a path with waypoints ``(t_k, p_k)``, ``k = 0..K``, the formula
``z_i^phi`` returned by :meth:`StlEncoder.z` certifies that ``phi`` holds at
every instant of segment ``i`` for every trajectory staying within ``eps`` of
the path. The root requirement of a task is ``z_0^phi``.

Two details go beyond the textbook rules:

* The path is assumed to stop at its last waypoint. The last segment is
  therefore treated as the half-line ``[t_{K-1}, inf)`` when it is tested
  against a time window, which keeps windows reaching past ``t_K`` sound.
* With ``pad > 0`` every leaf that mentions a variable must hold with slack
  ``pad`` (leaves whose variables cancel are folded exactly). That turns each
  closed inequality into a strict one, which removes the touching-interval
  corner cases and makes the certificate robust to floating-point noise in
  solver output. The duration guard of the eventually/until rules is exempt.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

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
)
from .geometry import Polytope
from .lcf import CONTINUOUS, FALSE, TRUE, LcfArena, LinearExpr, VarPool

# slack used by the planner on every non-constant leaf; it has to exceed the
# feasibility tolerance of whatever solver produced the assignment
ROBUST_PAD = 1e-4


@dataclass
class PathVars:
    """Waypoint variables of one agent (``agent`` is 0-based)."""

    agent: int
    t: List[int]
    p: List[Tuple[int, ...]]

    def __post_init__(self):
        if len(self.t) != len(self.p) or len(self.t) < 2:
            raise ValueError("PathVars needs K+1 >= 2 time and position variables")

    @property
    def K(self) -> int:
        return len(self.t) - 1

    @property
    def dim(self) -> int:
        return len(self.p[0])

    def t_expr(self, k: int) -> LinearExpr:
        return LinearExpr.var(self.t[k])

    def p_expr(self, k: int) -> Tuple[LinearExpr, ...]:
        return tuple(LinearExpr.var(v) for v in self.p[k])

    def seg_times(self, j: int) -> Tuple[LinearExpr, Optional[LinearExpr]]:
        """Start and end of segment ``j``; the last one never ends (``None``)."""
        end = None if j == self.K - 1 else self.t_expr(j + 1)
        return self.t_expr(j), end


def make_path_vars(pool: VarPool, agent: int, K: int, dim: int, T: float, lo: Sequence[float], hi: Sequence[float]) -> PathVars:
    if K < 1:
        raise ValueError(f"need at least one segment, got K={K}")
    t = [pool.add(f"t_{agent}_{k}", CONTINUOUS, 0.0, T) for k in range(K + 1)]
    p = [
        tuple(pool.add(f"p_{agent}_{k}_{ax}", CONTINUOUS, lo[ax], hi[ax]) for ax in range(dim))
        for k in range(K + 1)
    ]
    return PathVars(agent, t, p)


def _pleaf(arena: LcfArena, e: LinearExpr, pad: float) -> int:
    if e.is_constant():
        return arena.leaf(e)
    return arena.leaf(e - pad) if pad else arena.leaf(e)


def overlap_lcf(arena: LcfArena, l1, u1, l2, u2, pad: float = 0.0) -> int:
    """``[l1, u1]`` meets ``[l2, u2]``; an upper end of ``None`` means +inf."""
    parts = []
    if u2 is not None:
        parts.append(_pleaf(arena, u2 - l1, pad))
    if u1 is not None:
        parts.append(_pleaf(arena, u1 - l2, pad))
    return arena.and_(parts) if parts else TRUE


def nonoverlap_lcf(arena: LcfArena, l1, u1, l2, u2, pad: float = 0.0) -> int:
    """``[l1, u1]`` and ``[l2, u2]`` are separated (closed when ``pad == 0``)."""
    parts = []
    if u2 is not None:
        parts.append(_pleaf(arena, l1 - u2, pad))
    if u1 is not None:
        parts.append(_pleaf(arena, l2 - u1, pad))
    return arena.or_(parts) if parts else FALSE


def _face_leaves(arena, poly: Polytope, pvars, eps: float, pad: float, outside: bool):
    out = []
    for j in range(poly.num_faces):
        hx = LinearExpr(zip(pvars, poly.H[j]))
        off = eps * poly.row_norms[j]
        e = hx - (poly.b[j] + off) if outside else (poly.b[j] - off) - hx
        out.append(_pleaf(arena, e, pad))
    return out


def encode_atomic(arena: LcfArena, path: PathVars, k: int, poly: Polytope, eps: float, pad: float = 0.0) -> int:
    """Both endpoints of segment ``k`` lie in the ``eps``-shrunk polytope."""
    _check_poly(path, poly)
    a = _face_leaves(arena, poly, path.p[k], eps, pad, outside=False)
    b = _face_leaves(arena, poly, path.p[k + 1], eps, pad, outside=False)
    return arena.and_(a + b)


def encode_neg_atomic(arena: LcfArena, path: PathVars, k: int, poly: Polytope, eps: float, pad: float = 0.0) -> int:
    """Both endpoints of segment ``k`` lie beyond one common face, bloated by ``eps``."""
    _check_poly(path, poly)
    a = _face_leaves(arena, poly, path.p[k], eps, pad, outside=True)
    b = _face_leaves(arena, poly, path.p[k + 1], eps, pad, outside=True)
    return arena.or_([arena.and_([x, y]) for x, y in zip(a, b)])


def _check_poly(path: PathVars, poly: Polytope):
    if poly.dim != path.dim:
        raise ValueError(f"region has dimension {poly.dim}, path has dimension {path.dim}")


class ZCache:
    """Memo of ``z_i^phi`` node ids keyed by (formula, segment index)."""

    def __init__(self):
        self._map: Dict[Tuple[Formula, int], int] = {}

    def __len__(self) -> int:
        return len(self._map)

    def __contains__(self, key) -> bool:
        return key in self._map

    def get(self, phi: Formula, i: int) -> Optional[int]:
        return self._map.get((phi, i))

    def put(self, phi: Formula, i: int, nid: int) -> int:
        key = (phi, i)
        if key in self._map and self._map[key] != nid:
            raise RuntimeError("z-cache entry rebuilt with a different node")
        self._map[key] = nid
        return nid

    def items(self):
        return self._map.items()


class StlEncoder:
    """Builds the ``z_i^phi`` formulas of one agent's path into ``arena``."""

    def __init__(self, arena: LcfArena, path: PathVars, regions: Mapping[str, Polytope], eps: float,
                 cache: Optional[ZCache] = None, pad: float = 0.0):
        if eps < 0:
            raise ValueError("eps must be non-negative")
        self.arena = arena
        self.path = path
        self.regions = regions
        self.eps = float(eps)
        self.pad = float(pad)
        self.cache = cache if cache is not None else ZCache()

    def encode(self, phi: Formula) -> int:
        """Fill the cache for every segment and return ``z_0^phi``."""
        for i in range(self.path.K):
            self.z(phi, i)
        return self.z(phi, 0)

    def z(self, phi: Formula, i: int) -> int:
        hit = self.cache.get(phi, i)
        if hit is not None:
            return hit
        return self.cache.put(phi, i, self._build(phi, i))

    def _region(self, name: str) -> Polytope:
        try:
            return self.regions[name]
        except KeyError:
            raise KeyError(f"unknown region {name!r}") from None

    def _build(self, phi: Formula, i: int) -> int:
        A = self.arena
        P = self.path
        K = P.K
        pad = self.pad
        if isinstance(phi, TrueF):
            return TRUE
        if isinstance(phi, FalseF):
            return FALSE
        if isinstance(phi, Atom):
            return encode_atomic(A, P, i, self._region(phi.region), self.eps, pad)
        if isinstance(phi, NegAtom):
            return encode_neg_atomic(A, P, i, self._region(phi.region), self.eps, pad)
        if isinstance(phi, And):
            return A.and_([self.z(c, i) for c in phi.children])
        if isinstance(phi, Or):
            return A.or_([self.z(c, i) for c in phi.children])
        if isinstance(phi, Not):
            raise ValueError("formula must be in negation normal form")

        ti, ti1 = P.t_expr(i), P.t_expr(i + 1)
        a, b = phi.a, phi.b
        if isinstance(phi, Always):
            lo, hi = ti + a, ti1 + b
            terms = []
            for j in range(K):
                lj, uj = P.seg_times(j)
                terms.append(A.or_([nonoverlap_lcf(A, lj, uj, lo, hi, pad), self.z(phi.child, j)]))
            return A.and_(terms)

        guard = A.leaf((b - a) - (ti1 - ti))
        if isinstance(phi, Eventually):
            lo, hi = ti1 + a, ti + b
            opts = []
            for j in range(K):
                lj, uj = P.seg_times(j)
                opts.append(A.and_([overlap_lcf(A, lj, uj, lo, hi, pad), self.z(phi.child, j)]))
            return A.and_([guard, A.or_(opts)])

        if isinstance(phi, Until):
            lo, hi = ti1 + a, ti + b
            hold_lo, hold_hi = ti, ti1 + b
            holds = []
            for l in range(K):
                ll, ul = P.seg_times(l)
                holds.append(A.or_([nonoverlap_lcf(A, ll, ul, hold_lo, hold_hi, pad), self.z(phi.left, l)]))
            opts = []
            for j in range(K):
                lj, uj = P.seg_times(j)
                opts.append(A.and_([
                    overlap_lcf(A, lj, uj, lo, hi, pad),
                    self.z(phi.right, j),
                    A.and_(holds[: j + 1]),
                ]))
            return A.and_([guard, A.or_(opts)])

        if isinstance(phi, Release):
            lo, hi = ti + a, ti1 + b
            rel_lo, rel_hi = ti1, ti1 + b
            early = []
            for l in range(K):
                ll, ul = P.seg_times(l)
                early.append(A.and_([overlap_lcf(A, ll, ul, rel_lo, rel_hi, pad), self.z(phi.left, l)]))
            terms = []
            for j in range(K):
                lj, uj = P.seg_times(j)
                alts = [nonoverlap_lcf(A, lj, uj, lo, hi, pad), self.z(phi.right, j)]
                alts.extend(early[:j])
                terms.append(A.or_(alts))
            return A.and_(terms)

        raise TypeError(f"cannot encode {phi!r}")


def encode(arena: LcfArena, phi: Formula, path: PathVars, regions: Mapping[str, Polytope], eps: float,
           cache: Optional[ZCache] = None, pad: float = 0.0) -> int:
    """``z_0^phi`` for one path; ``cache`` ends up holding ``z_i`` of every subformula and segment."""
    return StlEncoder(arena, path, regions, eps, cache, pad).encode(phi)


def encode_ma(arena: LcfArena, psi, paths: Sequence[PathVars], regions: Mapping[str, Polytope], eps,
              caches: Optional[Dict[int, ZCache]] = None, pad: float = 0.0) -> int:
    """Replace each ``A<i>(phi)`` by ``z_0^phi`` on agent ``i``'s path.

    ``eps`` is a scalar or one value per agent. ``caches`` maps 0-based agent
    index to that agent's :class:`ZCache` and is filled in place.
    """
    eps_list = _per_agent(eps, len(paths))
    caches = caches if caches is not None else {}
    encoders: Dict[int, StlEncoder] = {}

    def go(node) -> int:
        if isinstance(node, AgentAtom):
            idx = node.agent - 1
            if idx >= len(paths):
                raise KeyError(f"no path variables for agent {node.agent}")
            enc = encoders.get(idx)
            if enc is None:
                cache = caches.setdefault(idx, ZCache())
                enc = encoders[idx] = StlEncoder(arena, paths[idx], regions, eps_list[idx], cache, pad)
            return enc.encode(node.phi)
        if isinstance(node, MaAnd):
            return arena.and_([go(c) for c in node.children])
        if isinstance(node, MaOr):
            return arena.or_([go(c) for c in node.children])
        raise TypeError(f"not a multi-agent formula: {node!r}")

    return go(psi)


def _per_agent(value, n: int) -> List[float]:
    if np.ndim(value) == 0:
        return [float(value)] * n
    out = [float(v) for v in value]
    if len(out) != n:
        raise ValueError(f"expected {n} per-agent values, got {len(out)}")
    return out
