"""Linear constraint formulas: AND-OR DAGs whose leaves are ``expr >= 0``.

Nodes live in an :class:`LcfArena` and are referred to by integer id. The
arena hash-conses every node, so structurally equal subformulas always get the
same id, and children are always created before their parents (ids are a
topological order).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"


@dataclass(frozen=True)
class Var:
    id: int
    name: str
    kind: str
    lo: float
    hi: float


class VarPool:
    """Declared variables with deterministic names.

    Path variables are named ``t_{i}_{k}`` and ``p_{i}_{k}_{axis}``; anonymous
    continuous helpers get ``aux_{n}`` and binaries ``z_{n}``, numbered in
    creation order.
    """

    def __init__(self):
        self.vars: list = []
        self.by_name: Dict[str, int] = {}
        self._aux = 0
        self._bin = 0

    def __len__(self) -> int:
        return len(self.vars)

    def __getitem__(self, vid: int) -> Var:
        return self.vars[vid]

    def add(self, name: str, kind: str = CONTINUOUS, lo: float = -np.inf, hi: float = np.inf) -> int:
        if name in self.by_name:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind not in (CONTINUOUS, BINARY):
            raise ValueError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lo, hi = 0.0, 1.0
        if lo > hi:
            raise ValueError(f"variable {name!r} has empty bounds [{lo}, {hi}]")
        vid = len(self.vars)
        self.vars.append(Var(vid, name, kind, float(lo), float(hi)))
        self.by_name[name] = vid
        return vid

    def aux(self, lo: float = -np.inf, hi: float = np.inf) -> int:
        name = f"aux_{self._aux}"
        self._aux += 1
        return self.add(name, CONTINUOUS, lo, hi)

    def binary(self) -> int:
        name = f"z_{self._bin}"
        self._bin += 1
        return self.add(name, BINARY)

    def set_bounds(self, vid: int, lo: float, hi: float):
        v = self.vars[vid]
        if v.kind == BINARY and (lo, hi) not in ((0, 0), (0, 1), (1, 1)):
            raise ValueError("binary variables only accept bounds within {0, 1}")
        if lo > hi:
            raise ValueError(f"variable {v.name!r} has empty bounds [{lo}, {hi}]")
        self.vars[vid] = Var(v.id, v.name, v.kind, float(lo), float(hi))

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.array([v.lo for v in self.vars], dtype=float)
        hi = np.array([v.hi for v in self.vars], dtype=float)
        return lo, hi

    def names(self):
        return [v.name for v in self.vars]


class LinearExpr:
    """``sum(coef * var) + constant`` with zero coefficients dropped.

    Immutable and hashable; terms are kept sorted by variable id.
    """

    __slots__ = ("terms", "constant", "_hash")

    def __init__(self, terms: Union[Mapping[int, float], Iterable[Tuple[int, float]]] = (), constant: float = 0.0):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: Dict[int, float] = {}
        for vid, c in items:
            acc[vid] = acc.get(vid, 0.0) + float(c)
        self.terms = tuple(sorted((v, c) for v, c in acc.items() if c != 0.0))
        self.constant = float(constant)
        self._hash = hash((self.terms, self.constant))

    @staticmethod
    def var(vid: int, coef: float = 1.0) -> "LinearExpr":
        return LinearExpr(((vid, coef),))

    @staticmethod
    def const(c: float) -> "LinearExpr":
        return LinearExpr((), c)

    def is_constant(self) -> bool:
        return not self.terms

    def variables(self):
        return [v for v, _ in self.terms]

    def _coerce(self, other) -> "LinearExpr":
        if isinstance(other, LinearExpr):
            return other
        return LinearExpr((), float(other))

    def __add__(self, other) -> "LinearExpr":
        o = self._coerce(other)
        return LinearExpr(self.terms + o.terms, self.constant + o.constant)

    __radd__ = __add__

    def __neg__(self) -> "LinearExpr":
        return LinearExpr([(v, -c) for v, c in self.terms], -self.constant)

    def __sub__(self, other) -> "LinearExpr":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "LinearExpr":
        return self._coerce(other) - self

    def __mul__(self, k) -> "LinearExpr":
        k = float(k)
        return LinearExpr([(v, c * k) for v, c in self.terms], self.constant * k)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, LinearExpr) and self.terms == other.terms and self.constant == other.constant

    def __hash__(self) -> int:
        return self._hash

    def evaluate(self, assignment) -> float:
        total = self.constant
        for vid, c in self.terms:
            total += c * _lookup(assignment, vid)
        return total

    def bounds(self, lo: np.ndarray, hi: np.ndarray) -> Tuple[float, float]:
        """Interval-arithmetic range over the box ``[lo, hi]``."""
        mn = mx = self.constant
        for vid, c in self.terms:
            if c > 0:
                mn += c * lo[vid]
                mx += c * hi[vid]
            else:
                mn += c * hi[vid]
                mx += c * lo[vid]
        return mn, mx

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        parts = []
        for vid, c in self.terms:
            nm = names[vid] if names is not None else f"v{vid}"
            parts.append(f"{c:+g}*{nm}")
        if self.constant or not parts:
            parts.append(f"{self.constant:+g}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"LinearExpr({self.format()})"


def _lookup(assignment, vid: int) -> float:
    try:
        return float(assignment[vid])
    except (KeyError, IndexError):
        raise KeyError(f"assignment has no value for variable {vid}") from None


TRUE = 0
FALSE = 1


class LcfArena:
    """Hash-consed store of LCF nodes over the variables of ``pool``."""

    def __init__(self, pool: Optional[VarPool] = None):
        self.pool = pool if pool is not None else VarPool()
        self.nodes: list = [("true",), ("false",)]
        self._index: Dict[tuple, int] = {("true",): TRUE, ("false",): FALSE}

    def __len__(self) -> int:
        return len(self.nodes)

    def _intern(self, key: tuple) -> int:
        nid = self._index.get(key)
        if nid is None:
            nid = len(self.nodes)
            self.nodes.append(key)
            self._index[key] = nid
        return nid

    def kind(self, nid: int) -> str:
        return self.nodes[nid][0]

    def children(self, nid: int) -> Tuple[int, ...]:
        node = self.nodes[nid]
        return node[1] if node[0] in ("and", "or") else ()

    def expr(self, nid: int) -> LinearExpr:
        node = self.nodes[nid]
        if node[0] != "leaf":
            raise ValueError(f"node {nid} is not a leaf")
        return node[1]

    # constructors
    def leaf(self, e: LinearExpr) -> int:
        """``e >= 0``; constant expressions fold to TRUE/FALSE."""
        if e.is_constant():
            return TRUE if e.constant >= 0 else FALSE
        return self._intern(("leaf", e))

    def ge(self, lhs, rhs) -> int:
        return self.leaf(_as_expr(lhs) - _as_expr(rhs))

    def le(self, lhs, rhs) -> int:
        return self.leaf(_as_expr(rhs) - _as_expr(lhs))

    def _nary(self, kind: str, children: Iterable[int]) -> int:
        absorbing, identity = (FALSE, TRUE) if kind == "and" else (TRUE, FALSE)
        flat = []
        seen = set()
        count = 0
        for c in children:
            count += 1
            if c == absorbing:
                return absorbing
            if c == identity:
                continue
            node = self.nodes[c]
            subs = node[1] if node[0] == kind else (c,)
            for s in subs:
                if s not in seen:
                    seen.add(s)
                    flat.append(s)
        if count == 0:
            raise ValueError(f"{kind}_ needs at least one child")
        if not flat:
            return identity
        if len(flat) == 1:
            return flat[0]
        return self._intern((kind, tuple(flat)))

    def and_(self, children: Iterable[int]) -> int:
        return self._nary("and", children)

    def or_(self, children: Iterable[int]) -> int:
        return self._nary("or", children)

    # queries
    def reachable(self, root: int):
        """Ids reachable from ``root`` in increasing (topological) order."""
        seen = {root}
        stack = [root]
        while stack:
            n = stack.pop()
            for c in self.children(n):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return sorted(seen)

    def variables(self, root: int):
        out = set()
        for n in self.reachable(root):
            if self.nodes[n][0] == "leaf":
                out.update(self.nodes[n][1].variables())
        return sorted(out)

    def count_nodes(self, root: int) -> Dict[str, int]:
        counts = {"and": 0, "or": 0, "leaf": 0, "or_children": 0}
        for n in self.reachable(root):
            k = self.nodes[n][0]
            if k in counts:
                counts[k] += 1
            if k == "or":
                counts["or_children"] += len(self.nodes[n][1])
        return counts

    def eval(self, root: int, assignment, tol: float = 0.0) -> bool:
        """Truth of ``root``; a leaf holds when its value is at least ``-tol``."""
        memo: Dict[int, bool] = {}
        nodes = self.nodes

        def go(n: int) -> bool:
            r = memo.get(n)
            if r is not None:
                return r
            node = nodes[n]
            k = node[0]
            if k == "leaf":
                r = node[1].evaluate(assignment) >= -tol
            elif k == "and":
                r = all(go(c) for c in node[1])
            elif k == "or":
                r = any(go(c) for c in node[1])
            else:
                r = k == "true"
            memo[n] = r
            return r

        return go(root)

    def dump(self, root: int, names: Optional[Sequence[str]] = None) -> str:
        """Indented text rendering; a node already printed is shown as ``@id``."""
        if names is None:
            names = self.pool.names()
        lines = []
        printed = set()

        def go(n: int, depth: int):
            pad = "  " * depth
            node = self.nodes[n]
            if n in printed and node[0] in ("and", "or"):
                lines.append(f"{pad}@{n}")
                return
            printed.add(n)
            if node[0] == "leaf":
                lines.append(f"{pad}#{n} {node[1].format(names)} >= 0")
            elif node[0] in ("and", "or"):
                lines.append(f"{pad}#{n} {node[0].upper()}")
                for c in node[1]:
                    go(c, depth + 1)
            else:
                lines.append(f"{pad}#{n} {node[0].upper()}")

        go(root, 0)
        return "\n".join(lines) + "\n"


def _as_expr(x) -> LinearExpr:
    return x if isinstance(x, LinearExpr) else LinearExpr.const(float(x))


def eval_lcf(arena: LcfArena, root: int, assignment, tol: float = 0.0) -> bool:
    return arena.eval(root, assignment, tol)


def count_nodes(arena: LcfArena, root: int) -> Dict[str, int]:
    return arena.count_nodes(root)
