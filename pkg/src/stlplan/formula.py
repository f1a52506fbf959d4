"""STL and multi-agent STL syntax trees.

Formulas are immutable, hashable dataclasses, so structurally equal subtrees
compare and hash equal; the encoder relies on that to memoize per-segment
constraint formulas. ``Not`` only exists before :func:`to_nnf` is applied.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Tuple, Union


class Formula:
    """Base class of single-agent STL nodes."""

    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return conj(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return disj(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    region: str


@dataclass(frozen=True)
class NegAtom(Formula):
    region: str


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: Tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    children: Tuple[Formula, ...]


def _check_interval(a: float, b: float):
    if not (0.0 <= a <= b < float("inf")):
        raise ValueError(f"temporal interval needs 0 <= a <= b < inf, got [{a}, {b}]")


@dataclass(frozen=True)
class Always(Formula):
    a: float
    b: float
    child: Formula

    def __post_init__(self):
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class Eventually(Formula):
    a: float
    b: float
    child: Formula

    def __post_init__(self):
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class Until(Formula):
    a: float
    b: float
    left: Formula
    right: Formula

    def __post_init__(self):
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class Release(Formula):
    a: float
    b: float
    left: Formula
    right: Formula

    def __post_init__(self):
        _check_interval(self.a, self.b)


TEMPORAL = (Always, Eventually, Until, Release)


def _flatten(kind, items: Iterable[Formula]) -> Tuple[Formula, ...]:
    out = []
    for f in items:
        if isinstance(f, kind):
            out.extend(f.children)
        else:
            out.append(f)
    return tuple(out)


def conj(*items: Formula) -> Formula:
    children = _flatten(And, items)
    if not children:
        raise ValueError("conjunction needs at least one operand")
    return children[0] if len(children) == 1 else And(children)


def disj(*items: Formula) -> Formula:
    children = _flatten(Or, items)
    if not children:
        raise ValueError("disjunction needs at least one operand")
    return children[0] if len(children) == 1 else Or(children)


def to_nnf(f: Formula, negate: bool = False) -> Formula:
    """Push negations down to the atoms by duality."""
    if isinstance(f, Not):
        return to_nnf(f.child, not negate)
    if isinstance(f, TrueF):
        return FalseF() if negate else f
    if isinstance(f, FalseF):
        return TrueF() if negate else f
    if isinstance(f, Atom):
        return NegAtom(f.region) if negate else f
    if isinstance(f, NegAtom):
        return Atom(f.region) if negate else f
    if isinstance(f, And):
        parts = [to_nnf(c, negate) for c in f.children]
        return disj(*parts) if negate else conj(*parts)
    if isinstance(f, Or):
        parts = [to_nnf(c, negate) for c in f.children]
        return conj(*parts) if negate else disj(*parts)
    if isinstance(f, Always):
        cls = Eventually if negate else Always
        return cls(f.a, f.b, to_nnf(f.child, negate))
    if isinstance(f, Eventually):
        cls = Always if negate else Eventually
        return cls(f.a, f.b, to_nnf(f.child, negate))
    if isinstance(f, Until):
        cls = Release if negate else Until
        return cls(f.a, f.b, to_nnf(f.left, negate), to_nnf(f.right, negate))
    if isinstance(f, Release):
        cls = Until if negate else Release
        return cls(f.a, f.b, to_nnf(f.left, negate), to_nnf(f.right, negate))
    raise TypeError(f"not an STL formula: {f!r}")


def is_nnf(f: Formula) -> bool:
    if isinstance(f, Not):
        return False
    return all(is_nnf(c) for c in subformulas(f))


def subformulas(f: Formula) -> Tuple[Formula, ...]:
    """Immediate children."""
    if isinstance(f, (And, Or)):
        return f.children
    if isinstance(f, (Always, Eventually, Not)):
        return (f.child,)
    if isinstance(f, (Until, Release)):
        return (f.left, f.right)
    return ()


def formula_size(f: Formula) -> int:
    """Number of operator nodes; atoms and constants count 0."""
    if isinstance(f, (Atom, NegAtom, TrueF, FalseF)):
        return 0
    return 1 + sum(formula_size(c) for c in subformulas(f))


def horizon(f: Formula) -> float:
    """Length of the future window the formula can look at."""
    if isinstance(f, (Always, Eventually, Until, Release)):
        return f.b + max(horizon(c) for c in subformulas(f))
    kids = subformulas(f)
    return max((horizon(c) for c in kids), default=0.0)


def regions_of(f) -> set:
    if isinstance(f, (Atom, NegAtom)):
        return {f.region}
    if isinstance(f, AgentAtom):
        return regions_of(f.phi)
    if isinstance(f, (MaAnd, MaOr)):
        return set().union(*(regions_of(c) for c in f.children))
    return set().union(set(), *(regions_of(c) for c in subformulas(f)))


# --- multi-agent level ------------------------------------------------------


@dataclass(frozen=True)
class AgentAtom:
    """Binds formula ``phi`` to agent ``agent`` (1-based)."""

    agent: int
    phi: Formula

    def __post_init__(self):
        if self.agent < 1:
            raise ValueError(f"agent indices are 1-based, got {self.agent}")


@dataclass(frozen=True)
class MaAnd:
    children: Tuple["MaFormula", ...]


@dataclass(frozen=True)
class MaOr:
    children: Tuple["MaFormula", ...]


MaFormula = Union[AgentAtom, MaAnd, MaOr]


def ma_conj(*items: MaFormula) -> MaFormula:
    out = []
    for f in items:
        out.extend(f.children if isinstance(f, MaAnd) else [f])
    if not out:
        raise ValueError("conjunction needs at least one operand")
    return out[0] if len(out) == 1 else MaAnd(tuple(out))


def ma_disj(*items: MaFormula) -> MaFormula:
    out = []
    for f in items:
        out.extend(f.children if isinstance(f, MaOr) else [f])
    if not out:
        raise ValueError("disjunction needs at least one operand")
    return out[0] if len(out) == 1 else MaOr(tuple(out))


def agents_of(psi: MaFormula) -> set:
    if isinstance(psi, AgentAtom):
        return {psi.agent}
    return set().union(*(agents_of(c) for c in psi.children))


def agent_atoms(psi: MaFormula):
    """All agent atoms, left to right (duplicates kept)."""
    if isinstance(psi, AgentAtom):
        return [psi]
    out = []
    for c in psi.children:
        out.extend(agent_atoms(c))
    return out


# --- printing ---------------------------------------------------------------


def _num(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def to_text(f) -> str:
    """Render in the surface syntax accepted by :func:`stlplan.parser.parse_spec`."""
    if isinstance(f, AgentAtom):
        return f"A{f.agent}({to_text(f.phi)})"
    if isinstance(f, MaAnd):
        return "(" + " & ".join(to_text(c) for c in f.children) + ")"
    if isinstance(f, MaOr):
        return "(" + " | ".join(to_text(c) for c in f.children) + ")"
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        return f.region
    if isinstance(f, NegAtom):
        return "!" + f.region
    if isinstance(f, Not):
        return "!(" + to_text(f.child) + ")"
    if isinstance(f, And):
        return "(" + " & ".join(to_text(c) for c in f.children) + ")"
    if isinstance(f, Or):
        return "(" + " | ".join(to_text(c) for c in f.children) + ")"
    if isinstance(f, Always):
        return f"G[{_num(f.a)},{_num(f.b)}] ({to_text(f.child)})"
    if isinstance(f, Eventually):
        return f"F[{_num(f.a)},{_num(f.b)}] ({to_text(f.child)})"
    if isinstance(f, Until):
        return f"(({to_text(f.left)}) U[{_num(f.a)},{_num(f.b)}] ({to_text(f.right)}))"
    if isinstance(f, Release):
        return f"(({to_text(f.left)}) R[{_num(f.a)},{_num(f.b)}] ({to_text(f.right)}))"
    raise TypeError(f"cannot print {f!r}")


RegionTable = Dict[str, "object"]
