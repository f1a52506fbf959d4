"""Convex polytopes in half-space form and point/segment containment tests.

All inequalities are closed. Margins are scaled by the Euclidean norm of each
face normal, so ``contains(P, x, m)`` means the ball of radius ``m`` around
``x`` lies inside ``P`` and ``excluded(P, x, m)`` certifies the same ball lies
outside one face of ``P``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np


class Polytope:
    """``{x : H x <= b}`` with cached row norms."""

    __slots__ = ("H", "b", "row_norms")

    def __init__(self, H, b):
        H = np.array(H, dtype=float)
        b = np.array(b, dtype=float).reshape(-1)
        if H.ndim != 2 or H.shape[0] < 1 or H.shape[1] < 1:
            raise ValueError(f"H must be a non-empty 2-D array, got shape {H.shape}")
        if b.shape[0] != H.shape[0]:
            raise ValueError(f"H has {H.shape[0]} rows but b has {b.shape[0]} entries")
        norms = np.linalg.norm(H, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("every face normal (row of H) must be nonzero")
        H.setflags(write=False)
        b.setflags(write=False)
        norms.setflags(write=False)
        self.H = H
        self.b = b
        self.row_norms = norms

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    @property
    def num_faces(self) -> int:
        return self.H.shape[0]

    def __repr__(self) -> str:
        return f"Polytope(faces={self.num_faces}, dim={self.dim})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polytope):
            return NotImplemented
        return np.array_equal(self.H, other.H) and np.array_equal(self.b, other.b)

    def __hash__(self) -> int:
        return hash((self.H.tobytes(), self.b.tobytes()))

    def to_json(self) -> dict:
        return {"H": self.H.tolist(), "b": self.b.tolist()}

    def bounding_box(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Axis-aligned bounds when the polytope was built by :func:`box`."""
        d = self.dim
        if self.num_faces != 2 * d:
            return None
        eye = np.eye(d)
        if np.array_equal(self.H[:d], eye) and np.array_equal(self.H[d:], -eye):
            return -self.b[d:].copy(), self.b[:d].copy()
        return None


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned bounding box of all reachable positions."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("workspace lo/hi must be non-empty and of equal length")
        if any(l >= h for l, h in zip(lo, hi)):
            raise ValueError(f"workspace needs lo < hi componentwise, got {lo} and {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= np.asarray(self.lo)) and np.all(x <= np.asarray(self.hi)))


def box(lo: Sequence[float], hi: Sequence[float]) -> Polytope:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise ValueError("box corners must be 1-D and of equal length")
    if np.any(lo >= hi):
        raise ValueError(f"degenerate box: need lo < hi componentwise, got {lo} and {hi}")
    d = lo.shape[0]
    eye = np.eye(d)
    return Polytope(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))


def polytope_from_json(obj) -> Polytope:
    """Accepts ``{"H": ..., "b": ...}`` or ``{"box": {"lo": ..., "hi": ...}}``."""
    if not isinstance(obj, dict):
        raise ValueError("polytope must be a JSON object")
    if "box" in obj:
        spec = obj["box"]
        return box(spec["lo"], spec["hi"])
    if "H" in obj and "b" in obj:
        return Polytope(obj["H"], obj["b"])
    raise ValueError('polytope needs either "H" and "b" or "box"')


def _check_dim(poly: Polytope, x: np.ndarray):
    if x.shape != (poly.dim,):
        raise ValueError(f"point has shape {x.shape}, polytope dimension is {poly.dim}")


def face_slack(poly: Polytope, x, margin: float = 0.0) -> np.ndarray:
    """Per-face value of ``b_j - H_j x - margin * |H_j|``."""
    x = np.asarray(x, dtype=float)
    _check_dim(poly, x)
    return poly.b - poly.H @ x - margin * poly.row_norms


def contains(poly: Polytope, x, margin: float = 0.0) -> bool:
    return bool(np.all(face_slack(poly, x, margin) >= 0.0))


def excluded(poly: Polytope, x, margin: float = 0.0) -> bool:
    x = np.asarray(x, dtype=float)
    _check_dim(poly, x)
    return bool(np.any(poly.H @ x - poly.b - margin * poly.row_norms >= 0.0))


def signed_distance_to_faces(poly: Polytope, x) -> float:
    """min_j (b_j - H_j x) / |H_j|: the inscribed-ball radius at x (negative outside)."""
    x = np.asarray(x, dtype=float)
    _check_dim(poly, x)
    return float(np.min((poly.b - poly.H @ x) / poly.row_norms))


def segment_inside_interval(p1, p2, poly: Polytope, margin: float = 0.0) -> Optional[Tuple[float, float]]:
    """Maximal ``[lo, hi]`` in [0, 1] on which ``p1 + lam (p2 - p1)`` lies in the
    margin-shrunk polytope, or ``None`` when there is no such ``lam``."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    _check_dim(poly, p1)
    _check_dim(poly, p2)
    # each face: slope * lam <= rhs
    rhs = poly.b - margin * poly.row_norms - poly.H @ p1
    slope = poly.H @ (p2 - p1)
    lo, hi = 0.0, 1.0
    for s, r in zip(slope, rhs):
        if s > 0.0:
            hi = min(hi, r / s)
        elif s < 0.0:
            lo = max(lo, r / s)
        elif r < 0.0:
            return None
    if lo > hi:
        return None
    return lo, hi


def segment_excluded_intervals(p1, p2, poly: Polytope, margin: float = 0.0):
    """Sorted, merged ``lam`` intervals in [0, 1] where the point is excluded
    from the margin-bloated polytope (union over faces)."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    _check_dim(poly, p1)
    _check_dim(poly, p2)
    # each face: slope * lam >= rhs
    rhs = poly.b + margin * poly.row_norms - poly.H @ p1
    slope = poly.H @ (p2 - p1)
    pieces = []
    for s, r in zip(slope, rhs):
        if s > 0.0:
            lo, hi = max(0.0, r / s), 1.0
        elif s < 0.0:
            lo, hi = 0.0, min(1.0, r / s)
        elif r <= 0.0:
            lo, hi = 0.0, 1.0
        else:
            continue
        if lo <= hi:
            pieces.append((lo, hi))
    pieces.sort()
    merged = []
    for lo, hi in pieces:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged
