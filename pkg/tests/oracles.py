"""Reference implementations the tests compare the package against.

Everything here is deliberately naive: brute-force enumeration, dense time
sampling, scipy's LP solver. None of it imports the code under test except for
plain data types (formula nodes, paths, polytopes).
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from stlplan.formula import (
    Always,
    And,
    Atom,
    Eventually,
    FalseF,
    NegAtom,
    Or,
    Release,
    TrueF,
    Until,
    horizon,
)
from stlplan.geometry import box
from stlplan.trajectory import PwlPath


# --- STL by dense sampling ------------------------------------------------------


def _window(S, ra, rb):
    """For each index i, the (lo, hi, count of true) over S[i+ra .. i+rb]."""
    N = S.size
    P = np.concatenate([[0], np.cumsum(S, dtype=np.int64)])
    i = np.arange(N)
    lo = np.minimum(i + ra, N)
    hi = np.minimum(i + rb, N - 1)
    cnt = np.where(hi >= lo, P[np.maximum(hi, lo - 1) + 1] - P[lo], 0)
    return lo, hi, cnt


def _range_count(S, lo, hi):
    P = np.concatenate([[0], np.cumsum(S, dtype=np.int64)])
    lo = np.minimum(lo, S.size)
    hi = np.minimum(hi, S.size - 1)
    return np.where(hi >= lo, P[np.maximum(hi, lo - 1) + 1] - P[lo], 0)


def _next_index(mask):
    """Smallest k >= i with mask[k] true (len(mask) if none)."""
    N = mask.size
    idx = np.where(mask, np.arange(N), N)
    return np.minimum.accumulate(idx[::-1])[::-1]


def sample_sat(phi, path: PwlPath, eps: float, regions, t_end: float, h: float):
    """Truth of an NNF formula on the grid ``0, h, 2h, ...`` up to ``t_end``.

    The path is held at its last waypoint. Windows are rounded to the grid.
    """
    H = horizon(phi)
    n_out = int(math.floor(t_end / h)) + 1
    N = int(math.ceil((t_end + H) / h)) + 2
    ts = np.arange(N) * h
    pos = path.position(ts)
    memo = {}

    def go(f):
        if f in memo:
            return memo[f]
        if isinstance(f, TrueF):
            out = np.ones(N, bool)
        elif isinstance(f, FalseF):
            out = np.zeros(N, bool)
        elif isinstance(f, (Atom, NegAtom)):
            P = regions[f.region]
            val = pos @ P.H.T - P.b
            if isinstance(f, Atom):
                out = np.all(val + eps * P.row_norms <= 0, axis=1)
            else:
                out = np.any(val - eps * P.row_norms >= 0, axis=1)
        elif isinstance(f, And):
            out = np.logical_and.reduce([go(c) for c in f.children])
        elif isinstance(f, Or):
            out = np.logical_or.reduce([go(c) for c in f.children])
        elif isinstance(f, (Eventually, Always)):
            S = go(f.child)
            ra, rb = int(round(f.a / h)), int(round(f.b / h))
            lo, hi, cnt = _window(S, ra, rb)
            out = cnt > 0 if isinstance(f, Eventually) else cnt == (hi - lo + 1)
        elif isinstance(f, Until):
            S1, S2 = go(f.left), go(f.right)
            ra, rb = int(round(f.a / h)), int(round(f.b / h))
            i = np.arange(N)
            run_end = _next_index(~S1) - 1
            out = _range_count(S2, i + ra, np.minimum(i + rb, run_end)) > 0
        elif isinstance(f, Release):
            S1, S2 = go(f.left), go(f.right)
            ra, rb = int(round(f.a / h)), int(round(f.b / h))
            i = np.arange(N)
            hi = np.minimum(i + rb, _next_index(S1) - 1)
            lo = i + ra
            need = np.maximum(0, np.minimum(hi, N - 1) - lo + 1)
            out = _range_count(S2, lo, hi) == need
        else:
            raise TypeError(f"not an NNF formula: {f!r}")
        memo[f] = out
        return out

    return ts[:n_out], go(phi)[:n_out]


def sample_min_distance(pa: PwlPath, pb: PwlPath, step: float, t_end=None) -> float:
    t_end = max(pa.end_time, pb.end_time) if t_end is None else t_end
    ts = np.arange(0.0, t_end + step, step)
    return float(np.min(np.linalg.norm(pa.position(ts) - pb.position(ts), axis=1)))


# --- MILP by enumeration ------------------------------------------------------------


def enumerate_milp(c, c0, A, r, lo, hi, integer):
    """Best objective over all binary assignments, each completed by an LP.

    Returns ``("Optimal", value)`` or ``("Infeasible", inf)``.
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float)
    integer = np.asarray(integer, bool)
    bins = np.flatnonzero(integer)
    cont = np.flatnonzero(~integer)
    best = math.inf
    for combo in itertools.product((0.0, 1.0), repeat=bins.size):
        b = np.array(combo)
        if np.any(b < lo[bins] - 1e-9) or np.any(b > hi[bins] + 1e-9):
            continue
        rhs = r - A[:, bins] @ b
        base = float(c[bins] @ b) + c0
        if cont.size == 0:
            if np.all(rhs <= 1e-9):
                best = min(best, base)
            continue
        res = linprog(c[cont], A_ub=-A[:, cont], b_ub=-rhs,
                      bounds=list(zip(lo[cont], hi[cont])), method="highs")
        if res.status == 0:
            best = min(best, base + res.fun)
    return ("Infeasible", best) if math.isinf(best) else ("Optimal", best)


# --- big-M image by enumeration -------------------------------------------------------


def completable(A, r, fixed_cols, free_cols, X, tol=1e-9):
    """For every row of ``X`` (values of ``fixed_cols``), whether some 0/1 vector
    on ``free_cols`` satisfies ``A x >= r``."""
    A = np.asarray(A, float)
    R = A[:, fixed_cols] @ X.T - r[:, None]  # m x G
    B = np.array(list(itertools.product((0.0, 1.0), repeat=len(free_cols))))
    S = A[:, free_cols] @ B.T  # m x 2^nb
    out = np.zeros(X.shape[0], bool)
    uniq, inv = np.unique(np.round(R, 12), axis=1, return_inverse=True)
    for g in range(uniq.shape[1]):
        ok = np.all(S + uniq[:, g:g + 1] >= -tol, axis=0)
        out[inv.reshape(-1) == g] = bool(ok.any())
    return out


# --- random generators -------------------------------------------------------------------


def random_box(rng, lo=0.0, hi=10.0, d=2, min_side=0.8, max_side=4.0):
    side = rng.uniform(min_side, max_side, d)
    corner = rng.uniform(lo, hi - side)
    return box(corner, corner + side)


def random_formula(rng, names, depth, T, ops=("F", "G", "U", "R", "&", "|")):
    """NNF formula over ``names`` with at most ``depth`` nested operators."""
    if depth == 0 or rng.random() < 0.25:
        name = names[rng.integers(len(names))]
        return NegAtom(name) if rng.random() < 0.4 else Atom(name)
    op = ops[rng.integers(len(ops))]
    a = float(rng.uniform(0, T / 3))
    b = float(a + rng.uniform(0, T / 3))

    def sub():
        return random_formula(rng, names, depth - 1, T, ops)

    if op == "F":
        return Eventually(a, b, sub())
    if op == "G":
        return Always(a, b, sub())
    if op == "U":
        return Until(a, b, sub(), sub())
    if op == "R":
        return Release(a, b, sub(), sub())
    if op == "&":
        return And((sub(), sub()))
    return Or((sub(), sub()))


def random_path(rng, K, T, lo=0.0, hi=10.0, d=2, zero_dt=0.1):
    """Random waypoints; some segments get zero duration."""
    dts = rng.uniform(0.0, 1.0, K)
    dts[rng.random(K) < zero_dt] = 0.0
    if dts.sum() == 0:
        dts[0] = 1.0
    ts = np.concatenate([[0.0], np.cumsum(dts / dts.sum() * rng.uniform(0.3, 1.0) * T)])
    pts = rng.uniform(lo, hi, (K + 1, d))
    return PwlPath(ts, pts)


def perturb_in_tube(rng, path: PwlPath, radius: float, extra: int = 6) -> PwlPath:
    """A PWL path within ``radius`` of ``path`` at every time.

    Breakpoints are the original ones plus ``extra`` random times (including
    some past the end, where ``path`` holds still); each breakpoint is moved by
    a vector of norm at most ``radius``. Between breakpoints both paths are
    affine, so the offset stays inside the ball by convexity.
    """
    end = path.end_time
    more = rng.uniform(0.0, end * 1.3 + 1.0, extra)
    ts = np.unique(np.concatenate([path.times, more]))
    base = path.position(ts)
    d = path.dim
    v = rng.normal(size=(ts.size, d))
    v /= np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-12)
    v *= radius * rng.uniform(0, 1, (ts.size, 1)) ** (1.0 / d)
    return PwlPath(ts, base + v)


def random_lcf_tree(rng, nv, max_or=4):
    """Random AND-OR DAG as nested tuples; subtrees are reused to create sharing.

    Leaves are ``("leaf", coefs, const)`` meaning ``coefs . x + const >= 0``.
    """
    made = []
    for _ in range(int(rng.integers(2, 6))):
        coefs = tuple(int(c) for c in rng.integers(-2, 3, nv))
        made.append(("leaf", coefs, int(rng.integers(-3, 4))))
    n_or = int(rng.integers(1, max_or + 1))
    kinds = ["or"] * n_or + ["and"] * int(rng.integers(0, 3))
    rng.shuffle(kinds)
    for kind in kinds:
        k = int(rng.integers(2, 4))
        picks = rng.choice(len(made), size=min(k, len(made)), replace=False)
        made.append((kind, tuple(made[i] for i in picks)))
    top = [made[-1]] + [made[i] for i in rng.choice(len(made) - 1, size=int(rng.integers(0, 2)), replace=False)]
    return ("and", tuple(top)) if len(top) > 1 else top[0]


def eval_tree(node, X):
    """Truth of a tuple tree at every row of ``X``."""
    kind = node[0]
    if kind == "leaf":
        return X @ np.array(node[1], float) + node[2] >= 0
    vals = [eval_tree(c, X) for c in node[1]]
    return np.logical_and.reduce(vals) if kind == "and" else np.logical_or.reduce(vals)


def random_milp(rng):
    """Mixed binary/continuous problem in ``solve_milp_arrays`` layout, at most 10 binaries."""
    nb = int(rng.integers(1, 11))
    nc = int(rng.integers(0, 7))
    n = nb + nc
    m = int(rng.integers(1, 16))
    c = rng.integers(-5, 6, n).astype(float)
    A = rng.integers(-4, 5, (m, n)).astype(float)
    A[rng.random((m, n)) < 0.4] = 0.0
    r = rng.integers(-6, 4, m).astype(float)
    lo = np.concatenate([np.zeros(nb), rng.integers(-3, 1, nc)]).astype(float)
    hi = np.concatenate([np.ones(nb), lo[nb:] + rng.integers(1, 4, nc)])
    integer = np.arange(n) < nb
    perm = rng.permutation(n)
    return c[perm], 0.0, A[:, perm], r, lo[perm], hi[perm], integer[perm]
