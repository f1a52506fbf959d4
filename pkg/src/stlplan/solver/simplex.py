"""Bounded-variable dual simplex on a dense compact tableau.

Problems have the form ``min c x`` subject to ``A x >= r`` and
``lo <= x <= hi``. Each row gets a surplus ``s = A x - r >= 0`` and the
initial basis is the surplus basis. Putting every structural variable at the
bound its cost prefers makes that basis dual feasible, so no phase one is
needed; the dual simplex then restores primal feasibility. The same state can
be re-solved after bound changes, which is what branch-and-bound does.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg.blas import dger
from scipy.sparse import csr_matrix

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
NUMERICAL = "NumericalError"

# stand-in for an infinite bound on a structural variable
BIG = 1e9


@dataclass
class LpResult:
    status: str
    objective: float = float("nan")
    x: Optional[np.ndarray] = None
    iterations: int = 0
    duals: Optional[np.ndarray] = field(default=None, repr=False)


class DualSimplex:
    """Reusable LP state; change bounds with :meth:`set_bounds` and call :meth:`solve`."""

    def __init__(self, c, A, r, lo, hi, feas_tol: float = 1e-9, dual_tol: float = 1e-9,
                 bland_after: int = 50, refactor_every: int = 200, refactor_at_end: int = 50):
        A = np.asarray(A, dtype=float)
        m, n = A.shape
        self.m, self.n = m, n
        self.N = n + m
        c = np.asarray(c, dtype=float).reshape(n)
        lo = np.asarray(lo, dtype=float).reshape(n)
        hi = np.asarray(hi, dtype=float).reshape(n)
        if np.any(lo > hi):
            raise ValueError("variable bounds with lo > hi")
        self.cost = np.concatenate([c, np.zeros(m)])
        self.E = np.asfortranarray(np.hstack([A, -np.eye(m)]))
        self.A_T = csr_matrix(A.T)
        self.r = np.asarray(r, dtype=float).reshape(m).copy()
        self.true_lo = np.concatenate([lo, np.zeros(m)])
        self.true_hi = np.concatenate([hi, np.full(m, np.inf)])
        self.lo = self.true_lo.copy()
        self.hi = self.true_hi.copy()
        self._clip_structural()
        self.feas_tol = feas_tol
        self.dual_tol = dual_tol
        self.bland_after = bland_after
        self.refactor_every = refactor_every
        # pivots since the last refactor that trigger a clean-up solve at optimality
        self.refactor_at_end = refactor_at_end
        self.total_iterations = 0
        self._reset_to_slack_basis()

    # bounds ---------------------------------------------------------------
    def _clip_structural(self):
        n = self.n
        self.lo[:n] = np.maximum(self.true_lo[:n], -BIG)
        self.hi[:n] = np.minimum(self.true_hi[:n], BIG)

    def set_bounds(self, idx, lo, hi):
        """Change bounds of structural variables ``idx`` (array-like)."""
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        self.true_lo[idx] = lo
        self.true_hi[idx] = hi
        self.lo[idx] = np.maximum(self.true_lo[idx], -BIG)
        self.hi[idx] = np.minimum(self.true_hi[idx], BIG)
        if np.any(self.lo[idx] > self.hi[idx]):
            raise ValueError("variable bounds with lo > hi")
        self._place_nonbasic()

    def get_bounds(self):
        return self.true_lo[: self.n].copy(), self.true_hi[: self.n].copy()

    # basis handling -------------------------------------------------------
    def _reset_to_slack_basis(self):
        m, n = self.m, self.n
        self.basis = np.arange(n, n + m)
        self.nonbasis = np.arange(n)
        self.T = np.asfortranarray(-self.E[:, :n])
        self.beta = -self.r.copy()
        self.dN = self.cost[:n].copy()
        self._finish_basis()

    def get_basis(self) -> np.ndarray:
        return self.basis.copy()

    def load_basis(self, basis) -> bool:
        """Refactor on ``basis``; returns False (keeping the old state) if singular."""
        basis = np.asarray(basis, dtype=int)
        Binv = self._basis_inverse(basis)
        if Binv is None:
            return False
        is_basic = np.zeros(self.N, dtype=bool)
        is_basic[basis] = True
        if np.array_equal(np.sort(basis), np.sort(self.basis)):
            nonbasis = self.nonbasis.copy()  # keep the column order
        else:
            nonbasis = np.flatnonzero(~is_basic)
        # E = [A, -I], so B^-1 E restricted to the nonbasic columns
        T = np.empty((self.m, self.n), order="F")
        s_pos = np.flatnonzero(nonbasis < self.n)
        l_pos = np.flatnonzero(nonbasis >= self.n)
        if s_pos.size:
            T[:, s_pos] = (self.A_T[nonbasis[s_pos]] @ Binv.T).T
        if l_pos.size:
            T[:, l_pos] = -Binv[:, nonbasis[l_pos] - self.n]
        self.basis = basis.copy()
        self.nonbasis = nonbasis
        self.T = T
        self.beta = Binv @ self.r
        self.dN = self.cost[nonbasis] - self.cost[basis] @ T
        self._finish_basis()
        return True

    def _basis_inverse(self, basis: np.ndarray) -> Optional[np.ndarray]:
        """``B^-1`` using the slack structure of ``B = [A_S, -I_Q]``.

        Only the block of structural columns ``S`` on the rows ``P`` whose
        slack is nonbasic needs a dense inverse.
        """
        m, n = self.m, self.n
        struct = basis < n
        pos_s = np.flatnonzero(struct)
        pos_l = np.flatnonzero(~struct)
        S = basis[pos_s]
        Q = basis[pos_l] - n
        P = np.setdiff1d(np.arange(m), Q, assume_unique=True)
        if P.size != S.size:
            return None
        A = self.E  # structural part is the first n columns
        Binv = np.zeros((m, m))
        if S.size:
            try:
                M = np.linalg.inv(A[np.ix_(P, S)])
            except np.linalg.LinAlgError:
                return None
            if not np.all(np.isfinite(M)):
                return None
            Binv[np.ix_(pos_s, P)] = M
            if Q.size:
                Binv[np.ix_(pos_l, P)] = A[np.ix_(Q, S)] @ M
        Binv[pos_l, Q] = -1.0
        return Binv

    def _finish_basis(self):
        if not hasattr(self, "at_upper"):
            self.at_upper = np.zeros(self.N, dtype=bool)
        self.at_upper[self.basis] = False
        self._place_nonbasic()
        self._since_refactor = 0

    def _place_nonbasic(self):
        """Keep each nonbasic variable on its current side unless the reduced
        cost asks for the other one, then recompute the basic values."""
        nb = self.nonbasis
        lo, hi = self.lo[nb], self.hi[nb]
        up = np.where(self.dN < -self.dual_tol, True,
                      np.where(self.dN > self.dual_tol, False, self.at_upper[nb]))
        up &= np.isfinite(hi)
        up |= ~np.isfinite(lo) & np.isfinite(hi)
        self.at_upper[nb] = up
        val = np.where(up, hi, lo)
        self.xN = np.where(np.isfinite(val), val, 0.0)
        self.xB = self.beta - self.T @ self.xN

    def _refactor(self) -> bool:
        return self.load_basis(self.basis)

    # main loop --------------------------------------------------------------
    def solve(self, max_iter: Optional[int] = None) -> LpResult:
        if max_iter is None:
            max_iter = 20 * (self.m + self.n) + 1000
        it = 0
        degenerate = 0
        refactored_at_end = False
        while True:
            if it >= max_iter:
                return LpResult(NUMERICAL, iterations=it)
            lo_b = self.lo[self.basis]
            hi_b = self.hi[self.basis]
            below = lo_b - self.xB
            above = self.xB - hi_b
            infeas = np.maximum(below, above)
            if self.m == 0:
                p = -1
            elif degenerate > self.bland_after:
                cand = np.flatnonzero(infeas > self.feas_tol)
                if cand.size == 0:
                    p = -1
                else:
                    p = cand[np.argmin(self.basis[cand])]
            else:
                p = int(np.argmax(infeas))
                if infeas[p] <= self.feas_tol:
                    p = -1
            if p < 0:
                if not refactored_at_end and self._since_refactor >= self.refactor_at_end:
                    refactored_at_end = True
                    if not self._refactor():
                        return LpResult(NUMERICAL, iterations=it)
                    continue
                return self._finish(it)
            leave_low = below[p] > above[p]
            row = self.T[p, :].copy()
            s = 1.0 if leave_low else -1.0
            nb = self.nonbasis
            movable = self.hi[nb] > self.lo[nb]
            at_up = self.at_upper[nb]
            sr = s * row
            big = np.abs(row) > 1e-9
            cand = movable & big & np.where(at_up, sr > 0, sr < 0)
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return LpResult(INFEASIBLE, iterations=it)
            absr = np.abs(row[idx])
            absd = np.abs(self.dN[idx])
            if degenerate > self.bland_after:
                ratios = absd / absr
                best = ratios.min()
                ties = idx[ratios <= best + 1e-12]
                j = int(ties[np.argmin(nb[ties])])
            else:
                # Harris two-pass ratio test
                theta_max = np.min((absd + self.dual_tol) / absr)
                ok = absd / absr <= theta_max
                j = int(idx[ok][np.argmax(absr[ok])])
            q = int(nb[j])
            alpha = row[j]
            theta_d = self.dN[j] / alpha
            if abs(theta_d) < 1e-12:
                degenerate += 1
            else:
                degenerate = 0
            target = lo_b[p] if leave_low else hi_b[p]
            delta = (self.xB[p] - target) / alpha
            col = self.T[:, j].copy()
            leaving = int(self.basis[p])
            # primal update
            self.xB -= col * delta
            entering_val = self.xN[j] + delta
            # dual update; slot j now holds the leaving variable
            self.dN -= theta_d * row
            self.dN[j] = -theta_d
            # tableau pivot (basic and nonbasic swap places)
            rowp = row / alpha
            rowp[j] = 1.0 / alpha
            self.beta[p] /= alpha
            col[p] = 0.0
            self.T[:, j] = 0.0
            self.T = dger(-1.0, col, rowp, a=self.T, overwrite_a=True)
            self.T[p, :] = rowp
            self.beta -= col * self.beta[p]
            self.basis[p] = q
            nb[j] = leaving
            self.xN[j] = target
            self.at_upper[q] = False
            self.at_upper[leaving] = not leave_low
            self.xB[p] = entering_val
            it += 1
            self.total_iterations += 1
            self._since_refactor += 1
            refactored_at_end = False
            if self._since_refactor >= self.refactor_every:
                if not self._refactor():
                    return LpResult(NUMERICAL, iterations=it)

    def _finish(self, it: int) -> LpResult:
        x = self.primal()
        n = self.n
        edge = BIG * (1 - 1e-12)
        artificial = ((x[:n] <= -edge) & ~np.isfinite(self.true_lo[:n])) | (
            (x[:n] >= edge) & ~np.isfinite(self.true_hi[:n]))
        if np.any(artificial):
            return LpResult(UNBOUNDED, iterations=it)
        xs = x[:n]
        obj = float(self.cost[:n] @ xs)
        d = np.zeros(self.N)
        d[self.nonbasis] = self.dN
        return LpResult(OPTIMAL, obj, xs.copy(), it, d)

    def primal(self) -> np.ndarray:
        x = np.zeros(self.N)
        x[self.nonbasis] = self.xN
        x[self.basis] = self.xB
        return x


def solve_lp(c, A, r, lo, hi, **kw) -> LpResult:
    """One-shot ``min c x, A x >= r, lo <= x <= hi``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        A = A.reshape(0, len(c))
    return DualSimplex(c, A, r, lo, hi, **kw).solve()
