"""Activity-based bound propagation for ``A x >= r``.

For a row ``sum_j a_j x_j >= r`` the largest achievable activity gives, for
each variable, the weakest value it can take while the row stays satisfiable.
Repeating this over all rows tightens bounds, fixes binaries and detects
infeasible nodes without an LP solve.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy.sparse import coo_matrix


class Propagator:
    def __init__(self, A, r, integer, feas_tol: float = 1e-6, int_tol: float = 1e-6):
        coo = coo_matrix(np.asarray(A, dtype=float))
        keep = coo.data != 0.0
        self.rows = coo.row[keep]
        self.cols = coo.col[keep]
        self.data = coo.data[keep]
        self.m = coo.shape[0]
        self.r = np.asarray(r, dtype=float)
        self.integer = np.asarray(integer, dtype=bool)
        self.pos = self.data > 0
        self.feas_tol = feas_tol
        self.int_tol = int_tol

    def run(self, lo: np.ndarray, hi: np.ndarray, max_rounds: int = 20) -> Tuple[bool, np.ndarray, np.ndarray]:
        """Returns ``(feasible, lo, hi)``; the inputs are not modified."""
        lo = lo.copy()
        hi = hi.copy()
        rows, cols, data, pos = self.rows, self.cols, self.data, self.pos
        if data.size == 0:
            return bool(np.all(self.r <= self.feas_tol)), lo, hi
        for _ in range(max_rounds):
            contrib = np.where(pos, data * hi[cols], data * lo[cols])
            finite = np.isfinite(contrib)
            maxact = np.bincount(rows, weights=np.where(finite, contrib, 0.0), minlength=self.m)
            ninf = np.bincount(rows, weights=~finite, minlength=self.m)
            slack_tol = self.feas_tol * np.maximum(1.0, np.abs(self.r))
            if np.any((ninf == 0) & (maxact < self.r - slack_tol)):
                return False, lo, hi
            # activity of the rest of the row when this entry is removed
            others_inf = ninf[rows] - (~finite)
            valid = others_inf == 0
            rest = maxact[rows] - np.where(finite, contrib, 0.0)
            bound = (self.r[rows] - rest) / data
            new_lo = lo.copy()
            new_hi = hi.copy()
            sel = valid & pos
            np.maximum.at(new_lo, cols[sel], bound[sel])
            sel = valid & ~pos
            np.minimum.at(new_hi, cols[sel], bound[sel])
            ints = self.integer
            new_lo[ints] = np.ceil(new_lo[ints] - self.int_tol)
            new_hi[ints] = np.floor(new_hi[ints] + self.int_tol)
            # only accept continuous changes that matter, loosened a hair against round-off
            cont = ~ints
            scale = 1.0 + np.abs(np.where(np.isfinite(lo), lo, 0.0))
            up = cont & (new_lo > lo + 1e-7 * scale)
            new_lo = np.where(cont & ~up, lo, new_lo)
            new_lo[up] -= 1e-9 * scale[up]
            scale = 1.0 + np.abs(np.where(np.isfinite(hi), hi, 0.0))
            dn = cont & (new_hi < hi - 1e-7 * scale)
            new_hi = np.where(cont & ~dn, hi, new_hi)
            new_hi[dn] += 1e-9 * scale[dn]
            cross = new_lo > new_hi
            if np.any(cross):
                gap = new_lo[cross] - new_hi[cross]
                tol = self.feas_tol * (1.0 + np.abs(new_hi[cross]))
                if np.any(gap > tol) or np.any(cross & ints):
                    return False, lo, hi
                mid = 0.5 * (new_lo[cross] + new_hi[cross])
                new_lo[cross] = mid
                new_hi[cross] = mid
            changed = np.any(new_lo != lo) or np.any(new_hi != hi)
            lo, hi = new_lo, new_hi
            if not changed:
                break
        return True, lo, hi
