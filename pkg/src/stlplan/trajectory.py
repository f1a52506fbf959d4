"""Timed piecewise-linear paths."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class PwlPath:
    """Waypoints ``(t_k, p_k)``; the agent holds ``p_K`` after ``t_K``."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        p = np.array(self.points, dtype=float)
        if p.ndim == 1:
            p = p.reshape(-1, 1)
        if t.size < 1 or p.shape[0] != t.size:
            raise ValueError(f"{t.size} timestamps but {p.shape[0]} waypoints")
        if np.any(np.diff(t) < 0):
            raise ValueError("timestamps must be non-decreasing")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    @staticmethod
    def from_waypoints(rows) -> "PwlPath":
        """Rows of ``[t, x, y, ...]``."""
        arr = np.asarray(rows, dtype=float)
        if arr.ndim != 2 or arr.shape[1] < 2:
            raise ValueError("waypoints must be rows of [t, x, ...]")
        return PwlPath(arr[:, 0], arr[:, 1:])

    def to_waypoints(self):
        return np.column_stack([self.times, self.points]).tolist()

    @property
    def K(self) -> int:
        return self.times.size - 1

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    def position(self, t) -> np.ndarray:
        """Position at time(s) ``t`` with hold-first/hold-last extension.

        At a repeated timestamp the position after the jump is returned.
        """
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = np.empty((tt.size, self.dim))
        ts = self.times
        for ax in range(self.dim):
            out[:, ax] = _interp_right(tt, ts, self.points[:, ax])
        return out[0] if scalar else out

    def check(self, vmax: Optional[float] = None, T: Optional[float] = None, tol: float = 1e-6) -> list:
        """Violations of the planner's path invariants (empty list when valid)."""
        problems = []
        if abs(self.times[0]) > tol:
            problems.append(f"t_0 = {self.times[0]:.6g}, expected 0")
        if T is not None and self.times[-1] > T + tol:
            problems.append(f"t_K = {self.times[-1]:.6g} exceeds T = {T:.6g}")
        if vmax is not None:
            dt = np.diff(self.times)
            step = np.abs(np.diff(self.points, axis=0)).sum(axis=1)
            bad = np.flatnonzero(step > vmax * dt + tol)
            for k in bad:
                problems.append(f"segment {k}: |dp|_1 = {step[k]:.6g} > vmax*dt = {vmax * dt[k]:.6g}")
        return problems


def _interp_right(t: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    # np.interp is ambiguous at repeated abscissae; pick the last segment starting at or before t
    idx = np.searchsorted(xs, t, side="right") - 1
    out = np.empty(t.size)
    before = idx < 0
    after = idx >= xs.size - 1
    out[before] = ys[0]
    out[after] = ys[-1]
    mid = ~(before | after)
    i = idx[mid]
    dt = xs[i + 1] - xs[i]
    lam = np.where(dt > 0, (t[mid] - xs[i]) / np.where(dt > 0, dt, 1.0), 0.0)
    out[mid] = ys[i] + lam * (ys[i + 1] - ys[i])
    return out


def as_path(obj) -> PwlPath:
    if isinstance(obj, PwlPath):
        return obj
    return PwlPath.from_waypoints(obj)

