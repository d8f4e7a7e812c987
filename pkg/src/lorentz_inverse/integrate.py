"""Dormand-Prince 5(4) integrator with PI step control and dense output.

Written in-house rather than using ``scipy.integrate.solve_ivp`` because
callers need (a) a PI controller, (b) a per-step hook for domain checks and
(c) exact replay of a previously accepted step sequence, which makes the
numerical flow map smooth in its initial data for finite-difference
Jacobians.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import StepFailure

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B = np.array(A[6] + [0.0])
# 5th minus embedded 4th order weights
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension (Hairer, Norsett & Wanner, dopri5)
D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799, -10690763975 / 1880347072,
    701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423,
])

SAFETY = 0.9
BETA = 0.04
EXPO = 0.2 - 0.75 * BETA
FAC_MIN = 0.2  # smallest allowed h_new / h
FAC_MAX = 10.0
MAX_STEPS = 200_000


@dataclass
class Solution:
    t: np.ndarray        # accepted nodes, t[0] = t0, t[-1] = t_end
    y: np.ndarray        # (m, d)
    dense: np.ndarray    # (m-1, 5, d) continuous-extension coefficients
    steps: int
    rejected: int

    def __call__(self, tq) -> np.ndarray:
        tq = np.asarray(tq, dtype=float)
        scalar = tq.ndim == 0
        tq = np.atleast_1d(tq)
        idx = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, len(self.t) - 2)
        h = self.t[idx + 1] - self.t[idx]
        th = ((tq - self.t[idx]) / h)[:, None]
        th1 = 1.0 - th
        r = self.dense[idx]
        out = r[:, 0] + th * (r[:, 1] + th1 * (r[:, 2] + th * (r[:, 3] + th1 * r[:, 4])))
        exact = tq == self.t[idx + 1]
        out[exact] = self.y[idx[exact] + 1]
        exact0 = tq == self.t[idx]
        out[exact0] = self.y[idx[exact0]]
        return out[0] if scalar else out


def _rms(v):
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(fun, t0, y0, f0, direction_len, rtol, atol):
    sk = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / sk)
    d1 = _rms(f0 / sk)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_len)
    f1 = fun(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / sk) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, direction_len)


def _stages(fun, t, y, h, k1):
    k = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(A[i], k))
        k.append(fun(t + C[i] * h, yi))
    return k, yi  # y of the last stage equals the 5th order solution


def _dense_coeffs(y, y_new, h, k):
    r2 = y_new - y
    r3 = h * k[0] - r2
    r4 = r2 - h * k[6] - r3
    r5 = h * sum(d * kj for d, kj in zip(D, k) if d != 0.0)
    return np.stack([y, r2, r3, r4, r5])


def dopri5(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-11,
    grid=None,
    on_step: Callable[[float, np.ndarray], None] | None = None,
) -> Solution:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end > t0``.

    With ``grid`` (increasing nodes from t0 to t_end) the steps are taken
    exactly at those nodes without error control.  ``on_step`` is called after
    every accepted step and may raise to abort.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    if not t_end > t:
        raise ValueError("t_end must exceed t0")
    ts, ys, dense = [t], [y.copy()], []
    k1 = fun(t, y)
    steps = rejected = 0

    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        if grid[0] != t0 or grid[-1] != t_end or np.any(np.diff(grid) <= 0):
            raise ValueError("replay grid must increase strictly from t0 to t_end")
        for t_next in grid[1:]:
            h = t_next - t
            k, y_new = _stages(fun, t, y, h, k1)
            dense.append(_dense_coeffs(y, y_new, h, k))
            t, y, k1 = t_next, y_new, k[6]
            steps += 1
            if on_step is not None:
                on_step(t, y)
            ts.append(t)
            ys.append(y.copy())
        return Solution(np.array(ts), np.array(ys), np.array(dense), steps, 0)

    span = t_end - t
    h = _initial_step(fun, t, y, k1, span, rtol, atol)
    err_old = 1e-4
    last = False
    while True:
        if steps + rejected > MAX_STEPS:
            raise StepFailure(f"more than {MAX_STEPS} steps at t={t}")
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepFailure(f"step size underflow (h={h:.3e}) at t={t}")
        if t + 1.01 * h >= t_end:
            h = t_end - t
            last = True
        k, y_new = _stages(fun, t, y, h, k1)
        sk = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(h * sum(e * kj for e, kj in zip(E, k) if e != 0.0) / sk)
        if not np.isfinite(err):
            err = 1e10
        fac11 = err ** EXPO if err > 0 else 0.0
        if err <= 1.0:
            fac = fac11 / err_old ** BETA / SAFETY
            fac = min(1.0 / FAC_MIN, max(1.0 / FAC_MAX, fac))
            err_old = max(err, 1e-4)
            dense.append(_dense_coeffs(y, y_new, h, k))
            t = t_end if last else t + h
            y, k1 = y_new, k[6]
            steps += 1
            if on_step is not None:
                on_step(t, y)
            ts.append(t)
            ys.append(y.copy())
            if last:
                break
            h = h / fac
        else:
            rejected += 1
            last = False
            h = h / min(1.0 / FAC_MIN, fac11 / SAFETY)
    return Solution(np.array(ts), np.array(ys), np.array(dense), steps, rejected)
