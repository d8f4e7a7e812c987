"""Bicharacteristic flow of H = 1/2 xi^T G(x) xi.

States are full coordinate vectors: for a Lorentzian field ``xhat = (x0, x)``
and ``xihat = (xi0, xi)``; for a Riemannian field just ``(x, xi)``.  The time
components are integrated like any other so that constancy of ``xi0`` is an
observable check rather than an assumption.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import EscapedDomain, EvaluationError
from .integrate import Solution, dopri5
from .metric import MetricBase, check_signature

RTOL = 1e-9
ATOL = 1e-11
MIN_SAMPLES = 64


@dataclass(frozen=True)
class GeodesicPath:
    """Sampled bicharacteristic ``t -> (xhat(t), xihat(t))`` on ``[0, T]``."""

    t: np.ndarray
    xhat: np.ndarray
    xihat: np.ndarray
    yhat: np.ndarray
    etahat: np.ndarray
    T: float
    field_name: str
    steps: int
    rejected: int
    max_step: float
    step_grid: np.ndarray = dc_field(repr=False)
    solution: Solution = dc_field(repr=False)

    def state_at(self, t) -> tuple[np.ndarray, np.ndarray]:
        z = self.solution(t)
        m = self.xhat.shape[1]
        return z[..., :m], z[..., m:]

    @property
    def endpoint(self) -> np.ndarray:
        return self.xhat[-1]

    @property
    def end_covector(self) -> np.ndarray:
        return self.xihat[-1]


def start_point(field: MetricBase, yhat) -> np.ndarray:
    """Accept a full coordinate vector or, for Lorentzian fields, a spatial one (x0 = 0)."""
    y = np.atleast_1d(np.asarray(yhat, dtype=float))
    if y.shape == (field.size,):
        return y.copy()
    if y.shape == (field.n,) and field.offset == 1:
        return np.concatenate([[0.0], y])
    raise ValueError(f"start point must have length {field.size} (or {field.n} spatial), got {y.shape}")


def hamiltonian_rhs(field: MetricBase):
    m, off = field.size, field.offset

    def rhs(t, z):
        p = z[m:]
        x = z[off:m]
        G = field.inverse_metric(x)
        dG = field.inverse_metric_grad(x)
        dz = np.zeros(2 * m)
        dz[:m] = G @ p
        dz[m + off:] = -0.5 * ((dG @ p) @ p)
        return dz

    return rhs


def integrate_bicharacteristic(
    field: MetricBase,
    yhat,
    etahat,
    T: float,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    grid=None,
    check_signature_every: int = 1,
) -> GeodesicPath:
    """Integrate the Hamiltonian system from ``(yhat, etahat)`` over ``[0, T]``.

    ``grid`` replays a fixed sequence of step nodes (e.g. ``path.step_grid``
    of a nearby trajectory) instead of adaptive stepping.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    y0 = start_point(field, yhat)
    eta = np.asarray(etahat, dtype=float)
    m, off = field.size, field.offset
    if eta.shape != (m,):
        raise ValueError(f"covector must have length {m}, got {eta.shape}")
    if not field.contains(y0[off:]):
        raise EscapedDomain(f"start point {y0[off:].tolist()} outside box {field.box.tolist()}")
    check_signature(field, field.inverse_metric(y0[off:]), y0[off:])

    counter = [0]

    def on_step(t, z):
        x = z[off:m]
        if not np.all(np.isfinite(z)):
            raise EvaluationError(f"non-finite state at t={t}")
        if not field.contains(x):
            raise EscapedDomain(f"trajectory left box {field.box.tolist()} at t={t:.6g}, x={x.tolist()}")
        counter[0] += 1
        if check_signature_every and counter[0] % check_signature_every == 0:
            check_signature(field, field.inverse_metric(x), x)

    sol = dopri5(
        hamiltonian_rhs(field), 0.0, np.concatenate([y0, eta]), float(T),
        rtol=rtol, atol=atol, grid=grid, on_step=on_step,
    )
    ts = sol.t
    if len(ts) - 1 < MIN_SAMPLES:
        ts = np.union1d(ts, np.linspace(0.0, float(T), MIN_SAMPLES + 1))
        z = sol(ts)
    else:
        z = sol.y
    return GeodesicPath(
        t=ts,
        xhat=z[:, :m].copy(),
        xihat=z[:, m:].copy(),
        yhat=y0,
        etahat=eta.copy(),
        T=float(T),
        field_name=getattr(field, "name", "metric"),
        steps=sol.steps,
        rejected=sol.rejected,
        max_step=float(np.max(np.diff(sol.t))),
        step_grid=sol.t,
        solution=sol,
    )


def path_hamiltonian(path: GeodesicPath, field: MetricBase) -> np.ndarray:
    off = field.offset
    return np.array([
        0.5 * xi @ field.inverse_metric(x[off:]) @ xi for x, xi in zip(path.xhat, path.xihat)
    ])


def conservation_defect(path: GeodesicPath, field: MetricBase) -> float:
    """``max_t |H(x(t), xi(t)) - H(y, eta)|`` over the stored samples."""
    off = field.offset
    H0 = 0.5 * path.etahat @ field.inverse_metric(path.yhat[off:]) @ path.etahat
    return float(np.max(np.abs(path_hamiltonian(path, field) - H0)))


def time_covector_drift(path: GeodesicPath) -> float:
    """``max_t |xi0(t) - eta0|`` (Lorentzian paths only)."""
    return float(np.max(np.abs(path.xihat[:, 0] - path.etahat[0])))


def endpoint_jacobian(
    field: MetricBase,
    yhat,
    etahat,
    T: float,
    *,
    h: float | None = None,
    columns=None,
    rtol: float = RTOL,
    atol: float = ATOL,
    base: GeodesicPath | None = None,
) -> np.ndarray:
    """Central-difference Jacobian ``d xhat(T) / d etahat``.

    All perturbed trajectories replay the step nodes of the unperturbed one,
    so the differenced map is smooth.  ``columns`` restricts which covector
    components are perturbed.
    """
    eta = np.asarray(etahat, dtype=float)
    if base is None:
        base = integrate_bicharacteristic(field, yhat, eta, T, rtol=rtol, atol=atol)
    if h is None:
        h = 1e-6 * (1.0 + float(np.linalg.norm(eta)))
    cols = range(field.size) if columns is None else list(columns)
    J = np.empty((field.size, len(cols)))
    for c, j in enumerate(cols):
        e = np.zeros(field.size)
        e[j] = h
        plus = integrate_bicharacteristic(field, yhat, eta + e, T, grid=base.step_grid)
        minus = integrate_bicharacteristic(field, yhat, eta - e, T, grid=base.step_grid)
        J[:, c] = (plus.endpoint - minus.endpoint) / (2 * h)
    return J


def write_trajectory_csv(path: GeodesicPath, field: MetricBase, dest) -> None:
    """Dump ``t, x0, x1..xn, xi0, xi1..xin, H`` rows, one per sample."""
    m, off = field.size, field.offset
    first = 1 - off
    names = [f"x{i + first}" for i in range(m)]
    header = ["t"] + names + ["xi" + nm[1:] for nm in names] + ["H"]
    H = path_hamiltonian(path, field)
    with open(Path(dest), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, x, xi, h in zip(path.t, path.xhat, path.xihat, H):
            w.writerow([f"{v:.17g}" for v in (t, *x, *xi, h)])
