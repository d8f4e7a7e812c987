"""Rigidity experiment for a pair of Lorentzian metrics g0, g1.

For each boundary pair (y, x_T, T, eta0) the geodesic of g_tau = g0 + tau (g1 - g0)
from y that reaches x_T at parameter T is found by shooting on the spatial
covector (eta0 is held fixed, which makes the Newton system square).  Along
this branch we measure

    Delta = R(g1, eta_1) - R(g0, eta_0)
    dR/dtau|_0 = R1 + R2,
        R1 = T / (2 sqrt(2H0)) * eta_0^T (G1 - G0)(y) eta_0
        R2 = T / sqrt(2H0)     * (G0(y) eta_0) . d eta_tau / d tau|_0

with R = sqrt(eta^T G(y) eta) T, and check that Delta - R1 - R2 is quadratic
in the size of g1 - g0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import nnls

from .errors import DomainError, LorentzError, NoConvergence, NotTimelike, SingularJacobian
from .flow import GeodesicPath, endpoint_jacobian, integrate_bicharacteristic, start_point
from .metric import LORENTZIAN, MetricBase, check_signature

SHOOT_TOL = 1e-8
MAX_NEWTON = 50
JAC_COND_LIMIT = 1e10
H_TAU = 1e-3
TAU_GRID = tuple(np.linspace(0.0, 1.0, 9))
SCALES = (1.0, 0.5, 0.25, 0.125)
RTOL = 1e-11
ATOL = 1e-13
NORM_NODES = 257


class InterpolatedMetric(MetricBase):
    """Inverse metric ``G0 + tau (G1 - G0)``; exactly G0 at tau=0 and G1 at tau=1."""

    def __init__(self, g0: MetricBase, g1: MetricBase, tau: float):
        if g0.n != g1.n or g0.signature != g1.signature:
            raise ValueError("interpolated metrics need equal dimension and signature")
        self.g0, self.g1, self.tau = g0, g1, float(tau)
        self.n = g0.n
        self.signature = g0.signature
        self.box = np.column_stack([
            np.maximum(g0.box[:, 0], g1.box[:, 0]),
            np.minimum(g0.box[:, 1], g1.box[:, 1]),
        ])
        self.name = f"{getattr(g0, 'name', 'g0')}+{self.tau:g}*({getattr(g1, 'name', 'g1')}-{getattr(g0, 'name', 'g0')})"

    def inverse_metric(self, x):
        if self.tau == 0.0:
            return self.g0.inverse_metric(x)
        if self.tau == 1.0:
            return self.g1.inverse_metric(x)
        G0 = self.g0.inverse_metric(x)
        return G0 + self.tau * (self.g1.inverse_metric(x) - G0)

    def inverse_metric_grad(self, x):
        if self.tau == 0.0:
            return self.g0.inverse_metric_grad(x)
        if self.tau == 1.0:
            return self.g1.inverse_metric_grad(x)
        D0 = self.g0.inverse_metric_grad(x)
        return D0 + self.tau * (self.g1.inverse_metric_grad(x) - D0)

    def to_config(self):
        cfg = lambda g: g.to_config() if hasattr(g, "to_config") else g.name
        return {"interpolate": [cfg(self.g0), cfg(self.g1)], "tau": self.tau}


@dataclass(frozen=True)
class InterpolatedFamily:
    g0: MetricBase
    g1: MetricBase

    def field(self, tau: float) -> InterpolatedMetric:
        return family_field(self, tau)


def family_field(family: InterpolatedFamily, tau: float) -> InterpolatedMetric:
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    return InterpolatedMetric(family.g0, family.g1, tau)


@dataclass
class ShootingResult:
    etahat: np.ndarray
    residual: float
    iterations: int             # Newton steps until residual <= shoot_tol
    jacobian: np.ndarray        # spatial block d x(T) / d eta
    path: GeodesicPath = dc_field(repr=False)
    polish_steps: int = 0

    @property
    def arrival_time(self) -> float:
        return float(self.path.endpoint[0])


def straight_line_guess(field: MetricBase, yhat, x_T, T: float, eta0: float) -> np.ndarray:
    """Covector whose frozen-coefficient flow from y reaches x_T at time T."""
    y = start_point(field, yhat)[1:]
    G = field.inverse_metric(y)
    rhs = (np.asarray(x_T, dtype=float) - y) / T - G[1:, 0] * eta0
    return np.concatenate([[eta0], np.linalg.solve(G[1:, 1:], rhs)])


def _timelike(field, y, eta) -> bool:
    return float(eta @ field.inverse_metric(y) @ eta) > 1e-10 * (1.0 + float(eta @ eta))


def shoot(
    field: MetricBase,
    yhat,
    x_T,
    T: float,
    eta0_fixed: float,
    guess=None,
    *,
    shoot_tol: float = SHOOT_TOL,
    max_iter: int = MAX_NEWTON,
    grid=None,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> ShootingResult:
    """Newton iteration on the spatial covector so that ``x(T) = x_T``.

    ``guess`` is a full covector or just its spatial part; its time component
    is replaced by ``eta0_fixed``.  After reaching ``shoot_tol`` one extra
    Newton step polishes the solution to near machine precision.
    """
    if field.signature != LORENTZIAN:
        raise ValueError("shooting is defined for Lorentzian fields")
    n = field.n
    y0 = start_point(field, yhat)
    x_T = np.atleast_1d(np.asarray(x_T, dtype=float))
    if guess is None:
        guess = straight_line_guess(field, y0, x_T, T, eta0_fixed)
    guess = np.asarray(guess, dtype=float)
    eta = guess[-n:].copy()

    def full(e):
        return np.concatenate([[eta0_fixed], e])

    if not _timelike(field, y0[1:], full(eta)):
        raise NotTimelike(f"shooting guess {full(eta).tolist()} is not timelike")

    def run(e):
        p = integrate_bicharacteristic(field, y0, full(e), T, grid=grid, rtol=rtol, atol=atol)
        return p, p.endpoint[1:] - x_T

    path, F = run(eta)
    r = float(np.linalg.norm(F))
    polished = False
    J = None
    iterations = 0
    converged_at = 0 if r <= shoot_tol else None
    scale = 1.0 + float(np.linalg.norm(x_T))
    while True:
        if r <= shoot_tol and (polished or r <= 1e-14 * scale):
            break
        if iterations >= max_iter:
            raise NoConvergence(f"shooting did not converge in {max_iter} iterations (residual {r:.3e})")
        if r <= shoot_tol:
            polished = True
        J = endpoint_jacobian(field, y0, full(eta), T, columns=range(1, n + 1), base=path)[1:, :]
        if np.linalg.cond(J) > JAC_COND_LIMIT:
            raise SingularJacobian(f"endpoint Jacobian singular near eta={full(eta).tolist()} (conjugate point?)")
        step = np.linalg.solve(J, -F)
        iterations += 1
        lam = 1.0
        for _ in range(12):
            try:
                p_new, F_new = run(eta + lam * step)
                r_new = float(np.linalg.norm(F_new))
            except DomainError:
                r_new = np.inf
            if r_new < r or (polished and r_new <= shoot_tol):
                break
            lam *= 0.5
        else:
            if polished:
                break
            raise NoConvergence(f"line search failed at residual {r:.3e}")
        eta = eta + lam * step
        path, F, r = p_new, F_new, r_new
        if converged_at is None and r <= shoot_tol:
            converged_at = iterations
    if J is None:
        J = endpoint_jacobian(field, y0, full(eta), T, columns=range(1, n + 1), base=path)[1:, :]
    if not _timelike(field, y0[1:], full(eta)):
        raise NotTimelike(f"shooting converged to non-timelike covector {full(eta).tolist()}")
    if converged_at is None:
        converged_at = iterations
    return ShootingResult(full(eta), r, converged_at, J, path, iterations - converged_at)


def _shoot_at(family, tau, yhat, x_T, T, eta0, guess, **kw) -> ShootingResult:
    try:
        return shoot(family_field(family, tau), yhat, x_T, T, eta0, guess, **kw)
    except LorentzError as exc:
        raise type(exc)(f"tau={tau:g}: {exc}") from exc


def _tau_derivative(family, tau, yhat, x_T, T, eta0, base: ShootingResult, h: float, **kw):
    """Difference quotient of the shooting branch, all shoots on base's step grid."""
    grid = base.path.step_grid
    kw = dict(kw, grid=grid)
    center = _shoot_at(family, tau, yhat, x_T, T, eta0, base.etahat, **kw)
    shots = {0: center}
    if tau - h >= 0.0 and tau + h <= 1.0:
        plan, weights = (-1, 1), (-0.5, 0.5)
    elif tau - h < 0.0:
        plan, weights = (1, 2), None
    else:
        plan, weights = (-1, -2), None
    for k in plan:
        shots[k] = _shoot_at(family, tau + k * h, yhat, x_T, T, eta0, center.etahat, **kw)
    if weights is not None:
        d = (shots[1].etahat - shots[-1].etahat) / (2 * h)
    elif plan[0] == 1:
        d = (-3 * shots[0].etahat + 4 * shots[1].etahat - shots[2].etahat) / (2 * h)
    else:
        d = (3 * shots[0].etahat - 4 * shots[-1].etahat + shots[-2].etahat) / (2 * h)
    d[0] = 0.0
    return d, shots


def eta_tau_derivative(
    family: InterpolatedFamily,
    tau: float,
    yhat,
    x_T,
    T: float,
    eta0_fixed: float,
    *,
    h_tau: float = H_TAU,
    guess=None,
    **kw,
) -> np.ndarray:
    """``d eta_tau / d tau`` along the shooting branch (time component is 0)."""
    base = _shoot_at(family, tau, yhat, x_T, T, eta0_fixed, guess, **kw)
    d, _ = _tau_derivative(family, tau, yhat, x_T, T, eta0_fixed, base, h_tau, **kw)
    return d


def geodesic_length_at(field: MetricBase, y, eta, T: float) -> float:
    """``sqrt(eta^T G(y) eta) T`` without classification (caller guarantees timelike)."""
    return float(np.sqrt(eta @ field.inverse_metric(y) @ eta) * T)


@dataclass
class FirstVariation:
    R1: float
    R2: float
    difference_quotient: float
    eta_hat0: np.ndarray
    d_eta: np.ndarray
    two_H0: float
    shot0: ShootingResult = dc_field(repr=False)


def first_variation(
    family: InterpolatedFamily,
    yhat,
    x_T,
    T: float,
    eta0_fixed: float,
    *,
    h_tau: float = H_TAU,
    guess=None,
    shot0: ShootingResult | None = None,
    **kw,
) -> FirstVariation:
    """``R1``, ``R2`` at tau=0 plus the one-sided difference quotient of tau -> R(g_tau)."""
    y = start_point(family.g0, yhat)[1:]
    if shot0 is None:
        shot0 = _shoot_at(family, 0.0, yhat, x_T, T, eta0_fixed, guess, **kw)
    d_eta, shots = _tau_derivative(family, 0.0, yhat, x_T, T, eta0_fixed, shot0, h_tau, **kw)
    eta = shots[0].etahat
    G0 = family.g0.inverse_metric(y)
    D = family.g1.inverse_metric(y) - G0
    two_H0 = float(eta @ G0 @ eta)
    if not two_H0 > 0:
        raise NotTimelike(f"shooting covector {eta.tolist()} is not timelike")
    root = np.sqrt(two_H0)
    R1 = 0.5 * T / root * float(eta @ D @ eta)
    R2 = T / root * float((G0 @ eta) @ d_eta)
    g_h = family_field(family, h_tau)
    dq = (geodesic_length_at(g_h, y, shots[1].etahat, T) - geodesic_length_at(family.g0, y, eta, T)) / h_tau
    return FirstVariation(R1, R2, dq, eta, d_eta, two_H0, shot0)


def sup_norm(g0: MetricBase, g1: MetricBase, grid) -> float:
    """``max_y max_jk |G1(y) - G0(y)|`` over the grid points."""
    best = 0.0
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in grid]
    if not pts:
        raise ValueError("sup_norm needs a nonempty grid")
    for p in pts:
        if not (g0.contains(p) and g1.contains(p)):
            raise DomainError(f"grid point {p.tolist()} outside the metric boxes")
        best = max(best, float(np.max(np.abs(g1.inverse_metric(p) - g0.inverse_metric(p)))))
    return best


def path_norm_parts(family: InterpolatedFamily, paths, nodes: int = NORM_NODES) -> tuple[float, float]:
    """Sup over paths of the integrated max-abs difference, and of its first spatial derivatives."""
    g0, g1 = family.g0, family.g1
    val_sup = der_sup = 0.0
    for path in paths:
        ts = np.linspace(0.0, path.T, nodes)
        xs, _ = path.state_at(ts)
        val = np.empty(nodes)
        der = np.empty(nodes)
        for i, xh in enumerate(xs):
            x = xh[1:] if g0.signature == LORENTZIAN else xh
            val[i] = np.max(np.abs(g1.inverse_metric(x) - g0.inverse_metric(x)))
            der[i] = np.max(np.abs(g1.inverse_metric_grad(x) - g0.inverse_metric_grad(x)))
        val_sup = max(val_sup, float(simpson(val, x=ts)))
        der_sup = max(der_sup, float(simpson(der, x=ts)))
    return val_sup, der_sup


def path_norm(family: InterpolatedFamily, paths, nodes: int = NORM_NODES) -> float:
    a, b = path_norm_parts(family, paths, nodes)
    return a + b


# -- the full experiment -------------------------------------------------------


@dataclass(frozen=True)
class BoundaryPair:
    y: tuple
    x_T: tuple
    T: float
    eta0: float


def read_pairs_csv(src) -> list[BoundaryPair]:
    """CSV ``y1..yn,xT1..xTn,T,eta0``."""
    with open(Path(src), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = sum(1 for h in header if h.startswith("y"))
        if header != [f"y{i}" for i in range(1, n + 1)] + [f"xT{i}" for i in range(1, n + 1)] + ["T", "eta0"]:
            raise ValueError(f"unexpected pair-table header {header}")
        pairs = []
        for row in reader:
            if row:
                v = [float(s) for s in row]
                pairs.append(BoundaryPair(tuple(v[:n]), tuple(v[n:2 * n]), v[2 * n], v[2 * n + 1]))
    return pairs


def write_pairs_csv(pairs, dest) -> None:
    pairs = list(pairs)
    n = len(pairs[0].y)
    with open(Path(dest), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"y{i}" for i in range(1, n + 1)] + [f"xT{i}" for i in range(1, n + 1)] + ["T", "eta0"])
        for p in pairs:
            w.writerow([f"{v:.17g}" for v in (*p.y, *p.x_T, p.T, p.eta0)])


@dataclass
class ScaleRecord:
    scale: float
    Delta: float
    R1: float
    R2: float
    difference_quotient: float
    sup_norm: float
    path_norm: float
    eta_hat0: np.ndarray
    eta_hat1: np.ndarray
    arrival_g0: float
    arrival_g1: float
    shooting: list  # per-tau rows

    @property
    def remainder(self) -> float:
        return abs(self.Delta - self.R1 - self.R2)

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "Delta": self.Delta,
            "R1": self.R1,
            "R2": self.R2,
            "difference_quotient": self.difference_quotient,
            "remainder": self.remainder,
            "sup_norm": self.sup_norm,
            "path_norm": self.path_norm,
            "eta_hat0": self.eta_hat0.tolist(),
            "eta_hat1": self.eta_hat1.tolist(),
            "arrival_x0_g0": self.arrival_g0,
            "arrival_x0_g1": self.arrival_g1,
            "shooting": self.shooting,
        }


@dataclass
class RigidityReport:
    pairs: list          # per pair: dict with "pair" and list of ScaleRecord
    Delta: float
    R1: float
    R2: float
    l0: float | None
    l1: float | None
    sup_norm: float
    path_norm: float
    C1: float
    C2: float
    C_ls: tuple
    envelope_factor: float
    inequality_holds: bool
    slope: float | None
    rigid: bool
    degenerate_direction: bool

    def to_dict(self) -> dict:
        return {
            "pairs": [
                {
                    "y": list(p["pair"].y),
                    "x_T": list(p["pair"].x_T),
                    "T": p["pair"].T,
                    "eta0": p["pair"].eta0,
                    "slope": p["slope"],
                    "scales": [r.to_dict() for r in p["records"]],
                }
                for p in self.pairs
            ],
            "Delta": self.Delta,
            "R1": self.R1,
            "R2": self.R2,
            "l0": self.l0,
            "l1": self.l1,
            "sup_norm": self.sup_norm,
            "path_norm": self.path_norm,
            "C1": self.C1,
            "C2": self.C2,
            "C_least_squares": list(self.C_ls),
            "envelope_factor": self.envelope_factor,
            "inequality_holds": self.inequality_holds,
            "slope": self.slope,
            "rigid": self.rigid,
            "degenerate_direction": self.degenerate_direction,
        }


def _scale_record(g0, g1s, scale, pair, grid, shot0, h_tau, taus, kw) -> ScaleRecord:
    family = InterpolatedFamily(g0, g1s)
    y = np.asarray(pair.y, dtype=float)
    shots = {0.0: shot0}
    guess = shot0.etahat
    for tau in taus[1:]:
        res = _shoot_at(family, float(tau), pair.y, pair.x_T, pair.T, pair.eta0, guess, **kw)
        shots[float(tau)] = res
        guess = res.etahat
    for tau, res in shots.items():
        if tau != 0.0:
            fld = family_field(family, tau)
            check_signature(fld, fld.inverse_metric(y), y)
    eta1 = shots[1.0].etahat
    eta0 = shot0.etahat
    Delta = geodesic_length_at(g1s, y, eta1, pair.T) - geodesic_length_at(g0, y, eta0, pair.T)
    fv = first_variation(family, pair.y, pair.x_T, pair.T, pair.eta0, h_tau=h_tau, shot0=shot0, **kw)
    table = [
        {"tau": tau, "etahat": r.etahat.tolist(), "residual": r.residual,
         "iterations": r.iterations, "arrival_x0": r.arrival_time}
        for tau, r in shots.items()
    ]
    return ScaleRecord(
        scale=scale,
        Delta=Delta,
        R1=fv.R1,
        R2=fv.R2,
        difference_quotient=fv.difference_quotient,
        sup_norm=sup_norm(g0, g1s, grid),
        path_norm=path_norm(family, [r.path for r in shots.values()]),
        eta_hat0=eta0,
        eta_hat1=eta1,
        arrival_g0=shot0.arrival_time,
        arrival_g1=shots[1.0].arrival_time,
        shooting=table,
    )


def remainder_slope(records) -> float | None:
    pts = [(r.scale, r.remainder) for r in records if r.remainder > 1e-15]
    if len(pts) < 2 or max(p[1] for p in pts) < 1e-13:
        return None
    s, rem = np.log(np.array(pts)).T
    return float(np.polyfit(s, rem, 1)[0])


def rigidity_check(
    g0: MetricBase,
    g1: MetricBase,
    boundary_pairs,
    grid,
    *,
    scales=SCALES,
    taus=TAU_GRID,
    h_tau: float = H_TAU,
    shoot_tol: float = SHOOT_TOL,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> RigidityReport:
    """Run shooting, first variation, norms and the scale sweep for every pair.

    The remainder constants C1, C2 are fitted by nonnegative least squares of
    ``|Delta - R1 - R2|`` on the squared norms, then multiplied by the
    smallest factor >= 1 that makes the fitted bound dominate every observed
    remainder (``envelope_factor``), since they play the role of bounding
    constants.
    """
    kw = dict(shoot_tol=shoot_tol, rtol=rtol, atol=atol)
    pairs = [p if isinstance(p, BoundaryPair) else BoundaryPair(*p) for p in boundary_pairs]
    pairs = [BoundaryPair(tuple(np.atleast_1d(p.y).tolist()), tuple(np.atleast_1d(p.x_T).tolist()),
                          float(p.T), float(p.eta0)) for p in pairs]
    if not pairs:
        raise ValueError("rigidity_check needs at least one boundary pair")
    family = InterpolatedFamily(g0, g1)
    out = []
    for pair in pairs:
        shot0 = _shoot_at(family, 0.0, pair.y, pair.x_T, pair.T, pair.eta0, None, **kw)
        records = []
        for s in scales:
            g1s = g1 if s == 1.0 else InterpolatedMetric(g0, g1, s)
            records.append(_scale_record(g0, g1s, float(s), pair, grid, shot0, h_tau, taus, kw))
        out.append({"pair": pair, "records": records, "slope": remainder_slope(records)})

    all_records = [r for p in out for r in p["records"]]
    A = np.array([[r.sup_norm ** 2, r.path_norm ** 2] for r in all_records])
    b = np.array([r.remainder for r in all_records])
    if np.any(A > 0) and np.any(b > 0):
        C_ls, _ = nnls(A, b)
    else:
        C_ls = np.zeros(2)
    fit = A @ C_ls
    ratios = [bi / fi for bi, fi in zip(b, fit) if bi > 0 and fi > 0]
    envelope = max([1.0] + ratios)
    C1, C2 = (envelope * C_ls).tolist()
    inequality = all(
        r.R1 + r.R2 <= abs(r.Delta) + C1 * r.sup_norm ** 2 + C2 * r.path_norm ** 2 + 1e-14
        for r in all_records
    )
    rigid = all(r.sup_norm <= 1e-6 for r in all_records if abs(r.Delta) <= 1e-9)

    main = [p["records"][0] for p in out]  # scale 1 records
    primary = max(range(len(out)), key=lambda i: abs(main[i].Delta))
    top = main[primary]
    sup_top = max(r.sup_norm for r in main)
    path_top = max(r.path_norm for r in main)
    return RigidityReport(
        pairs=out,
        Delta=top.Delta,
        R1=top.R1,
        R2=top.R2,
        l0=top.R1 / top.sup_norm if top.sup_norm > 0 else None,
        l1=top.R2 / top.path_norm if top.path_norm > 0 else None,
        sup_norm=sup_top,
        path_norm=path_top,
        C1=C1,
        C2=C2,
        C_ls=tuple(C_ls.tolist()),
        envelope_factor=float(envelope),
        inequality_holds=bool(inequality),
        slope=out[primary]["slope"],
        rigid=bool(rigid),
        degenerate_direction=bool(sup_top > 0 and all(r.R1 <= 0 for r in main)),
    )
