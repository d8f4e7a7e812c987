"""Pointwise recovery of [g^{jk}(y)] from geodesic lengths.

Lengths determine the quadratic form ``Q(eta) = (R / T)^2 = eta^T G(y) eta``
but only on timelike covectors.  The full symmetric form is rebuilt by
second-difference polarization about a timelike seed ``a``::

    B(e_i, e_j) = [Q(a + eps e_i + eps e_j) - Q(a + eps e_i - eps e_j)
                   - Q(a - eps e_i + eps e_j) + Q(a - eps e_i - eps e_j)] / (8 eps^2)

which is exact for any eps once all four covectors are timelike.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    LorentzError,
    MissingSample,
    NoTimelikeDirection,
    NotTimelike,
    PolarizationFailure,
    SignatureViolation,
    SingularMetric,
    UnsupportedOrder,
)
from .length import LengthOracle
from .metric import LORENTZIAN, RIEMANNIAN

EPS_FLOOR = 1e-6
RANDOM_SEEDS = 200


@dataclass
class RecoveredMetricPoint:
    y: np.ndarray
    Q: np.ndarray      # recovered [g^{jk}(y)]
    Qinv: np.ndarray   # recovered [g_{jk}(y)]
    epsilon: float
    seed: np.ndarray
    residual: float
    queries: int = 0

    def to_dict(self) -> dict:
        return {
            "y": self.y.tolist(),
            "Q": self.Q.tolist(),
            "Qinv": self.Qinv.tolist(),
            "epsilon": self.epsilon,
            "seed": self.seed.tolist(),
            "residual": self.residual,
        }


@dataclass
class RecoveryFailure:
    y: np.ndarray
    error: LorentzError

    def to_dict(self) -> dict:
        return {"y": self.y.tolist(), "error": type(self.error).__name__, "message": str(self.error)}


@dataclass
class BoundaryJet:
    y: np.ndarray
    h: float
    order: int
    derivatives: dict = dc_field(default_factory=dict)  # multi-index -> matrix

    def to_dict(self) -> dict:
        return {
            "y": self.y.tolist(),
            "h": self.h,
            "order": self.order,
            "rows": [
                {"alpha": list(alpha), "matrix": mat.tolist()}
                for alpha, mat in sorted(self.derivatives.items(), key=lambda kv: (sum(kv[0]), [-a for a in kv[0]]))
            ],
        }


def measured_form(oracle: LengthOracle, y, eta, T: float = 1.0) -> float:
    """``Q(eta) = (R / T)^2``, i.e. ``2 H(y, eta)``."""
    s = oracle.query(y, eta, T)
    return (s.R / T) ** 2


def find_timelike_seed(oracle: LengthOracle, y, *, T: float = 1.0, seed: int = 0) -> np.ndarray:
    """First admissible unit covector among ``e_0``, ``-e_0`` and 200 random directions."""
    m = oracle.size
    e0 = np.zeros(m)
    e0[0] = 1.0
    rng = np.random.default_rng(seed)

    def candidates():
        yield e0
        yield -e0
        for _ in range(RANDOM_SEEDS):
            v = rng.standard_normal(m)
            yield v / np.linalg.norm(v)

    for a in candidates():
        try:
            if measured_form(oracle, y, a, T) > 0:
                return a
        except (NotTimelike, MissingSample):
            continue
    raise NoTimelikeDirection(f"no timelike covector found at y={np.asarray(y).tolist()}")


class _FormCache:
    def __init__(self, oracle, y, T):
        self.oracle, self.y, self.T = oracle, y, T
        self.values: dict = {}

    def __call__(self, eta) -> float:
        key = tuple(np.round(eta, 15))
        if key not in self.values:
            self.values[key] = (np.array(eta, dtype=float), measured_form(self.oracle, self.y, eta, self.T))
        return self.values[key][1]

    def residual(self, B) -> float:
        if not self.values:
            return 0.0
        return max(abs(eta @ B @ eta - q) for eta, q in self.values.values())


def _polarize(form, a, eps, m) -> np.ndarray:
    B = np.empty((m, m))
    eye = np.eye(m)
    for i in range(m):
        for j in range(i, m):
            ei, ej = eps * eye[i], eps * eye[j]
            B[i, j] = B[j, i] = (
                form(a + ei + ej) - form(a + ei - ej) - form(a - ei + ej) + form(a - ei - ej)
            ) / (8 * eps * eps)
    return B


def _lstsq_form(form, a, eps, m, rng, factor=3) -> np.ndarray:
    pairs = [(i, j) for i in range(m) for j in range(i, m)]
    rows, rhs = [], []
    need = factor * len(pairs)
    tries = 0
    while len(rows) < need:
        tries += 1
        if tries > 50 * need:
            raise PolarizationFailure("could not gather enough admissible least-squares queries")
        u = rng.standard_normal(m)
        eta = a + eps * u / np.linalg.norm(u)
        try:
            q = form(eta)
        except NotTimelike:
            continue
        rows.append([eta[i] * eta[j] * (1 if i == j else 2) for i, j in pairs])
        rhs.append(q)
    coef, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    B = np.empty((m, m))
    for c, (i, j) in zip(coef, pairs):
        B[i, j] = B[j, i] = c
    return B


def _finish(oracle, y, B, eps, a, form) -> RecoveredMetricPoint:
    m = oracle.size
    w = np.linalg.eigvalsh(B)
    want = (1, m - 1) if oracle.signature == LORENTZIAN else (m, 0)
    if (int(np.sum(w > 0)), int(np.sum(w < 0))) != want:
        raise SignatureViolation(f"recovered form at y={np.asarray(y).tolist()} has eigenvalues {w.tolist()}")
    Binv = np.linalg.inv(B)
    if np.max(np.abs(B @ Binv - np.eye(m))) > 1e-9:
        raise SingularMetric(f"recovered form at y={np.asarray(y).tolist()} is numerically singular")
    return RecoveredMetricPoint(
        y=np.atleast_1d(np.asarray(y, dtype=float)).copy(),
        Q=B, Qinv=Binv, epsilon=float(eps), seed=np.asarray(a, dtype=float),
        residual=float(form.residual(B)), queries=len(form.values),
    )


def recover_inverse_metric_at(
    oracle: LengthOracle,
    y,
    epsilon: float | None = None,
    *,
    T: float = 1.0,
    method: str = "polarization",
    seed: int = 0,
) -> RecoveredMetricPoint:
    """Rebuild ``[g^{jk}(y)]`` from length queries at ``y``.

    ``epsilon`` defaults to ``1e-2 |a|`` and is halved until every query is
    timelike (floor 1e-6).  ``method="lstsq"`` fits the form to random
    admissible queries instead, which averages oracle noise.
    """
    m = oracle.size
    a = find_timelike_seed(oracle, y, T=T, seed=seed)
    form = _FormCache(oracle, y, T)
    eps = 1e-2 * float(np.linalg.norm(a)) if epsilon is None else float(epsilon)
    rng = np.random.default_rng(seed + 1)
    while True:
        try:
            if method == "polarization":
                B = _polarize(form, a, eps, m)
            elif method == "lstsq":
                B = _lstsq_form(form, a, eps, m, rng)
            else:
                raise ValueError(f"unknown recovery method {method!r}")
            break
        except NotTimelike:
            if oracle.signature == RIEMANNIAN:
                raise PolarizationFailure(
                    f"non-positive length data at y={np.asarray(y).tolist()}; form is not positive definite"
                ) from None
            eps *= 0.5
            if eps < EPS_FLOOR:
                raise PolarizationFailure(
                    f"no admissible polarization stencil at y={np.asarray(y).tolist()} above eps={EPS_FLOOR}"
                ) from None
    return _finish(oracle, y, B, eps, a, form)


def recover_on_region(oracle: LengthOracle, points, epsilon: float | None = None, **kw) -> list:
    """Independent recovery at each point; failures become :class:`RecoveryFailure` entries."""
    out = []
    for y in points:
        try:
            out.append(recover_inverse_metric_at(oracle, y, epsilon, **kw))
        except LorentzError as exc:
            out.append(RecoveryFailure(np.atleast_1d(np.asarray(y, dtype=float)), exc))
    return out


def recover_riemannian(oracle: LengthOracle, y, epsilon: float | None = None, *, T: float = 1.0) -> np.ndarray:
    """n x n form ``[g^{jk}(y)]`` from a positive-definite (purely spatial) length oracle."""
    if oracle.signature != RIEMANNIAN:
        raise ValueError("recover_riemannian needs an oracle over a Riemannian field")
    m = oracle.size
    a = np.zeros(m)
    a[0] = 1.0
    form = _FormCache(oracle, y, T)
    # every direction is admissible, so the widest stencil keeps roundoff smallest
    eps = 1.0 if epsilon is None else float(epsilon)
    try:
        B = _polarize(form, a, eps, m)
    except NotTimelike as exc:
        raise PolarizationFailure(f"length query rejected at y={np.asarray(y).tolist()}: {exc}") from None
    return _finish(oracle, y, B, eps, a, form).Q


# -- boundary jets -----------------------------------------------------------

_FIRST_ONE_SIDED = ((0, -1.5), (1, 2.0), (2, -0.5))
_SECOND_ONE_SIDED = ((0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0))
_FIRST_CENTRAL = ((-1, -0.5), (1, 0.5))
_SECOND_CENTRAL = ((-1, 1.0), (0, -2.0), (1, 1.0))


def _stencil(order_in_axis: int, one_sided: bool, sign: int):
    """Offsets (in units of h along the axis) and weights (times h^-order)."""
    if order_in_axis == 1:
        base = _FIRST_ONE_SIDED if one_sided else _FIRST_CENTRAL
        if one_sided:
            return [(k * sign, w * sign) for k, w in base]
        return list(base)
    if order_in_axis == 2:
        base = _SECOND_ONE_SIDED if one_sided else _SECOND_CENTRAL
        return [(k * sign, w) for k, w in base] if one_sided else list(base)
    return [(0, 1.0)]


def recover_boundary_jet(
    oracle: LengthOracle,
    y,
    normal=None,
    h: float = 1e-3,
    order: int = 2,
    *,
    epsilon: float | None = None,
    T: float = 1.0,
    richardson: bool = False,
    seed: int = 0,
) -> BoundaryJet:
    """Derivatives ``d^alpha g^{jk}(y)`` for ``|alpha| <= order`` from recoveries near ``y``.

    ``normal`` is an axis-aligned inward direction (e.g. ``[1, 0]``); along it
    only points ``y + k h normal`` with ``k >= 0`` are queried and one-sided
    second-order stencils are used.  Other axes use central stencils.  With
    ``normal=None`` every axis is central.  ``richardson`` extrapolates the
    first derivatives from steps ``h`` and ``h/2``.
    """
    if order > 2 or order < 0:
        raise UnsupportedOrder(f"boundary jets support order <= 2, got {order}")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = oracle.n
    normal_axis, sign = None, 1
    if normal is not None:
        nv = np.asarray(normal, dtype=float)
        nz = np.flatnonzero(nv)
        if nv.shape != (n,) or len(nz) != 1:
            raise ValueError(f"normal must be a nonzero axis-aligned vector of length {n}")
        normal_axis, sign = int(nz[0]), int(np.sign(nv[nz[0]]))

    cache: dict = {}

    def Q_at(offset_units, step):
        key = (tuple(offset_units), step)
        if key not in cache:
            pt = y + step * np.asarray(offset_units, dtype=float)
            cache[key] = recover_inverse_metric_at(oracle, pt, epsilon, T=T, seed=seed).Q
        return cache[key]

    def derivative(alpha, step):
        axes = [(ax, k) for ax, k in enumerate(alpha) if k]
        stencils = [_stencil(k, ax == normal_axis, sign) for ax, k in axes]
        total = 0.0
        for combo in itertools.product(*stencils):
            off = [0] * n
            weight = 1.0
            for (ax, _), (k, w) in zip(axes, combo):
                off[ax] = k
                weight *= w
            total = total + weight * Q_at(off, step)
        return total / step ** sum(alpha)

    jet = BoundaryJet(y=y, h=h, order=order)
    jet.derivatives[(0,) * n] = Q_at([0] * n, h)
    for total_order in range(1, order + 1):
        for alpha in itertools.product(range(total_order + 1), repeat=n):
            if sum(alpha) != total_order:
                continue
            d = derivative(alpha, h)
            if richardson and total_order == 1:
                d = (4 * derivative(alpha, h / 2) - d) / 3
            jet.derivatives[tuple(alpha)] = d
    return jet
