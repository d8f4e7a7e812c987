"""Static metrics on R x R^n and the pointwise quantities built from them.

A field is specified through its *inverse* metric ``G(x) = [g^{jk}(x)]``,
which is what the Hamiltonian consumes; ``[g_{jk}]`` is obtained by
inversion.  Coefficients depend on the spatial variables only.

Lorentzian fields are (n+1)x(n+1) with signature (+, -, ..., -) and index 0
for time.  Riemannian fields (signature ``"riemannian"``) are n x n positive
definite with no time index; they exist for the purely spatial special case.
"""

from __future__ import annotations

import enum
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np
import sympy as sp

from . import expressions
from .errors import ConfigError, DomainError, EvaluationError, SignatureViolation, SingularMetric

KINDS = ("minkowski", "diagonal", "conformal", "general")
LORENTZIAN = "lorentzian"
RIEMANNIAN = "riemannian"
DEFAULT_BOX = (-10.0, 10.0)
FD_STEP = 1e-5
COND_LIMIT = 1e12


class CovectorClass(enum.Enum):
    TIMELIKE_PLUS = "TimelikePlus"
    NULL = "Null"
    OTHER = "Other"


class MetricBase:
    """Common interface: raw evaluation of G and dG/dx plus bookkeeping.

    Subclasses implement :meth:`inverse_metric` and :meth:`inverse_metric_grad`.
    Those raw methods skip box and signature checks; use the module-level
    functions for checked evaluation.
    """

    n: int
    signature: str
    box: np.ndarray
    name: str = "metric"

    @property
    def size(self) -> int:
        return self.n + 1 if self.signature == LORENTZIAN else self.n

    @property
    def offset(self) -> int:
        """Index of the first spatial coordinate inside a coordinate vector."""
        return 1 if self.signature == LORENTZIAN else 0

    def inverse_metric(self, x) -> np.ndarray:
        raise NotImplementedError

    def inverse_metric_grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def _central_grad(self, x, h: float = FD_STEP) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty((self.n, self.size, self.size))
        for l in range(self.n):
            e = np.zeros(self.n)
            e[l] = h
            out[l] = (self.inverse_metric(x + e) - self.inverse_metric(x - e)) / (2 * h)
        return out

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.box[:, 0]) and np.all(x <= self.box[:, 1]))


class MetricField(MetricBase):
    """Inverse metric given by coefficient expressions over ``x1 .. xn``.

    Use the constructors :meth:`minkowski`, :meth:`diagonal`, :meth:`conformal`,
    :meth:`general` or :meth:`from_config` rather than ``__init__``.
    """

    def __init__(
        self,
        n: int,
        matrix: sp.Matrix,
        *,
        kind: str,
        entries: Mapping[str, Any],
        box=None,
        signature: str = LORENTZIAN,
        derivative_mode: str = "analytic",
        fd_step: float = FD_STEP,
        name: str | None = None,
    ):
        if n < 1:
            raise ConfigError(f"dimension n must be >= 1, got {n}")
        if signature not in (LORENTZIAN, RIEMANNIAN):
            raise ConfigError(f"unknown signature {signature!r}")
        if derivative_mode not in ("analytic", "central"):
            raise ConfigError(f"unknown derivative mode {derivative_mode!r}")
        self.n = int(n)
        self.signature = signature
        self.kind = kind
        self.entries = dict(entries)
        self.box = _parse_box(box, self.n)
        self.derivative_mode = derivative_mode
        self.fd_step = fd_step
        self.name = name or kind
        if matrix.shape != (self.size, self.size):
            raise ConfigError(f"matrix shape {matrix.shape} does not match size {self.size}")
        self.matrix = matrix
        self._constant = all(matrix[j, k].is_number for j in range(self.size) for k in range(self.size))
        if self._constant:
            self._G = np.array(matrix.evalf(), dtype=float)

    # -- constructors -------------------------------------------------------

    @classmethod
    def minkowski(cls, n: int, *, box=None, signature: str = LORENTZIAN, **kw) -> "MetricField":
        size = n + 1 if signature == LORENTZIAN else n
        diag = [1] + [-1] * n if signature == LORENTZIAN else [1] * n
        return cls(n, sp.diag(*diag[:size]), kind="minkowski", entries={}, box=box, signature=signature, **kw)

    @classmethod
    def diagonal(cls, n: int, diag: Sequence[str | float], *, box=None, signature: str = LORENTZIAN, **kw):
        size = n + 1 if signature == LORENTZIAN else n
        if len(diag) != size:
            raise ConfigError(f"diagonal metric needs {size} entries, got {len(diag)}")
        first = 0 if signature == LORENTZIAN else 1
        entries = {f"{i + first}{i + first}": d for i, d in enumerate(diag)}
        m = sp.diag(*[expressions.parse(d, n) for d in diag])
        return cls(n, m, kind="diagonal", entries=entries, box=box, signature=signature, **kw)

    @classmethod
    def conformal(cls, n: int, factor: str | float, *, box=None, signature: str = LORENTZIAN, **kw):
        """``G(x) = c(x) * diag(1, -1, ..., -1)`` (identity for Riemannian)."""
        c = expressions.parse(factor, n)
        base = [1] + [-1] * n if signature == LORENTZIAN else [1] * n
        m = sp.diag(*[c * b for b in base])
        return cls(n, m, kind="conformal", entries={"c": factor}, box=box, signature=signature, **kw)

    @classmethod
    def general(cls, n: int, matrix: Sequence[Sequence[str | float]], *, box=None,
                signature: str = LORENTZIAN, **kw):
        """Full symmetric matrix of expressions; the upper triangle is used and mirrored."""
        size = n + 1 if signature == LORENTZIAN else n
        if len(matrix) != size or any(len(r) != size for r in matrix):
            raise ConfigError(f"general metric needs a {size}x{size} matrix")
        first = 0 if signature == LORENTZIAN else 1
        entries = {}
        m = sp.zeros(size, size)
        for j in range(size):
            for k in range(j, size):
                ejk = expressions.parse(matrix[j][k], n)
                ekj = expressions.parse(matrix[k][j], n)
                if sp.simplify(ejk - ekj) != 0:
                    raise ConfigError(f"entries {j + first}{k + first} and {k + first}{j + first} differ")
                m[j, k] = m[k, j] = ejk
                entries[f"{j + first}{k + first}"] = matrix[j][k]
        return cls(n, m, kind="general", entries=entries, box=box, signature=signature, **kw)

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "MetricField":
        """Build from ``{"n", "kind", "entries", "box"[, "signature", "derivative_mode"]}``."""
        try:
            n = int(cfg["n"])
            kind = cfg["kind"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"metric config needs integer 'n' and 'kind': {exc}") from None
        if "box" not in cfg:
            raise ConfigError("metric config needs an explicit 'box'")
        signature = cfg.get("signature", LORENTZIAN)
        kw = dict(
            box=cfg["box"],
            signature=signature,
            derivative_mode=cfg.get("derivative_mode", "analytic"),
            name=cfg.get("name"),
        )
        entries = dict(cfg.get("entries", {}))
        size = n + 1 if signature == LORENTZIAN else n
        first = 0 if signature == LORENTZIAN else 1
        if kind == "minkowski":
            return cls.minkowski(n, **kw)
        if kind == "conformal":
            if "c" not in entries:
                raise ConfigError("conformal metric needs entry 'c'")
            return cls.conformal(n, entries["c"], **kw)
        table = {}
        for key, val in entries.items():
            j, k = _parse_index(key, size, first)
            table[(j, k)] = val
        if kind == "diagonal":
            if any(j != k for j, k in table):
                raise ConfigError("diagonal metric accepts only 'jj' entries")
            missing = [i + first for i in range(size) if (i, i) not in table]
            if missing:
                raise ConfigError(f"diagonal metric missing entries for indices {missing}")
            return cls.diagonal(n, [table[(i, i)] for i in range(size)], **kw)
        if kind == "general":
            mat = [[0] * size for _ in range(size)]
            for j in range(size):
                for k in range(size):
                    if (j, k) in table and (k, j) in table and table[(j, k)] != table[(k, j)]:
                        mat[j][k] = table[(j, k)]
                    else:
                        mat[j][k] = table.get((j, k), table.get((k, j), 0))
            return cls.general(n, mat, **kw)
        raise ConfigError(f"unknown metric kind {kind!r}; expected one of {KINDS}")

    def to_config(self) -> dict:
        cfg = {
            "n": self.n,
            "kind": self.kind,
            "entries": {k: v for k, v in self.entries.items()},
            "box": self.box.tolist(),
        }
        if self.signature != LORENTZIAN:
            cfg["signature"] = self.signature
        if self.derivative_mode != "analytic":
            cfg["derivative_mode"] = self.derivative_mode
        return cfg

    # -- raw evaluation -----------------------------------------------------

    @cached_property
    def _compiled(self):
        rows = [[self.matrix[j, k] for k in range(self.size)] for j in range(self.size)]
        return expressions.compile_array(rows, self.n)

    @cached_property
    def _compiled_grad(self):
        return expressions.compile_array(expressions.gradient_exprs(self.matrix, self.n), self.n)

    def inverse_metric(self, x) -> np.ndarray:
        if self._constant:
            return self._G.copy()
        return self._compiled(x)

    def inverse_metric_grad(self, x) -> np.ndarray:
        if self._constant:
            return np.zeros((self.n, self.size, self.size))
        if self.derivative_mode == "central":
            return self._central_grad(x, self.fd_step)
        return self._compiled_grad(x)

    def __repr__(self):
        return f"MetricField(n={self.n}, kind={self.kind!r}, signature={self.signature!r})"


def _parse_box(box, n: int) -> np.ndarray:
    if box is None:
        return np.array([DEFAULT_BOX] * n, dtype=float)
    arr = np.asarray(box, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (n, 1))
    if arr.shape != (n, 2) or np.any(arr[:, 0] >= arr[:, 1]):
        raise ConfigError(f"box must be {n} pairs [lo, hi] with lo < hi, got {box!r}")
    return arr


def _parse_index(key: str, size: int, first: int) -> tuple[int, int]:
    parts = key.split(",") if "," in key else list(key)
    try:
        j, k = (int(p) - first for p in parts)
    except ValueError:
        raise ConfigError(f"bad entry key {key!r}; expected 'jk' or 'j,k'") from None
    if not (0 <= j < size and 0 <= k < size):
        raise ConfigError(f"entry key {key!r} out of range")
    return j, k


# -- checked pointwise operations --------------------------------------------


def _spatial(field: MetricBase, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (field.n,):
        raise ValueError(f"expected a spatial point of length {field.n}, got shape {x.shape}")
    return x


def check_signature(field: MetricBase, G: np.ndarray, x=None) -> None:
    w = np.linalg.eigvalsh(G)
    scale = max(np.max(np.abs(w)), 1e-300)
    pos = int(np.sum(w > 1e-13 * scale))
    neg = int(np.sum(w < -1e-13 * scale))
    want = (1, field.size - 1) if field.signature == LORENTZIAN else (field.size, 0)
    if (pos, neg) != want:
        where = "" if x is None else f" at x={np.asarray(x).tolist()}"
        raise SignatureViolation(
            f"inverse metric{where} has {pos} positive / {neg} negative eigenvalues, expected {want}"
        )


def evaluate_inverse_metric(field: MetricBase, x) -> np.ndarray:
    """``[g^{jk}(x)]`` with box, finiteness and signature checks."""
    x = _spatial(field, x)
    if not field.contains(x):
        raise DomainError(f"x={x.tolist()} outside evaluation box {field.box.tolist()}")
    G = field.inverse_metric(x)
    if not np.all(np.isfinite(G)):
        raise EvaluationError(f"non-finite inverse metric at x={x.tolist()}")
    check_signature(field, G, x)
    return G


def evaluate_metric(field: MetricBase, x) -> np.ndarray:
    """``[g_{jk}(x)]``, the matrix inverse of :func:`evaluate_inverse_metric`."""
    G = evaluate_inverse_metric(field, x)
    if np.linalg.cond(G) > COND_LIMIT:
        raise SingularMetric(f"inverse metric at x={np.asarray(x).tolist()} is ill-conditioned")
    g = np.linalg.inv(G)
    if np.max(np.abs(g @ G - np.eye(field.size))) > 1e-12:
        raise SingularMetric(f"inversion residual too large at x={np.asarray(x).tolist()}")
    return g


def hamiltonian(field: MetricBase, x, eta) -> float:
    """``H = 1/2 eta^T G(x) eta``."""
    G = evaluate_inverse_metric(field, x)
    eta = np.asarray(eta, dtype=float)
    return 0.5 * float(eta @ G @ eta)


def hamiltonian_gradients(field: MetricBase, x, eta) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(dH/dx, dH/dxi)``: an n-vector and a ``field.size``-vector."""
    G = evaluate_inverse_metric(field, x)
    eta = np.asarray(eta, dtype=float)
    dG = field.inverse_metric_grad(_spatial(field, x))
    return 0.5 * (dG @ eta) @ eta, G @ eta


def null_tolerance(eta) -> float:
    eta = np.asarray(eta, dtype=float)
    return 1e-10 * (1.0 + float(eta @ eta))


def classify_covector(field: MetricBase, y, eta, tol: float | None = None) -> CovectorClass:
    two_h = 2.0 * hamiltonian(field, y, eta)
    tol = null_tolerance(eta) if tol is None else tol
    if two_h > tol:
        return CovectorClass.TIMELIKE_PLUS
    if two_h < -tol:
        return CovectorClass.OTHER
    return CovectorClass.NULL
