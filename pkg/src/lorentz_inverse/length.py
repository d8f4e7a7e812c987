"""Geodesic length: path quadrature, closed form, and length oracles.

The length of the geodesic with data (y, eta) over [0, T] is

    R = int_0^T sqrt(g_{jk}(x) xdot_j xdot_k) dt,

and conservation of H along the flow collapses it to ``sqrt(2 H(y, eta)) T``.
Oracles wrap either route (or a stored table) behind one ``query`` method,
which is all the inverse problem consumes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

from .errors import MissingSample, NotTimelike
from .flow import GeodesicPath, integrate_bicharacteristic
from .metric import (
    LORENTZIAN,
    RIEMANNIAN,
    CovectorClass,
    MetricBase,
    classify_covector,
    hamiltonian,
)

QUAD_NODES = 257
QUAD_MAX_NODES = 4097
QUAD_RTOL = 1e-8


@dataclass(frozen=True)
class LengthSample:
    y: tuple[float, ...]
    eta: tuple[float, ...]
    T: float
    R: float


def _require_timelike(field: MetricBase, y, eta) -> None:
    cls = classify_covector(field, y, eta)
    if cls is not CovectorClass.TIMELIKE_PLUS:
        raise NotTimelike(
            f"covector {np.asarray(eta).tolist()} at y={np.asarray(y).tolist()} is {cls.value}; "
            "length data needs 2H > 0"
        )


def _integrand(field: MetricBase, path: GeodesicPath, ts: np.ndarray) -> np.ndarray:
    off = field.offset
    xs, xis = path.state_at(ts)
    out = np.empty(len(ts))
    for i, (x, xi) in enumerate(zip(xs, xis)):
        G = field.inverse_metric(x[off:])
        xdot = G @ xi  # velocity from the covector, not by differencing x(t)
        arg = xdot @ np.linalg.solve(G, xdot)
        if not arg > 0:
            raise NotTimelike(f"length integrand argument {arg:.3e} <= 0 at t={ts[i]:.6g}")
        out[i] = np.sqrt(arg)
    return out


def length_by_quadrature(
    field: MetricBase,
    path: GeodesicPath,
    *,
    nodes: int = QUAD_NODES,
    rtol: float = QUAD_RTOL,
    max_nodes: int = QUAD_MAX_NODES,
) -> float:
    """Composite Simpson over a uniform resampling, doubling until stable."""
    _require_timelike(field, path.yhat[field.offset:], path.etahat)
    prev = None
    while True:
        ts = np.linspace(0.0, path.T, nodes)
        val = float(simpson(_integrand(field, path, ts), x=ts))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        if 2 * nodes - 1 > max_nodes:
            return val
        prev = val
        nodes = 2 * nodes - 1


def length_closed_form(field: MetricBase, y, eta, T: float) -> float:
    """``sqrt(2 H(y, eta)) * T``."""
    _require_timelike(field, y, eta)
    return float(np.sqrt(2.0 * hamiltonian(field, y, eta)) * T)


# -- oracles -----------------------------------------------------------------


class LengthOracle:
    """Deterministic map ``(y, eta, T) -> LengthSample``."""

    n: int
    signature: str = LORENTZIAN
    mode: str = "abstract"

    @property
    def size(self) -> int:
        return self.n + 1 if self.signature == LORENTZIAN else self.n

    def query(self, y, eta, T: float = 1.0) -> LengthSample:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"mode": self.mode}


def _key(y, eta, T):
    return (
        tuple(float(v) for v in np.atleast_1d(y)),
        tuple(float(v) for v in np.atleast_1d(eta)),
        float(T),
    )


class ClosedFormOracle(LengthOracle):
    mode = "closed_form"

    def __init__(self, field: MetricBase):
        self.field = field
        self.n = field.n
        self.signature = field.signature

    def query(self, y, eta, T=1.0):
        R = length_closed_form(self.field, y, eta, T)
        return LengthSample(*_key(y, eta, T), R)

    def describe(self):
        cfg = self.field.to_config() if hasattr(self.field, "to_config") else None
        return {"mode": self.mode, "metric": cfg}


class QuadratureOracle(ClosedFormOracle):
    """Integrates the flow and the length integrand; tighter default tolerances
    than the flow module because recovery divides oracle noise by small numbers."""

    mode = "quadrature"

    def __init__(self, field: MetricBase, *, rtol: float = 1e-12, atol: float = 1e-14):
        super().__init__(field)
        self.rtol = rtol
        self.atol = atol

    def query(self, y, eta, T=1.0):
        _require_timelike(self.field, y, eta)
        path = integrate_bicharacteristic(self.field, y, eta, T, rtol=self.rtol, atol=self.atol)
        R = length_by_quadrature(self.field, path)
        return LengthSample(*_key(y, eta, T), R)

    def describe(self):
        return dict(super().describe(), rtol=self.rtol, atol=self.atol)


class TableOracle(LengthOracle):
    """Serves stored samples; exact-match lookup on the float values."""

    mode = "table"

    def __init__(self, samples, *, signature: str | None = None):
        samples = list(samples)
        if not samples:
            raise ValueError("table oracle needs at least one sample")
        self.n = len(samples[0].y)
        width = len(samples[0].eta)
        if signature is None:
            signature = LORENTZIAN if width == self.n + 1 else RIEMANNIAN
        self.signature = signature
        self._rows = {}
        for s in samples:
            if len(s.y) != self.n or len(s.eta) != self.size:
                raise ValueError(f"inconsistent sample dimensions in {s}")
            self._rows[(s.y, s.eta, s.T)] = s

    def __len__(self):
        return len(self._rows)

    def query(self, y, eta, T=1.0):
        key = _key(y, eta, T)
        try:
            s = self._rows[key]
        except KeyError:
            raise MissingSample(f"no table row for y={list(key[0])}, eta={list(key[1])}, T={key[2]}") from None
        if not s.R > 0:
            raise NotTimelike(f"table row for eta={list(key[1])} has R={s.R}; not timelike data")
        return s

    def describe(self):
        return {"mode": self.mode, "rows": len(self)}


class RecordingOracle(LengthOracle):
    """Wraps an oracle and remembers every successful sample it served."""

    def __init__(self, inner: LengthOracle):
        self.inner = inner
        self.n = inner.n
        self.signature = inner.signature
        self.mode = inner.mode
        self.samples: dict = {}

    def query(self, y, eta, T=1.0):
        s = self.inner.query(y, eta, T)
        self.samples.setdefault((s.y, s.eta, s.T), s)
        return s

    def describe(self):
        return self.inner.describe()


def oracle_query(oracle: LengthOracle, y, eta, T: float = 1.0) -> LengthSample:
    return oracle.query(y, eta, T)


def oracle_from_metric(field: MetricBase, mode: str = "closed_form", **kw) -> LengthOracle:
    if mode == "closed_form":
        return ClosedFormOracle(field)
    if mode == "quadrature":
        return QuadratureOracle(field, **kw)
    raise ValueError(f"unknown oracle mode {mode!r}")


# -- table files -------------------------------------------------------------


def write_length_table(samples, dest) -> None:
    """CSV ``n,y1..yn,eta0,eta1..etan,T,R`` (``eta1..etan`` only for Riemannian data)."""
    samples = list(samples)
    if not samples:
        raise ValueError("no samples to write")
    n = len(samples[0].y)
    width = len(samples[0].eta)
    first = 0 if width == n + 1 else 1
    header = ["n"] + [f"y{i}" for i in range(1, n + 1)]
    header += [f"eta{i}" for i in range(first, first + width)] + ["T", "R"]
    with open(Path(dest), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s in samples:
            w.writerow([str(n)] + [f"{v:.17g}" for v in (*s.y, *s.eta, s.T, s.R)])


def read_length_table(src) -> list[LengthSample]:
    with open(Path(src), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        ny = sum(1 for h in header if h.startswith("y"))
        ne = sum(1 for h in header if h.startswith("eta"))
        if header[0] != "n" or header[-2:] != ["T", "R"] or len(header) != 3 + ny + ne:
            raise ValueError(f"unexpected length-table header {header}")
        out = []
        for row in reader:
            if not row:
                continue
            vals = [float(v) for v in row[1:]]
            out.append(LengthSample(
                tuple(vals[:ny]), tuple(vals[ny:ny + ne]), vals[ny + ne], vals[ny + ne + 1],
            ))
    return out
