"""Command-line front end.

    lorentz-inverse trace        --config trace.json --out out/
    lorentz-inverse length-table --config table.json --out out/
    lorentz-inverse recover      --config recover.json --out out/
    lorentz-inverse boundary-jet --config jet.json --out out/
    lorentz-inverse rigidity     --config rigidity.json --out out/

Exit codes: 0 success, 1 configuration error, 2 integration error (trace),
3 recovery failure (report still written), 4 rigidity failure.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

import numpy as np

from . import io
from .errors import ConfigError, LorentzError
from .flow import conservation_defect, integrate_bicharacteristic, time_covector_drift, write_trajectory_csv
from .length import (
    RecordingOracle,
    TableOracle,
    oracle_from_metric,
    read_length_table,
    write_length_table,
)
from .metric import LORENTZIAN, MetricField, evaluate_inverse_metric
from .recovery import RecoveryFailure, recover_boundary_jet, recover_on_region
from .rigidity import BoundaryPair, read_pairs_csv, rigidity_check

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_RECOVERY, EXIT_RIGIDITY = 0, 1, 2, 3, 4
COMMANDS = ("trace", "length-table", "recover", "boundary-jet", "rigidity")


@dataclass
class ExperimentConfig:
    command: str
    body: dict
    base_dir: Path
    out: Path
    seed: int = 0
    rtol: float | None = None
    atol: float | None = None
    quiet: bool = False
    overrides: dict = dc_field(default_factory=dict)
    metrics: dict = dc_field(default_factory=dict)

    def get(self, key, default=None):
        if key in self.overrides and self.overrides[key] is not None:
            return self.overrides[key]
        return self.body.get(key, default)

    def resolved(self) -> dict:
        cfg = dict(self.body)
        cfg.update({k: v for k, v in self.overrides.items() if v is not None})
        cfg.update(self.metrics)
        cfg["command"] = self.command
        cfg["seed"] = self.seed
        if self.rtol is not None:
            cfg["rtol"] = self.rtol
        if self.atol is not None:
            cfg["atol"] = self.atol
        return cfg

    def path(self, value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p


def _metric(cfg: ExperimentConfig, key: str = "metric") -> MetricField:
    spec = cfg.get(key)
    if spec is None:
        raise ConfigError(f"config needs '{key}'")
    if isinstance(spec, str):
        spec = io.load_json(cfg.path(spec))
    if not isinstance(spec, dict):
        raise ConfigError(f"'{key}' must be a metric object or a path to one")
    field = MetricField.from_config(spec)
    cfg.metrics[key] = field.to_config()
    return field


def _tolerances(cfg: ExperimentConfig, rtol: float, atol: float) -> dict:
    return {
        "rtol": cfg.rtol if cfg.rtol is not None else float(cfg.get("rtol", rtol)),
        "atol": cfg.atol if cfg.atol is not None else float(cfg.get("atol", atol)),
    }


def _oracle(cfg: ExperimentConfig):
    if cfg.get("table") is not None:
        return TableOracle(read_length_table(cfg.path(cfg.get("table")))), None
    field = _metric(cfg)
    mode = cfg.get("mode", "closed_form")
    kw = _tolerances(cfg, 1e-12, 1e-14) if mode == "quadrature" else {}
    try:
        return oracle_from_metric(field, mode, **kw), field
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _points(value, n: int) -> list[np.ndarray]:
    if isinstance(value, dict):
        lo = np.broadcast_to(np.asarray(value["lo"], dtype=float), (n,))
        hi = np.broadcast_to(np.asarray(value["hi"], dtype=float), (n,))
        num = int(value.get("num", 5))
        axes = [np.linspace(a, b, num) for a, b in zip(lo, hi)]
        return [np.array(p) for p in itertools.product(*axes)]
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in value]
    for p in pts:
        if p.shape != (n,):
            raise ConfigError(f"point {p.tolist()} does not have dimension {n}")
    return pts


def _say(cfg: ExperimentConfig, msg: str) -> None:
    if not cfg.quiet:
        print(msg)


# -- commands ------------------------------------------------------------------


def run_trace(cfg: ExperimentConfig) -> int:
    field = _metric(cfg)
    try:
        y = cfg.body["y"]
        eta = cfg.body["eta"]
        T = float(cfg.body["T"])
    except KeyError as exc:
        raise ConfigError(f"trace config needs {exc}") from None
    tol = _tolerances(cfg, 1e-9, 1e-11)
    report: dict[str, Any] = {"command": "trace", "config": cfg.resolved()}
    try:
        path = integrate_bicharacteristic(field, y, eta, T, **tol)
    except LorentzError as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        io.write_json(report, cfg.out / "trace.json")
        _say(cfg, f"integration failed: {type(exc).__name__}: {exc}")
        return EXIT_INTEGRATION
    write_trajectory_csv(path, field, cfg.out / "trajectory.csv")
    diag = {
        "H_defect": conservation_defect(path, field),
        "xi0_defect": time_covector_drift(path) if field.signature == LORENTZIAN else 0.0,
        "H0": 0.5 * path.etahat @ field.inverse_metric(path.yhat[field.offset:]) @ path.etahat,
        "steps": path.steps,
        "rejected": path.rejected,
        "max_step": path.max_step,
        "samples": len(path.t),
        "endpoint": path.endpoint,
        "end_covector": path.end_covector,
    }
    report["diagnostics"] = diag
    io.write_json(report, cfg.out / "trace.json")
    _say(cfg, f"trace: {path.steps} steps, H defect {diag['H_defect']:.3e}, endpoint {path.endpoint.tolist()}")
    return EXIT_OK


def run_length_table(cfg: ExperimentConfig) -> int:
    field = _metric(cfg)
    mode = cfg.get("mode", "closed_form")
    kw = _tolerances(cfg, 1e-12, 1e-14) if mode == "quadrature" else {}
    recorder = RecordingOracle(oracle_from_metric(field, mode, **kw))
    T = float(cfg.get("T", 1.0))
    failures = []
    if cfg.body.get("queries") is not None:
        for q in cfg.body["queries"]:
            try:
                recorder.query(q["y"], q["eta"], float(q.get("T", T)))
            except LorentzError as exc:
                failures.append({"query": q, "error": type(exc).__name__, "message": str(exc)})
    else:
        pts = _points(cfg.get("points", []), field.n)
        eps = cfg.get("epsilon")
        for res in recover_on_region(recorder, pts, eps, T=T, seed=cfg.seed):
            if isinstance(res, RecoveryFailure):
                failures.append(res.to_dict())
    samples = list(recorder.samples.values())
    if samples:
        write_length_table(samples, cfg.out / "lengths.csv")
    report = {"command": "length-table", "config": cfg.resolved(), "rows": len(samples), "failures": failures}
    io.write_json(report, cfg.out / "length_table.json")
    _say(cfg, f"length-table: {len(samples)} rows, {len(failures)} failures")
    return EXIT_RECOVERY if failures else EXIT_OK


def run_recover(cfg: ExperimentConfig) -> int:
    oracle, field = _oracle(cfg)
    pts = _points(cfg.get("points", []), oracle.n)
    if not pts:
        raise ConfigError("recover config needs 'points'")
    results = recover_on_region(
        oracle, pts, cfg.get("epsilon"), T=float(cfg.get("T", 1.0)),
        method=cfg.get("method", "polarization"), seed=cfg.seed,
    )
    entries, failed, worst = [], [], 0.0
    for res in results:
        d = res.to_dict()
        if isinstance(res, RecoveryFailure):
            d["status"] = "failed"
            failed.append(d["y"])
        else:
            d["status"] = "ok"
            if field is not None:
                err = float(np.max(np.abs(res.Q - evaluate_inverse_metric(field, res.y))))
                d["max_entry_error"] = err
                worst = max(worst, err)
        entries.append(d)
    report = {
        "command": "recover",
        "config": cfg.resolved(),
        "oracle": oracle.describe(),
        "points": entries,
        "failed_points": failed,
    }
    if field is not None:
        report["max_entry_error"] = worst
    io.write_json(report, cfg.out / "recovery.json")
    _say(cfg, f"recover: {len(entries) - len(failed)}/{len(entries)} points recovered"
              + (f", max entry error {worst:.3e}" if field is not None else ""))
    if failed:
        _say(cfg, "failed points: " + ", ".join(str(y) for y in failed))
        return EXIT_RECOVERY
    return EXIT_OK


def run_boundary_jet(cfg: ExperimentConfig) -> int:
    oracle, field = _oracle(cfg)
    if cfg.get("y") is None:
        raise ConfigError("boundary-jet config needs 'y'")
    report: dict[str, Any] = {"command": "boundary-jet", "config": cfg.resolved(), "oracle": oracle.describe()}
    try:
        jet = recover_boundary_jet(
            oracle, cfg.get("y"), cfg.get("normal"), float(cfg.get("h", 1e-3)), int(cfg.get("order", 2)),
            epsilon=cfg.get("epsilon"), T=float(cfg.get("T", 1.0)),
            richardson=bool(cfg.get("richardson", False)), seed=cfg.seed,
        )
    except LorentzError as exc:
        if isinstance(exc, ValueError):
            raise ConfigError(str(exc)) from None
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        io.write_json(report, cfg.out / "boundary_jet.json")
        _say(cfg, f"boundary-jet failed: {type(exc).__name__}: {exc}")
        return EXIT_RECOVERY
    report["jet"] = jet.to_dict()
    io.write_json(report, cfg.out / "boundary_jet.json")
    _say(cfg, f"boundary-jet: {len(jet.derivatives)} derivative blocks at y={jet.y.tolist()}")
    return EXIT_OK


def _pairs(cfg: ExperimentConfig, n: int) -> list[BoundaryPair]:
    spec = cfg.get("pairs")
    if spec is None:
        raise ConfigError("rigidity config needs 'pairs'")
    if isinstance(spec, str):
        pairs = read_pairs_csv(cfg.path(spec))
    else:
        pairs = [BoundaryPair(tuple(np.atleast_1d(p["y"]).tolist()), tuple(np.atleast_1d(p["x_T"]).tolist()),
                              float(p["T"]), float(p["eta0"])) for p in spec]
    for p in pairs:
        if len(p.y) != n or len(p.x_T) != n:
            raise ConfigError(f"boundary pair {p} does not have dimension {n}")
    return pairs


def run_rigidity(cfg: ExperimentConfig) -> int:
    g0 = _metric(cfg, "g0")
    g1 = _metric(cfg, "g1")
    if g0.n != g1.n or g0.signature != g1.signature:
        raise ConfigError("g0 and g1 must have the same dimension and signature")
    pairs = _pairs(cfg, g0.n)
    grid = _points(cfg.get("grid", {"lo": g0.box[:, 0] / 2, "hi": g0.box[:, 1] / 2, "num": 9}), g0.n)
    tol = _tolerances(cfg, 1e-11, 1e-13)
    report: dict[str, Any] = {"command": "rigidity", "config": cfg.resolved()}
    try:
        rep = rigidity_check(g0, g1, pairs, grid, **tol)
    except (LorentzError, np.linalg.LinAlgError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        io.write_json(report, cfg.out / "rigidity.json")
        _say(cfg, f"rigidity failed: {type(exc).__name__}: {exc}")
        return EXIT_RIGIDITY
    report.update(rep.to_dict())
    io.write_json(report, cfg.out / "rigidity.json")
    _say(cfg, f"rigidity: Delta={rep.Delta:.6g} R1={rep.R1:.6g} R2={rep.R2:.6g} "
              f"slope={rep.slope} inequality_holds={rep.inequality_holds}")
    return EXIT_OK


RUNNERS = {
    "trace": run_trace,
    "length-table": run_length_table,
    "recover": run_recover,
    "boundary-jet": run_boundary_jet,
    "rigidity": run_rigidity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lorentz-inverse", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--rtol", type=float, default=None)
        p.add_argument("--atol", type=float, default=None)
        p.add_argument("--quiet", action="store_true")
        if name in ("recover", "boundary-jet", "length-table"):
            p.add_argument("--mode", choices=("closed_form", "quadrature"), default=None)
            p.add_argument("--epsilon", type=float, default=None)
        if name == "boundary-jet":
            p.add_argument("--order", type=int, default=None)
            p.add_argument("--h", type=float, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config_path = Path(args.config)
        body = io.load_json(config_path)
        overrides = {k: getattr(args, k, None) for k in ("mode", "epsilon", "order", "h")}
        seed = args.seed if args.seed is not None else int(body.get("seed", 0))
        cfg = ExperimentConfig(
            command=args.command, body=body, base_dir=config_path.resolve().parent,
            out=Path(args.out), seed=seed, rtol=args.rtol, atol=args.atol, quiet=args.quiet,
            overrides=overrides,
        )
        cfg.out.mkdir(parents=True, exist_ok=True)
        return RUNNERS[args.command](cfg)
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
