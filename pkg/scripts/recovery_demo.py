"""Recover a hidden metric from a table of measured lengths.

A length table is produced from a quadrature oracle over a hidden field
(recording exactly the queries recovery will need), written to CSV, read back
and handed to recovery as opaque data.  Errors against the hidden field are
printed per point, together with the error of an optional additive noise run.

    python scripts/recovery_demo.py --noise 1e-9
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from lorentz_inverse.length import LengthSample, QuadratureOracle, RecordingOracle, TableOracle
from lorentz_inverse.length import read_length_table, write_length_table
from lorentz_inverse.metric import MetricField, evaluate_inverse_metric
from lorentz_inverse.recovery import recover_inverse_metric_at, recover_on_region


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=5)
    ap.add_argument("--noise", type=float, default=0.0, help="relative noise added to stored lengths")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    hidden = MetricField.general(2, [
        ["1 + 0.1*sin(x1)", "0.3", "0.1*x2"],
        ["0.3", "-1 - 0.2*cos(x1*x2)", "0"],
        ["0.1*x2", "0", "-1.5"],
    ], box=(-5, 5))
    rng = np.random.default_rng(args.seed)
    points = rng.uniform(-1, 1, (args.points, 2))

    recorder = RecordingOracle(QuadratureOracle(hidden))
    for y in points:
        recover_inverse_metric_at(recorder, y)
    samples = list(recorder.samples.values())
    if args.noise:
        samples = [LengthSample(s.y, s.eta, s.T, s.R * (1 + args.noise * rng.standard_normal())) for s in samples]

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "lengths.csv"
        write_length_table(samples, path)
        table = TableOracle(read_length_table(path))
    print(f"{len(table)} stored lengths for {len(points)} points")

    for res in recover_on_region(table, points):
        err = np.max(np.abs(res.Q - evaluate_inverse_metric(hidden, res.y)))
        print(f"  y = {np.round(res.y, 4).tolist()}: max entry error {err:.2e}, eps {res.epsilon:g}")


if __name__ == "__main__":
    main()
