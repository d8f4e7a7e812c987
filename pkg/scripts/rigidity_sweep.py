"""Remainder order of the first-variation expansion for a family of perturbations.

For each amplitude a, g1 = g0 + a * w with a fixed x-dependent direction w.
Prints Delta, R1 + R2 and the remainder per scale, plus the fitted log-log
slope and constants.

    python scripts/rigidity_sweep.py --amplitudes 0.005 0.02 0.05
"""

import argparse

import numpy as np

from lorentz_inverse.metric import MetricField
from lorentz_inverse.rigidity import rigidity_check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amplitudes", type=float, nargs="+", default=[0.005, 0.02, 0.05])
    ap.add_argument("--xT", type=float, default=0.6)
    ap.add_argument("--T", type=float, default=1.0)
    args = ap.parse_args()

    base = "1 + 0.3*exp(-x1^2)"
    g0 = MetricField.conformal(1, base)
    grid = np.linspace(-1, 1, 41)[:, None]
    pairs = [((0.0,), (args.xT,), args.T, 1.0)]
    for amp in args.amplitudes:
        g1 = MetricField.conformal(1, f"{base} + {amp}*cos(x1)")
        rep = rigidity_check(g0, g1, pairs, grid)
        print(f"amplitude {amp:g}: slope {rep.slope:.3f}  C1 {rep.C1:.4g}  C2 {rep.C2:.4g}  "
              f"inequality {rep.inequality_holds}")
        print(f"  {'s':>6} {'Delta':>14} {'R1+R2':>14} {'remainder':>11} {'sup_norm':>10}")
        for r in rep.pairs[0]["records"]:
            print(f"  {r.scale:6.3f} {r.Delta:14.6e} {r.R1 + r.R2:14.6e} {r.remainder:11.3e} {r.sup_norm:10.3e}")


if __name__ == "__main__":
    main()
