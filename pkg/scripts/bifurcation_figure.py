#!/usr/bin/env python3
"""Initial-value bifurcation sweep of the exponential equation.

Fixes x(-1) and sweeps x(0) across a range, keeping the orbit tail at every
grid point; writes the tail samples as CSV and prints the period census.
With --plot (requires matplotlib) also renders the classic dot diagram.

Example:
    python scripts/bifurcation_figure.py --a 4.6 --lo 2.3 --hi 4.8 \
        --points 500 --out sweep.csv --plot sweep.png
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from scfact import bifurcation_sweep, separable_multiplicative_equation, write_bifurcation_csv


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--a", type=float, default=4.6)
    parser.add_argument("--x-fixed", type=float, default=2.3, help="fixed x(-1)")
    parser.add_argument("--lo", type=float, default=2.3)
    parser.add_argument("--hi", type=float, default=4.8)
    parser.add_argument("--points", type=int, default=500)
    parser.add_argument("--transient", type=int, default=100)
    parser.add_argument("--keep", type=int, default=200)
    parser.add_argument("--out", default="bifurcation.csv")
    parser.add_argument("--plot", default=None, help="optional PNG path")
    args = parser.parse_args()

    eq = separable_multiplicative_equation(
        ["exp(-x)", "x*exp(-x)"], "exp(a)", params={"a": args.a}, name="exp"
    )
    grid = [
        args.lo + (args.hi - args.lo) * j / (args.points - 1) if args.points > 1 else args.lo
        for j in range(args.points)
    ]
    data = bifurcation_sweep(
        eq, {"x-1": args.x_fixed}, "x0", grid, args.transient, args.keep
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        write_bifurcation_csv(data, fh)
    print(f"wrote {args.out}")
    census = data.period_census()
    for period in sorted(census):
        print(f"period {period}: {census[period]} grid point(s)")

    if args.plot:
        try:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            print("matplotlib not available; skipping plot", file=sys.stderr)
            return 0
        xs, ys = [], []
        for value, tail in zip(data.grid, data.samples):
            if tail is None:
                continue
            xs.extend([value] * len(tail))
            ys.extend(v.real for v in tail)
        fig, ax = plt.subplots(figsize=(8, 5))
        ax.plot(xs, ys, ",k", markersize=0.2)
        ax.set_xlabel("x(0)")
        ax.set_ylabel("orbit tail")
        ax.set_title(f"a = {args.a}, x(-1) = {args.x_fixed}")
        fig.tight_layout()
        fig.savefig(args.plot, dpi=160)
        print(f"wrote {args.plot}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
