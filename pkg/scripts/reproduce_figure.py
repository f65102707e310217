"""Fidelity curves over the POVM family, written to CSV.

    python scripts/reproduce_figure.py --out curves.csv [--steps 101] [--plot curves.png]
"""

import argparse
import math
from pathlib import Path

from teleopt.optimizer import IterationConfig
from teleopt.sweep import SweepConfig, run_sweep, write_csv

KEY_COS = (math.sqrt(2) - 1, 0.5)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out", type=Path, default=Path("curves.csv"))
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--mc-samples", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plot", type=Path, help="optional PNG (needs matplotlib)")
    args = p.parse_args()

    cfg = SweepConfig(steps=args.steps, iteration=IterationConfig(), mc_samples=args.mc_samples, seed=args.seed)
    rows = run_sweep(cfg)
    write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")

    for c in KEY_COS:
        row = min(rows, key=lambda r: abs(r["cos_theta"] - c))
        print(f"cos={row['cos_theta']:.4f}  optimal={row['f_iterative']:.6f}  closed={row['f_closed_form']:.6f}  "
              f"unitary={row['f_unitary_numeric']:.6f}  repeat={row['f_repeat_first_principles']:.6f}")
    worst = max(abs(r["f_iterative"] - r["f_closed_form"]) for r in rows)
    print(f"max |iterative - closed form| = {worst:.2e}")

    if args.plot:
        import matplotlib.pyplot as plt

        cos = [r["cos_theta"] for r in rows]
        for key, label in [("f_iterative", "optimal CP"), ("f_unitary_numeric", "best unitary"),
                           ("f_repeat_first_principles", "repeat"), ("f_mc", "Monte Carlo")]:
            plt.plot(cos, [r[key] for r in rows], label=label)
        plt.axhline(2 / 3, color="grey", lw=0.5)
        plt.xlabel("cos theta")
        plt.ylabel("average fidelity")
        plt.legend()
        plt.savefig(args.plot, dpi=150)
        print(f"saved {args.plot}")


if __name__ == "__main__":
    main()
