"""Distribution of BSUM iterations per ALM outer iteration.

    python3 scripts/inner_iterations.py --n 32 --k 4 --t 20 --b 0.8 --seeds 0 1 2

Prints the histogram of inner-iteration counts and the fraction below 10.
"""
import argparse

import numpy as np

from qce_dfrc.alm import homotopy_solve
from qce_dfrc.config import AlmParams, HomotopyParams, SystemConfig
from qce_dfrc.problem import make_instance


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--t", type=int, default=20)
    p.add_argument("--b", type=float, default=0.8)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    args = p.parse_args()

    counts, certified = [], []
    for seed in args.seeds:
        cfg = SystemConfig(n_antennas=args.n, n_users=args.k, block_len=args.t,
                           margin_threshold=args.b)
        _, rep = homotopy_solve(make_instance(cfg, seed=seed), HomotopyParams(), AlmParams())
        counts += rep.inner_iterations
        certified += rep.inner_certified
        print(f"seed {seed}: {len(rep.rows)} outer iterations, {rep.elapsed:.1f} s, "
              f"vertex converged {rep.vertex_converged}")
    c = np.array(counts)
    ok = c[np.array(certified)]
    edges = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2001]
    hist, _ = np.histogram(c, bins=edges)
    for lo, hi, h in zip(edges[:-1], edges[1:], hist):
        print(f"  [{lo:5d}, {hi:5d})  {h:6d}")
    print(f"fraction < 10: {np.mean(c < 10):.3f}; median (certified): {np.median(ok):.1f}")


if __name__ == "__main__":
    main()
