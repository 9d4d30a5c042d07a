"""Outer-loop residual trace for one homotopy stage.

    python3 scripts/convergence_trace.py --seed 0 --stage 0

Prints m, ||Cx - z - b||, ||Ax - w|| and the certificate norm per outer
iteration, i.e. the data behind a residual-versus-iteration plot.
"""
import argparse

from qce_dfrc.alm import homotopy_solve
from qce_dfrc.config import AlmParams, HomotopyParams, SystemConfig
from qce_dfrc.problem import make_instance


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stage", type=int, default=0)
    p.add_argument("--b", type=float, default=0.4)
    args = p.parse_args()
    cfg = SystemConfig(n_antennas=16, n_users=2, block_len=10, margin_threshold=args.b)
    _, rep = homotopy_solve(make_instance(cfg, seed=args.seed), HomotopyParams(), AlmParams())
    print("m,viol_C,viol_A,cert_norm,inner_iters")
    for r in rep.rows:
        if r["stage"] == args.stage:
            print(f"{r['m']},{r['viol_C']:.3e},{r['viol_A']:.3e},{r['cert_norm']:.3e},"
                  f"{r['inner_iters']}")


if __name__ == "__main__":
    main()
