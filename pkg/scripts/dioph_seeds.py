"""Fitted growth exponent of the strongly-Diophantine sum for random acting vectors across seeds."""
import argparse

import numpy as np

from apernet.diophantine import growth_fit, strongly_dioph_sum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=6)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    Ms = (16, 32, 64, 128)
    for seed in range(args.seeds):
        vs = np.random.default_rng(seed).random((2, 3))
        fit = growth_fit([(M, strongly_dioph_sum(vs, M=M, threads=args.threads)) for M in Ms], k=3, d=2, start_M=32)
        print(f"seed {seed}: eps_est {fit.eps_est:.3f}  normalized non-increasing: {fit.non_increasing}")


if __name__ == "__main__":
    main()
