"""Ratio of measured Birkhoff discrepancy to the Erdős–Turán right-hand side on the golden flow."""
import argparse

import numpy as np

from apernet.equidist import BirkhoffQuery, birkhoff_exact_1d, erdos_turan_bound
from apernet.geometry import AlignedBox
from apernet.netgen import FlowSpec

PHI = (1 + 5 ** 0.5) / 2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    ratios = []
    for _ in range(args.instances):
        T = float(np.exp(rng.uniform(np.log(10), np.log(1e3))))
        M = int(np.clip(round(np.exp(rng.uniform(0, np.log(100)))), 1, 100))
        lo = rng.random(2)
        U = AlignedBox(lo, lo + rng.uniform(0.05, 0.95, 2))
        flow = FlowSpec([[1.0, PHI]], rng.random(2))
        q = BirkhoffQuery(flow, U, T)
        lead, tail = erdos_turan_bound(U, flow, T, M)
        ratios.append(abs(birkhoff_exact_1d(q) - q.volume_term) / (lead + tail))
    r = np.array(ratios)
    print(f"instances {r.size}: max ratio {r.max():.4f}, median {np.median(r):.4f}, 95th pct {np.quantile(r, 0.95):.4f}")


if __name__ == "__main__":
    main()
