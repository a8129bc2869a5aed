"""Counting discrepancy of the golden visit set against density 1/2.

Prints |#(Y cap [0,T)) - T/2| at decades of T, and the running maximum of the
discrepancy over [0, T], which grows like log T.
"""
import argparse
import math

import numpy as np

from apernet.geometry import AlignedBox
from apernet.netgen import FlowSpec, Section, visit_set

PHI = (1 + 5 ** 0.5) / 2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-exp", type=int, default=5)
    args = ap.parse_args()
    T_max = 10.0 ** args.max_exp
    flow = FlowSpec([[1.0, PHI]], [0.0, 0.0])
    sec = Section([[0.0, 1.0]], (AlignedBox([0.0], [0.5]),))
    pts = visit_set(flow, sec, AlignedBox([0.0], [T_max])).points[:, 0]
    # pts are integers here; D(n) = #{p < n} - n/2 for n = 1..T_max
    n = np.arange(1, int(T_max) + 1)
    counts = np.searchsorted(pts, n, side="left")
    running = np.maximum.accumulate(np.abs(counts - 0.5 * n))
    print(f"{'T':>8} {'diff':>6} {'diff/logT':>10} {'runmax':>7} {'runmax/logT':>12}")
    for e in range(2, args.max_exp + 1):
        T = 10 ** e
        diff = abs(np.count_nonzero(pts < T) - 0.5 * T)
        rm = running[T - 1]
        print(f"{T:>8} {diff:>6.1f} {diff / math.log(T):>10.4f} {rm:>7.1f} {rm / math.log(T):>12.4f}")


if __name__ == "__main__":
    main()
