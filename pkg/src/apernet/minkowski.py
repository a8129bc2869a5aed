"""Grid approximation of parallelotopes by unions of small cubes, and box-counting dimension."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError
from .geometry import AlignedBox, AlignedParallelotope, lattice_points_in_box


@dataclass(frozen=True)
class GridApproximation:
    """Cells ``prod [m_i/K, (m_i+1)/K]`` inside ``U`` (``inner``) and meeting ``U`` (``outer``)."""

    K: int
    inner: np.ndarray
    outer: np.ndarray

    @property
    def inner_volume(self) -> float:
        return self.inner.shape[0] / self.K ** self.inner.shape[1]

    @property
    def outer_volume(self) -> float:
        return self.outer.shape[0] / self.K ** self.outer.shape[1]

    @property
    def boundary_cells(self) -> int:
        return self.outer.shape[0] - self.inner.shape[0]


def _meets(U: AlignedParallelotope, lo: np.ndarray, hi: np.ndarray) -> bool:
    """Whether the closed cell ``[lo, hi]`` meets ``U`` (feasibility LP in U's coordinates)."""
    k = U.dim
    L = U.linear_part
    # find y in B with L y + x0 in the cell
    A_ub = np.vstack([L, -L])
    b_ub = np.concatenate([hi - U.offset, U.offset - lo])
    bounds = [(-b, b) for b in U.half_widths]
    res = linprog(np.zeros(k), A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    return res.status == 0


def grid_approximation(U, K: int) -> GridApproximation:
    """Inner and outer unions of grid cells of side ``1/K`` for a box or parallelotope."""
    if K < 1:
        raise DomainError("K must be a positive integer")
    if isinstance(U, AlignedBox):
        U = U.as_parallelotope()
    lo, hi = U.bounding_box()
    cells = lattice_points_in_box(np.floor(lo * K) - 1, np.ceil(hi * K))
    corners = np.array(list(itertools.product((0, 1), repeat=U.dim)), dtype=float)
    inner, outer = [], []
    for m in cells:
        verts = (m + corners) / K
        inside = U.contains(verts, tol=1e-12)
        if np.all(inside):
            inner.append(m)
            outer.append(m)
        elif np.any(inside) or _meets(U, m / K, (m + 1) / K):
            outer.append(m)
    k = U.dim
    as_arr = lambda xs: np.array(xs, dtype=np.int64).reshape(-1, k)
    return GridApproximation(int(K), as_arr(inner), as_arr(outer))


def box_counting_dimension(U, Ks=(4, 8, 16, 32)) -> float:
    """Slope of ``log S(boundary U, 1/K)`` against ``log K``; ``k - 1`` for parallelotopes."""
    counts = [grid_approximation(U, K).boundary_cells for K in Ks]
    x = np.log(np.asarray(Ks, dtype=float))
    y = np.log(np.asarray(counts, dtype=float))
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)
