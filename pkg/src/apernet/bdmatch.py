"""Bounded-displacement tests by bipartite matching, and cube-union discrepancy."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial import cKDTree

from .errors import DomainError
from .geometry import TOL, AlignedBox, Basis, lattice_points_in_box
from .netgen import PointSet, sort_points

COVOLUME_TOL = 1e-6


def lattice_window(basis: Basis, window: AlignedBox) -> np.ndarray:
    """Points of ``basis Z^d`` inside ``window`` (closed), sorted lexicographically."""
    B = basis.matrix
    Binv = np.linalg.inv(B)
    corners = np.array(list(itertools.product(*zip(window.lower, window.upper))))
    z = corners @ Binv.T
    cand = lattice_points_in_box(z.min(axis=0) - 1, z.max(axis=0) + 1)
    pts = cand @ B.T
    keep = np.all((pts >= window.lower - TOL) & (pts <= window.upper + TOL), axis=1)
    return sort_points(pts[keep])


def lattice_pointset(basis: Basis, window: AlignedBox, shift=None) -> PointSet:
    """The shifted lattice ``basis Z^d + shift`` restricted to ``window``."""
    s = np.zeros(window.dim) if shift is None else np.asarray(shift, dtype=float)
    pts = lattice_window(basis, AlignedBox(window.lower - s, window.upper - s)) + s
    return PointSet(sort_points(pts), window, {"generator": "lattice", "basis": basis.matrix.tolist(), "shift": s.tolist()})


@dataclass(frozen=True)
class MatchInstance:
    """Points of ``Y`` in the core window versus lattice points within ``rho`` of it."""

    side_a: np.ndarray
    side_b: np.ndarray
    rho: float
    core_window: AlignedBox
    basis: Basis


@dataclass
class MatchResult:
    pairs: np.ndarray  # (n, 2) indices into side_a and side_b
    deficiency: int
    max_displacement: float
    n_core: int

    def to_dict(self) -> dict:
        return {
            "pairs": self.pairs.tolist(),
            "deficiency": int(self.deficiency),
            "max_displacement": float(self.max_displacement),
            "n_core": int(self.n_core),
        }


def build_instance(Y: PointSet, lattice: Basis, lam: float, window: AlignedBox, rho: float) -> MatchInstance:
    """Core points of ``Y`` and the lattice points of ``window`` padded by ``rho``.

    Raises
    ------
    DomainError
        If the lattice covolume differs from ``1/lam`` by more than 1e-6, or
        ``Y`` was not generated with at least ``rho`` padding around the core.
    """
    if abs(abs(lattice.det) - 1.0 / lam) > COVOLUME_TOL:
        raise DomainError(f"lattice covolume {abs(lattice.det)} does not match 1/lambda = {1.0 / lam}")
    if rho < 0:
        raise DomainError("rho must be non-negative")
    side_a = Y.points[window.contains(Y.points)] if len(Y) else np.zeros((0, window.dim))
    side_b = lattice_window(lattice, window.inflate(rho))
    return MatchInstance(side_a, side_b, float(rho), window, lattice)


def max_matching(inst: MatchInstance) -> MatchResult:
    """Maximum matching between core points and lattice points at Euclidean distance ``<= rho``.

    The deficiency counts unmatched core points; by König's theorem it equals
    the largest Hall defect over subsets of the core.
    """
    na, nb = inst.side_a.shape[0], inst.side_b.shape[0]
    if na == 0:
        return MatchResult(np.zeros((0, 2), dtype=np.int64), 0, 0.0, 0)
    if nb == 0:
        return MatchResult(np.zeros((0, 2), dtype=np.int64), na, 0.0, na)
    tree = cKDTree(inst.side_b)
    nbrs = tree.query_ball_point(inst.side_a, inst.rho + TOL, return_sorted=True)
    indptr = np.zeros(na + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(n) for n in nbrs])
    indices = np.fromiter(itertools.chain.from_iterable(nbrs), dtype=np.int32, count=int(indptr[-1]))
    graph = csr_matrix((np.ones(indices.size, dtype=np.int8), indices, indptr), shape=(na, nb))
    match = maximum_bipartite_matching(graph, perm_type="column")
    a_idx = np.flatnonzero(match >= 0)
    pairs = np.stack([a_idx, match[a_idx]], axis=1).astype(np.int64)
    disp = np.linalg.norm(inst.side_a[pairs[:, 0]] - inst.side_b[pairs[:, 1]], axis=1) if pairs.size else np.zeros(0)
    return MatchResult(pairs, na - pairs.shape[0], float(disp.max()) if disp.size else 0.0, na)


def min_bd_radius(Y: PointSet, lattice: Basis, lam: float, window: AlignedBox, rho_max: float, tol: float = 1e-3) -> float:
    """Smallest ``rho`` (to ``tol``) with zero deficiency on ``window``.

    Returns ``math.inf`` when even ``rho_max`` leaves core points unmatched.
    """
    if max_matching(build_instance(Y, lattice, lam, window, rho_max)).deficiency:
        return math.inf
    if max_matching(build_instance(Y, lattice, lam, window, 0.0)).deficiency == 0:
        return 0.0
    lo, hi = 0.0, float(rho_max)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if max_matching(build_instance(Y, lattice, lam, window, mid)).deficiency == 0:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# cube unions


@dataclass(frozen=True)
class CubeUnion:
    """Finite union of unit cubes ``prod [a_i, a_i + 1]`` with integer corners ``a``."""

    corners: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.corners, dtype=np.int64))
        c = np.unique(c, axis=0) if c.size else c
        c.setflags(write=False)
        object.__setattr__(self, "corners", c)

    @classmethod
    def from_mask(cls, mask: np.ndarray, origin=None) -> "CubeUnion":
        mask = np.asarray(mask, dtype=bool)
        idx = np.argwhere(mask)
        if origin is not None:
            idx = idx + np.asarray(origin, dtype=np.int64)
        return cls(idx.reshape(-1, mask.ndim))

    @property
    def dim(self) -> int:
        return self.corners.shape[1]

    def __len__(self) -> int:
        return self.corners.shape[0] if self.corners.size else 0

    @property
    def volume(self) -> int:
        return len(self)

    def to_mask(self) -> tuple[np.ndarray, np.ndarray]:
        lo = self.corners.min(axis=0)
        hi = self.corners.max(axis=0)
        mask = np.zeros(tuple((hi - lo + 1).tolist()), dtype=bool)
        mask[tuple((self.corners - lo).T)] = True
        return mask, lo

    def boundary_measure(self) -> int:
        """Number of exposed unit facets, i.e. the (d-1)-measure of the boundary."""
        if not len(self):
            return 0
        mask, _ = self.to_mask()
        padded = np.pad(mask, 1)
        total = 0
        for ax in range(mask.ndim):
            total += int(np.count_nonzero(np.diff(padded.astype(np.int8), axis=ax)))
        return total

    def count(self, Y: PointSet) -> int:
        """Points of ``Y`` in the union, each cube taken half-open so shared faces count once."""
        if not len(Y) or not len(self):
            return 0
        cells = np.floor(Y.points).astype(np.int64)
        table = {tuple(c) for c in self.corners.tolist()}
        return sum(1 for c in map(tuple, cells.tolist()) if c in table)


def laczkovich_ratio(Y: PointSet, lam: float, C: CubeUnion) -> float:
    """``|#(Y cap C) - lam |C|| / |boundary C|``."""
    if not len(C):
        raise DomainError("empty cube union")
    lo = C.corners.min(axis=0)
    hi = C.corners.max(axis=0) + 1
    if not Y.window.contains_box(AlignedBox(lo.astype(float), hi.astype(float))):
        raise DomainError("cube union leaves the point set window")
    return abs(C.count(Y) - lam * C.volume) / C.boundary_measure()


@dataclass(frozen=True)
class SignedCube:
    corner: tuple
    side: int
    sign: int


@dataclass
class DyadicDecomposition:
    cubes: list[SignedCube]
    counts_by_level: dict = field(default_factory=dict)
    kappa: float = 0.0

    def reconstruct(self, shape, origin) -> np.ndarray:
        out = np.zeros(shape, dtype=np.int64)
        origin = np.asarray(origin, dtype=np.int64)
        for q in self.cubes:
            lo = np.asarray(q.corner) - origin
            sl = tuple(slice(max(a, 0), max(a + q.side, 0)) for a in lo)
            out[sl] += q.sign
        return out


def dyadic_decompose(C: CubeUnion) -> DyadicDecomposition:
    """Write the indicator of ``C`` as a signed sum of dyadic cubes, each used once.

    The dyadic grid is anchored at the lower corner of ``C``. Starting from
    the smallest dyadic cube containing ``C``, a block that is
    fully covered becomes one ``+`` cube; one more than half covered becomes a
    ``+`` cube minus a decomposition of its uncovered part; otherwise the
    block is split into its ``2^d`` children. ``kappa`` is the largest ratio
    ``n_j 2^{j(d-1)} / |boundary C|`` over levels ``j``.
    """
    if not len(C):
        return DyadicDecomposition([], {}, 0.0)
    d = C.dim
    lo = C.corners.min(axis=0)
    hi = C.corners.max(axis=0) + 1
    # aligned dyadic cubes never straddle 0, so the grid is anchored at the lower corner
    base = lo
    size = 1
    while np.any(base + size < hi):
        size *= 2
    mask = np.zeros((size,) * d, dtype=np.int8)
    mask[tuple((C.corners - base).T)] = 1
    sat = mask.astype(np.int64)
    for ax in range(d):
        sat = np.cumsum(sat, axis=ax)
    sat = np.pad(sat, [(1, 0)] * d)

    def box_sum(corner, side):
        total = 0
        for bits in itertools.product((0, 1), repeat=d):
            idx = tuple(c + side * b for c, b in zip(corner, bits))
            total += (-1) ** (d - sum(bits)) * int(sat[idx])
        return total

    out: list[SignedCube] = []

    def rec(corner, side, sign, want_covered):
        filled = box_sum(corner, side)
        target = filled if want_covered else side ** d - filled
        if target == 0:
            return
        if target == side ** d:
            out.append(SignedCube(tuple(int(c + b) for c, b in zip(corner, base)), side, sign))
            return
        if 2 * target > side ** d:
            out.append(SignedCube(tuple(int(c + b) for c, b in zip(corner, base)), side, sign))
            rec(corner, side, -sign, not want_covered)
            return
        half = side // 2
        for bits in itertools.product((0, 1), repeat=d):
            rec(tuple(c + half * b for c, b in zip(corner, bits)), half, sign, want_covered)

    rec((0,) * d, size, 1, True)
    counts: dict[int, int] = {}
    for q in out:
        lvl = int(round(math.log2(q.side)))
        counts[lvl] = counts.get(lvl, 0) + 1
    boundary = C.boundary_measure()
    kappa = max(n * 2 ** (lvl * (d - 1)) / boundary for lvl, n in counts.items())
    return DyadicDecomposition(out, dict(sorted(counts.items())), float(kappa))
