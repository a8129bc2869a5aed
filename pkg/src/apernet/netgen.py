"""Separated nets from linear toral flows and from cut-and-project data."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import _parallel
from .errors import DomainError, InjectivityError, TransversalityError
from .geometry import TOL, AlignedBox, as_vector, lattice_points_in_box


@dataclass(frozen=True)
class FlowSpec:
    """Linear action of R^d on T^k: ``a . x = x + sum_i a_i v_i``.

    Parameters
    ----------
    acting_basis : array-like, shape (d, k)
        The vectors ``v_1, ..., v_d`` as rows.
    base_point : array-like, shape (k,)
        Starting point ``x`` on the torus (any representative in R^k).
    """

    acting_basis: np.ndarray
    base_point: np.ndarray

    def __post_init__(self):
        vs = np.atleast_2d(np.array(self.acting_basis, dtype=float))
        x = as_vector(self.base_point, "base_point")
        d, k = vs.shape
        if x.size != k:
            raise DomainError("base point and acting vectors differ in dimension")
        if not 1 <= d < k:
            raise DomainError("need 1 <= d < k")
        if not np.all(np.isfinite(vs)):
            raise DomainError("acting vectors have non-finite entries")
        if np.linalg.matrix_rank(vs, tol=TOL) < d:
            raise DomainError("acting vectors are linearly dependent")
        vs.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "acting_basis", vs)
        object.__setattr__(self, "base_point", x)

    @property
    def d(self) -> int:
        return self.acting_basis.shape[0]

    @property
    def k(self) -> int:
        return self.acting_basis.shape[1]

    @property
    def A(self) -> np.ndarray:
        """k x d matrix with the acting vectors as columns."""
        return self.acting_basis.T

    def orbit_point(self, a) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        return self.base_point + a @ self.acting_basis

    def translated(self, x) -> "FlowSpec":
        return FlowSpec(self.acting_basis, np.asarray(x, dtype=float))

    def to_dict(self) -> dict:
        return {"acting_basis": self.acting_basis.tolist(), "base_point": self.base_point.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FlowSpec":
        return cls(np.asarray(d["acting_basis"], dtype=float), np.asarray(d["base_point"], dtype=float))


@dataclass(frozen=True)
class Section:
    """Bounded piece of an affine (k-d)-plane: ``anchor + W c`` for ``c`` in a union of boxes.

    Boxes are taken half-open, ``[lower, upper)`` on every axis, in the
    coordinates ``c`` relative to ``plane_basis``. A parallelotope section is a
    box in a different basis of the same plane.
    """

    plane_basis: np.ndarray
    boxes: tuple = ()
    anchor: np.ndarray = None

    def __post_init__(self):
        W = np.atleast_2d(np.array(self.plane_basis, dtype=float))
        m, k = W.shape
        anchor = np.zeros(k) if self.anchor is None else as_vector(self.anchor, "anchor")
        if anchor.size != k:
            raise DomainError("anchor dimension differs from the ambient dimension")
        boxes = tuple(b if isinstance(b, AlignedBox) else AlignedBox.from_dict(b) for b in self.boxes)
        for b in boxes:
            if b.dim != m:
                raise DomainError("section box dimension must equal the plane dimension")
        if np.linalg.matrix_rank(W, tol=TOL) < m:
            raise DomainError("plane basis vectors are linearly dependent")
        W.setflags(write=False)
        anchor.setflags(write=False)
        object.__setattr__(self, "plane_basis", W)
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "anchor", anchor)

    @property
    def W(self) -> np.ndarray:
        """k x (k-d) matrix with the plane vectors as columns."""
        return self.plane_basis.T

    @property
    def k(self) -> int:
        return self.plane_basis.shape[1]

    @property
    def codim(self) -> int:
        return self.plane_basis.shape[0]

    @property
    def is_empty(self) -> bool:
        return len(self.boxes) == 0

    def shape_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.min([b.lower for b in self.boxes], axis=0)
        hi = np.max([b.upper for b in self.boxes], axis=0)
        return lo, hi

    def contains_coords(self, c, tol: float = 0.0) -> np.ndarray:
        """Half-open membership of plane coordinates; ``tol`` > 0 tests the closure inflated by tol."""
        c = np.atleast_2d(np.asarray(c, dtype=float))
        hit = np.zeros(c.shape[0], dtype=bool)
        for b in self.boxes:
            if tol > 0:
                hit |= np.all((c >= b.lower - tol) & (c <= b.upper + tol), axis=1)
            else:
                hit |= np.all((c >= b.lower) & (c < b.upper), axis=1)
        return hit

    def boundary_distance(self, c) -> np.ndarray:
        """Sup-norm-style distance of each coordinate vector to the nearest box face it is near."""
        c = np.atleast_2d(np.asarray(c, dtype=float))
        best = np.full(c.shape[0], np.inf)
        for b in self.boxes:
            near = np.all((c >= b.lower - TOL) & (c <= b.upper + TOL), axis=1)
            gap = np.min(np.minimum(np.abs(c - b.lower), np.abs(b.upper - c)), axis=1)
            best = np.where(near, np.minimum(best, gap), best)
        return best

    def to_dict(self) -> dict:
        return {
            "plane_basis": self.plane_basis.tolist(),
            "boxes": [b.to_dict() for b in self.boxes],
            "anchor": self.anchor.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Section":
        return cls(np.asarray(d["plane_basis"], dtype=float), tuple(AlignedBox.from_dict(b) for b in d.get("boxes", [])), np.asarray(d["anchor"], dtype=float) if d.get("anchor") is not None else None)


@dataclass(frozen=True)
class PointSet:
    """Finite point set in R^d with the window it was generated in.

    ``points`` is an (N, d) array sorted lexicographically.
    """

    points: np.ndarray
    window: AlignedBox
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, self.window.dim)
        if pts.size and not np.all((pts >= self.window.lower - TOL) & (pts <= self.window.upper + TOL)):
            raise DomainError("points lie outside the window")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.window.dim

    def __len__(self) -> int:
        return self.points.shape[0]

    def has_duplicates(self, tol: float = TOL) -> bool:
        if len(self) < 2:
            return False
        return bool(cKDTree(self.points).query_pairs(tol, output_type="ndarray").shape[0])

    def restrict(self, box: AlignedBox) -> "PointSet":
        keep = box.contains(self.points) if len(self) else np.zeros(0, dtype=bool)
        return PointSet(self.points[keep], box, dict(self.metadata))

    def count_in(self, box: AlignedBox, half_open: bool = True) -> int:
        if not len(self):
            return 0
        return int(np.count_nonzero(box.contains(self.points, half_open=half_open)))


def sort_points(pts: np.ndarray) -> np.ndarray:
    if pts.shape[0] == 0:
        return pts
    order = np.lexsort(pts.T[::-1])
    return pts[order]


# ---------------------------------------------------------------------------
# checks


def check_transverse(flow: FlowSpec, section: Section, tol: float = TOL) -> np.ndarray:
    """Return ``P = [A | -W]`` after verifying it is invertible."""
    if section.k != flow.k or section.codim != flow.k - flow.d:
        raise TransversalityError("section plane has the wrong dimension")
    P = np.hstack([flow.A, -section.W])
    scale = max(1.0, float(np.prod(np.linalg.norm(P, axis=0))))
    if abs(np.linalg.det(P)) <= tol * scale:
        raise TransversalityError("section plane is not transverse to the acting subspace")
    return P


def section_injectivity_witness(section: Section, tol: float = TOL):
    """A nonzero integer vector in ``W (S - S)`` for the closed section, or None."""
    if section.is_empty:
        return None
    W = section.W
    boxes = section.boxes
    for b1, b2 in itertools.product(boxes, repeat=2):
        dlo = b1.lower - b2.upper
        dhi = b1.upper - b2.lower
        corners = np.array(list(itertools.product(*zip(dlo, dhi))))
        img = corners @ W.T
        cand = lattice_points_in_box(img.min(axis=0) - tol, img.max(axis=0) + tol)
        cand = cand[np.any(cand != 0, axis=1)]
        if cand.size == 0:
            continue
        c, *_ = np.linalg.lstsq(W, cand.T.astype(float), rcond=None)
        c = c.T
        resid = np.max(np.abs(c @ W.T - cand), axis=1)
        ok = (resid <= tol) & np.all((c >= dlo - tol) & (c <= dhi + tol), axis=1)
        if np.any(ok):
            return cand[np.flatnonzero(ok)[0]]
    return None


def check_section(flow: FlowSpec, section: Section) -> np.ndarray:
    P = check_transverse(flow, section)
    w = section_injectivity_witness(section)
    if w is not None:
        raise InjectivityError(f"projection is not injective on the section closure: {tuple(int(c) for c in w)}")
    return P


# ---------------------------------------------------------------------------
# visit sets


def _best_subset(A: np.ndarray) -> tuple[int, ...]:
    k, d = A.shape
    best, best_det = None, -1.0
    for J in itertools.combinations(range(k), d):
        det = abs(np.linalg.det(A[list(J), :]))
        if det > best_det + 1e-15:
            best, best_det = J, det
    return best


def _box_corners(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return np.array(list(itertools.product(*zip(lo, hi))), dtype=float)


@dataclass
class _VisitPlan:
    J: list
    Jc: list
    P_inv: np.ndarray
    n_J_lo: np.ndarray
    n_J_hi: np.ndarray
    base_mat: np.ndarray  # maps n_J -> n_{J^c} centre contribution
    base_off: np.ndarray
    G_lo: np.ndarray
    G_hi: np.ndarray


def _plan(flow: FlowSpec, section: Section, window: AlignedBox, P: np.ndarray) -> _VisitPlan:
    A, W = flow.A, section.W
    x, anchor = flow.base_point, section.anchor
    k, d = A.shape
    J = list(_best_subset(A))
    Jc = [i for i in range(k) if i not in J]
    c_lo, c_hi = section.shape_bounds()
    # n = x - anchor + A a - W c over window x shape
    wa = _box_corners(window.lower, window.upper) @ A.T
    wc = _box_corners(c_lo, c_hi) @ W.T
    n_lo = x - anchor + wa.min(axis=0) - wc.max(axis=0) - 1.0
    n_hi = x - anchor + wa.max(axis=0) - wc.min(axis=0) + 1.0
    AJ_inv = np.linalg.inv(A[J, :])
    M = A[Jc, :] @ AJ_inv  # (k-d) x d
    # n_{Jc} = x_Jc - anchor_Jc + M (n_J + anchor_J - x_J) + G c
    G = M @ W[J, :] - W[Jc, :]
    base_off = x[Jc] - anchor[Jc] + M @ (anchor[J] - x[J])
    gc = _box_corners(c_lo, c_hi) @ G.T
    return _VisitPlan(J, Jc, np.linalg.inv(P), n_lo[J], n_hi[J], M, base_off, gc.min(axis=0) - 1.0, gc.max(axis=0) + 1.0)


def _visit_chunk(plan: _VisitPlan, nJ: np.ndarray, flow: FlowSpec, section: Section, window: AlignedBox):
    k, d = flow.k, flow.d
    centre = nJ @ plan.base_mat.T + plan.base_off
    lo = np.ceil(centre + plan.G_lo).astype(np.int64)
    span = np.ceil(plan.G_hi - plan.G_lo).astype(np.int64) + 1
    offs = np.stack(np.meshgrid(*[np.arange(s) for s in span], indexing="ij"), axis=-1).reshape(-1, k - d)
    nJc = (lo[:, None, :] + offs[None, :, :]).reshape(-1, k - d)
    nJ_rep = np.repeat(nJ, offs.shape[0], axis=0)
    n = np.empty((nJ_rep.shape[0], k), dtype=np.int64)
    n[:, plan.J] = nJ_rep
    n[:, plan.Jc] = nJc
    rhs = n + section.anchor - flow.base_point
    sol = rhs @ plan.P_inv.T
    a, c = sol[:, :d], sol[:, d:]
    # roundoff in P^-1 can push exact window hits just outside
    keep = window.inflate(TOL).contains(a) & section.contains_coords(c, tol=TOL)
    return np.clip(a[keep], window.lower, window.upper), c[keep]


def visit_solutions(flow: FlowSpec, section: Section, window: AlignedBox, threads: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """All ``(a, c)`` with ``a`` in the closed window, ``c`` in the section closure inflated by 1e-9,
    and ``x + A a = n + anchor + W c`` for some integer ``n``.

    The integer translates are enumerated over ``d`` coordinates ``J`` where
    the flow matrix is best conditioned; for fixed ``n_J`` the remaining
    coordinates range over a bounded box. Rows are sorted by ``a``.
    """
    if window.dim != flow.d:
        raise DomainError("window dimension must equal d")
    P = check_section(flow, section)
    if section.is_empty:
        return np.zeros((0, flow.d)), np.zeros((0, flow.k - flow.d))
    plan = _plan(flow, section, window, P)
    nJ_all = lattice_points_in_box(plan.n_J_lo, plan.n_J_hi)
    chunk = max(1, 20000 // max(1, int(np.prod(np.ceil(plan.G_hi - plan.G_lo) + 1))))
    chunks = [nJ_all[i:i + chunk] for i in range(0, nJ_all.shape[0], chunk)]
    results = _parallel.ordered_map(lambda blk: _visit_chunk(plan, blk, flow, section, window), chunks, threads)
    a = np.concatenate([r[0] for r in results]) if results else np.zeros((0, flow.d))
    c = np.concatenate([r[1] for r in results]) if results else np.zeros((0, flow.k - flow.d))
    if a.shape[0]:
        order = np.lexsort(a.T[::-1])
        a, c = a[order], c[order]
    return a, c


def visit_set(flow: FlowSpec, section: Section, window: AlignedBox, threads: int | None = None) -> PointSet:
    """Times ``a`` in ``window`` with ``pi(x + sum_i a_i v_i)`` in the section.

    Sections are half-open boxes in plane coordinates. Hits within 1e-9 of a
    box face are listed in ``metadata["boundary_points"]``.
    """
    a, c = visit_solutions(flow, section, window, threads)
    meta = {"generator": "visit_set", "flow": flow.to_dict(), "section": section.to_dict()}
    if not a.shape[0]:
        meta["boundary_points"] = []
        return PointSet(np.zeros((0, flow.d)), window, meta)
    inside = section.contains_coords(c)
    edge = section.boundary_distance(c) <= TOL
    meta["boundary_points"] = a[edge].tolist()
    return PointSet(a[inside], window, meta)


# ---------------------------------------------------------------------------
# cut and project


def cut_and_project(lattice_basis, V, W, K: AlignedBox | None, phys_window: AlignedBox) -> PointSet:
    """Model set ``{pi_V(y) : y in G Z^k, pi_W(y) in K, pi_V(y) in window}``.

    ``lattice_basis`` is a k x k matrix with basis vectors as columns; ``V``
    (d x k) and ``W`` ((k-d) x k) list basis vectors of the two summands as
    rows. Points are returned in V-coordinates, and ``K`` is a half-open box
    in W-coordinates. Lattice points are found by scanning every integer
    vector in the bounding box of the preimage of ``window x K``.
    """
    G = np.asarray(lattice_basis, dtype=float)
    Vm = np.atleast_2d(np.asarray(V, dtype=float)).T
    Wm = np.atleast_2d(np.asarray(W, dtype=float)).T
    k, d = Vm.shape
    meta = {"generator": "cut_and_project"}
    if K is None:
        return PointSet(np.zeros((0, d)), phys_window, meta)
    P = np.hstack([Vm, Wm])
    if G.shape != (k, k) or Wm.shape != (k, k - d):
        raise DomainError("inconsistent dimensions")
    if abs(np.linalg.det(P)) <= TOL or abs(np.linalg.det(G)) <= TOL:
        raise TransversalityError("degenerate direct-sum decomposition")
    Ginv = np.linalg.inv(G)
    corners = np.array([np.concatenate([a, c]) for a in _box_corners(phys_window.lower, phys_window.upper) for c in _box_corners(K.lower, K.upper)])
    z_img = corners @ (Ginv @ P).T
    zs = lattice_points_in_box(z_img.min(axis=0) - 1.0, z_img.max(axis=0) + 1.0)
    coords = (zs @ G.T) @ np.linalg.inv(P).T
    a, c = coords[:, :d], coords[:, d:]
    keep = phys_window.contains(a) & np.all((c >= K.lower) & (c < K.upper), axis=1)
    return PointSet(sort_points(a[keep]), phys_window, meta)


def toral_equivalent(lattice_basis, V, W, K: AlignedBox | None) -> tuple[FlowSpec, Section]:
    """Flow and section on T^k whose visit set equals the given cut-and-project set.

    Pulling back by the lattice basis ``G`` turns ``G z = V a + W c`` into
    ``G^{-1} V a = z + (-G^{-1} W) c``: the flow is along ``G^{-1} V`` from the
    origin and the section is ``{-G^{-1} W c : c in K}``.
    """
    Ginv = np.linalg.inv(np.asarray(lattice_basis, dtype=float))
    Vm = np.atleast_2d(np.asarray(V, dtype=float))
    Wm = np.atleast_2d(np.asarray(W, dtype=float))
    k = Vm.shape[1]
    flow = FlowSpec(Vm @ Ginv.T, np.zeros(k))
    section = Section(-(Wm @ Ginv.T), () if K is None else (K,), np.zeros(k))
    return flow, section


# ---------------------------------------------------------------------------
# net constants


def separation_covering(ps: PointSet, spacing: float | None = None, erosion: float | None = None, max_probes: int = 2_000_000) -> tuple[float, float]:
    """Estimate the separation ``r`` and covering radius ``R`` of a net.

    ``r`` is the exact minimum Euclidean distance between distinct points.
    ``R`` is the largest distance from a probe-grid point (spacing ``r/4`` by
    default) to the net, over the window eroded by ``erosion``. The default
    erosion is the covering radius measured on the full window, which
    over-estimates the true value and so removes all edge effects.
    """
    if len(ps) < 2:
        raise DomainError("need at least two points")
    tree = cKDTree(ps.points)
    dist, _ = tree.query(ps.points, k=2)
    r_est = float(np.min(dist[:, 1]))
    h = r_est / 4.0 if spacing is None else float(spacing)
    lo, hi = ps.window.lower, ps.window.upper

    def probe_max(lo_, hi_, step):
        # the grid stays anchored at the window corner so eroding does not shift it
        n_axis = np.floor((hi_ - lo_) / step + TOL).astype(int) + 1
        total = float(np.prod(n_axis))
        if total > max_probes:
            step *= (total / max_probes) ** (1.0 / ps.dim)
        first = np.ceil((lo_ - lo) / step - TOL)
        last = np.floor((hi_ - lo) / step + TOL)
        axes = [lo[i] + step * np.arange(first[i], last[i] + 1) for i in range(ps.dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, ps.dim)
        dd, _ = tree.query(grid)
        return float(np.max(dd))

    full = probe_max(lo, hi, h)
    e = full if erosion is None else float(erosion)
    if np.any(hi - lo <= 2 * e):
        return r_est, full
    return r_est, probe_max(lo + e, hi - e, h)


# ---------------------------------------------------------------------------
# matchings to lattices


@dataclass(frozen=True)
class LatticeMatching:
    """Injective assignment of net points to lattice points ``basis @ coords``.

    ``basis`` is d x d with the lattice basis as columns; ``coords`` holds one
    integer vector per point.
    """

    points: np.ndarray
    basis: np.ndarray
    coords: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        coords = np.atleast_2d(np.asarray(self.coords, dtype=np.int64)).reshape(pts.shape)
        basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "basis", basis)

    @property
    def targets(self) -> np.ndarray:
        return self.coords @ self.basis.T

    def displacements(self) -> np.ndarray:
        return np.linalg.norm(self.targets - self.points, axis=1)

    def max_displacement(self) -> float:
        return float(np.max(self.displacements())) if self.points.shape[0] else 0.0

    def is_injective(self) -> bool:
        return np.unique(self.coords, axis=0).shape[0] == self.coords.shape[0]


def interlace_union(matchings: list[LatticeMatching]) -> LatticeMatching:
    """Merge ``r`` disjoint nets matched to one lattice ``L`` into a matching to an index-``r`` superlattice.

    The superlattice has basis ``(b_1/r, b_2, ..., b_d)`` and net ``i`` is
    shifted onto the coset ``(i/r) b_1 + L``, so displacements grow by at most
    ``|b_1|``.
    """
    if not matchings:
        raise DomainError("need at least one matching")
    basis = matchings[0].basis
    for m in matchings[1:]:
        if not np.allclose(m.basis, basis, atol=TOL):
            raise DomainError("all matchings must target the same lattice basis")
    r = len(matchings)
    if r == 1:
        return matchings[0]
    pts = np.concatenate([m.points for m in matchings])
    if pts.shape[0] > 1 and cKDTree(pts).query_pairs(TOL, output_type="ndarray").shape[0]:
        raise DomainError("nets overlap")
    fine = basis.copy()
    fine[:, 0] = basis[:, 0] / r
    coords = []
    for i, m in enumerate(matchings):
        c = m.coords.copy()
        c[:, 0] = r * c[:, 0] + i
        coords.append(c)
    return LatticeMatching(pts, fine, np.concatenate(coords))
