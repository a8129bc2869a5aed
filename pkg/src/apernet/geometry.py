"""Vector, lattice and torus primitives.

Conventions used throughout the package:

* ``||.||`` is the sup-norm on R^k.
* A basis ``(t_1, ..., t_k)`` is stored as a k x k matrix whose *columns*
  are the vectors, so ``L e_i = t_i`` and ``(L^t m)_i = t_i . m``.
* Frequencies are enumerated in lexicographic order with the first
  coordinate varying slowest.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DomainError, InjectivityError

TOL = 1e-9


def as_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def torus_reduce(x) -> np.ndarray:
    """Reduce points of R^k to the fundamental domain [0, 1)^k.

    Accepts a single vector or an array of points (last axis = coordinates).
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("torus_reduce: non-finite input")
    out = np.mod(arr, 1.0)
    # np.mod(-1e-17, 1.0) rounds to 1.0
    out[out >= 1.0] = 0.0
    return out + 0.0


def frac_distance(x) -> np.ndarray:
    """Distance from each entry to the nearest integer."""
    arr = np.asarray(x, dtype=float)
    return np.abs(arr - np.rint(arr))


@dataclass(frozen=True)
class Basis:
    """Basis of R^k stored column-wise."""

    matrix: np.ndarray
    tol: float = TOL

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DomainError("basis matrix must be square")
        if not np.all(np.isfinite(mat)):
            raise DomainError("basis has non-finite entries")
        if abs(np.linalg.det(mat)) <= self.tol:
            raise DomainError("basis vectors are linearly dependent")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_vectors(cls, vectors, tol: float = TOL) -> "Basis":
        return cls(np.column_stack([as_vector(v) for v in vectors]), tol=tol)

    @classmethod
    def standard(cls, k: int) -> "Basis":
        return cls(np.eye(k))

    @property
    def k(self) -> int:
        return self.matrix.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def vectors(self) -> list[np.ndarray]:
        return [self.matrix[:, i].copy() for i in range(self.k)]

    def diameter(self) -> float:
        """Euclidean diameter of the fundamental parallelepiped."""
        signs = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=self.k)))
        return float(np.max(np.linalg.norm(signs @ self.matrix.T, axis=1)))


def sup_operator_norm(mat) -> float:
    """Operator norm of ``mat`` for the sup-norm (max absolute row sum)."""
    mat = np.asarray(mat, dtype=float)
    return float(np.max(np.sum(np.abs(mat), axis=1)))


# ---------------------------------------------------------------------------
# frequency enumeration


def _cube_block(R: int, k: int) -> np.ndarray:
    rng = np.arange(-R, R + 1, dtype=np.int64)
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*([rng] * k), indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, k)


def iter_frequency_blocks(R: int, k: int, drop_zero: bool = True) -> Iterator[np.ndarray]:
    """Yield all m in Z^k with ``||m|| <= R`` as integer arrays, lexicographically.

    Each block fixes the first coordinate (or the first two when k >= 4), so
    the concatenation of all blocks is in lexicographic order.
    """
    R = int(R)
    if R < 0:
        return
    lead = 1 if k <= 3 else 2
    rest = _cube_block(R, k - lead)
    for head in itertools.product(range(-R, R + 1), repeat=lead):
        block = np.empty((rest.shape[0], k), dtype=np.int64)
        block[:, :lead] = head
        block[:, lead:] = rest
        if drop_zero and all(h == 0 for h in head):
            block = block[np.any(block != 0, axis=1)]
        yield block


def frequency_array(M: float, k: int) -> np.ndarray:
    """Nonzero m in Z^k with ``||m|| <= M`` as an (N, k) array in lexicographic order."""
    if M < 1:
        raise DomainError("frequency enumeration needs M >= 1")
    if k < 1:
        raise DomainError("dimension k must be >= 1")
    R = int(np.floor(M + TOL))
    blocks = list(iter_frequency_blocks(R, k))
    return np.concatenate(blocks, axis=0)


def enumerate_frequencies(M: float, k: int) -> Iterator[tuple[int, ...]]:
    """Stream the nonzero integer vectors of sup-norm at most ``M``."""
    if M < 1:
        raise DomainError("frequency enumeration needs M >= 1")
    R = int(np.floor(M + TOL))
    for block in iter_frequency_blocks(R, k):
        for row in block:
            yield tuple(int(c) for c in row)


def image_ball_radius(L, M: float) -> int:
    """Sup-norm radius ``floor(lambda M)`` of a cube containing ``{m : ||L^t m|| <= M}``."""
    L = np.asarray(L, dtype=float)
    try:
        inv_t = np.linalg.inv(L.T)
    except np.linalg.LinAlgError as exc:
        raise DomainError("linear map is singular") from exc
    lam = sup_operator_norm(inv_t)
    return int(np.floor(lam * M + TOL))


def image_ball_array(L, M: float, tol: float = TOL) -> np.ndarray:
    """Nonzero m with ``||L^t m|| <= M``, lexicographic, as an (N, k) array."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DomainError("linear map must be square")
    if abs(np.linalg.det(L)) <= tol * max(1.0, np.abs(L).max() ** L.shape[0]):
        raise DomainError("linear map is singular")
    R = image_ball_radius(L, M)
    k = L.shape[0]
    out = []
    for block in iter_frequency_blocks(R, k):
        img = block @ L  # rows are (L^t m)^t
        keep = np.max(np.abs(img), axis=1) <= M + tol
        out.append(block[keep])
    if not out:
        return np.zeros((0, k), dtype=np.int64)
    return np.concatenate(out, axis=0)


def enumerate_image_ball(L, M: float) -> Iterator[tuple[int, ...]]:
    for row in image_ball_array(L, M):
        yield tuple(int(c) for c in row)


def r_weight(T, m) -> np.ndarray | float:
    """Weight ``prod_i min(1, 1/|t_i . m|)`` with the convention ``min(1, 1/0) = 1``.

    ``T`` is a :class:`Basis` or a matrix with the t_i as columns; ``m`` may be a
    single vector or an (N, k) array.
    """
    mat = T.matrix if isinstance(T, Basis) else np.asarray(T, dtype=float)
    m_arr = np.asarray(m, dtype=float)
    single = m_arr.ndim == 1
    m2 = np.atleast_2d(m_arr)
    dots = np.abs(m2 @ mat)
    with np.errstate(divide="ignore"):
        factors = np.where(dots > 1.0, 1.0 / np.where(dots > 1.0, dots, 1.0), 1.0)
    w = np.prod(factors, axis=1)
    return float(w[0]) if single else w


# ---------------------------------------------------------------------------
# boxes and parallelotopes


@dataclass(frozen=True)
class AlignedBox:
    """Axis-parallel box ``[lower_1, upper_1] x ... x [lower_k, upper_k]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, "lower")
        hi = as_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise DomainError("box bounds have different dimensions")
        if np.any(hi <= lo):
            raise DomainError("box needs lower < upper on every axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, pts, half_open: bool = False) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if half_open:
            return np.all((pts >= self.lower) & (pts < self.upper), axis=1)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def contains_box(self, other: "AlignedBox", tol: float = TOL) -> bool:
        return bool(np.all(other.lower >= self.lower - tol) and np.all(other.upper <= self.upper + tol))

    def inflate(self, amount: float) -> "AlignedBox":
        return AlignedBox(self.lower - amount, self.upper + amount)

    def is_torus_injective(self) -> bool:
        return bool(np.all(self.widths < 1.0))

    def as_parallelotope(self) -> "AlignedParallelotope":
        return AlignedParallelotope(np.eye(self.dim), 0.5 * self.widths, self.center)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "AlignedBox":
        return cls(np.asarray(d["lower"], dtype=float), np.asarray(d["upper"], dtype=float))

    @classmethod
    def cube(cls, lower: float, upper: float, dim: int) -> "AlignedBox":
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))


@dataclass(frozen=True)
class AlignedParallelotope:
    """``U = L B + x_0`` with ``B = prod [-b_i, b_i]``."""

    linear_part: np.ndarray
    half_widths: np.ndarray
    offset: np.ndarray = None

    def __post_init__(self):
        L = np.array(self.linear_part, dtype=float)
        b = as_vector(self.half_widths, "half_widths")
        k = b.size
        if L.shape != (k, k):
            raise DomainError("linear part must be k x k with k = len(half_widths)")
        if np.any(b <= 0):
            raise DomainError("half-widths must be positive")
        if abs(np.linalg.det(L)) <= TOL * max(1.0, np.abs(L).max() ** k):
            raise DomainError("linear part is singular")
        x0 = np.zeros(k) if self.offset is None else as_vector(self.offset, "offset")
        for arr in (L, b, x0):
            arr.setflags(write=False)
        object.__setattr__(self, "linear_part", L)
        object.__setattr__(self, "half_widths", b)
        object.__setattr__(self, "offset", x0)

    @property
    def dim(self) -> int:
        return self.half_widths.size

    @property
    def b(self) -> float:
        return float(np.max(self.half_widths))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear_part))

    @property
    def volume(self) -> float:
        return float(2.0 ** self.dim * np.prod(self.half_widths) * abs(self.det))

    def vertices(self) -> np.ndarray:
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim)))
        return (signs * self.half_widths) @ self.linear_part.T + self.offset

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        ext = np.abs(self.linear_part) @ self.half_widths
        return self.offset - ext, self.offset + ext

    def contains(self, pts, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        y = np.linalg.solve(self.linear_part, (pts - self.offset).T).T
        return np.all(np.abs(y) <= self.half_widths + tol, axis=1)

    def to_dict(self) -> dict:
        return {
            "linear_part": self.linear_part.tolist(),
            "half_widths": self.half_widths.tolist(),
            "offset": self.offset.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlignedParallelotope":
        return cls(np.asarray(d["linear_part"]), np.asarray(d["half_widths"]), np.asarray(d.get("offset")) if d.get("offset") is not None else None)


def lattice_points_in_box(lower, upper) -> np.ndarray:
    """All integer vectors n with ``lower <= n <= upper`` (lexicographic)."""
    lo = np.ceil(np.asarray(lower, dtype=float) - TOL).astype(np.int64)
    hi = np.floor(np.asarray(upper, dtype=float) + TOL).astype(np.int64)
    if np.any(hi < lo):
        return np.zeros((0, lo.size), dtype=np.int64)
    ranges = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, lo.size)


def injectivity_witness(U, tol: float = TOL):
    """Return a nonzero n in Z^k lying in ``U - U`` (so pi is not injective on U), or None.

    ``U - U`` is ``L (2B)``; the candidates are the integer points of its
    bounding box, tested exactly in the coordinates of ``L``. Points within
    ``tol`` of the boundary of ``U - U`` count as violations.
    """
    if isinstance(U, AlignedBox):
        bad = np.flatnonzero(U.widths >= 1.0 - tol)
        if bad.size:
            n = np.zeros(U.dim, dtype=np.int64)
            n[bad[0]] = 1
            return n
        return None
    L = U.linear_part
    ext = 2.0 * (np.abs(L) @ U.half_widths)
    cand = lattice_points_in_box(-ext, ext)
    cand = cand[np.any(cand != 0, axis=1)]
    if cand.size == 0:
        return None
    y = np.linalg.solve(L, cand.T.astype(float)).T
    inside = np.all(np.abs(y) <= 2.0 * U.half_widths + tol, axis=1)
    hits = cand[inside]
    return hits[0] if hits.size else None


def check_injective(U, tol: float = TOL) -> None:
    w = injectivity_witness(U, tol)
    if w is not None:
        raise InjectivityError(f"projection to the torus is not injective: {tuple(int(c) for c in w)} lies in U - U")


def box_membership(U, x, tol: float = 0.0) -> np.ndarray | bool:
    """Whether ``pi(x)`` lies in ``pi(U)`` for a closed box or parallelotope ``U``.

    ``x`` may be a vector or an (N, k) array of points.
    """
    check_injective(U)
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if not np.all(np.isfinite(pts)):
        raise DomainError("box_membership: non-finite point")
    if isinstance(U, AlignedBox):
        rel = torus_reduce(pts - U.lower)
        # rel close to 1 means x sits just below the lower face
        ok = np.all((rel <= U.widths + tol) | (rel >= 1.0 - tol), axis=1)
        return bool(ok[0]) if single else ok
    lo, hi = U.bounding_box()
    # candidate translates n with x + n in the bounding box
    base = np.ceil(lo - pts - tol).astype(np.int64)
    span = int(np.max(np.ceil(hi - lo))) + 1
    k = U.dim
    result = np.zeros(pts.shape[0], dtype=bool)
    for offs in itertools.product(range(span + 1), repeat=k):
        n = base + np.asarray(offs, dtype=np.int64)
        result |= U.contains(pts + n, tol=tol)
    return bool(result[0]) if single else result
