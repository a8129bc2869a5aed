"""Compact rational-subspace orbits meeting a section: counts, non-correlation and dilation growth."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import TOL, AlignedBox
from .netgen import FlowSpec, Section, visit_solutions

MAX_ENTRY = 1000


def _row_reduce(A: list[list[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Unimodular ``P`` with ``P A`` upper triangular (integer row operations on a k x d matrix)."""
    k, d = len(A), len(A[0])
    H = [row[:] for row in A]
    P = [[int(i == j) for j in range(k)] for i in range(k)]
    r = 0
    for col in range(d):
        while True:
            rows = [i for i in range(r, k) if H[i][col] != 0]
            if not rows:
                break
            piv = min(rows, key=lambda i: abs(H[i][col]))
            H[r], H[piv] = H[piv], H[r]
            P[r], P[piv] = P[piv], P[r]
            done = True
            for i in range(r + 1, k):
                if H[i][col]:
                    q = H[i][col] // H[r][col]
                    H[i] = [a - q * b for a, b in zip(H[i], H[r])]
                    P[i] = [a - q * b for a, b in zip(P[i], P[r])]
                    if H[i][col]:
                        done = False
            if done:
                break
        if any(H[i][col] for i in range(r, k)):
            r += 1
    return P, H


def _int_inverse(P: list[list[int]]) -> np.ndarray:
    inv = np.linalg.inv(np.array(P, dtype=float))
    out = np.rint(inv).astype(np.int64)
    if not np.allclose(inv, out, atol=1e-6):
        raise DomainError("row reduction produced a non-unimodular transform")
    return out


def saturate(vectors) -> np.ndarray:
    """Z-basis (rows) of ``span(vectors) cap Z^k``; the input is kept when already primitive."""
    Q = np.atleast_2d(np.asarray(vectors))
    if not np.allclose(Q, np.rint(Q)):
        raise DomainError("rational subspace needs integer spanning vectors")
    Q = np.rint(Q).astype(np.int64)
    if np.max(np.abs(Q)) > MAX_ENTRY:
        raise DomainError(f"integer entries above {MAX_ENTRY}")
    d, k = Q.shape
    P, H = _row_reduce(Q.T.tolist())
    top = np.array(H[:d], dtype=float)
    det = abs(round(np.linalg.det(top)))
    if det == 0:
        raise DomainError("spanning vectors are linearly dependent")
    if det == 1:
        return Q
    return _int_inverse(P)[:, :d].T


@dataclass(frozen=True)
class RationalSubspace:
    """Subspace ``Q`` spanned by integer vectors; the stored basis generates ``Q cap Z^k``.

    The fundamental domain is ``{sum_j a_j q_j : 0 <= a_j < 1}``.
    """

    integer_basis: np.ndarray

    def __post_init__(self):
        basis = saturate(self.integer_basis)
        basis.setflags(write=False)
        object.__setattr__(self, "integer_basis", basis)

    @property
    def d(self) -> int:
        return self.integer_basis.shape[0]

    @property
    def k(self) -> int:
        return self.integer_basis.shape[1]

    def domain_volume(self) -> float:
        Q = self.integer_basis.astype(float)
        return math.sqrt(abs(np.linalg.det(Q @ Q.T)))

    def facet_areas(self) -> list[float]:
        """(d-1)-volume of the facet of the fundamental domain opposite each ``q_j``."""
        Q = self.integer_basis.astype(float)
        out = []
        for j in range(self.d):
            rest = np.delete(Q, j, axis=0)
            out.append(math.sqrt(abs(np.linalg.det(rest @ rest.T))) if rest.size else 1.0)
        return out


@dataclass(frozen=True)
class OrbitCount:
    count_open: int
    count_closed: int
    boundary_hit: bool


def orbit_section_count(Q: RationalSubspace, x, S: Section) -> OrbitCount:
    """``#(Q.x cap S)`` for the open section and for its closure.

    Intersections are found as in :func:`apernet.netgen.visit_set` over
    ``a in [-1/2, 3/2]^d``, then reduced mod 1 into the fundamental domain.
    """
    if S.is_empty:
        return OrbitCount(0, 0, False)
    flow = FlowSpec(Q.integer_basis.astype(float), np.asarray(x, dtype=float))
    window = AlignedBox(np.full(Q.d, -0.5), np.full(Q.d, 1.5))
    a, c = visit_solutions(flow, S, window)
    if not a.shape[0]:
        return OrbitCount(0, 0, False)
    frac = np.mod(a, 1.0)
    frac[frac > 1.0 - TOL] = 0.0
    key = np.rint(frac / TOL).astype(np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    c = c[np.sort(first)]
    dist = S.boundary_distance(c)
    closed = int(c.shape[0])
    open_ = int(np.count_nonzero(dist > TOL))
    return OrbitCount(open_, closed, bool(np.any(dist <= TOL)))


@dataclass(frozen=True)
class CorrelationWitness:
    """Two points whose orbits avoid the section boundary but meet it a different number of times.

    Ordered so that ``count_1 > count_2``.
    """

    x1: tuple
    x2: tuple
    count_1: int
    count_2: int


def not_correlated_test(Q: RationalSubspace, S: Section, sample_count: int = 256, seed: int = 0):
    """Search seeded uniform samples for a non-correlation witness; return it or None."""
    rng = np.random.default_rng(seed)
    xs = rng.random((sample_count, Q.k))
    first = None
    for x in xs:
        oc = orbit_section_count(Q, x, S)
        if oc.boundary_hit or oc.count_open != oc.count_closed:
            continue
        if first is None:
            first = (x, oc.count_open)
            continue
        if oc.count_open != first[1]:
            pair = sorted([first, (x, oc.count_open)], key=lambda p: -p[1])
            return CorrelationWitness(tuple(pair[0][0].tolist()), tuple(pair[1][0].tolist()), pair[0][1], pair[1][1])
    return None


def boundary_neighbourhood(Q: RationalSubspace, N: int) -> float:
    """Measure of the unit neighbourhood of the boundary of ``N`` times the fundamental domain.

    Each facet contributes a slab of thickness 2 over its area, so the total is
    ``sum_j 2 * 2 * N^{d-1} * area_j``.
    """
    return float(sum(4.0 * N ** (Q.d - 1) * a for a in Q.facet_areas()))


def dilated_domain_discrepancy(Q: RationalSubspace, S: Section, x, lam: float, N: int) -> float:
    """``|N^d F(x) - lam N^d |C|| / |(boundary M)^(1)|`` for the ``N``-fold dilation ``M`` of the domain ``C``."""
    if int(N) != N or N < 1:
        raise DomainError("dilation factor must be a positive integer")
    oc = orbit_section_count(Q, x, S)
    if oc.boundary_hit:
        raise DomainError("orbit meets the section boundary")
    N = int(N)
    count = N ** Q.d * oc.count_open
    vol = N ** Q.d * Q.domain_volume()
    return abs(count - lam * vol) / boundary_neighbourhood(Q, N)


def dilation_table(Q: RationalSubspace, S: Section, x, lam: float, Ns=(1, 2, 4, 8)) -> list[dict]:
    return [{"N": int(n), "ratio": dilated_domain_discrepancy(Q, S, x, lam, n)} for n in Ns]


def linearity_spread(table: list[dict]) -> float:
    """Largest relative deviation of ``ratio/N`` from its value at the smallest ``N``."""
    per = [r["ratio"] / r["N"] for r in table]
    if per[0] == 0:
        return 0.0 if all(p == 0 for p in per) else math.inf
    return max(abs(p / per[0] - 1.0) for p in per)
