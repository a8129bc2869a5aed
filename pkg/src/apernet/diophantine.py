"""Diophantine diagnostics for acting subspaces."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _parallel
from .errors import DomainError, ResonanceError
from .geometry import TOL, Basis, as_vector, iter_frequency_blocks, r_weight

RESONANCE_TOL = 1e-9
MAX_K = 4
MAX_M = 256


def _check_caps(k: int, M: float, allow_large: bool) -> None:
    if allow_large:
        return
    if k > MAX_K or M > MAX_M:
        raise DomainError(f"exhaustive scan beyond desk caps (k <= {MAX_K}, M <= {MAX_M}); pass allow_large=True")


def _canonical_key(m: np.ndarray) -> tuple:
    """Sort key: smaller sup-norm first, then lexicographic with the sign fixed so the first nonzero entry is positive."""
    nz = np.flatnonzero(m)
    mm = m if nz.size == 0 or m[nz[0]] > 0 else -m
    return (int(np.max(np.abs(m))), tuple(int(c) for c in mm))


@dataclass
class DiophProfile:
    """Minimum of ``|m . v|`` over ``0 < ||m|| <= M`` for several ``M``."""

    rows: list[dict]
    s_est: float | None
    residual: float | None
    resonant: bool
    config: dict = field(default_factory=dict)


def _block_min(block: np.ndarray, v: np.ndarray):
    vals = np.abs(block @ v)
    best = float(np.min(vals))
    ties = block[vals <= best]
    winner = min(ties, key=_canonical_key)
    return best, winner


def min_inner_product(v, M: int, threads: int | None = None) -> tuple[float, tuple[int, ...]]:
    """Exhaustive ``min |m . v|`` over ``0 < ||m|| <= M`` and a canonical minimizer."""
    v = as_vector(v, "v")
    R = int(math.floor(M + TOL))
    blocks = list(iter_frequency_blocks(R, v.size))
    results = _parallel.ordered_map(lambda b: _block_min(b, v), blocks, threads)
    best = min(r[0] for r in results)
    winner = min((r[1] for r in results if r[0] <= best), key=_canonical_key)
    return best, _canonical_key(winner)[1]


def dioph_profile(v, M_list, threads: int | None = None, exclude_smallest: bool = True) -> DiophProfile:
    """Minima of ``|m . v|`` at each ``M`` and a fitted exponent.

    ``s_est`` is the OLS slope of ``-log min|m . v|`` against
    ``log ||argmin||``; it estimates the Diophantine exponent (1 for badly
    approximable vectors in the plane). Minima below 1e-9 are flagged as
    resonances and left out of the fit.
    """
    v = as_vector(v, "v")
    if np.all(v == 0):
        raise DomainError("v must be nonzero")
    Ms = sorted(int(m) for m in M_list)
    rows = []
    for M in Ms:
        val, arg = min_inner_product(v, M, threads)
        rows.append({"M": M, "min_inner_product": val, "argmin": list(arg), "resonance": val < RESONANCE_TOL})
    resonant = any(r["resonance"] for r in rows)
    fit_rows = [r for r in rows if not r["resonance"]]
    if exclude_smallest and len(fit_rows) > 2:
        fit_rows = fit_rows[1:]
    s_est = resid = None
    xs = np.array([math.log(max(abs(c) for c in r["argmin"])) for r in fit_rows])
    if len(fit_rows) >= 2 and np.ptp(xs) > 0:
        ys = np.array([-math.log(r["min_inner_product"]) for r in fit_rows])
        A = np.vstack([xs, np.ones_like(xs)]).T
        coef, res, *_ = np.linalg.lstsq(A, ys, rcond=None)
        s_est = float(coef[0])
        resid = float(np.sqrt(np.mean((ys - A @ coef) ** 2)))
    return DiophProfile(rows, s_est, resid, resonant, {"v": v.tolist(), "M_list": Ms})


def complete_basis(vs) -> Basis:
    """Extend ``v_1..v_d`` by standard basis vectors, chosen greedily to maximize ``|det|``."""
    V = np.atleast_2d(np.asarray(vs, dtype=float))
    d, k = V.shape
    best, best_det = None, -1.0
    for J in itertools.combinations(range(k), k - d):
        mat = np.vstack([V, np.eye(k)[list(J)]]).T
        det = abs(np.linalg.det(mat))
        if det > best_det + 1e-15:
            best, best_det = mat, det
    return Basis(best)


def _sum_block(block: np.ndarray, V: np.ndarray, Tm: np.ndarray):
    inner = np.abs(block @ V.T)
    bad = np.any(inner < RESONANCE_TOL, axis=1)
    if np.any(bad):
        return None, block[bad]
    terms = r_weight(Tm, block) / np.prod(inner, axis=1)
    return math.fsum(terms.tolist()), None


def strongly_dioph_sum(vs, T=None, M: float = 16, threads: int | None = None, allow_large: bool = False) -> float:
    """``sum_{0<||m||<=M} r_T(m) prod_i 1/|m . v_i|``.

    Parameters
    ----------
    vs : array-like, shape (d, k)
        Acting vectors.
    T : Basis or array-like, optional
        Basis for the weight ``r_T``; defaults to :func:`complete_basis`.

    Raises
    ------
    ResonanceError
        If some ``|m . v_i| < 1e-9``; the offending ``m`` are attached.
    """
    V = np.atleast_2d(np.asarray(vs, dtype=float))
    k = V.shape[1]
    if M < 1:
        raise DomainError("M must be >= 1")
    _check_caps(k, M, allow_large)
    basis = complete_basis(V) if T is None else (T if isinstance(T, Basis) else Basis(np.asarray(T, dtype=float)))
    Tm = basis.matrix
    R = int(math.floor(M + TOL))
    blocks = list(iter_frequency_blocks(R, k))
    results = _parallel.ordered_map(lambda b: _sum_block(b, V, Tm), blocks, threads)
    witnesses = [w for r in results if r[1] is not None for w in r[1]]
    if witnesses:
        raise ResonanceError(f"{len(witnesses)} resonant frequencies", witnesses[:32])
    return math.fsum(r[0] for r in results)


@dataclass
class GrowthFit:
    eps_est: float
    intercept: float
    log_power: int | None
    normalized: list[float]
    non_increasing: bool


def growth_fit(sums, k: int | None = None, d: int | None = None, start_M: float | None = None) -> GrowthFit:
    """Fit ``sum ~ M^eps`` and test whether ``sum/(log M)^{k+2d+1}`` is non-increasing.

    ``sums`` is a list of ``(M, value)`` pairs. The normalized trend needs
    ``k`` and ``d``; ``start_M`` restricts the monotonicity check to
    ``M >= start_M``.
    """
    rows = sorted((float(m), float(s)) for m, s in sums)
    if len(rows) < 4:
        raise DomainError("growth_fit needs at least 4 rows")
    Ms = np.array([r[0] for r in rows])
    vals = np.array([r[1] for r in rows])
    A = np.vstack([np.log(Ms), np.ones_like(Ms)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(vals), rcond=None)
    power = None
    normalized: list[float] = []
    flag = True
    if k is not None and d is not None:
        power = k + 2 * d + 1
        normalized = (vals / np.log(Ms) ** power).tolist()
        sel = [n for m, n in zip(Ms, normalized) if start_M is None or m >= start_M]
        flag = all(b <= a for a, b in zip(sel, sel[1:]))
    return GrowthFit(float(coef[0]), float(coef[1]), power, normalized, flag)


def irrationality_witness(V_basis, M: int, tol: float = RESONANCE_TOL, threads: int | None = None):
    """A nonzero ``m`` with ``||m|| <= M`` and ``max_i |m . v_i| < tol``, or None."""
    V = np.atleast_2d(np.asarray(V_basis, dtype=float))
    if M < 1:
        raise DomainError("M must be >= 1")
    R = int(math.floor(M + TOL))

    def scan(block):
        hit = np.max(np.abs(block @ V.T), axis=1) < tol
        return block[hit]

    hits = [h for h in _parallel.ordered_map(scan, list(iter_frequency_blocks(R, V.shape[1])), threads) if h.size]
    if not hits:
        return None
    cands = np.concatenate(hits)
    best = min(cands, key=_canonical_key)
    return _canonical_key(best)[1]
