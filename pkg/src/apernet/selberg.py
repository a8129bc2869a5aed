"""Selberg extremal functions for intervals and trigonometric majorants of parallelotopes.

One-dimensional building blocks
-------------------------------
With ``K(x) = sinc^2(x)`` and Beurling's odd function

    H(x) = (sin(pi x)/pi)^2 (sum_n sgn(n)/(x - n)^2 + 2/x),

the function ``B = H + K`` majorizes ``sgn`` and ``H - K`` minorizes it, each
with L^1 error 1 and Fourier transform supported in [-1, 1]. For x >= 0 the
lattice sum collapses to the trigamma function:

    H(x) = 1 - K(x) + 2x K(x) - 2 (sin(pi x)/pi)^2 psi'(1 + x).

The interval functions are ``C(x) = (B(M(x+b)) + B(M(b-x)))/2`` and the same
with ``H - K`` for ``c``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import polygamma

from . import _parallel
from .errors import DomainError
from .geometry import (
    AlignedBox,
    AlignedParallelotope,
    Basis,
    check_injective,
    image_ball_array,
    r_weight,
)

IMAG_TOL = 1e-9


# ---------------------------------------------------------------------------
# Beurling-Selberg functions on the line


def sinc2(x) -> np.ndarray:
    """``(sin(pi x)/(pi x))^2`` with value 1 at the origin."""
    return np.sinc(np.asarray(x, dtype=float)) ** 2


def beurling_H(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    s = np.sin(np.pi * ax) / np.pi
    k = np.sinc(ax) ** 2
    h = 1.0 - k + 2.0 * ax * k - 2.0 * s * s * polygamma(1, 1.0 + ax)
    return np.sign(x) * h


def beurling_majorant(x) -> np.ndarray:
    """``B(x) >= sgn(x)`` with ``integral (B - sgn) = 1``."""
    return beurling_H(x) + sinc2(x)


def beurling_minorant(x) -> np.ndarray:
    """``H(x) - K(x) <= sgn(x)`` with ``integral (sgn - (H - K)) = 1``."""
    return beurling_H(x) - sinc2(x)


def _jhat(t) -> np.ndarray:
    """Fourier transform of ``H'``-related kernel: transform of B minus K as a distribution.

    Equals ``pi t (1 - |t|) cot(pi t) + |t|`` on ``0 < |t| < 1``, 1 at 0 and 0 outside.
    """
    t = np.abs(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    inner = (t > 0) & (t < 1)
    ti = t[inner]
    out[inner] = np.pi * ti * (1.0 - ti) / np.tan(np.pi * ti) + ti
    out[t == 0] = 1.0
    return out


def _khat(t) -> np.ndarray:
    return np.clip(1.0 - np.abs(np.asarray(t, dtype=float)), 0.0, None)


@dataclass(frozen=True)
class SelbergPair:
    """Majorant ``C`` and minorant ``c`` of the indicator of ``[-b, b]`` with spectrum in ``(-M, M)``.

    Parameters
    ----------
    b : float
        Half-width of the interval.
    M : float
        Degree; both Fourier transforms vanish for ``|xi| >= M``.
    """

    b: float
    M: float

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b > 0):
            raise DomainError("half-width b must be positive")
        if not (math.isfinite(self.M) and self.M > 0):
            raise DomainError("degree M must be positive")

    def majorant(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return 0.5 * (beurling_majorant(self.M * (t + self.b)) + beurling_majorant(self.M * (self.b - t)))

    def minorant(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return 0.5 * (beurling_minorant(self.M * (t + self.b)) + beurling_minorant(self.M * (self.b - t)))

    def indicator(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return (np.abs(t) <= self.b).astype(float)

    def _fourier(self, xi, sign: float) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        u = xi / self.M
        with np.errstate(divide="ignore", invalid="ignore"):
            sinc_term = np.where(xi == 0, 2.0 * self.b, np.sin(2 * np.pi * self.b * xi) / (np.pi * np.where(xi == 0, 1.0, xi)))
        val = _jhat(u) * sinc_term + sign * _khat(u) * np.cos(2 * np.pi * self.b * xi) / self.M
        return np.where(np.abs(xi) >= self.M, 0.0, val)

    def majorant_hat(self, xi) -> np.ndarray:
        return self._fourier(xi, 1.0)

    def minorant_hat(self, xi) -> np.ndarray:
        return self._fourier(xi, -1.0)


def build_selberg_pair(b: float, M: float) -> SelbergPair:
    return SelbergPair(float(b), float(M))


def selberg_fourier(pair: SelbergPair, xi, kind: str = "majorant"):
    """Fourier transform of the majorant (``kind="majorant"``) or minorant at ``xi``."""
    if kind == "majorant":
        out = pair.majorant_hat(xi)
    elif kind == "minorant":
        out = pair.minorant_hat(xi)
    else:
        raise DomainError(f"unknown kind {kind!r}")
    return float(out) if np.ndim(out) == 0 else out


def fourier_envelope(b: float, xi) -> np.ndarray:
    """``min(1 + 2b, 2/|xi|)``, the decay envelope of both transforms."""
    xi = np.abs(np.asarray(xi, dtype=float))
    with np.errstate(divide="ignore"):
        return np.minimum(1.0 + 2.0 * b, np.where(xi > 0, 2.0 / np.where(xi > 0, xi, 1.0), np.inf))


# ---------------------------------------------------------------------------
# products over boxes


def _half_widths(B) -> np.ndarray:
    if isinstance(B, AlignedBox):
        if not np.allclose(B.lower, -B.upper):
            raise DomainError("box must be centred at the origin")
        return np.asarray(B.upper, dtype=float)
    b = np.atleast_1d(np.asarray(B, dtype=float))
    if np.any(b <= 0):
        raise DomainError("half-widths must be positive")
    return b


def majorant_G(B, M: float):
    """Return ``G_B(x) = prod_j C_j(x_j)``, a majorant of the indicator of ``B``.

    ``B`` is a centred :class:`AlignedBox` or the vector of half-widths.
    The returned callable accepts a point or an (N, k) array.
    """
    pairs = [SelbergPair(float(bi), float(M)) for bi in _half_widths(B)]

    def G(x):
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        val = np.ones(pts.shape[0])
        for j, p in enumerate(pairs):
            val *= p.majorant(pts[:, j])
        return float(val[0]) if single else val

    return G


def minorant_g(B, M: float):
    """Return ``g_B = -(k-1) G_B + sum_i c_i prod_{j != i} C_j``, a minorant of the indicator of ``B``."""
    pairs = [SelbergPair(float(bi), float(M)) for bi in _half_widths(B)]
    k = len(pairs)

    def g(x):
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        maj = np.stack([p.majorant(pts[:, j]) for j, p in enumerate(pairs)])
        mino = np.stack([p.minorant(pts[:, j]) for j, p in enumerate(pairs)])
        total = -(k - 1) * np.prod(maj, axis=0)
        for i in range(k):
            others = np.prod(np.delete(maj, i, axis=0), axis=0) if k > 1 else 1.0
            total = total + mino[i] * others
        return float(total[0]) if single else total

    return g


# ---------------------------------------------------------------------------
# trigonometric polynomials on the torus


@dataclass(frozen=True)
class TrigPolynomial:
    """Real trigonometric polynomial ``sum_m a_m e(m . x)`` on the k-torus.

    ``freqs`` is an (N, k) integer array in lexicographic order, ``coeffs``
    the matching complex coefficients. ``support`` optionally records the
    pair ``(L, M)`` with all frequencies in ``{||L^t m|| <= M}``.
    """

    freqs: np.ndarray
    coeffs: np.ndarray
    dim: int
    support: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=np.int64).reshape(-1, self.dim)
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if f.shape[0] != c.size:
            raise DomainError("frequency and coefficient counts differ")
        f.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, dim: int) -> "TrigPolynomial":
        return cls(np.zeros((0, dim), dtype=np.int64), np.zeros(0, dtype=complex), dim)

    @classmethod
    def from_dict(cls, mapping: dict, dim: int) -> "TrigPolynomial":
        """Build from ``{m: coefficient}``; keys are integer tuples."""
        keys = sorted(mapping)
        freqs = np.array(keys, dtype=np.int64).reshape(-1, dim)
        coeffs = np.array([mapping[k] for k in keys], dtype=complex)
        return cls(freqs, coeffs, dim)

    def __len__(self) -> int:
        return self.coeffs.size

    def as_dict(self) -> dict:
        return {tuple(int(c) for c in m): complex(a) for m, a in zip(self.freqs, self.coeffs)}

    def coefficient(self, m) -> complex:
        m = np.asarray(m, dtype=np.int64)
        hit = np.flatnonzero(np.all(self.freqs == m, axis=1))
        return complex(self.coeffs[hit[0]]) if hit.size else 0j

    def conjugate_defect(self) -> float:
        """Largest ``|a_{-m} - conj(a_m)|`` over the support."""
        lookup = self.as_dict()
        worst = 0.0
        for m, a in lookup.items():
            neg = tuple(-c for c in m)
            worst = max(worst, abs(lookup.get(neg, 0j) - a.conjugate()))
        return worst

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def __call__(self, x, chunk: int = 1000):
        return eval_trig(self, x, chunk=chunk)


def _eval_direct(p: TrigPolynomial, pts: np.ndarray) -> np.ndarray:
    phase = 2j * np.pi * (pts @ p.freqs.T.astype(float))
    return np.exp(phase) @ p.coeffs


def _eval_dense(p: TrigPolynomial, pts: np.ndarray, R: int) -> np.ndarray:
    k = p.dim
    n = 2 * R + 1
    tensor = np.zeros((n,) * k, dtype=complex)
    np.add.at(tensor, tuple((p.freqs + R).T), p.coeffs)
    ms = np.arange(-R, R + 1, dtype=float)
    # contract the last axis with a matmul, then fold the others in one by one
    acc = tensor.reshape(-1, n) @ np.exp(2j * np.pi * np.outer(ms, pts[:, k - 1]))
    for j in range(k - 2, -1, -1):
        acc = acc.reshape(-1, n, pts.shape[0])
        table = np.exp(2j * np.pi * np.outer(ms, pts[:, j]))
        acc = np.einsum("ajs,js->as", acc, table)
    return acc.reshape(-1)


def eval_trig(p: TrigPolynomial, x, chunk: int = 1000, tol: float = IMAG_TOL):
    """Evaluate a real trigonometric polynomial at one point or an (N, k) array.

    Raises
    ------
    DomainError
        If the imaginary part exceeds ``tol * max(1, ||a||_1)``, which means
        the coefficients are not conjugate-symmetric.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if pts.shape[1] != p.dim:
        raise DomainError("point dimension does not match the polynomial")
    if len(p) == 0:
        out = np.zeros(pts.shape[0])
        return float(out[0]) if single else out
    R = int(np.max(np.abs(p.freqs)))
    n = 2 * R + 1
    use_dense = p.dim >= 2 and n ** p.dim <= 4_000_000
    if use_dense:
        chunk = max(1, min(chunk, 8_000_000 // n ** (p.dim - 1)))
    else:
        chunk = max(1, min(chunk, 4_000_000 // len(p)))
    parts = []
    for start in range(0, pts.shape[0], chunk):
        block = pts[start:start + chunk]
        parts.append(_eval_dense(p, block, R) if use_dense else _eval_direct(p, block))
    vals = np.concatenate(parts)
    limit = tol * max(1.0, p.l1_norm())
    if np.max(np.abs(vals.imag)) > limit:
        raise DomainError("imaginary residue above tolerance: coefficients are not conjugate-symmetric")
    out = vals.real
    return float(out[0]) if single else out


def _parallelotope(U) -> AlignedParallelotope:
    if isinstance(U, AlignedParallelotope):
        return U
    if isinstance(U, AlignedBox):
        return U.as_parallelotope()
    raise DomainError("expected an AlignedBox or AlignedParallelotope")


def _product_hats(U: AlignedParallelotope, M: float, freqs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis majorant and minorant transforms at ``t_i . m``; shape (k, N)."""
    pairs = [SelbergPair(float(bi), float(M)) for bi in U.half_widths]
    proj = freqs.astype(float) @ U.linear_part
    maj = np.stack([p.majorant_hat(proj[:, i]) for i, p in enumerate(pairs)])
    mino = np.stack([p.minorant_hat(proj[:, i]) for i, p in enumerate(pairs)])
    return maj, mino


def _combine_minorant(maj: np.ndarray, mino: np.ndarray) -> np.ndarray:
    k = maj.shape[0]
    total = -(k - 1) * np.prod(maj, axis=0)
    for i in range(k):
        others = np.prod(np.delete(maj, i, axis=0), axis=0) if k > 1 else 1.0
        total = total + mino[i] * others
    return total


def build_trig_pair(U, M: float, threads: int | None = None) -> tuple[TrigPolynomial, TrigPolynomial]:
    """Minorant ``phi_U`` and majorant ``psi_U`` of the indicator of ``pi(U)``.

    Both have spectrum in ``{m : ||L^t m|| < M}`` and satisfy
    ``phi_U <= chi_U <= psi_U`` on the torus.

    Returns
    -------
    (phi, psi) : tuple of TrigPolynomial
    """
    U = _parallelotope(U)
    if M < 1:
        raise DomainError("degree M must be >= 1")
    check_injective(U)
    k = U.dim
    nonzero = image_ball_array(U.linear_part, M)
    zero = np.zeros((1, k), dtype=np.int64)
    # keep lexicographic order with 0 in its natural slot
    freqs = np.concatenate([nonzero, zero])
    order = np.lexsort(freqs.T[::-1])
    freqs = freqs[order]

    chunks = [freqs[i:i + 4096] for i in range(0, freqs.shape[0], 4096)]

    def work(block):
        maj, mino = _product_hats(U, M, block)
        return np.prod(maj, axis=0), _combine_minorant(maj, mino)

    results = _parallel.ordered_map(work, chunks, threads)
    psi_c = np.concatenate([r[0] for r in results])
    phi_c = np.concatenate([r[1] for r in results])
    keep = (psi_c != 0) | (phi_c != 0)
    freqs = freqs[keep]
    scale = abs(U.det)
    phase = np.exp(-2j * np.pi * (freqs.astype(float) @ U.offset))
    support = (U.linear_part.copy(), float(M))
    psi = TrigPolynomial(freqs, scale * psi_c[keep] * phase, k, support)
    phi = TrigPolynomial(freqs, scale * phi_c[keep] * phase, k, support)
    return phi, psi


def fourier_coefficient_bound(U, m) -> np.ndarray:
    """``k 2^{k+1} (1+2b)^k |det L| r_T(m)`` for each row of ``m``."""
    U = _parallelotope(U)
    k = U.dim
    const = k * 2.0 ** (k + 1) * (1.0 + 2.0 * U.b) ** k * abs(U.det)
    return const * r_weight(Basis(U.linear_part), np.atleast_2d(m))


def zero_coefficient_excess(U, M: float) -> tuple[float, float]:
    """Exact ``psi_hat(0) - |U|`` and ``|U| - phi_hat(0)``."""
    U = _parallelotope(U)
    b2 = 2.0 * U.half_widths
    det = abs(U.det)
    vol = det * float(np.prod(b2))
    up = det * float(np.prod(b2 + 1.0 / M))
    maj = b2 + 1.0 / M
    low = -(U.dim - 1) * float(np.prod(maj))
    for i in range(U.dim):
        low += (b2[i] - 1.0 / M) * float(np.prod(np.delete(maj, i)))
    return up - vol, vol - det * low


def periodization_radius(U, M: float, tol: float = 1e-4) -> int:
    """Smallest N whose lattice-sum tail bound ``k(1+2b)^{k-1} 2/(pi^2 M^2 N)`` (in ``L``-coordinates) is below ``tol``."""
    U = _parallelotope(U)
    k = U.dim
    lead = k * (1.0 + 2.0 * U.b + 2.0 / M) ** (k - 1) * 2.0 / (np.pi ** 2 * M ** 2)
    stretch = max(1.0, float(np.max(np.sum(np.abs(U.linear_part), axis=1))))
    return int(math.ceil(lead * stretch / tol)) + 1


def periodize(U, M: float, x, N: int, kind: str = "majorant") -> np.ndarray:
    """Direct lattice sum ``sum_{||n|| <= N} F(L^{-1}(x + n - x_0))`` for ``F = G_B`` or ``g_B``."""
    U = _parallelotope(U)
    func = majorant_G(U.half_widths, M) if kind == "majorant" else minorant_g(U.half_widths, M)
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    Linv = np.linalg.inv(U.linear_part)
    k = U.dim
    rng = np.arange(-N, N + 1, dtype=float)
    out = np.zeros(pts.shape[0])
    lead = np.array(list(itertools.product(rng, repeat=min(k, 1))))
    rest = np.stack(np.meshgrid(*([rng] * (k - 1)), indexing="ij"), axis=-1).reshape(-1, k - 1) if k > 1 else np.zeros((1, 0))
    for s, p in enumerate(pts):
        parts = []
        for h in lead:
            n = np.concatenate([np.full((rest.shape[0], 1), h[0]), rest], axis=1)
            y = (p + n - U.offset) @ Linv.T
            parts.append(math.fsum(func(y).tolist()))
        out[s] = math.fsum(parts)
    return out
