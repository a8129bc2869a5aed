import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from apernet.errors import DomainError, InjectivityError
from apernet.geometry import AlignedParallelotope
from apernet.selberg import (
    TrigPolynomial,
    beurling_H,
    beurling_majorant,
    beurling_minorant,
    build_selberg_pair,
    build_trig_pair,
    eval_trig,
    fourier_coefficient_bound,
    fourier_envelope,
    majorant_G,
    minorant_g,
    periodization_radius,
    periodize,
    selberg_fourier,
    zero_coefficient_excess,
)


def H_direct(x, N=400_000):
    """Beurling's function from its defining sgn-weighted sum, in sinc form."""
    n = np.arange(1, N + 1)
    return float(np.sum(np.sinc(x - n) ** 2 - np.sinc(x + n) ** 2) + 2 * x * np.sinc(x) ** 2)


def l1_excess(f, b, M, X=150.0):
    """Quadrature of f over R split at +-b, plus the analytic tail 1/(pi^2 M^2 X) beyond |t| = X."""
    pieces = [(-X, -b), (-b, b), (b, X)]
    total = sum(integrate.quad(f, lo, hi, limit=8000, epsabs=1e-13, epsrel=1e-13)[0] for lo, hi in pieces)
    return total + 1.0 / (math.pi ** 2 * M ** 2 * X)


def fourier_quad(f, xi, b, M, sign=1, X=150.0):
    g = lambda t: f(t) * math.cos(2 * math.pi * xi * t)
    val = 2 * sum(integrate.quad(g, lo, hi, limit=8000, epsabs=1e-12)[0] for lo, hi in [(0, b), (b, X)])
    # non-oscillating tail only matters at xi = 0
    return val + (sign / (math.pi ** 2 * M ** 2 * X) if xi == 0 else 0.0)


class TestBeurling:
    @pytest.mark.parametrize("x", [0.3, 1.0, 2.7, -3.2, 10.5, 0.999999, 25.0])
    def test_closed_form_matches_sum(self, x):
        assert beurling_H(x) == pytest.approx(H_direct(x), abs=1e-9)

    def test_odd_and_zero(self):
        xs = np.linspace(0.01, 20, 300)
        assert np.allclose(beurling_H(-xs), -beurling_H(xs))
        assert beurling_H(0.0) == 0.0

    def test_sign_bounds(self):
        xs = np.linspace(-30, 30, 60001)
        sgn = np.sign(xs)
        assert np.all(beurling_majorant(xs) >= sgn - 1e-12)
        assert np.all(beurling_minorant(xs) <= sgn + 1e-12)


class TestSelbergPair:
    @pytest.mark.parametrize("b,M", [(0.3, 4), (0.5, 10), (1.0, 16), (0.3, 8)])
    def test_zero_frequency(self, b, M):
        P = build_selberg_pair(b, M)
        assert selberg_fourier(P, 0.0) == pytest.approx(2 * b + 1 / M, abs=1e-12)
        assert selberg_fourier(P, 0.0, "minorant") == pytest.approx(2 * b - 1 / M, abs=1e-12)

    def test_l1_defect(self):
        P = build_selberg_pair(0.3, 8)
        up = l1_excess(lambda t: float(P.majorant(t) - P.indicator(t)), 0.3, 8)
        down = l1_excess(lambda t: float(P.indicator(t) - P.minorant(t)), 0.3, 8)
        assert up == pytest.approx(1 / 8, abs=1e-6)
        assert down == pytest.approx(1 / 8, abs=1e-6)

    def test_fourier_against_quadrature(self):
        P = build_selberg_pair(0.4, 6)
        for xi in (0.0, 0.7, 1.7, 3.3, 5.5):
            assert P.majorant_hat(xi) == pytest.approx(fourier_quad(P.majorant, xi, 0.4, 6), abs=2e-6)
            assert P.minorant_hat(xi) == pytest.approx(fourier_quad(P.minorant, xi, 0.4, 6, -1), abs=2e-6)
        assert abs(P.majorant_hat(1.7)) <= min(1 + 0.8, 2 / 1.7)

    def test_support(self):
        P = build_selberg_pair(0.4, 6)
        assert selberg_fourier(P, 6.5) == 0.0
        assert np.all(P.majorant_hat(np.linspace(6, 50, 200)) == 0)
        assert np.all(P.minorant_hat(-np.linspace(6, 50, 200)) == 0)

    @given(st.floats(0.01, 2.0), st.integers(1, 40))
    def test_envelope(self, b, M):
        P = build_selberg_pair(b, M)
        xi = np.linspace(-M - 1, M + 1, 801)
        env = fourier_envelope(b, xi)
        assert np.all(np.abs(P.majorant_hat(xi)) <= env + 1e-9)
        assert np.all(np.abs(P.minorant_hat(xi)) <= env + 1e-9)

    @given(st.floats(0.02, 1.5), st.integers(1, 32))
    def test_sandwich_on_line(self, b, M):
        P = build_selberg_pair(b, M)
        t = np.linspace(-b - 5, b + 5, 4001)
        chi = P.indicator(t)
        assert np.all(P.majorant(t) >= chi - 1e-12)
        assert np.all(P.minorant(t) <= chi + 1e-12)

    def test_invalid(self):
        with pytest.raises(DomainError):
            build_selberg_pair(0.0, 4)
        with pytest.raises(DomainError):
            build_selberg_pair(0.3, 0)


class TestBoxFunctions:
    def test_majorant_inside_and_nonnegative(self, rng):
        G = majorant_G([0.2, 0.3], 8)
        assert G([0.0, 0.0]) >= 1
        x = rng.uniform(-3, 3, (5000, 2))
        assert np.all(G(x) >= -1e-14)
        inside = np.all(np.abs(x) <= [0.2, 0.3], axis=1)
        assert np.all(G(x[inside]) >= 1 - 1e-12)

    def test_minorant_bounds(self, rng):
        g = minorant_g([0.2, 0.3, 0.25], 8)
        x = rng.uniform(-2, 2, (5000, 3))
        chi = np.all(np.abs(x) <= [0.2, 0.3, 0.25], axis=1)
        assert np.all(g(x) <= chi + 1e-12)
        assert g([0.0, 0.0, 0.0]) <= 1
        assert g([0.5, 0.0, 0.0]) <= 0

    def test_one_dimensional_reduction(self):
        P = build_selberg_pair(0.3, 5)
        t = np.linspace(-2, 2, 101)
        assert np.allclose(majorant_G([0.3], 5)(t[:, None]), P.majorant(t))
        assert np.allclose(minorant_g([0.3], 5)(t[:, None]), P.minorant(t))

    @given(st.lists(st.floats(1.0, 50.0), min_size=1, max_size=5))
    def test_product_inequality(self, betas):
        b = np.array(betas)
        k = b.size
        lhs = sum(np.prod(np.delete(b, i)) for i in range(k))
        assert lhs <= 1 + (k - 1) * np.prod(b) + 1e-9 * np.prod(b)

    def test_product_inequality_equality(self):
        for k in range(1, 6):
            b = np.ones(k)
            assert sum(np.prod(np.delete(b, i)) for i in range(k)) == 1 + (k - 1) * np.prod(b)


class TestTrigPolynomial:
    def test_zero(self):
        assert eval_trig(TrigPolynomial.zero(2), [0.3, 0.1]) == 0.0

    def test_cosine(self):
        p = TrigPolynomial.from_dict({(1, 2): 0.5, (-1, -2): 0.5}, 2)
        x = np.array([[0.1, 0.7], [0.33, 0.2]])
        assert np.allclose(eval_trig(p, x), np.cos(2 * np.pi * x @ [1, 2]))

    def test_dense_and_direct_agree(self, rng):
        freqs = rng.integers(-6, 7, (40, 2))
        coeffs = rng.normal(size=40) + 1j * rng.normal(size=40)
        d = {}
        for m, c in zip(map(tuple, freqs), coeffs):
            d[m] = d.get(m, 0) + c
            neg = tuple(-v for v in m)
            d[neg] = d.get(neg, 0) + np.conj(c)
        p = TrigPolynomial.from_dict(d, 2)
        x = rng.random((50, 2))
        direct = np.real(np.exp(2j * np.pi * x @ p.freqs.T) @ p.coeffs)
        assert np.allclose(eval_trig(p, x), direct, atol=1e-10)

    def test_asymmetric_rejected(self):
        p = TrigPolynomial.from_dict({(1, 0): 1.0}, 2)
        with pytest.raises(DomainError):
            eval_trig(p, [0.1, 0.2])


def _random_U(rng, k):
    while True:
        L = np.eye(k) + 0.3 * rng.normal(size=(k, k))
        if np.linalg.cond(L) > 3:
            continue
        U = AlignedParallelotope(L, rng.uniform(0.05, 0.4, k), rng.random(k))
        try:
            build_trig_pair(U, 1)
            return U
        except InjectivityError:
            continue


class TestTrigPair:
    def test_one_dimensional_coefficients(self):
        U = AlignedParallelotope(np.eye(1), [0.3])
        phi, psi = build_trig_pair(U, 5)
        P = build_selberg_pair(0.3, 5)
        ms = psi.freqs[:, 0]
        assert set(ms.tolist()) == set(range(-4, 5))
        assert np.allclose(psi.coeffs.real, P.majorant_hat(ms))
        assert np.allclose(phi.coeffs.real, P.minorant_hat(ms))

    def test_zero_coefficient(self, rng):
        U = _random_U(rng, 2)
        phi, psi = build_trig_pair(U, 8)
        det = abs(np.linalg.det(U.linear_part))
        assert psi.coefficient([0, 0]).real == pytest.approx(det * np.prod(2 * U.half_widths + 1 / 8), rel=1e-12)
        up, low = zero_coefficient_excess(U, 8)
        assert psi.coefficient([0, 0]).real - U.volume == pytest.approx(up, abs=1e-12)
        assert U.volume - phi.coefficient([0, 0]).real == pytest.approx(low, abs=1e-12)

    def test_symmetry_support_and_bound(self, rng):
        U = _random_U(rng, 3)
        phi, psi = build_trig_pair(U, 6)
        assert psi.conjugate_defect() < 1e-14 and phi.conjugate_defect() < 1e-14
        img = psi.freqs @ U.linear_part
        assert np.all(np.max(np.abs(img), axis=1) < 6)
        bound = fourier_coefficient_bound(U, psi.freqs)
        assert np.all(np.abs(psi.coeffs) <= bound)
        assert np.all(np.abs(phi.coeffs) <= bound)

    def test_sandwich(self, rng):
        U = _random_U(rng, 2)
        phi, psi = build_trig_pair(U, 8)
        from apernet.geometry import box_membership

        x = rng.random((4000, 2))
        chi = box_membership(U, x)
        assert np.all(eval_trig(psi, x) >= chi - 1e-8)
        assert np.all(eval_trig(phi, x) <= chi + 1e-8)

    def test_offset_is_modulation(self, rng):
        U0 = AlignedParallelotope([[1.0, 0.2], [0.1, 0.9]], [0.2, 0.1])
        U1 = AlignedParallelotope(U0.linear_part, U0.half_widths, [0.3, 0.6])
        _, p0 = build_trig_pair(U0, 6)
        _, p1 = build_trig_pair(U1, 6)
        x = rng.random((100, 2))
        assert np.allclose(eval_trig(p1, x), eval_trig(p0, x - [0.3, 0.6]))

    def test_periodization_matches(self):
        U = AlignedParallelotope([[1.0, 0.25], [-0.2, 0.8]], [0.2, 0.15], [0.4, 0.3])
        M = 8
        phi, psi = build_trig_pair(U, M)
        N = periodization_radius(U, M, tol=1e-4)
        xs = np.array([[0.1, 0.2], [0.45, 0.35], [0.9, 0.6]])
        direct = periodize(U, M, xs, N)
        assert np.allclose(direct, eval_trig(psi, xs), atol=1e-4)
        coarse = periodize(U, M, xs, N // 2)
        assert np.max(np.abs(direct - eval_trig(psi, xs))) <= np.max(np.abs(coarse - eval_trig(psi, xs))) + 1e-12
        assert np.allclose(periodize(U, M, xs, N, kind="minorant"), eval_trig(phi, xs), atol=1e-4)

    def test_zero_excess_halves_for_large_M(self, rng):
        U = AlignedParallelotope(np.eye(2) + 0.1 * rng.normal(size=(2, 2)), [0.2, 0.3])
        for M in (64, 128):
            a = zero_coefficient_excess(U, M)
            b = zero_coefficient_excess(U, 2 * M)
            assert 1.8 <= a[0] / b[0] <= 2.2
            assert 1.8 <= a[1] / b[1] <= 2.2

    def test_non_injective_rejected(self):
        with pytest.raises(InjectivityError):
            build_trig_pair(AlignedParallelotope([[1.0, 1.0], [0.0, 1.0]], [0.55, 0.05]), 4)
