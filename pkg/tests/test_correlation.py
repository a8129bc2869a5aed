import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apernet.errors import DomainError
from apernet.geometry import AlignedBox
from apernet.netgen import Section
from apernet.correlation import (
    RationalSubspace,
    boundary_neighbourhood,
    dilated_domain_discrepancy,
    dilation_table,
    linearity_spread,
    not_correlated_test,
    orbit_section_count,
    saturate,
)

E1 = RationalSubspace([[1, 0]])
SEC = Section([[0.0, 1.0]], (AlignedBox([0.2], [0.6]),))


class TestSaturate:
    def test_scaled(self):
        assert saturate([[2, 4]]).tolist() == [[1, 2]]

    def test_index_two(self):
        Q = RationalSubspace([[1, 1, 0], [1, -1, 0]])
        assert Q.domain_volume() == pytest.approx(1.0)
        B = Q.integer_basis
        assert np.all(B[:, 2] == 0)

    def test_primitive_kept(self):
        assert saturate([[1, 2, 3]]).tolist() == [[1, 2, 3]]

    @given(st.lists(st.integers(-6, 6), min_size=3, max_size=3), st.integers(1, 5))
    @settings(max_examples=40)
    def test_multiple_gives_primitive(self, v, s):
        if not any(v):
            return
        g = np.gcd.reduce(np.abs(v))
        out = saturate([[s * c for c in v]])
        assert sorted(map(abs, out[0].tolist())) == sorted(abs(c) // g for c in v)

    def test_errors(self):
        with pytest.raises(DomainError):
            saturate([[0.5, 1.0]])
        with pytest.raises(DomainError):
            saturate([[1, 2], [2, 4]])
        with pytest.raises(DomainError):
            saturate([[2000, 1]])


class TestCounts:
    def test_examples(self):
        assert orbit_section_count(E1, [0.3, 0.4], SEC).count_open == 1
        assert orbit_section_count(E1, [0.3, 0.7], SEC).count_open == 0

    def test_boundary(self):
        oc = orbit_section_count(E1, [0.3, 0.2], SEC)
        assert oc.boundary_hit and oc.count_open == 0 and oc.count_closed == 1

    def test_two_hits_per_period(self):
        Q = RationalSubspace([[2, 1]])
        sec = Section([[0.0, 1.0]], (AlignedBox([0.0], [0.9]),))
        assert orbit_section_count(Q, [0.1, 0.3], sec).count_open == 2

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(-3, 3))
    @settings(max_examples=40)
    def test_orbit_invariance(self, x1, x2, t):
        Q = RationalSubspace([[2, 1]])
        a = orbit_section_count(Q, [x1, x2], SEC)
        b = orbit_section_count(Q, [x1 + 2 * t, x2 + t], SEC)
        assert a.count_closed == b.count_closed
        assert a.count_open <= a.count_closed

    def test_empty_section(self):
        assert orbit_section_count(E1, [0.3, 0.4], Section([[0.0, 1.0]])).count_closed == 0


class TestWitness:
    def test_found(self):
        w = not_correlated_test(E1, SEC)
        assert w is not None and w.count_1 == 1 and w.count_2 == 0
        assert orbit_section_count(E1, w.x1, SEC).count_open == 1
        assert orbit_section_count(E1, w.x2, SEC).count_open == 0

    def test_constant_count(self):
        # the two hits per period are half a turn apart, so exactly one lies in a half-open half circle
        Q = RationalSubspace([[2, 1]])
        sec = Section([[0.0, 1.0]], (AlignedBox([0.0], [0.5]),))
        assert not_correlated_test(Q, sec, sample_count=128) is None

    def test_seeded(self):
        assert not_correlated_test(E1, SEC, seed=4) == not_correlated_test(E1, SEC, seed=4)


class TestDilation:
    def test_linear_example(self):
        table = dilation_table(E1, SEC, [0.3, 0.4], 0.4, [1, 2, 4, 8])
        assert [r["ratio"] for r in table] == pytest.approx([0.15, 0.3, 0.6, 1.2])
        assert linearity_spread(table) == pytest.approx(0.0, abs=1e-12)

    def test_neighbourhood(self):
        Q = RationalSubspace([[1, 0, 0], [0, 1, 0]])
        assert boundary_neighbourhood(Q, 3) == pytest.approx(2 * 4 * 3)

    def test_errors(self):
        with pytest.raises(DomainError):
            dilated_domain_discrepancy(E1, SEC, [0.3, 0.4], 0.4, 1.5)
        with pytest.raises(DomainError):
            dilated_domain_discrepancy(E1, SEC, [0.3, 0.2], 0.4, 2)

    def test_spread_zero_rows(self):
        assert linearity_spread([{"N": 1, "ratio": 0.0}, {"N": 2, "ratio": 0.0}]) == 0.0
