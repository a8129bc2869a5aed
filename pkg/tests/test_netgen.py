import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apernet.errors import DomainError, InjectivityError, TransversalityError
from apernet.geometry import AlignedBox
from apernet.netgen import (
    FlowSpec,
    LatticeMatching,
    PointSet,
    Section,
    cut_and_project,
    interlace_union,
    separation_covering,
    toral_equivalent,
    visit_set,
)

from conftest import PHI


def golden(lo=0.0, hi=10.0, x=(0.0, 0.0)):
    flow = FlowSpec([[1.0, PHI]], x)
    sec = Section([[0.0, 1.0]], (AlignedBox([0.0], [0.5]),))
    return flow, sec, AlignedBox([lo], [hi])


def circle_oracle(v, x, lo_c, hi_c, lo, hi):
    """Visit times of ``x + a v`` on the circle ``x_1 = 0`` with ``x_2`` mod 1 in ``[lo_c, hi_c)``."""
    n = np.arange(math.floor(x[0] + min(lo * v[0], hi * v[0])) - 1, math.ceil(x[0] + max(lo * v[0], hi * v[0])) + 2)
    a = (n - x[0]) / v[0]
    a = a[(a >= lo) & (a <= hi)]
    c = np.mod(x[1] + a * v[1], 1.0)
    return np.sort(a[(c >= lo_c) & (c < hi_c)])


class TestVisitSet:
    def test_golden_small(self):
        ps = visit_set(*golden())
        assert ps.points[:, 0].tolist() == pytest.approx([0, 2, 4, 5, 7, 10])

    @given(
        st.floats(0.3, 3.0), st.floats(-2.0, 2.0), st.floats(0, 1), st.floats(0, 1),
        st.floats(0.0, 0.5), st.floats(0.05, 0.5),
    )
    @settings(max_examples=40)
    def test_circle_oracle(self, v1, v2, x1, x2, c0, w):
        flow = FlowSpec([[v1, v2]], [x1, x2])
        sec = Section([[0.0, 1.0]], (AlignedBox([c0], [c0 + w]),))
        ps = visit_set(flow, sec, AlignedBox([-20.0], [20.0]))
        expect = circle_oracle((v1, v2), (x1, x2), c0, c0 + w, -20.0, 20.0)
        edge = len(ps.metadata["boundary_points"])
        if edge == 0:
            assert np.allclose(ps.points[:, 0], expect, atol=1e-9)
        else:
            assert abs(len(ps) - len(expect)) <= edge

    def test_periodic_orbit(self):
        sec = Section([[0.0, 1.0]], (AlignedBox([0.0], [0.5]),))
        hit = visit_set(FlowSpec([[1.0, 1.0]], [0.0, 0.2]), sec, AlignedBox([0.0], [9.0]))
        assert hit.points[:, 0].tolist() == pytest.approx(list(range(10)))
        miss = visit_set(FlowSpec([[1.0, 1.0]], [0.0, 0.7]), sec, AlignedBox([0.0], [9.0]))
        assert len(miss) == 0

    def test_empty_section(self):
        flow, _, window = golden()
        ps = visit_set(flow, Section([[0.0, 1.0]]), window)
        assert len(ps) == 0 and ps.dim == 1

    def test_not_transverse(self):
        with pytest.raises(TransversalityError):
            visit_set(FlowSpec([[0.0, 1.0]], [0, 0]), Section([[0.0, 1.0]], (AlignedBox([0.0], [0.5]),)), AlignedBox([0.0], [5.0]))

    def test_not_injective(self):
        sec = Section([[0.0, 1.0]], (AlignedBox([0.0], [1.2]),))
        with pytest.raises(InjectivityError):
            visit_set(FlowSpec([[1.0, PHI]], [0, 0]), sec, AlignedBox([0.0], [5.0]))

    def test_wrong_window_dim(self):
        flow, sec, _ = golden()
        with pytest.raises(DomainError):
            visit_set(flow, sec, AlignedBox([0.0, 0.0], [1.0, 1.0]))

    def test_translation_covariance(self):
        flow, sec, _ = golden(x=(0.0, 0.1))
        base = visit_set(flow, sec, AlignedBox([0.0], [200.0]))
        s = 3.7
        moved = visit_set(flow.translated(flow.orbit_point([s])[0]), sec, AlignedBox([-s], [200.0 - s]))
        assert np.allclose(moved.points + s, base.points, atol=1e-9)

    def test_points_reverify(self, rng):
        flow = FlowSpec([[1.0, 0.0, PHI], [0.0, 1.0, math.sqrt(2)]], rng.random(3))
        sec = Section([[0.0, 0.0, 1.0]], (AlignedBox([0.1], [0.4]),))
        ps = visit_set(flow, sec, AlignedBox([0.0, 0.0], [15.0, 15.0]))
        y = flow.orbit_point(ps.points)
        frac = np.mod(y, 1.0)
        near0 = np.minimum(frac[:, :2], 1 - frac[:, :2])
        assert np.all(near0 < 1e-9)
        assert np.all((frac[:, 2] >= 0.1 - 1e-9) & (frac[:, 2] < 0.4 + 1e-9))
        assert not ps.has_duplicates()
        # density equals the section measure in these coordinates
        assert len(ps) / 225 == pytest.approx(0.3, rel=0.1)

    def test_thread_independence(self):
        flow, sec, _ = golden()
        w = AlignedBox([0.0], [5000.0])
        runs = [visit_set(flow, sec, w, threads=t).points for t in (1, 2, 8)]
        assert all(np.array_equal(runs[0], r) for r in runs[1:])

    def test_boundary_metadata(self):
        flow, sec, window = golden()
        ps = visit_set(flow, sec, window)
        # a = 0 lands on the lower face c = 0
        assert [0.0] in ps.metadata["boundary_points"]


class TestCutAndProject:
    def test_fibonacci_equivalence(self):
        V = [[1.0, PHI]]
        W = [[-PHI, 1.0]]
        K = AlignedBox([-0.3], [0.6])
        window = AlignedBox([-30.0], [30.0])
        flow, sec = toral_equivalent(np.eye(2), V, W, K)
        a = visit_set(flow, sec, window).points
        b = cut_and_project(np.eye(2), V, W, K, window).points
        assert np.allclose(a, b)

    def test_random_equivalence(self, rng):
        for _ in range(10):
            G = np.eye(3) + 0.3 * rng.normal(size=(3, 3))
            V = rng.normal(size=(2, 3))
            W = rng.normal(size=(1, 3))
            K = AlignedBox([-0.1], [0.1])
            window = AlignedBox([-4.0, -4.0], [4.0, 4.0])
            try:
                flow, sec = toral_equivalent(G, V, W, K)
                a = visit_set(flow, sec, window).points
            except InjectivityError:
                continue
            b = cut_and_project(G, V, W, K, window).points
            assert a.shape == b.shape and np.allclose(a, b, atol=1e-8)

    def test_empty_window(self):
        ps = cut_and_project(np.eye(2), [[1.0, PHI]], [[-PHI, 1.0]], None, AlignedBox([0.0], [5.0]))
        assert len(ps) == 0


def lattice_ps(B, half):
    B = np.asarray(B, dtype=float)
    n = int(half / min(np.linalg.norm(B, axis=0))) + 2
    z = np.stack(np.meshgrid(*[np.arange(-n, n + 1)] * 2, indexing="ij"), -1).reshape(-1, 2)
    p = z @ B.T
    box = AlignedBox([-half, -half], [half, half])
    return PointSet(p[box.contains(p)], box)


class TestSeparationCovering:
    def test_unit_lattice(self):
        r, R = separation_covering(lattice_ps(np.eye(2), 6.0))
        assert r == pytest.approx(1.0)
        assert R == pytest.approx(math.sqrt(2) / 2, abs=1e-9)

    def test_scaled_lattice(self):
        r, R = separation_covering(lattice_ps(2 * np.eye(2), 10.0))
        assert r == pytest.approx(2.0)
        assert R == pytest.approx(math.sqrt(2), abs=1e-9)

    def test_golden_net(self):
        flow, sec, _ = golden()
        ps = visit_set(flow, sec, AlignedBox([0.0], [500.0]))
        r, R = separation_covering(ps)
        gaps = np.diff(ps.points[:, 0])
        assert r == pytest.approx(gaps.min())
        assert r == pytest.approx(1.0)
        assert R == pytest.approx(gaps.max() / 2, abs=r / 4)

    def test_too_few(self):
        with pytest.raises(DomainError):
            separation_covering(PointSet([[0.0]], AlignedBox([0.0], [1.0])))


class TestInterlace:
    def test_two_shifted_copies(self):
        pts0 = np.arange(-5, 6, dtype=float)[:, None]
        m0 = LatticeMatching(pts0, [[1.0]], np.arange(-5, 6)[:, None])
        m1 = LatticeMatching(pts0 + 0.5, [[1.0]], np.arange(-5, 6)[:, None])
        u = interlace_union([m0, m1])
        assert u.is_injective()
        assert np.allclose(u.basis, [[0.5]])
        assert u.max_displacement() <= max(m0.max_displacement(), m1.max_displacement()) + 1.0
        assert u.max_displacement() == pytest.approx(0.0)

    def test_two_dim_bound(self, rng):
        B = np.array([[1.0, 0.3], [0.0, 1.0]])
        ms = []
        for i in range(3):
            z = np.stack(np.meshgrid(np.arange(4), np.arange(4), indexing="ij"), -1).reshape(-1, 2)
            pts = z @ B.T + 0.31 * i + 0.05 * rng.random((16, 2))
            ms.append(LatticeMatching(pts, B, z))
        u = interlace_union(ms)
        assert u.is_injective()
        assert abs(np.linalg.det(u.basis)) == pytest.approx(abs(np.linalg.det(B)) / 3)
        assert u.max_displacement() <= max(m.max_displacement() for m in ms) + np.linalg.norm(B[:, 0]) + 1e-12

    def test_overlap_rejected(self):
        m = LatticeMatching([[0.0]], [[1.0]], [[0]])
        with pytest.raises(DomainError):
            interlace_union([m, m])
