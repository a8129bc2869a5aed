"""Birkhoff integrals, point-count discrepancy and Erdős–Turán type bounds."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import _parallel
from .errors import DomainError
from .geometry import (
    TOL,
    AlignedBox,
    AlignedParallelotope,
    Basis,
    box_membership,
    check_injective,
    frequency_array,
    image_ball_array,
    lattice_points_in_box,
    r_weight,
    torus_reduce,
)
from .netgen import FlowSpec, PointSet

RESONANCE_TOL = 1e-12
CSV_COLUMNS = ("T", "N_T", "volume_term", "abs_diff", "bound_leading", "bound_sum")


@dataclass(frozen=True)
class BirkhoffQuery:
    """Integral of the indicator of ``pi(U)`` along ``x + B_T``, ``B_T = {max |a_i| <= T}``."""

    flow: FlowSpec
    target: AlignedBox | AlignedParallelotope
    T: float

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise DomainError("T must be positive")
        if self.target.dim != self.flow.k:
            raise DomainError("target dimension must equal k")

    @property
    def volume_term(self) -> float:
        return target_volume(self.target) * (2.0 * self.T) ** self.flow.d


def target_volume(U) -> float:
    if isinstance(U, AlignedBox):
        return float(np.prod(np.minimum(U.widths, 1.0)))
    return U.volume


def torus_indicator(U, pts) -> np.ndarray:
    """Indicator of ``pi(U)``; box axes of width >= 1 are unconstrained."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if isinstance(U, AlignedBox):
        rel = torus_reduce(pts - U.lower)
        full = U.widths >= 1.0
        return np.all((rel <= U.widths) | full, axis=1)
    return box_membership(U, pts)


# ---------------------------------------------------------------------------
# exact one-dimensional integrals


def _crossings(x: float, v: float, lo: float, hi: float, T: float) -> np.ndarray:
    """Times in ``[-T, T]`` where ``x + t v`` meets ``lo + Z`` or ``hi + Z``."""
    out = []
    for edge in (lo, hi):
        a, b = sorted(((x - edge) - T * v, (x - edge) + T * v))
        ns = np.arange(math.ceil(a), math.floor(b) + 1, dtype=float)
        out.append((ns + edge - x) / v)
    return np.concatenate(out)


def _exact_box(flow: FlowSpec, U: AlignedBox, T: float) -> float:
    x = flow.base_point
    v = flow.acting_basis[0]
    times = [np.array([-T, T])]
    for j in range(flow.k):
        if U.widths[j] >= 1.0:
            continue
        if v[j] == 0.0:
            if not torus_indicator(AlignedBox(U.lower[j:j + 1], U.upper[j:j + 1]), x[j:j + 1])[0]:
                return 0.0
            continue
        times.append(_crossings(x[j], v[j], U.lower[j], U.upper[j], T))
    ts = np.unique(np.clip(np.concatenate(times), -T, T))
    if ts.size < 2:
        return 0.0
    mids = 0.5 * (ts[:-1] + ts[1:])
    inside = torus_indicator(U, x + np.outer(mids, v))
    return math.fsum(np.diff(ts)[inside].tolist())


def _exact_parallelotope(flow: FlowSpec, U: AlignedParallelotope, T: float) -> float:
    check_injective(U)
    x = flow.base_point
    v = flow.acting_basis[0]
    ell = np.linalg.inv(U.linear_part)
    lo, hi = U.bounding_box()
    seg = np.array([x - T * v, x + T * v])
    n_lo = lo - seg.max(axis=0)
    n_hi = hi - seg.min(axis=0)
    j = int(np.argmax(np.abs(v)))
    total = []
    for nj in range(math.ceil(n_lo[j] - TOL), math.floor(n_hi[j] + TOL) + 1):
        # times with x_j + t v_j + n_j inside the bounding slab
        ta, tb = sorted(((lo[j] - nj - x[j]) / v[j], (hi[j] - nj - x[j]) / v[j]))
        ta, tb = max(ta, -T), min(tb, T)
        if ta > tb:
            continue
        ends = np.array([x + ta * v, x + tb * v])
        c_lo = lo - ends.max(axis=0)
        c_hi = hi - ends.min(axis=0)
        c_lo[j] = c_hi[j] = nj
        cand = lattice_points_in_box(c_lo - TOL, c_hi + TOL)
        if cand.size == 0:
            continue
        base = (x + cand - U.offset) @ ell.T  # (N, k) coordinates at t = 0
        slope = ell @ v
        t0 = np.full(cand.shape[0], -T)
        t1 = np.full(cand.shape[0], T)
        for i in range(U.dim):
            b = U.half_widths[i]
            if abs(slope[i]) < 1e-15:
                ok = np.abs(base[:, i]) <= b
                t1 = np.where(ok, t1, -np.inf)
                continue
            ea = (-b - base[:, i]) / slope[i]
            eb = (b - base[:, i]) / slope[i]
            t0 = np.maximum(t0, np.minimum(ea, eb))
            t1 = np.minimum(t1, np.maximum(ea, eb))
        length = np.clip(t1 - t0, 0.0, None)
        total.extend(length[length > 0].tolist())
    return math.fsum(total)


def birkhoff_exact_1d(q: BirkhoffQuery) -> float:
    """Exact ``N_T`` for a one-parameter flow.

    Boxes are handled by a sweep over the times the orbit crosses a face;
    parallelotopes by intersecting the orbit segment with each translate
    ``U - n`` that it can reach.
    """
    if q.flow.d != 1:
        raise DomainError("exact Birkhoff integrals need d = 1")
    if isinstance(q.target, AlignedBox):
        return _exact_box(q.flow, q.target, q.T)
    if isinstance(q.target, AlignedParallelotope):
        return _exact_parallelotope(q.flow, q.target, q.T)
    raise DomainError("target must be an AlignedBox or AlignedParallelotope")


def birkhoff_estimate(q: BirkhoffQuery, replicates: int = 16, log2_points: int = 14, seed: int = 0) -> tuple[float, float]:
    """Randomly shifted quasi-Monte Carlo estimate of ``N_T``.

    Returns
    -------
    value, error : float
        Mean over ``replicates`` Cranley-Patterson shifts of a Sobol point set,
        and three standard errors of that mean.
    """
    d = q.flow.d
    base = qmc.Sobol(d, scramble=False).random_base2(log2_points)
    rng = np.random.default_rng(seed)
    shifts = rng.random((replicates, d))
    vol = (2.0 * q.T) ** d
    estimates = []
    for s in shifts:
        u = np.mod(base + s, 1.0)
        a = -q.T + 2.0 * q.T * u
        pts = q.flow.base_point + a @ q.flow.acting_basis
        estimates.append(vol * float(np.mean(torus_indicator(q.target, pts))))
    est = np.array(estimates)
    value = math.fsum(est.tolist()) / replicates
    err = 3.0 * float(np.std(est, ddof=1)) / math.sqrt(replicates) if replicates > 1 else math.inf
    return value, err


# ---------------------------------------------------------------------------
# exponential integrals and bounds


def _inner(m, flow: FlowSpec) -> np.ndarray:
    return np.atleast_2d(np.asarray(m, dtype=float)) @ flow.acting_basis.T


def _sinc_factor(omega: np.ndarray, T: float) -> np.ndarray:
    res = np.abs(omega) < RESONANCE_TOL
    safe = np.where(res, 1.0, omega)
    return np.where(res, 2.0 * T, np.sin(2 * np.pi * safe * T) / (np.pi * safe))


def exp_integral(m, flow: FlowSpec, T: float) -> complex:
    """``integral over B_T of e(m . sum_i s_i v_i) ds = prod_i sin(2 pi w_i T)/(pi w_i)`` with ``w_i = m . v_i``."""
    omega = _inner(m, flow)[0]
    return complex(float(np.prod(_sinc_factor(omega, T))), 0.0)


def exp_integral_abs(freqs: np.ndarray, flow: FlowSpec, T: float) -> np.ndarray:
    """Vectorized ``|exp_integral|`` over the rows of ``freqs``."""
    if freqs.shape[0] == 0:
        return np.zeros(0)
    omega = _inner(freqs, flow)
    return np.abs(np.prod(_sinc_factor(omega, T), axis=1))


def _weighted_sum(freqs: np.ndarray, weights_fn, flow: FlowSpec, T: float) -> float:
    blocks = [freqs[i:i + 65536] for i in range(0, freqs.shape[0], 65536)]
    parts = [math.fsum((weights_fn(b) * exp_integral_abs(b, flow, T)).tolist()) for b in blocks]
    return math.fsum(parts)


def erdos_turan_bound(U: AlignedBox, flow: FlowSpec, T: float, M: float) -> tuple[float, float]:
    """``(|B_T|/M, sum_{0<||m||<=M} r(m) |int_{B_T} e(m . t) dt|)`` with ``r(m) = prod min(1, 1/|m_i|)``."""
    if M < 1:
        raise DomainError("M must be >= 1")
    freqs = frequency_array(M, flow.k)
    eye = np.eye(flow.k)
    leading = (2.0 * T) ** flow.d / M
    return leading, _weighted_sum(freqs, lambda b: r_weight(eye, b), flow, T)


def nt_estimate_bound(U, flow: FlowSpec, T: float, M: float) -> tuple[float, float]:
    """Bound components for a parallelotope ``U = L B + x_0``.

    Both carry the factor ``(1 + 2b)^k |det L|``; the sum runs over
    ``0 < ||L^t m|| <= M`` with the weight ``r_T`` of the columns of ``L``.
    """
    if isinstance(U, AlignedBox):
        U = U.as_parallelotope()
    check_injective(U)
    if M < 1:
        raise DomainError("M must be >= 1")
    factor = (1.0 + 2.0 * U.b) ** U.dim * abs(U.det)
    freqs = image_ball_array(U.linear_part, M)
    basis = Basis(U.linear_part)
    leading = factor * (2.0 * T) ** flow.d / M
    return leading, factor * _weighted_sum(freqs, lambda b: r_weight(basis, b), flow, T)


# ---------------------------------------------------------------------------
# point-set discrepancy


def discrete_discrepancy(Y: PointSet, E: AlignedBox, lam: float) -> float:
    """``|#(Y cap E) - lam |E||`` with ``E`` taken half-open."""
    if not Y.window.contains_box(E):
        raise DomainError("E must lie inside the generation window")
    return abs(Y.count_in(E, half_open=True) - lam * E.volume)


def _cube_counts(Y: PointSet, rho: float, window: AlignedBox) -> tuple[np.ndarray, np.ndarray]:
    """Counts of points in every grid cube ``prod [a_i rho, (a_i+1) rho)`` inside ``window``."""
    a_lo = np.ceil(window.lower / rho - TOL).astype(np.int64)
    a_hi = np.floor(window.upper / rho + TOL).astype(np.int64) - 1
    if np.any(a_hi < a_lo):
        raise DomainError("window holds no grid cube of this side")
    shape = tuple((a_hi - a_lo + 1).tolist())
    counts = np.zeros(shape, dtype=np.int64)
    if len(Y):
        idx = np.floor(Y.points / rho).astype(np.int64) - a_lo
        ok = np.all((idx >= 0) & (idx < np.array(shape)), axis=1)
        np.add.at(counts, tuple(idx[ok].T), 1)
    return counts, a_lo


def dy_sup(Y: PointSet, rho: float, lam: float, window: AlignedBox | None = None) -> float:
    """``max Disc_Y(Q, lam)/(lam |Q|)`` over grid cubes ``Q`` of side ``rho`` inside ``window``."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    window = Y.window if window is None else window
    counts, _ = _cube_counts(Y, float(rho), window)
    vol = float(rho) ** Y.dim
    return float(np.max(np.abs(counts - lam * vol))) / (lam * vol)


def bk_series(Y: PointSet, lam: float, j_values, window: AlignedBox | None = None) -> list[dict]:
    """``D_Y(2^j, lam)`` and its partial sums; a summable trend supports bi-Lipschitz equivalence to a lattice."""
    rows, acc = [], []
    for j in j_values:
        val = dy_sup(Y, 2.0 ** j, lam, window)
        acc.append(val)
        rows.append({"j": int(j), "rho": 2.0 ** j, "D": val, "partial_sum": math.fsum(acc)})
    return rows


# ---------------------------------------------------------------------------
# scans


@dataclass
class DiscrepancyReport:
    """Rows of measured Birkhoff discrepancy against bound components, with a log-log slope."""

    rows: list[dict]
    slope: float | None
    stderr: float | None
    degenerate: bool
    config: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(r[c])) for c in CSV_COLUMNS])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"slope": self.slope, "stderr": self.stderr, "degenerate": self.degenerate, "n_rows": len(self.rows), "config": self.config}


def fit_loglog(xs, ys, floor: float = 1e-12) -> tuple[float | None, float | None, bool]:
    """OLS slope of ``log y`` against ``log x`` over rows with ``y >= floor``.

    Returns ``(slope, stderr, degenerate)``; fewer than two usable rows is degenerate.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = ys >= floor
    if np.count_nonzero(keep) < 2:
        return None, None, True
    lx, ly = np.log(xs[keep]), np.log(ys[keep])
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    n = lx.size
    if n > 2:
        resid = ly - A @ coef
        s2 = float(resid @ resid) / (n - 2)
        se = math.sqrt(s2 / float(np.sum((lx - lx.mean()) ** 2)))
    else:
        se = None
    return float(coef[0]), se, False


def m_from_rule(T: float, rule: str, d: int, delta: float) -> int:
    if rule == "T^delta":
        M = math.floor(T ** delta)
    elif rule == "T^d":
        M = math.floor(T ** d)
    else:
        raise DomainError(f"unknown M rule {rule!r}")
    return max(1, int(M))


def discrepancy_scan(flow: FlowSpec, U, T_list, M_rule: str = "T^delta", delta: float = 0.5, seed: int = 0, threads: int | None = None) -> DiscrepancyReport:
    """Measured ``|N_T - |U| |B_T||`` and bound components for each ``T``.

    ``N_T`` is exact for d = 1 and a QMC estimate otherwise. Boxes use the
    Erdős–Turán components; parallelotopes the general estimate.
    """
    Ts = [float(t) for t in T_list]
    if any(b <= a for a, b in zip(Ts, Ts[1:])):
        raise DomainError("T_list must be strictly increasing")

    def row(T):
        q = BirkhoffQuery(flow, U, T)
        N = birkhoff_exact_1d(q) if flow.d == 1 else birkhoff_estimate(q, seed=seed)[0]
        M = m_from_rule(T, M_rule, flow.d, delta)
        if isinstance(U, AlignedBox):
            lead, tail = erdos_turan_bound(U, flow, T, M)
        else:
            lead, tail = nt_estimate_bound(U, flow, T, M)
        vol = q.volume_term
        return {"T": T, "N_T": N, "volume_term": vol, "abs_diff": abs(N - vol), "bound_leading": lead, "bound_sum": tail, "M": M}

    rows = _parallel.ordered_map(row, Ts, threads)
    slope, se, degenerate = fit_loglog([r["T"] for r in rows], [r["abs_diff"] for r in rows])
    config = {"flow": flow.to_dict(), "target": U.to_dict(), "T_list": Ts, "M_rule": M_rule, "delta": delta, "seed": seed}
    return DiscrepancyReport(rows, slope, se, degenerate, config)


def report_json(report: DiscrepancyReport) -> str:
    return json.dumps(report.summary(), sort_keys=True, indent=2)
