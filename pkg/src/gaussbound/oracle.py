"""Brute-force checks of extremality, independent of the closed forms.

``lp_extremal_g`` enumerates every vertex of the linear program "extremize g
over diagonal populations at fixed alpha and fixed normalization": with two
equality constraints the optimal vertices have at most two occupied levels.
``random_state_audit`` samples density matrices and checks that none falls
below the Gaussianity-bounded relation.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import GaussboundError, ParameterRangeError, TruncationWarning
from .extremal import LOWER_G, alpha_min, level_gaussianity, max_branch_limit, min_branch_point
from .fock import DensityOperator
from .gaussian import apply, moments, normal_form_ops
from .gaussianity import gaussianity, phase_average

TIE_ATOL = 1e-13


def _level_g(alpha: float, cutoff: int) -> np.ndarray:
    return np.array([level_gaussianity(k, alpha) for k in range(cutoff)])


@dataclass(frozen=True)
class LpCertificate:
    alpha: float
    cutoff: int
    g_min_found: float
    g_max_found: float
    support_min: tuple[int, int]
    support_max: tuple[int, int]
    weights_min: tuple[float, float]
    weights_max: tuple[float, float]
    analytic_g_min: float
    analytic_g_max: float

    @property
    def min_gap(self) -> float:
        return abs(self.g_min_found - self.analytic_g_min)

    @property
    def adjacent(self) -> bool:
        return self.support_min[1] == self.support_min[0] + 1

    @property
    def passed(self) -> bool:
        return self.min_gap <= 1e-9 and self.adjacent and self.g_max_found <= self.analytic_g_max + 1e-12

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(min_gap=self.min_gap, adjacent=self.adjacent, passed=self.passed)
        return out


def _pick(values, gaps, lows, mask, sense):
    v = np.where(mask, values, np.inf if sense == "min" else -np.inf)
    best = v.min() if sense == "min" else v.max()
    ties = np.nonzero(mask & (np.abs(values - best) <= TIE_ATOL))
    order = np.lexsort((lows[ties], gaps[ties]))  # smallest gap, then lowest level
    k = order[0]
    return best, ties[0][k], ties[1][k]


def _support(n: int, m: int, pn: float) -> tuple[tuple[int, int], tuple[float, float]]:
    # A vertex with a zero weight is a single number state |k>; report it as (k, k+1).
    if pn == 1.0:
        return (n, n + 1), (1.0, 0.0)
    if pn == 0.0:
        return (m, m + 1), (1.0, 0.0)
    return (n, m), (pn, 1.0 - pn)


def lp_extremal_g(alpha: float, cutoff: int) -> LpCertificate:
    """Exact vertex enumeration over all level pairs ``n < m < cutoff``."""
    if not 1.0 <= alpha <= 2 * cutoff - 1:
        raise ParameterRangeError(f"alpha={alpha} infeasible with {cutoff} levels")
    gk = _level_g(alpha, cutoff)
    n, m = np.meshgrid(np.arange(cutoff), np.arange(cutoff), indexing="ij")
    mask = (n < m) & (2 * n + 1 <= alpha) & (alpha <= 2 * m + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        pn = np.where(mask, (2 * m + 1 - alpha) / (2 * (m - n)), 0.0)
    pn = np.clip(pn, 0.0, 1.0)
    g = pn * gk[n] + (1 - pn) * gk[m]
    gaps = (m - n).astype(float)
    lows = n.astype(float)
    if alpha == 2 * cutoff - 1:  # only the top singleton is feasible
        mask = mask | ((n == cutoff - 2) & (m == cutoff - 1))
    gmin, i0, j0 = _pick(g, gaps, lows, mask, "min")
    gmax, i1, j1 = _pick(g, gaps, lows, mask, "max")
    smin, wmin = _support(int(n[i0, j0]), int(m[i0, j0]), float(pn[i0, j0]))
    smax, wmax = _support(int(n[i1, j1]), int(m[i1, j1]), float(pn[i1, j1]))
    return LpCertificate(float(alpha), cutoff, float(gmin), float(gmax), smin, smax, wmin, wmax,
                         min_branch_point(alpha).g, max_branch_limit(alpha))


# -- random audit -----------------------------------------------------------


@dataclass
class AuditReport:
    cutoff: int
    samples: int
    seed: int
    alpha: float | None
    tolerance: float
    sr_violations: list = field(default_factory=list)
    bound_violations: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    min_alpha: float = math.inf
    worst_margin: float = math.inf
    worst_g_gap: float = math.inf
    closest_diagonal_gap: float = math.inf
    phase_average_max_dev: float = 0.0
    n_diagonal: int = 0
    n_projected: int = 0

    @property
    def passed(self) -> bool:
        return not self.sr_violations and not self.bound_violations

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _haar_vectors(rng, count: int, levels: int, dim: int) -> np.ndarray:
    z = rng.normal(size=(count, levels)) + 1j * rng.normal(size=(count, levels))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    out = np.zeros((count, dim), dtype=complex)
    out[:, :levels] = z
    return out


def _random_diagonal(rng, cutoff: int, alpha: float | None) -> np.ndarray:
    levels = cutoff // 2
    size = int(rng.integers(1, levels + 1))
    support = rng.choice(levels, size=size, replace=False)
    pops = np.zeros(cutoff)
    pops[support] = rng.dirichlet(np.full(size, 0.3))
    if alpha is None:
        return pops
    # mix onto the alpha slice with a two-level min-branch state
    a_p = float(np.sum(pops * (2 * np.arange(cutoff) + 1)))
    t = float(rng.uniform(0.0, 1.0))
    a_q = (alpha - t * a_p) / (1 - t)
    if not 1.0 <= a_q <= 2 * cutoff - 3:
        t = 0.0
        a_q = alpha
    pt = min_branch_point(a_q)
    q = np.zeros(cutoff)
    q[pt.n] += pt.r
    q[pt.n + 1] += 1 - pt.r
    return t * pops + (1 - t) * q


def _random_mixed(rng, cutoff: int, work_dim: int) -> np.ndarray:
    k = int(rng.integers(1, 4))
    vecs = _haar_vectors(rng, k, cutoff // 2, work_dim)
    w = rng.dirichlet(np.ones(k))
    return np.einsum("k,ki,kj->ij", w, vecs, vecs.conj())


def random_state_audit(cutoff: int = 20, samples: int = 10_000, seed: int = 42, alpha: float | None = None,
                       tolerance: float = 1e-7, sr_tolerance: float = 1e-8,
                       diagonal_fraction: float = 0.5) -> AuditReport:
    """Sample states and check ``alpha >= 1`` and ``alpha >= alpha_min(g)``.

    Ensemble (a choice, not canonical): with probability ``diagonal_fraction``
    a sparse Dirichlet mixture of number states over the lower half of the
    levels, otherwise a Dirichlet mixture of one to three Haar-random pure
    states on the same levels. Mixed draws are moved to ``d = 0``,
    ``gamma`` proportional to I by displacement, rotation and squeezing in a
    padded workspace before evaluation. With ``alpha`` given, every draw is a
    diagonal state on that uncertainty slice.
    """
    if samples < 1:
        raise ParameterRangeError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    report = AuditReport(cutoff, samples, seed, alpha, tolerance)
    work_dim = 3 * cutoff
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)  # losses are bounded by apply()
        for i in range(samples):
            _audit_one(rng, i, report, cutoff, work_dim, alpha, tolerance, sr_tolerance, diagonal_fraction)
    return report


def _audit_one(rng, i, report, cutoff, work_dim, alpha, tolerance, sr_tolerance, diagonal_fraction):
    diagonal = alpha is not None or rng.uniform() < diagonal_fraction
    try:
        if diagonal:
            pops = _random_diagonal(rng, cutoff, alpha)
            rho = DensityOperator(np.diag(pops).astype(complex), kind="mixture")
            report.n_diagonal += 1
        else:
            raw = DensityOperator(_random_mixed(rng, cutoff, work_dim))
            rho = raw
            for op in normal_form_ops(moments(raw), work_dim, pad=work_dim):
                rho = apply(op, rho)
            report.n_projected += 1
        m = moments(rho)
        rep = gaussianity(rho)
        a, g = m.alpha, rep.g
        if not diagonal and m.isotropic(1e-8):
            rep_s = gaussianity(phase_average(rho))
            report.phase_average_max_dev = max(report.phase_average_max_dev, abs(rep_s.g - g))
    except GaussboundError as exc:
        report.failures.append({"index": i, "error": f"{type(exc).__name__}: {exc}"})
        return
    report.min_alpha = min(report.min_alpha, a)
    if a < 1 - sr_tolerance:
        report.sr_violations.append({"index": i, "alpha": a})
    if g <= LOWER_G:
        report.bound_violations.append({"index": i, "alpha": a, "g": g, "alpha_min": None})
        return
    margin = a - alpha_min(min(g, 2.0)).alpha_min
    gap = g - min_branch_point(max(a, 1.0)).g  # distance above g_min(alpha) on the same slice
    report.worst_margin = min(report.worst_margin, margin)
    report.worst_g_gap = min(report.worst_g_gap, gap)
    if diagonal:
        report.closest_diagonal_gap = min(report.closest_diagonal_gap, abs(gap))
    if margin < -tolerance or gap < -tolerance:
        report.bound_violations.append({"index": i, "alpha": a, "g": g, "margin": margin, "g_gap": gap})
