"""Gaussianity-bounded uncertainty relation in closed form.

At fixed uncertainty alpha, the Gaussianity of a phase-invariant centered
state is linear in its populations,

    g = sum_k p_k * 2 alpha (alpha-1)^k / (alpha+1)^(k+1),

so the extremes are reached on two-level mixtures. The minimum uses adjacent
levels ``r|n><n| + (1-r)|n+1><n+1|``; the maximum is the limit of
``r|0><0| + (1-r)|n><n|`` for ``n -> inf`` at fixed alpha, which gives
``g = 2 alpha / (alpha + 1)``.

Convention for the max-branch family: weight ``r`` sits on the vacuum and the
limit is ``r -> 1``. Writing the same family with the weights swapped and
``r -> 0`` describes identical states.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ParameterRangeError
from .fock import DensityOperator, mixture

LOWER_G = 2 / math.e
UPPER_G = 2.0
BISECT_TOL = 1e-12
BISECT_MAXITER = 200
#: Relative slack for treating g as equal to a number-state endpoint.
TIE_RTOL = 1e-14


def level_gaussianity(k: int, alpha: float) -> float:
    """``alpha * Tr(|k><k| rho_G)`` for a thermal reference of uncertainty alpha."""
    if alpha == 1.0:
        return 1.0 if k == 0 else 0.0
    log = math.log(2 * alpha) + k * math.log(alpha - 1) - (k + 1) * math.log(alpha + 1)
    return math.exp(log)


def number_state_g(n: int) -> float:
    """``g(|n>) = n^n (1+2n) / (1+n)^(1+n)``; exact integer ratio up to n = 500 and
    ``(1 - 1/(n+1))^n (2n+1)/(n+1)`` through log1p beyond."""
    if n == 0:
        return 1.0
    if n <= 500:
        return n**n * (2 * n + 1) / (n + 1) ** (n + 1)
    return math.exp(n * math.log1p(-1 / (n + 1))) * (2 * n + 1) / (n + 1)


def mixture_g(populations: dict[int, float], alpha: float | None = None) -> float:
    """Gaussianity of a diagonal mixture (alpha computed from the populations if omitted)."""
    if alpha is None:
        alpha = sum(p * (2 * k + 1) for k, p in populations.items())
    return sum(p * level_gaussianity(k, alpha) for k, p in populations.items() if p)


def _min_branch_g(alpha: float, n: int) -> float:
    """``4 alpha (alpha-1)^n (1+n) / (alpha+1)^(n+2)``: g of the (n, n+1) mixture at alpha."""
    if alpha == 1.0:
        return 1.0 if n == 0 else 0.0
    log = (math.log(4 * alpha) + n * math.log(alpha - 1) + math.log(n + 1)
           - (n + 2) * math.log(alpha + 1))
    return math.exp(log)


def max_branch_limit(alpha: float) -> float:
    return 2 * alpha / (alpha + 1)


# -- states -----------------------------------------------------------------


def _state_dim(top_level: int, dim: int | None) -> int:
    need = top_level + 1
    if dim is None:
        return max(need + 1, 2)
    if dim < need:
        raise ParameterRangeError(f"dim={dim} cannot hold level {top_level}")
    return dim


def rho_min(n: int, r: float, dim: int | None = None) -> DensityOperator:
    """``r|n><n| + (1-r)|n+1><n+1|``; ``r = 1`` gives ``|n>`` and ``r = 0`` gives ``|n+1>``."""
    if int(n) != n or n < 0:
        raise ParameterRangeError(f"n must be a nonnegative integer, got {n}")
    if not 0.0 <= r <= 1.0:
        raise ParameterRangeError(f"r must lie in [0, 1], got {r}")
    dim = _state_dim(n + 1, dim)
    rho = mixture({n: r, n + 1: 1.0 - r}, dim)
    return DensityOperator(rho.matrix, label=f"rho_min(n={n}, r={r})", kind="mixture", params=rho.params)


def rho_max(n: int, r: float, dim: int | None = None) -> DensityOperator:
    """``r|0><0| + (1-r)|n><n|``, a finite-n member of the max-branch family."""
    if int(n) != n or n < 0:
        raise ParameterRangeError(f"n must be a nonnegative integer, got {n}")
    if not 0.0 <= r <= 1.0:
        raise ParameterRangeError(f"r must lie in [0, 1], got {r}")
    dim = _state_dim(n, dim)
    pops = {0: 1.0} if n == 0 else {0: r, n: 1.0 - r}
    rho = mixture(pops, dim)
    return DensityOperator(rho.matrix, label=f"rho_max(n={n}, r={r})", kind="mixture", params=rho.params)


def rho_max_weight(n: int, alpha: float) -> float:
    """Vacuum weight r with ``r + (1-r)(2n+1) = alpha``."""
    if n < 1 or not 1.0 <= alpha <= 2 * n + 1:
        raise ParameterRangeError(f"alpha={alpha} unreachable with levels 0 and {n}")
    return (2 * n + 1 - alpha) / (2 * n)


def rho_max_g(n: int, alpha: float) -> float:
    r = rho_max_weight(n, alpha)
    return r * level_gaussianity(0, alpha) + (1 - r) * level_gaussianity(n, alpha)


# -- extremal points and the bound -----------------------------------------


@dataclass(frozen=True)
class ExtremalPoint:
    alpha: float
    g: float
    branch: str  # "min_branch" | "max_branch"
    n: Optional[int] = None  # None on the max branch (limit state)
    r: Optional[float] = None

    def state(self, dim: int | None = None) -> DensityOperator:
        if self.branch != "min_branch":
            raise ParameterRangeError("the max-branch extremum is a limit; use rho_max at finite n")
        return rho_min(self.n, self.r, dim)


def min_branch_point(alpha: float) -> ExtremalPoint:
    """Minimal-g point at uncertainty alpha: the (n, n+1) mixture with that alpha."""
    if not alpha >= 1:
        raise ParameterRangeError(f"alpha must be >= 1, got {alpha}")
    # at odd alpha this gives r = 1, the pure number state |n>
    n = math.floor((alpha - 1) / 2)
    r = (2 * n + 3 - alpha) / 2
    if alpha == 1.0:
        return ExtremalPoint(1.0, 1.0, "min_branch", 0, 1.0)
    g = r * level_gaussianity(n, alpha) + (1 - r) * level_gaussianity(n + 1, alpha)
    return ExtremalPoint(float(alpha), g, "min_branch", n, r)


def max_branch_point(alpha: float) -> ExtremalPoint:
    if not alpha >= 1:
        raise ParameterRangeError(f"alpha must be >= 1, got {alpha}")
    return ExtremalPoint(float(alpha), max_branch_limit(alpha), "max_branch")


def _at_or_above(n: int, g: float) -> bool:
    return g <= number_state_g(n) * (1 + TIE_RTOL)


def interval_index(g: float) -> int:
    """The n with ``g(|n+1>) < g <= g(|n>)``; ties go to the smaller n."""
    if not LOWER_G < g <= 1.0:
        raise ParameterRangeError(f"g must lie in (2/e, 1], got {g}")
    if g > number_state_g(1) * (1 + TIE_RTOL):
        return 0
    lo, hi = 1, 2
    while _at_or_above(hi, g):  # g(|n>) decreases monotonically to 2/e
        lo, hi = hi, 2 * hi
        if hi > 1 << 60:
            raise ParameterRangeError(f"g={g} too close to 2/e")
    # invariant: g(|lo>) >= g > g(|hi>)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _at_or_above(mid, g):
            lo = mid
        else:
            hi = mid
    return lo


def _branch_peak(n: int) -> float:
    """Maximizer of the (n, n+1) min-branch g over alpha; the branch decreases past it."""
    return (n + 1) + math.sqrt((n + 1) ** 2 - 1)


@dataclass(frozen=True)
class BoundResult:
    g: float
    alpha_min: float
    n: Optional[int]
    method: str  # closed_form_low | closed_form_high | polynomial
    r: Optional[float] = None
    iterations: int = 0

    def state(self, dim: int | None = None) -> DensityOperator:
        if self.n is None or self.r is None:
            raise ParameterRangeError("the g > 1 bound is reached only in a limit")
        return rho_min(self.n, self.r, dim)


def _solve_polynomial(g: float, n: int) -> tuple[float, int]:
    lo, hi = max(_branch_peak(n), 2 * n + 1 + 1e-15), 2 * n + 3.0
    if _min_branch_g(hi, n) >= g:
        return hi, 0
    it = 0
    while hi - lo > BISECT_TOL and it < BISECT_MAXITER:
        mid = 0.5 * (lo + hi)
        if _min_branch_g(mid, n) > g:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), it


def low_branch(g: float) -> float:
    """``(2 + 2 sqrt(1-g) - g) / g``, the bound for ``3/4 < g <= 1``."""
    return (2 + 2 * math.sqrt(1 - g) - g) / g


def high_branch(g: float) -> float:
    """``g / (2-g)``, the bound for ``1 < g <= 2``."""
    return math.inf if g == UPPER_G else g / (2 - g)


def alpha_min(g: float) -> BoundResult:
    """Smallest uncertainty compatible with Gaussianity g."""
    if not LOWER_G < g <= UPPER_G:
        raise ParameterRangeError(f"g must lie in (2/e, 2], got {g}")
    if g > 1:
        return BoundResult(g, high_branch(g), None, "closed_form_high")
    if g > 0.75 * (1 + TIE_RTOL):
        a = low_branch(g)
        return BoundResult(g, a, 0, "closed_form_low", r=(3 - a) / 2)
    n = interval_index(g)
    if g >= number_state_g(n) * (1 - TIE_RTOL):
        return BoundResult(g, 2.0 * n + 1, n, "polynomial", r=1.0)
    a, it = _solve_polynomial(g, n)
    return BoundResult(g, a, n, "polynomial", r=min(1.0, max(0.0, (2 * n + 3 - a) / 2)), iterations=it)


def bound_margin(alpha: float, g: float) -> float:
    return alpha - alpha_min(g).alpha_min


# -- curve ------------------------------------------------------------------


@dataclass(frozen=True)
class CurveRow:
    alpha: float
    g_min: float
    g_max: float
    n_min: int
    r_min: float


def extremal_curve(alpha_from: float, alpha_to: float, samples: int) -> list[tuple[ExtremalPoint, ExtremalPoint]]:
    if samples < 2:
        raise ParameterRangeError("need at least two samples")
    if alpha_from < 1 or alpha_to < alpha_from:
        raise ParameterRangeError(f"bad alpha range [{alpha_from}, {alpha_to}]")
    alphas = np.linspace(alpha_from, alpha_to, samples)
    return [(min_branch_point(float(a)), max_branch_point(float(a))) for a in alphas]


def curve_rows(curve) -> list[CurveRow]:
    return [CurveRow(lo.alpha, lo.g, hi.g, lo.n, lo.r) for lo, hi in curve]


CURVE_COLUMNS = ("alpha", "g_min", "g_max", "n_min", "r_min")


def _fmt(value) -> str:
    return str(value) if isinstance(value, int) else format(value, ".17g")


def curve_csv(rows: list[CurveRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in CURVE_COLUMNS])
    return buf.getvalue()


def curve_json(rows: list[CurveRow], metadata: dict | None = None) -> str:
    return json.dumps({"metadata": metadata or {}, "rows": [asdict(r) for r in rows]}, sort_keys=True)
