"""Stationarity certificates for the Lagrange-multiplier conditions.

Extremal states must be built from degenerate eigenvectors of a Hermitian
operator assembled from the multipliers:

* ``H  = n + 1/2 + l2 x + l3 p + l4 (xp + px) + l5 (x^2 - p^2)`` (uncertainty),
* ``H1 = exp(-beta n) + l2 x + l3 p + l4 (xp + px) + l5 (x^2 - p^2) + l6 n``,
* ``H2 = exp(-beta n) + l6 n`` (phase-invariant centered states).

This module does not re-run the constrained optimization. It checks the
necessary condition on closed-form candidates; global optimality is audited
separately in :mod:`gaussbound.oracle`.

On the sign of ``l6``: making levels n and n+1 degenerate in ``H2`` needs
``l6 = e^{-beta n} (1 - e^{-beta}) > 0``. The sign is recorded on every
certificate and no sign is asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimensionError, ParameterRangeError
from .fock import DensityOperator, OperatorMatrix, _second_moment_ops, quadratures
from .extremal import rho_min
from .gaussian import moments

KINDS = ("H", "H1", "H2")


@dataclass(frozen=True)
class LagrangeOperator:
    kind: str
    lambdas: dict[str, float]
    beta: float | None
    operator: OperatorMatrix = field(repr=False)

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix


def _exp_minus_beta_n(beta: float, dim: int) -> np.ndarray:
    if math.isinf(beta):
        diag = np.zeros(dim)
        diag[0] = 1.0
    else:
        diag = np.exp(-beta * np.arange(dim))
    return np.diag(diag)


def build_operator(kind: str, lambdas: dict[str, float] | None = None, beta: float | None = None,
                   dim: int = 60) -> LagrangeOperator:
    """Assemble H, H1 or H2 from multipliers ``l2 .. l6`` (missing ones are zero)."""
    if kind not in KINDS:
        raise ParameterRangeError(f"kind must be one of {KINDS}, got {kind!r}")
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    lam = {f"l{k}": 0.0 for k in range(2, 7)}
    for key, value in (lambdas or {}).items():
        if key not in lam:
            raise ParameterRangeError(f"unknown multiplier {key!r}")
        lam[key] = float(value)
    if kind == "H" and lam["l6"] != 0:
        raise ParameterRangeError("H has no l6 term")
    if kind == "H2" and any(lam[k] for k in ("l2", "l3", "l4", "l5")):
        raise ParameterRangeError("H2 carries only l6")
    if kind != "H" and (beta is None or not beta >= 0):
        raise ParameterRangeError(f"beta must be >= 0 for {kind}, got {beta}")

    number = np.diag(np.arange(dim, dtype=float)).astype(complex)
    if kind == "H":
        m = number + 0.5 * np.eye(dim)
    else:
        m = _exp_minus_beta_n(beta, dim).astype(complex) + lam["l6"] * number
    if kind != "H2":
        x, p = quadratures(dim)
        ops = _second_moment_ops(dim)
        m = (m + lam["l2"] * x.matrix + lam["l3"] * p.matrix + lam["l4"] * ops["xp_sym"]
             + lam["l5"] * (ops["x2"] - ops["p2"]))
    m = (m + m.conj().T) / 2
    kept = {k: v for k, v in lam.items() if not (kind == "H" and k == "l6")}
    return LagrangeOperator(kind, kept, beta, OperatorMatrix(m, hermitian=True))


def quadratic_frequency(l4: float, l5: float) -> float:
    """Level spacing of H: ``2 sqrt(det Q)`` with Q the (x, p) quadratic form.

    H is elliptic (bounded below with a discrete equally spaced spectrum) iff
    ``l4^2 + l5^2 < 1/4``. The spacing equals 1 only for ``l4 = l5 = 0``.
    """
    det = 0.25 - l4 * l4 - l5 * l5
    if det <= 0:
        raise ParameterRangeError("quadratic form is not elliptic (l4^2 + l5^2 >= 1/4)")
    return 2 * math.sqrt(det)


def spectrum_shift(l2: float, l3: float, l4: float, l5: float) -> float:
    """Constant c with ``spec(H) = {omega (n + 1/2) + c}``, from completing the square."""
    q = np.array([[0.5 + l5, l4], [l4, 0.5 - l5]])
    b = np.array([l2, l3])
    return float(-0.25 * b @ np.linalg.solve(q, b))


@dataclass(frozen=True)
class StationarityCertificate:
    candidate: DensityOperator = field(repr=False)
    n: int
    r: float
    alpha: float
    beta: float
    lambda6: float
    common_eigenvalue: float
    residuals: dict[int, float]
    support_is_minimum: bool
    tolerance: float

    @property
    def lambda6_sign(self) -> int:
        return int(np.sign(self.lambda6))

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.residuals.values()) and self.support_is_minimum

    def to_dict(self) -> dict:
        return {
            "n": self.n, "r": self.r, "alpha": self.alpha, "beta": self.beta,
            "lambda6": self.lambda6, "lambda6_sign": self.lambda6_sign,
            "common_eigenvalue": self.common_eigenvalue,
            "levels": sorted(self.residuals),
            "residual_lower": self.residuals[min(self.residuals)],
            "residual_upper": self.residuals[max(self.residuals)],
            "support_is_minimum": self.support_is_minimum, "passed": self.passed,
        }


def certify_support(rho: DensityOperator, levels: tuple[int, int], tolerance: float = 1e-10,
                    n: int | None = None, r: float | None = None) -> StationarityCertificate:
    """Check that ``|i>`` and ``|j>`` are degenerate eigenvectors of ``H2`` at the
    state's own beta, with the ``l6`` that equalizes them, and that the common
    eigenvalue is the minimum over all levels."""
    i, j = levels
    dim = rho.dim
    alpha = moments(rho).alpha
    q = (alpha - 1) / (alpha + 1)
    beta = math.inf if q <= 0 else -math.log(q)
    ei = q**i if i else 1.0
    ej = q**j
    lam6 = (ei - ej) / (j - i)
    op = build_operator("H2", {"l6": lam6}, beta, dim)
    h = op.matrix
    e = float(h[i, i].real)
    residuals = {}
    for k in (i, j):
        v = np.zeros(dim, dtype=complex)
        v[k] = 1.0
        residuals[k] = float(np.linalg.norm(h @ v - e * v))
    diag = h.diagonal().real
    support_is_minimum = bool(np.all(diag >= e - tolerance))
    return StationarityCertificate(rho, i if n is None else n, float("nan") if r is None else r,
                                   alpha, beta, lam6, e, residuals, support_is_minimum, tolerance)


def certify_min_state(n: int, r: float, dim: int | None = None, tolerance: float = 1e-10) -> StationarityCertificate:
    """Certificate for ``rho_min(n, r)``. Pure endpoints (r = 0 or 1) need a single eigenvector;
    the (n, n+1) degeneracy is still imposed so the extremality check is uniform."""
    rho = rho_min(n, r, dim if dim is not None else max(n + 12, 20))
    return certify_support(rho, (n, n + 1), tolerance, n=n, r=r)


def reduced_sr_check(dim: int = 60, exclude_vacuum: bool = False) -> dict:
    """Minimum of ``Tr(rho (1 + 2n))`` over states = smallest eigenvalue of ``1 + 2n``."""
    if dim < 10:
        raise InvalidDimensionError("reduced SR check needs dim >= 10")
    op = np.diag(1.0 + 2.0 * np.arange(dim))
    if exclude_vacuum:
        op = op[1:, 1:]
    w, v = np.linalg.eigh(op)
    argmin = int(np.argmax(np.abs(v[:, 0]))) + (1 if exclude_vacuum else 0)
    return {"dim": dim, "minimum": float(w[0]), "minimizer_level": argmin,
            "exclude_vacuum": exclude_vacuum,
            "passed": bool(abs(w[0] - (3.0 if exclude_vacuum else 1.0)) < 1e-12 and argmin == (1 if exclude_vacuum else 0))}
