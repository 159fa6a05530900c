"""First and second moments, the uncertainty alpha, the reference Gaussian
state of an arbitrary state, and single-mode Gaussian unitaries.

Unitaries are exponentiated in a padded workspace (``dim + pad`` levels) and
cropped back, so the retained block carries exact matrix elements up to the
padding error; population leaving the block is reported, not hidden.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np

from .errors import (
    ConsistencyError,
    DegenerateMomentsError,
    DimensionMismatchError,
    InvalidDimensionError,
    ParameterRangeError,
    TruncationError,
    TruncationWarning,
)
from .fock import (
    TRUNCATION_WARN,
    DensityOperator,
    OperatorMatrix,
    _annihilation,
    _second_moment_ops,
    expectation,
    quadratures,
    truncation_indicator,
)

#: Largest trace loss tolerated by :func:`apply` before raising.
MAX_APPLY_LOSS = 1e-6
#: Default squeeze bound quoted for dim=60; scales roughly like sqrt(dim/60).
SAFE_SQUEEZE_AT_60 = 0.5


def safe_squeeze(dim: int) -> float:
    """Rule-of-thumb squeeze magnitude that keeps low levels inside ``dim``."""
    return SAFE_SQUEEZE_AT_60 * math.sqrt(dim / 60)


@dataclass(frozen=True)
class FirstAndSecondMoments:
    d: np.ndarray
    gamma: np.ndarray
    alpha: float

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float).reshape(2)
        gamma = np.asarray(self.gamma, dtype=float).reshape(2, 2)
        if abs(gamma[0, 1] - gamma[1, 0]) > 1e-12:
            raise ValueError("covariance matrix is not symmetric")
        det = float(np.linalg.det(gamma))
        if det <= 0:
            raise DegenerateMomentsError(f"det(gamma) = {det:.3g} <= 0")
        if abs(2 * math.sqrt(det) - self.alpha) > 1e-10 * max(1.0, self.alpha):
            raise ConsistencyError(f"stored alpha {self.alpha} != 2 sqrt(det gamma) {2 * math.sqrt(det)}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "gamma", gamma)

    @property
    def centered(self) -> bool:
        return bool(np.max(np.abs(self.d)) < 1e-10)

    def isotropic(self, atol: float = 1e-10) -> bool:
        g = self.gamma
        return bool(abs(g[0, 0] - g[1, 1]) < atol and abs(g[0, 1]) < atol)


def moments(rho: DensityOperator | np.ndarray) -> FirstAndSecondMoments:
    """Displacement vector, covariance matrix and ``alpha = 2 sqrt(det gamma)``."""
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    dim = m.shape[0]
    x, p = quadratures(dim)
    ops = _second_moment_ops(dim)
    ex = expectation(m, x).real
    ep = expectation(m, p).real
    ex2 = expectation(m, ops["x2"]).real
    ep2 = expectation(m, ops["p2"]).real
    exp = expectation(m, ops["xp_sym"]).real / 2
    gamma = np.array([[ex2 - ex * ex, exp - ex * ep], [exp - ex * ep, ep2 - ep * ep]])
    det = gamma[0, 0] * gamma[1, 1] - gamma[0, 1] ** 2
    if not det > 0:
        raise DegenerateMomentsError(f"det(gamma) = {det:.3g} <= 0 (severe truncation or invalid state)")
    return FirstAndSecondMoments(np.array([ex, ep]), gamma, 2 * math.sqrt(det))


def williamson(gamma: np.ndarray) -> tuple[float, float, float]:
    """Return ``(nu, theta, r)`` with ``gamma = nu * M(theta) diag(e^{-2r}, e^{2r}) M(theta)^T``.

    ``M(theta)`` is the phase-space map induced by the rotation ``exp(-i theta n)``;
    ``nu = sqrt(det gamma)`` is the symplectic eigenvalue.
    """
    gamma = np.asarray(gamma, dtype=float)
    lam, vecs = np.linalg.eigh(gamma)
    if lam[0] <= 0:
        raise DegenerateMomentsError("covariance matrix is not positive definite")
    nu = math.sqrt(lam[0] * lam[1])
    r = 0.25 * math.log(lam[1] / lam[0])
    if r == 0.0:
        return nu, 0.0, 0.0
    v = vecs[:, 0]
    theta = -math.atan2(v[1], v[0])
    return nu, theta, r


# -- unitaries --------------------------------------------------------------


@lru_cache(maxsize=32)
def _ladder_pair(size: int) -> tuple[np.ndarray, np.ndarray]:
    # a^2 from a one-level-larger a so the cropped product is exact
    a_big = _annihilation(size + 2)
    a = a_big[:size, :size]
    a2 = (a_big @ a_big)[:size, :size]
    return a, a2


def _exp_antihermitian(generator: np.ndarray) -> np.ndarray:
    """``exp(A)`` for anti-Hermitian ``A`` via the eigendecomposition of ``iA``."""
    k = 1j * generator
    k = (k + k.conj().T) / 2
    w, v = np.linalg.eigh(k)
    return (v * np.exp(-1j * w)) @ v.conj().T


@lru_cache(maxsize=32)
def _real_generator_eigh(kind: str, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of ``i G`` for the real-parameter generator G."""
    a, a2 = _ladder_pair(size)
    gen = a.conj().T - a if kind == "displacement" else (a2 - a2.conj().T) / 2
    k = 1j * gen
    return np.linalg.eigh((k + k.conj().T) / 2)


def _full_unitary(kind: str, value: complex, size: int) -> np.ndarray:
    if kind == "rotation":
        return np.diag(np.exp(-1j * value.real * np.arange(size)))
    if kind not in ("displacement", "squeeze"):
        raise ParameterRangeError(f"unknown Gaussian operation {kind!r}")
    if value == 0:
        return np.eye(size, dtype=complex)
    # D(|b| e^{i phi}) = R(-phi) D(|b|) R(phi),  S(|z| e^{i phi}) = R(-phi/2) S(|z|) R(phi/2),
    # with R(t) = exp(-i t n); conjugating by a diagonal unitary keeps the truncation exact.
    mag, phase = abs(value), math.atan2(value.imag, value.real)
    if kind == "squeeze":
        phase /= 2
    w, v = _real_generator_eigh(kind, size)
    core = (v * np.exp(-1j * mag * w)) @ v.conj().T
    ph = np.exp(1j * phase * np.arange(size))
    return ph[:, None] * core * ph.conj()[None, :]


@dataclass(frozen=True)
class GaussianOp:
    """A displacement, rotation or squeeze restricted to ``dim`` levels.

    ``leakage[k]`` is the population that ``U|k>`` sends past the cutoff;
    ``defect`` is its maximum over the lower half of the levels.
    """

    kind: str
    params: dict[str, Any]
    unitary: OperatorMatrix
    leakage: np.ndarray = field(repr=False)
    defect: float = 0.0

    @property
    def dim(self) -> int:
        return self.unitary.dim


def gaussian_unitary(kind: str, value: complex | float, dim: int, pad: int | None = None,
                     max_squeeze: float | None = None) -> GaussianOp:
    """``kind`` is ``"rotation"`` (angle theta, U = exp(-i theta n)),
    ``"displacement"`` (complex beta, U = exp(beta a^dag - beta* a)) or
    ``"squeeze"`` (complex zeta, U = exp((zeta* a^2 - zeta a^dag^2)/2))."""
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    value = complex(value)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ParameterRangeError(f"non-finite parameter {value}")
    if kind == "rotation" and value.imag != 0:
        raise ParameterRangeError("rotation angle must be real")
    if kind == "squeeze" and max_squeeze is not None and abs(value) > max_squeeze:
        raise ParameterRangeError(f"|zeta| = {abs(value):.3g} exceeds the configured maximum {max_squeeze}")
    if kind == "rotation":
        u = _full_unitary(kind, value, dim)
        params = {"theta": value.real}
        leakage = np.zeros(dim)
    else:
        pad = dim if pad is None else pad
        u = _full_unitary(kind, value, dim + pad)[:dim, :dim]
        key = "beta" if kind == "displacement" else "zeta"
        params = {key: [value.real, value.imag]}
        leakage = np.clip(1.0 - np.sum(np.abs(u) ** 2, axis=0), 0.0, None)
    defect = float(np.max(leakage[: max(1, dim // 2)]))
    return GaussianOp(kind, params, OperatorMatrix(u), leakage, defect)


def apply(op: GaussianOp, rho: DensityOperator, max_loss: float = MAX_APPLY_LOSS) -> DensityOperator:
    """``U rho U^dag``, renormalized after checking the trace lost past the cutoff."""
    if op.dim != rho.dim:
        raise DimensionMismatchError(f"operation dim {op.dim} != state dim {rho.dim}")
    u = op.unitary.matrix
    out = u @ rho.matrix @ u.conj().T
    out = (out + out.conj().T) / 2
    loss = 1.0 - float(np.trace(out).real)
    if loss > max_loss:
        raise TruncationError(f"{op.kind} pushed {loss:.3g} of the population past the cutoff")
    if loss > TRUNCATION_WARN:
        warnings.warn(f"{op.kind}: {loss:.3g} population past the cutoff", TruncationWarning, stacklevel=2)
    out = out / np.trace(out).real
    return DensityOperator(out, label=rho.label, kind="matrix")


def normal_form_ops(m: FirstAndSecondMoments, dim: int, pad: int | None = None) -> list[GaussianOp]:
    """Operations that take a state with moments ``m`` to ``d = 0``, ``gamma`` proportional to I."""
    _, theta, r = williamson(m.gamma)
    beta = complex(m.d[0], m.d[1]) / math.sqrt(2)
    ops = []
    if beta != 0:
        ops.append(gaussian_unitary("displacement", -beta, dim, pad))
    if theta != 0:
        ops.append(gaussian_unitary("rotation", -theta, dim))
    if r != 0:
        ops.append(gaussian_unitary("squeeze", -r, dim, pad))
    return ops


# -- reference Gaussian -----------------------------------------------------


@dataclass(frozen=True)
class GaussianRef:
    """Reference Gaussian state sharing the first and second moments of a state.

    ``matrix`` is the ``dim x dim`` block of the (infinite) Gaussian state; it is
    not renormalized, ``truncation`` is the population beyond the block.
    ``purity`` is the exact ``Tr(rho_G^2) = 1/alpha``.
    """

    alpha: float
    beta: float
    norm: float
    theta: float
    r: float
    phi: float
    d: np.ndarray
    matrix: np.ndarray = field(repr=False)
    truncation: float = 0.0
    target: FirstAndSecondMoments | None = field(default=None, repr=False)

    @property
    def purity(self) -> float:
        return 1.0 / self.alpha

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def thermal_core(alpha: float, size: int) -> tuple[np.ndarray, float, float]:
    """Populations of ``exp(-beta n)/N`` with ``e^{-beta} = (alpha-1)/(alpha+1)``, ``N = (alpha+1)/2``."""
    norm = (alpha + 1) / 2
    if alpha == 1.0:
        pops = np.zeros(size)
        pops[0] = 1.0
        return pops, math.inf, norm
    q = (alpha - 1) / (alpha + 1)
    pops = np.exp(np.arange(size) * math.log(q)) / norm
    return pops, -math.log(q), norm


def reference_gaussian(rho: DensityOperator, pad: int | None = None,
                       moments_: FirstAndSecondMoments | None = None) -> GaussianRef:
    m = moments_ if moments_ is not None else moments(rho)
    dim = rho.dim
    alpha = m.alpha
    if alpha < 1.0:
        if alpha < 1.0 - 1e-9:
            raise DegenerateMomentsError(f"alpha = {alpha:.12g} < 1: state violates the uncertainty relation")
        alpha = 1.0
    nu, theta, r = williamson(m.gamma)
    beta_disp = complex(m.d[0], m.d[1]) / math.sqrt(2)
    needs_ops = r != 0 or beta_disp != 0
    size = dim + (max(dim, 20) if pad is None else pad) if needs_ops else dim
    pops, beta, norm = thermal_core(alpha, size)
    g = np.diag(pops).astype(complex)
    if needs_ops:
        for kind, val in (("squeeze", r), ("rotation", theta), ("displacement", beta_disp)):
            if val == 0:
                continue
            u = _full_unitary(kind, complex(val), size)
            g = u @ g @ u.conj().T
        g = g[:dim, :dim]
        g = (g + g.conj().T) / 2
    truncation = float(1.0 - np.trace(g).real)
    return GaussianRef(
        alpha=alpha, beta=beta, norm=norm, theta=theta, r=r, phi=-2 * theta if r else 0.0,
        d=m.d.copy(), matrix=g, truncation=max(truncation, 0.0), target=m,
    )


def reference_state(ref: GaussianRef) -> DensityOperator:
    """The reference Gaussian as a renormalized :class:`DensityOperator`."""
    m = ref.matrix / np.trace(ref.matrix).real
    return DensityOperator(m, label="reference-gaussian", kind="matrix")


__all__ = [
    "FirstAndSecondMoments", "GaussianOp", "GaussianRef", "apply", "gaussian_unitary",
    "moments", "normal_form_ops", "reference_gaussian", "reference_state", "safe_squeeze",
    "thermal_core", "truncation_indicator", "williamson",
]
