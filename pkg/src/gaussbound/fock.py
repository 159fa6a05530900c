"""Truncated Fock-space primitives: density operators, ladder and quadrature
operators, expectation values, validity checks and the state-file format.

Conventions: hbar = 1, unit mass and frequency, ``x = (a + a^dag)/sqrt(2)``
and ``p = (a - a^dag)/(i sqrt(2))`` so that the vacuum has variance 1/2 in
both quadratures.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    StateSpecError,
    TruncationWarning,
)

DEFAULT_CUTOFF = 60
CUTOFF_ENV_VAR = "GAUSSBOUND_CUTOFF"
TRUNCATION_WARN = 1e-8

STATE_KINDS = ("fock", "mixture", "coherent", "squeezed", "thermal", "matrix")


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-12
    trace: float = 1e-10
    psd: float = -1e-10


DEFAULT_TOLERANCES = Tolerances()


def default_cutoff() -> int:
    value = os.environ.get(CUTOFF_ENV_VAR)
    return int(value) if value else DEFAULT_CUTOFF


def _frozen(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class OperatorMatrix:
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidDimensionError(f"operator must be square, got shape {m.shape}")
        if self.hermitian and np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12:
            raise ValueError("operator flagged Hermitian is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DensityOperator:
    """A density matrix on the number basis ``|0>, ..., |dim-1>``.

    Construction does not validate; use :func:`validate` (or the named
    constructors, which always produce valid states).
    """

    matrix: np.ndarray
    label: str | None = None
    kind: str = "matrix"
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidDimensionError(f"density matrix must be square, got shape {m.shape}")
        if m.shape[0] < 1:
            raise InvalidDimensionError("empty density matrix")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def populations(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    @property
    def truncation(self) -> float:
        return truncation_indicator(self.matrix)

    def is_diagonal(self, atol: float = 0.0) -> bool:
        off = self.matrix - np.diag(self.matrix.diagonal())
        return bool(np.max(np.abs(off), initial=0.0) <= atol)


def truncation_indicator(matrix: np.ndarray) -> float:
    """Population held by the top 10% of levels (at least one level)."""
    dim = matrix.shape[0]
    k = max(1, math.ceil(dim / 10))
    return float(np.sum(matrix.diagonal()[-k:].real))


def _check_dim(dim: int) -> None:
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"Fock dimension must be an integer >= 2, got {dim}")


@lru_cache(maxsize=64)
def _annihilation(dim: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    a.setflags(write=False)
    return a


def ladder_operators(dim: int) -> tuple[OperatorMatrix, OperatorMatrix]:
    _check_dim(dim)
    a = _annihilation(dim)
    return OperatorMatrix(a), OperatorMatrix(a.conj().T)


def number_operator(dim: int) -> OperatorMatrix:
    _check_dim(dim)
    return OperatorMatrix(np.diag(np.arange(dim, dtype=float)), hermitian=True)


def quadratures(dim: int) -> tuple[OperatorMatrix, OperatorMatrix]:
    _check_dim(dim)
    a = _annihilation(dim)
    ad = a.conj().T
    x = (a + ad) / math.sqrt(2)
    p = (a - ad) / (1j * math.sqrt(2))
    return OperatorMatrix(x, hermitian=True), OperatorMatrix(p, hermitian=True)


@lru_cache(maxsize=64)
def _second_moment_ops(dim: int) -> dict[str, np.ndarray]:
    # Products formed one level higher and cropped: every matrix element of
    # x^2, p^2 and xp+px on the retained block is then exact.
    big = dim + 1
    a = _annihilation(big)
    ad = a.conj().T
    x = (a + ad) / math.sqrt(2)
    p = (a - ad) / (1j * math.sqrt(2))
    ops = {
        "x2": (x @ x)[:dim, :dim],
        "p2": (p @ p)[:dim, :dim],
        "xp_sym": (x @ p + p @ x)[:dim, :dim],
    }
    for m in ops.values():
        m.setflags(write=False)
    return ops


def second_moment_operators(dim: int) -> dict[str, OperatorMatrix]:
    """Exact truncations of ``x^2``, ``p^2`` and ``xp + px``."""
    _check_dim(dim)
    return {k: OperatorMatrix(v, hermitian=True) for k, v in _second_moment_ops(dim).items()}


def expectation(rho: DensityOperator, op: OperatorMatrix | np.ndarray) -> complex:
    """``Tr(rho op)``."""
    m = op.matrix if isinstance(op, OperatorMatrix) else np.asarray(op)
    r = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    if m.shape != r.shape:
        raise DimensionMismatchError(f"state has shape {r.shape}, operator {m.shape}")
    return complex(np.einsum("ij,ji->", r, m))


@dataclass(frozen=True)
class ValidationReport:
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    truncation: float
    tolerances: Tolerances = DEFAULT_TOLERANCES

    @property
    def hermitian(self) -> bool:
        return self.hermiticity_defect <= self.tolerances.hermiticity

    @property
    def unit_trace(self) -> bool:
        return self.trace_defect <= self.tolerances.trace

    @property
    def positive(self) -> bool:
        return self.min_eigenvalue >= self.tolerances.psd

    @property
    def passed(self) -> bool:
        return self.hermitian and self.unit_trace and self.positive

    def failures(self) -> list[str]:
        out = []
        if not self.hermitian:
            out.append(f"hermiticity defect {self.hermiticity_defect:.3g}")
        if not self.unit_trace:
            out.append(f"trace defect {self.trace_defect:.3g}")
        if not self.positive:
            out.append(f"negative eigenvalue {self.min_eigenvalue:.3g}")
        return out


def validate(rho: DensityOperator | np.ndarray, tolerances: Tolerances = DEFAULT_TOLERANCES) -> ValidationReport:
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    herm = float(np.max(np.abs(m - m.conj().T), initial=0.0))
    trace_defect = float(abs(np.trace(m) - 1.0))
    min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    return ValidationReport(herm, trace_defect, min_eig, truncation_indicator(m), tolerances)


def _warn_truncation(value: float, what: str) -> None:
    if value > TRUNCATION_WARN:
        warnings.warn(f"{what}: {value:.3g} population past the cutoff", TruncationWarning, stacklevel=3)


# -- named constructors -----------------------------------------------------


def number_state(n: int, dim: int = DEFAULT_CUTOFF) -> DensityOperator:
    _check_dim(dim)
    if int(n) != n or n < 0 or n >= dim:
        raise StateSpecError(f"number state |{n}> not representable at dim={dim}")
    m = np.zeros((dim, dim), dtype=complex)
    m[n, n] = 1.0
    return DensityOperator(m, label=f"fock:{n}", kind="fock", params={"n": int(n)})


def mixture(populations: Mapping[int, float] | np.ndarray, dim: int = DEFAULT_CUTOFF) -> DensityOperator:
    """Diagonal mixture ``sum_n p_n |n><n|``; ``populations`` may be a dict or an array."""
    _check_dim(dim)
    if isinstance(populations, Mapping):
        items = {int(k): float(v) for k, v in populations.items()}
    else:
        items = {i: float(v) for i, v in enumerate(np.asarray(populations, dtype=float))}
    diag = np.zeros(dim)
    for n, p in items.items():
        if n < 0 or n >= dim:
            if p == 0:
                continue
            raise StateSpecError(f"level {n} outside dim={dim}")
        if p < 0:
            raise StateSpecError(f"negative population {p} for level {n}")
        diag[n] = p
    if abs(diag.sum() - 1.0) > 1e-9:
        raise StateSpecError(f"populations sum to {diag.sum()}, expected 1")
    diag /= diag.sum()
    params = {"populations": {str(n): p for n, p in items.items() if p != 0}}
    return DensityOperator(np.diag(diag).astype(complex), label="mixture", kind="mixture", params=params)


def thermal(mean_photons: float, dim: int = DEFAULT_CUTOFF) -> DensityOperator:
    _check_dim(dim)
    if mean_photons < 0:
        raise StateSpecError("mean photon number must be nonnegative")
    nbar = float(mean_photons)
    k = np.arange(dim)
    if nbar == 0:
        pops = (k == 0).astype(float)
    else:
        pops = np.exp(k * math.log(nbar / (nbar + 1))) / (nbar + 1)
    _warn_truncation(1.0 - pops.sum(), "thermal state")
    pops = pops / pops.sum()
    return DensityOperator(np.diag(pops).astype(complex), label=f"thermal:{nbar}", kind="thermal",
                           params={"mean": nbar})


def coherent(beta: complex, dim: int = DEFAULT_CUTOFF) -> DensityOperator:
    from .gaussian import apply, gaussian_unitary

    beta = complex(beta)
    op = gaussian_unitary("displacement", beta, dim)
    out = apply(op, number_state(0, dim))
    return DensityOperator(out.matrix, label=f"coherent:{beta}", kind="coherent",
                           params={"beta": [beta.real, beta.imag]})


def squeezed_vacuum(zeta: complex, dim: int = DEFAULT_CUTOFF) -> DensityOperator:
    from .gaussian import apply, gaussian_unitary

    zeta = complex(zeta)
    op = gaussian_unitary("squeeze", zeta, dim)
    out = apply(op, number_state(0, dim))
    return DensityOperator(out.matrix, label=f"squeezed:{zeta}", kind="squeezed",
                           params={"zeta": [zeta.real, zeta.imag]})


def _complex_param(value: Any) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    return complex(value)


def _parse_populations(text: str) -> dict[int, float]:
    pops = {}
    for item in text.split(","):
        if "=" not in item:
            raise StateSpecError(f"bad mixture entry {item!r}; expected level=weight")
        n, w = item.split("=", 1)
        pops[int(n)] = float(w)
    return pops


def from_spec(spec: str | Mapping[str, Any], dim: int = DEFAULT_CUTOFF) -> DensityOperator:
    """Build a state from ``"fock:3"``, ``"mixture:0=0.5,1=0.5"``, ``"coherent:1+0.5j"``,
    ``"squeezed:0.3"``, ``"thermal:1"`` or a state-file dictionary."""
    if isinstance(spec, Mapping):
        return state_from_dict(spec, dim)
    if ":" not in spec:
        raise StateSpecError(f"malformed state spec {spec!r}")
    kind, arg = spec.split(":", 1)
    try:
        if kind == "fock":
            return number_state(int(arg), dim)
        if kind == "mixture":
            return mixture(_parse_populations(arg), dim)
        if kind == "coherent":
            return coherent(_complex_param(arg), dim)
        if kind == "squeezed":
            return squeezed_vacuum(_complex_param(arg), dim)
        if kind == "thermal":
            return thermal(float(arg), dim)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, StateSpecError):
            raise
        raise StateSpecError(f"malformed state spec {spec!r}: {exc}") from exc
    raise StateSpecError(f"unknown state kind {kind!r}")


# -- state files ------------------------------------------------------------


def state_to_dict(rho: DensityOperator, include_matrix: bool = True) -> dict[str, Any]:
    out: dict[str, Any] = {"dim": rho.dim, "kind": rho.kind, "params": dict(rho.params)}
    if include_matrix or rho.kind == "matrix":
        flat = rho.matrix.reshape(-1)
        out["matrix"] = [[float(z.real), float(z.imag)] for z in flat]
    if rho.label:
        out["label"] = rho.label
    return out


def _matrix_from_json(raw: Any, dim: int) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape == (dim * dim, 2):
        arr = arr.reshape(dim, dim, 2)
    if arr.shape != (dim, dim, 2):
        raise StateSpecError(f"matrix has shape {arr.shape}, expected {dim*dim} [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def state_from_dict(data: Mapping[str, Any], dim: int | None = None) -> DensityOperator:
    try:
        file_dim = int(data["dim"])
        kind = data["kind"]
    except (KeyError, TypeError, ValueError) as exc:
        raise StateSpecError(f"state file missing 'dim' or 'kind': {exc}") from exc
    if kind not in STATE_KINDS:
        raise StateSpecError(f"unknown state kind {kind!r}")
    params = dict(data.get("params") or {})
    label = data.get("label")
    if data.get("matrix") is not None:
        m = _matrix_from_json(data["matrix"], file_dim)
        return DensityOperator(m, label=label, kind=kind, params=params)
    try:
        if kind == "fock":
            rho = number_state(int(params["n"]), file_dim)
        elif kind == "mixture":
            rho = mixture({int(k): float(v) for k, v in params["populations"].items()}, file_dim)
        elif kind == "coherent":
            rho = coherent(_complex_param(params["beta"]), file_dim)
        elif kind == "squeezed":
            rho = squeezed_vacuum(_complex_param(params["zeta"]), file_dim)
        elif kind == "thermal":
            rho = thermal(float(params["mean"]), file_dim)
        else:
            raise StateSpecError("kind 'matrix' requires a 'matrix' entry")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, StateSpecError):
            raise
        raise StateSpecError(f"bad params for kind {kind!r}: {exc}") from exc
    return rho


def load_state(path: str | os.PathLike) -> DensityOperator:
    with open(path) as fh:
        return state_from_dict(json.load(fh))


def save_state(rho: DensityOperator, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(state_to_dict(rho), sort_keys=True))
