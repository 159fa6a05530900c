"""Degree of Gaussianity ``g = Tr(rho rho_G) / Tr(rho_G^2)``, phase averaging,
Wigner functions, the radial-moment expansion of ``g`` and the
Wigner-positivity window.

``g = 1`` for every Gaussian state, but ``g = 1`` does not imply Gaussianity;
no Gaussianity test is offered here, only the measure.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre, eval_laguerre, gammaln

from .errors import ParameterRangeError
from .fock import DensityOperator
from .gaussian import GaussianRef, moments, reference_gaussian

#: Slack used when deciding whether ``g`` lies outside the positivity window.
WINDOW_SLACK = 1e-9
LOWER_BOUND = 2 / math.e
UPPER_BOUND = 2.0


def positivity_window(alpha: float) -> tuple[float, float]:
    """Range of ``g`` allowed for a state with strictly positive Wigner function.

    The lower edge is a fitted curve (coefficients kept exactly as published);
    the upper edge is analytic.
    """
    if alpha < 1:
        raise ParameterRangeError(f"alpha must be >= 1, got {alpha}")
    g_min = 0.0095 * alpha + 0.62 + 0.711 / alpha - 0.333 / alpha**2
    g_max = math.sqrt(2 / (1 + 1 / alpha**2))
    return g_min, g_max


def negativity_certified(g: float, alpha: float) -> bool:
    # The fitted lower edge exceeds 1 for alpha < ~1.12, which would flag
    # Gaussian states (g = 1, positive Wigner); the window is widened to hold 1.
    lo, hi = positivity_window(alpha)
    return g < min(lo, 1.0) - WINDOW_SLACK or g > max(hi, 1.0) + WINDOW_SLACK


@dataclass(frozen=True)
class GaussianityReport:
    g: float
    overlap: float
    alpha: float
    purity_G: float
    positivity_window: tuple[float, float]
    wigner_negativity_certified: bool
    reference: GaussianRef = field(repr=False)

    @property
    def truncation(self) -> float:
        return self.reference.truncation


def gaussianity(rho: DensityOperator, pad: int | None = None) -> GaussianityReport:
    ref = reference_gaussian(rho, pad=pad)
    overlap = float(np.einsum("ij,ji->", rho.matrix, ref.matrix).real)
    purity = ref.purity
    g = overlap / purity
    return GaussianityReport(
        g=g,
        overlap=overlap,
        alpha=ref.alpha,
        purity_G=purity,
        positivity_window=positivity_window(ref.alpha),
        wigner_negativity_certified=negativity_certified(g, ref.alpha),
        reference=ref,
    )


def phase_average(rho: DensityOperator) -> DensityOperator:
    """Uniform average over phase-space rotations: keep only the Fock diagonal."""
    diag = np.diag(rho.matrix.diagonal().real).astype(complex)
    label = f"phase-averaged {rho.label}" if rho.label else "phase-averaged"
    return DensityOperator(diag, label=label, kind="matrix")


# -- Wigner function --------------------------------------------------------


def _wigner_values(matrix: np.ndarray, x: np.ndarray, p: np.ndarray, cutoff: float = 1e-15) -> np.ndarray:
    """W(x, p) for a Fock-basis matrix, vacuum normalized to ``exp(-x^2-p^2)/pi``."""
    r2 = x * x + p * p
    gauss = np.exp(-r2) / math.pi
    zbar = math.sqrt(2) * (x - 1j * p)
    out = np.zeros(np.broadcast(x, p).shape)
    dim = matrix.shape[0]
    for k in range(dim):
        entries = matrix.diagonal(-k)  # rho[n + k, n]
        idx = np.nonzero(np.abs(entries) > cutoff)[0]
        if idx.size == 0:
            continue
        power = zbar**k if k else 1.0
        for n in idx:
            coef = (-1) ** n * math.exp(0.5 * (gammaln(n + 1) - gammaln(n + k + 1)))
            term = coef * power * eval_genlaguerre(int(n), k, 2 * r2) * gauss
            if k == 0:
                out += entries[n].real * term.real
            else:
                out += 2 * (entries[n] * term).real
    return out


@dataclass(frozen=True)
class WignerGrid:
    extent: float
    resolution: int
    axis: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # values[i, j] = W(axis[i], axis[j]) = W(x, p)

    @property
    def step(self) -> float:
        return float(self.axis[1] - self.axis[0])

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    @property
    def integral(self) -> float:
        return float(self.values.sum() * self.step**2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "p", "W"])
        for i, xv in enumerate(self.axis):
            for j, pv in enumerate(self.axis):
                writer.writerow([repr(float(xv)), repr(float(pv)), repr(float(self.values[i, j]))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "extent": self.extent, "resolution": self.resolution,
            "min_value": self.min_value, "integral": self.integral,
            "axis": self.axis.tolist(), "values": self.values.tolist(),
        }, sort_keys=True)


def wigner(rho: DensityOperator, extent: float | None = None, resolution: int = 201) -> WignerGrid:
    """Wigner function on the square ``[-extent, extent]^2``.

    The default extent is ``8 sqrt(alpha)`` shifted to cover the displacement.
    """
    if resolution < 16:
        raise ParameterRangeError("resolution must be at least 16")
    if extent is None:
        m = moments(rho)
        extent = 8 * math.sqrt(max(m.alpha, 1.0)) / math.sqrt(2) + float(np.max(np.abs(m.d)))
    axis = np.linspace(-extent, extent, resolution)
    xg, pg = np.meshgrid(axis, axis, indexing="ij")
    return WignerGrid(float(extent), resolution, axis, _wigner_values(rho.matrix, xg, pg))


def wigner_at(rho: DensityOperator, x: float, p: float) -> float:
    return float(_wigner_values(rho.matrix, np.array(x, dtype=float), np.array(p, dtype=float)))


# -- radial-moment expansion ------------------------------------------------


def _radial_profile(populations: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Phase-averaged Wigner function ``W_s(r)`` of a diagonal state."""
    out = np.zeros_like(r)
    two_r2 = 2 * r * r
    for n in np.nonzero(np.abs(populations) > 0)[0]:
        out += populations[n] * (-1) ** n * eval_laguerre(int(n), two_r2)
    return out * np.exp(-r * r) / math.pi


def _radial_nodes(populations: np.ndarray, alpha: float, max_order: int, nodes: int):
    top = int(np.nonzero(populations)[0].max()) if np.any(populations) else 0
    # integrand ~ r^(max_order + 2 top) exp(-r^2) peaks at sqrt((max_order+1)/2 + top)
    radius = max(8 * math.sqrt(alpha), math.sqrt((max_order + 1) / 2 + top) + 8)
    t, w = np.polynomial.legendre.leggauss(nodes)
    return radius * (t + 1) / 2, radius * w / 2


def _scaled_moments(populations, alpha, n_terms, nodes):
    """``<r^(2n+1)> / (n! alpha^n)`` for n < n_terms, with ``<f> = int_0^inf W_s(r) f(r) dr``."""
    r, w = _radial_nodes(populations, alpha, 2 * n_terms + 1, nodes)
    ws = _radial_profile(populations, r) * w * r
    logs = np.log(np.maximum(r * r / alpha, 1e-300))
    n = np.arange(n_terms)[:, None]
    scale = np.exp(n * logs[None, :] - gammaln(n + 1))
    return scale @ ws


def radial_moments(rho: DensityOperator, orders, nodes: int = 800) -> np.ndarray:
    """Radial moments ``<r^k> = int_0^inf W_s(r) r^k dr`` of the phase-averaged state."""
    pops = rho.matrix.diagonal().real
    orders = np.asarray(orders, dtype=float)
    alpha = float(np.sum(pops * (2 * np.arange(len(pops)) + 1)))
    r, w = _radial_nodes(pops, alpha, int(orders.max(initial=1)), nodes)
    ws = _radial_profile(pops, r) * w
    return np.array([np.sum(ws * r**k) for k in orders])


def gaussian_radial_moment(n: int, alpha: float) -> float:
    """``<r^(2n+1)>`` of the phase-invariant Gaussian with uncertainty alpha."""
    return alpha**n * math.gamma(n + 1) / (2 * math.pi)


def euler_partial_sums(a: np.ndarray) -> np.ndarray:
    """Partial sums of the Euler transform of ``sum_n (-1)^n a_n``."""
    a = np.asarray(a, dtype=float)
    diffs = a.copy()
    out = np.empty(len(a))
    total = 0.0
    for k in range(len(a)):
        total += (-1) ** k * diffs[0] / 2 ** (k + 1)
        out[k] = total
        diffs = np.diff(diffs)
    return out


@dataclass(frozen=True)
class RadialSeries:
    partial_sums: np.ndarray
    euler_sums: np.ndarray
    direct_g: float
    alpha: float
    r3_defect: float
    quadrature_error: float


def radial_moment_series(rho: DensityOperator, n_terms: int = 40, nodes: int = 800,
                         atol: float = 1e-8) -> RadialSeries:
    """Expansion ``g = 4 pi sum_n (-1)^n <r^(2n+1)> / (n! alpha^n)``.

    Moments are taken from the phase-averaged Wigner function by Gauss-Legendre
    quadrature. Raw partial sums converge only for alpha > 1 (ratio 1/alpha);
    Euler-transformed sums converge for every state, Gaussian ones included.
    ``quadrature_error`` compares against a run with half the nodes.
    """
    m = moments(rho)
    if not (m.centered and m.isotropic(atol)) or np.max(np.abs(m.d)) > atol:
        raise ParameterRangeError("radial expansion needs a centered state with gamma proportional to I")
    rho_s = phase_average(rho)
    pops = rho_s.matrix.diagonal().real
    alpha = m.alpha
    a = 4 * math.pi * _scaled_moments(pops, alpha, n_terms, nodes)
    coarse = 4 * math.pi * _scaled_moments(pops, alpha, n_terms, nodes // 2)
    signs = (-1.0) ** np.arange(n_terms)
    partial = np.cumsum(signs * a)
    r3 = radial_moments(rho_s, [3], nodes)[0]
    return RadialSeries(
        partial_sums=partial,
        euler_sums=euler_partial_sums(a),
        direct_g=gaussianity(rho).g,
        alpha=alpha,
        r3_defect=float(abs(r3 - gaussian_radial_moment(1, alpha))),
        quadrature_error=float(np.max(np.abs(a - coarse))),
    )
