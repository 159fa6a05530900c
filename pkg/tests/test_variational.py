import math

import numpy as np
import pytest

from gaussbound.errors import InvalidDimensionError, ParameterRangeError
from gaussbound.fock import mixture
from gaussbound.variational import (
    build_operator,
    certify_min_state,
    certify_support,
    quadratic_frequency,
    reduced_sr_check,
    spectrum_shift,
)


def test_build_examples():
    h = build_operator("H", {}, dim=20)
    np.testing.assert_allclose(np.linalg.eigvalsh(h.matrix), np.arange(20) + 0.5, atol=1e-12)
    h2 = build_operator("H2", {}, beta=0.7, dim=12)
    np.testing.assert_array_equal(h2.matrix, np.diag(np.exp(-0.7 * np.arange(12))))
    beta = math.log(2)
    lam6 = math.exp(-beta) - math.exp(-2 * beta)
    h2 = build_operator("H2", {"l6": lam6}, beta=beta, dim=12)
    assert abs(h2.matrix[1, 1] - h2.matrix[2, 2]) <= 1e-14


def test_h2_is_diagonal_and_hermitian():
    h = build_operator("H1", {"l2": 0.1, "l4": 0.05, "l6": 0.2}, beta=0.5, dim=15).matrix
    np.testing.assert_allclose(h, h.conj().T, atol=1e-12)
    h2 = build_operator("H2", {"l6": 0.3}, beta=0.5, dim=15).matrix
    np.testing.assert_array_equal(h2, np.diag(np.diag(h2)))


def test_build_errors():
    with pytest.raises(ParameterRangeError):
        build_operator("H3")
    with pytest.raises(ParameterRangeError):
        build_operator("H2", {"l2": 0.1}, beta=1.0)
    with pytest.raises(ParameterRangeError):
        build_operator("H1", {}, beta=-1.0)
    with pytest.raises(ParameterRangeError):
        build_operator("H", {"l9": 1.0})
    with pytest.raises(InvalidDimensionError):
        build_operator("H", {}, dim=1)


def test_random_h_spectrum(rng):
    # spec(H) = omega (n + 1/2) + c with omega = 2 sqrt(det Q); omega = 1 iff l4 = l5 = 0
    kept = excluded = 0
    dim = 120
    while kept < 20:
        l2, l3 = rng.uniform(-0.5, 0.5, 2)
        l4, l5 = rng.uniform(-0.35, 0.35, 2)
        try:
            omega = quadratic_frequency(l4, l5)
        except ParameterRangeError:
            excluded += 1
            continue
        if omega < 0.5:  # nearly parabolic forms need far larger cutoffs
            excluded += 1
            continue
        h = build_operator("H", {"l2": l2, "l3": l3, "l4": l4, "l5": l5}, dim=dim)
        ev = np.linalg.eigvalsh(h.matrix)[:10]
        expected = omega * (np.arange(10) + 0.5) + spectrum_shift(l2, l3, l4, l5)
        np.testing.assert_allclose(ev, expected, atol=1e-6)
        kept += 1
    assert kept == 20


def test_unit_spacing_without_quadratic_terms():
    h = build_operator("H", {"l2": 0.3, "l3": -0.2}, dim=80)
    ev = np.linalg.eigvalsh(h.matrix)[:40]
    c = spectrum_shift(0.3, -0.2, 0.0, 0.0)
    np.testing.assert_allclose(ev, np.arange(40) + 0.5 + c, atol=1e-6)
    assert c == pytest.approx(-(0.3**2 + 0.2**2) / 2)


def test_non_elliptic_rejected():
    with pytest.raises(ParameterRangeError):
        quadratic_frequency(0.4, 0.4)


def test_certify_examples():
    cert = certify_min_state(0, 0.5)
    assert cert.passed and max(cert.residuals.values()) <= 1e-12
    assert cert.lambda6 == pytest.approx(1 - math.exp(-cert.beta))
    for r in (0.0, 1.0):
        assert certify_min_state(2, r).passed


def test_non_adjacent_mixture_fails():
    rho = mixture({0: 0.5, 2: 0.5}, 20)  # alpha = 3, same as |1>
    cert = certify_support(rho, (0, 2))
    assert not cert.support_is_minimum and not cert.passed


@pytest.mark.parametrize("n", range(9))
def test_min_branch_certificates(n):
    for r in (0.0, 0.25, 0.5, 0.75):
        cert = certify_min_state(n, r)
        assert cert.passed
        assert max(cert.residuals.values()) <= 1e-10
        # the common eigenvalue is the smallest diagonal entry of H2
        h = build_operator("H2", {"l6": cert.lambda6}, beta=cert.beta, dim=n + 12).matrix
        assert cert.common_eigenvalue <= np.min(np.diag(h).real) + 1e-12
        assert cert.lambda6_sign == 1
        d = cert.to_dict()
        assert d["passed"] and d["levels"] == [n, n + 1]


def test_reduced_sr_check():
    for dim in (10, 60):
        rep = reduced_sr_check(dim)
        assert rep["passed"] and rep["minimum"] == 1.0 and rep["minimizer_level"] == 0
    rep = reduced_sr_check(60, exclude_vacuum=True)
    assert rep["passed"] and rep["minimum"] == 3.0 and rep["minimizer_level"] == 1
    with pytest.raises(InvalidDimensionError):
        reduced_sr_check(5)
