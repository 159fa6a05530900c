import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussbound.errors import DimensionMismatchError, InvalidDimensionError, StateSpecError
from gaussbound.fock import (
    DensityOperator,
    OperatorMatrix,
    Tolerances,
    coherent,
    default_cutoff,
    expectation,
    from_spec,
    ladder_operators,
    load_state,
    mixture,
    number_operator,
    number_state,
    quadratures,
    save_state,
    second_moment_operators,
    squeezed_vacuum,
    state_from_dict,
    state_to_dict,
    thermal,
    truncation_indicator,
    validate,
)

from conftest import random_mixed


def test_ladder_small_dims():
    a, ad = ladder_operators(2)
    assert a.matrix[0, 1] == 1 and np.count_nonzero(a.matrix) == 1
    a, _ = ladder_operators(3)
    assert a.matrix[1, 2] == pytest.approx(math.sqrt(2), abs=1e-15)
    np.testing.assert_array_equal(ad.matrix, a_conj_t(ladder_operators(2)[0]))


def a_conj_t(op):
    return op.matrix.conj().T


def test_number_operator_from_ladders():
    a, ad = ladder_operators(10)
    np.testing.assert_allclose(np.diag(ad.matrix @ a.matrix).real, np.arange(10), atol=1e-14)
    np.testing.assert_array_equal(number_operator(10).matrix.diagonal().real, np.arange(10))


def test_dimension_errors():
    with pytest.raises(InvalidDimensionError):
        ladder_operators(1)
    with pytest.raises(InvalidDimensionError):
        quadratures(0)
    with pytest.raises(DimensionMismatchError):
        expectation(number_state(0, 4), number_operator(5))


def test_quadrature_entries_and_vacuum_variance():
    x, p = quadratures(2)
    assert x.matrix[0, 1] == pytest.approx(1 / math.sqrt(2))
    assert x.matrix[1, 0] == pytest.approx(1 / math.sqrt(2))
    x, _ = quadratures(40)
    assert (x.matrix @ x.matrix)[0, 0].real == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("dim", [2, 5, 17, 60])
def test_commutator_is_i_except_last_level(dim):
    x, p = quadratures(dim)
    c = x.matrix @ p.matrix - p.matrix @ x.matrix
    np.testing.assert_allclose(np.diag(c)[:-1], 1j, atol=1e-12)
    assert abs(np.diag(c)[-1] - 1j) > 1  # truncation corrupts only the last entry


@pytest.mark.parametrize("dim", [3, 10, 60])
def test_number_operator_identity(dim):
    x, p = quadratures(dim)
    lhs = (x.matrix @ x.matrix + p.matrix @ p.matrix - np.eye(dim)) / 2
    np.testing.assert_allclose(lhs[:-1, :-1], number_operator(dim).matrix[:-1, :-1], atol=1e-12)


def test_exact_second_moment_operators():
    # built one level larger and cropped: exact including the last row
    ops = second_moment_operators(6)
    n = np.arange(6)
    np.testing.assert_allclose(np.diag(ops["x2"].matrix).real, n + 0.5, atol=1e-14)
    np.testing.assert_allclose(np.diag(ops["p2"].matrix).real, n + 0.5, atol=1e-14)


def test_expectation_examples():
    assert expectation(number_state(0, 8), number_operator(8)) == 0
    for n in range(6):
        op = 2 * number_operator(8).matrix + np.eye(8)
        assert expectation(number_state(n, 8), op).real == pytest.approx(2 * n + 1)
    assert expectation(mixture({0: 0.5, 2: 0.5}, 8), number_operator(8)).real == pytest.approx(1.0)


def test_expectation_is_linear(rng):
    r1 = random_mixed(rng, 5, 8)
    r2 = random_mixed(rng, 5, 8)
    h1 = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h2 = rng.normal(size=(8, 8))
    a, b = 0.3, -1.7
    lhs = expectation(a * r1 + b * r2, h1)
    assert lhs == pytest.approx(a * expectation(r1, h1) + b * expectation(r2, h1), abs=1e-12)
    lhs = expectation(r1, a * h1 + b * h2)
    assert lhs == pytest.approx(a * expectation(r1, h1) + b * expectation(r1, h2), abs=1e-12)


def test_expectation_real_for_hermitian(rng):
    rho = DensityOperator(random_mixed(rng, 6, 10))
    x, _ = quadratures(10)
    assert abs(expectation(rho, x).imag) <= 1e-12


def test_validate_examples():
    assert validate(number_state(1, 5)).passed
    rep = validate(np.diag([0.25, 0.25]).astype(complex))
    assert not rep.unit_trace and rep.trace_defect == pytest.approx(0.5)
    rep = validate(np.diag([1.2, -0.2]).astype(complex))
    assert not rep.positive and rep.min_eigenvalue == pytest.approx(-0.2)
    rep = validate(np.array([[0.5, 0.1], [0.2, 0.5]], dtype=complex))
    assert not rep.hermitian and rep.failures()


def test_validate_custom_tolerances():
    m = np.diag([1 + 1e-9, 0.0]).astype(complex)
    assert not validate(m).passed
    assert validate(m, Tolerances(trace=1e-8)).passed


def test_operator_matrix_checks_hermiticity():
    with pytest.raises(ValueError):
        OperatorMatrix(np.array([[0, 1], [0, 0]], dtype=complex), hermitian=True)
    op = OperatorMatrix(np.eye(2, dtype=complex), hermitian=True)
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 2  # immutable


def test_constructor_examples():
    rho = from_spec("fock:3", 10)
    expected = np.zeros((10, 10))
    expected[3, 3] = 1
    np.testing.assert_array_equal(rho.matrix, expected)
    rho = from_spec("mixture:0=0.5,1=0.5", 6)
    np.testing.assert_array_equal(rho.populations, [0.5, 0.5, 0, 0, 0, 0])
    th = thermal(1.0, 60)
    np.testing.assert_allclose(th.populations, 0.5 ** (np.arange(60) + 1) / (1 - 0.5**60), rtol=1e-12)
    assert np.trace(th.matrix).real >= 1 - 1e-12


@pytest.mark.parametrize("spec", [
    "fock:0", "fock:4", "mixture:0=0.25,3=0.75", "coherent:1+0.5j", "coherent:0.8",
    "squeezed:0.3", "squeezed:0.2+0.1j", "thermal:1", "thermal:0.3",
])
def test_every_constructed_state_validates(spec):
    assert validate(from_spec(spec, 40)).passed


@pytest.mark.parametrize("spec", ["fock:-1", "fock:12", "mixture:0=1.2,1=-0.2", "mixture:0=0.5",
                                  "mixture:zero", "nothing:1", "fock", "coherent:abc", "thermal:-1"])
def test_bad_specs(spec):
    with pytest.raises(ValueError):
        from_spec(spec, 10)


def test_state_file_round_trip_is_bit_exact(tmp_path, rng):
    rho = DensityOperator(random_mixed(rng, 5, 9), label="random")
    path = tmp_path / "s.json"
    save_state(rho, path)
    back = load_state(path)
    np.testing.assert_array_equal(back.matrix, rho.matrix)
    assert back.label == "random"
    data = json.loads(path.read_text())
    assert data["dim"] == 9 and data["kind"] == "matrix" and len(data["matrix"]) == 81


def test_state_file_param_form():
    rho = state_from_dict({"dim": 12, "kind": "coherent", "params": {"beta": [0.5, -0.2]}})
    ref = coherent(0.5 - 0.2j, 12)
    np.testing.assert_allclose(rho.matrix, ref.matrix, atol=1e-15)
    rho = state_from_dict({"dim": 8, "kind": "mixture", "params": {"populations": {"0": 0.5, "2": 0.5}}})
    np.testing.assert_array_equal(rho.populations[:3], [0.5, 0, 0.5])
    nested = state_from_dict({"dim": 2, "kind": "matrix", "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]})
    assert nested.matrix[0, 0] == 1
    with pytest.raises(StateSpecError):
        state_from_dict({"dim": 2, "kind": "matrix"})
    with pytest.raises(StateSpecError):
        state_from_dict({"kind": "fock"})


def test_named_state_round_trip(tmp_path):
    for rho in (number_state(2, 10), squeezed_vacuum(0.25, 30), thermal(0.5, 20)):
        path = tmp_path / "x.json"
        save_state(rho, path)
        np.testing.assert_array_equal(load_state(path).matrix, rho.matrix)


def test_truncation_indicator_and_warning():
    assert truncation_indicator(number_state(0, 20).matrix) == 0
    assert truncation_indicator(number_state(19, 20).matrix) == 1
    with pytest.warns(UserWarning):
        thermal(5.0, 20)


def test_default_cutoff_env(monkeypatch):
    monkeypatch.delenv("GAUSSBOUND_CUTOFF", raising=False)
    assert default_cutoff() == 60
    monkeypatch.setenv("GAUSSBOUND_CUTOFF", "24")
    assert default_cutoff() == 24


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12).filter(lambda w: sum(w) > 1e-3))
def test_mixtures_validate(weights):
    w = np.array(weights) / sum(weights)
    rho = mixture(w, 16)
    assert validate(rho).passed
    np.testing.assert_allclose(rho.populations[: len(w)], w)
