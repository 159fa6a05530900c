import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussbound.errors import ParameterRangeError
from gaussbound.extremal import (
    CURVE_COLUMNS,
    LOWER_G,
    _branch_peak,
    _min_branch_g,
    alpha_min,
    bound_margin,
    curve_csv,
    curve_json,
    curve_rows,
    extremal_curve,
    high_branch,
    low_branch,
    interval_index,
    level_gaussianity,
    max_branch_limit,
    max_branch_point,
    min_branch_point,
    mixture_g,
    number_state_g,
    rho_max,
    rho_max_g,
    rho_max_weight,
    rho_min,
)
from gaussbound.gaussian import moments
from gaussbound.gaussianity import gaussianity

# alpha_min values frozen from an independent 40-digit root find of the branch polynomial
FROZEN_ALPHA_MIN = {
    0.9: 1.9249505911485287404,
    0.8: 2.6180339887498948482,
    0.745: 4.8825784984893290939,
    0.74: 6.8994118981034667224,
    0.739: 6.9586430571153114081,
    0.737: 10.966075232052192760,
}


def test_rho_min_examples():
    rho = rho_min(0, 1.0, 10)
    assert rho.populations[0] == 1
    rho = rho_min(1, 0.0, 10)
    np.testing.assert_array_equal(rho.populations[:4], [0, 0, 1, 0])
    rho = rho_min(0, 0.5, 60)
    assert moments(rho).alpha == pytest.approx(2.0)
    assert gaussianity(rho).g == pytest.approx(8 / 9, abs=1e-12)
    assert mixture_g({0: 0.5, 1: 0.5}) == pytest.approx(8 / 9, abs=1e-15)
    with pytest.raises(ParameterRangeError):
        rho_min(-1, 0.5)
    with pytest.raises(ParameterRangeError):
        rho_min(0, 1.5)
    with pytest.raises(ParameterRangeError):
        rho_min(5, 0.5, dim=6)


def test_rho_max_examples():
    assert rho_max(0, 0.3, 5).populations[0] == 1
    w = rho_max_weight(20, 2.0)
    rho = rho_max(20, w, 80)
    assert moments(rho).alpha == pytest.approx(2.0, abs=1e-12)
    expected = 1.3000000000095599066  # 40-digit evaluation of the two-level mixture
    assert rho_max_g(20, 2.0) == pytest.approx(expected, abs=1e-14)
    assert gaussianity(rho).g == pytest.approx(expected, abs=1e-10)
    gaps = [max_branch_limit(2.0) - rho_max_g(n, 2.0) for n in (5, 10, 20, 40, 80)]
    assert all(a > b > 0 for a, b in zip(gaps, gaps[1:]))  # approaches 4/3 from below
    assert max_branch_limit(3.0) == pytest.approx(1.5)
    assert alpha_min(max_branch_limit(3.0)).alpha_min == pytest.approx(3.0)


def test_interval_index_examples():
    assert interval_index(1.0) == 0
    assert interval_index(0.75) == 1
    assert interval_index(0.74) == 2
    assert interval_index(20 / 27) == 2
    for bad in (LOWER_G, 0.3, 1.01):
        with pytest.raises(ParameterRangeError):
            interval_index(bad)


def test_interval_index_large_n():
    for n in (50, 700, 5000):
        g = number_state_g(n)
        assert interval_index(g) == n
        assert interval_index(0.5 * (g + number_state_g(n + 1))) == n


def test_alpha_min_anchors():
    assert alpha_min(1.0).alpha_min == pytest.approx(1.0, abs=1e-15)
    assert alpha_min(0.75).alpha_min == pytest.approx(3.0, abs=1e-12)
    assert alpha_min(1.5).alpha_min == pytest.approx(3.0, abs=1e-12)
    assert alpha_min(1.5).method == "closed_form_high"
    assert alpha_min(0.9).method == "closed_form_low" and alpha_min(0.9).n == 0
    assert math.isinf(alpha_min(2.0).alpha_min)
    for bad in (0.5, LOWER_G, 2.01):
        with pytest.raises(ParameterRangeError):
            alpha_min(bad)


@pytest.mark.parametrize("g", sorted(FROZEN_ALPHA_MIN))
def test_alpha_min_frozen(g):
    assert alpha_min(g).alpha_min == pytest.approx(FROZEN_ALPHA_MIN[g], abs=1e-10)


def test_continuity_at_unit_g():
    assert abs(low_branch(1.0) - high_branch(1.0)) < 1e-10
    assert alpha_min(1.0).alpha_min == 1.0
    for eps in (1e-4, 1e-8, 1e-12):
        # the low branch approaches 1 like 2 sqrt(eps), the high one like 2 eps
        assert abs(alpha_min(1 - eps).alpha_min - 1) <= 3 * math.sqrt(eps)
        assert abs(alpha_min(1 + eps).alpha_min - 1) <= 3 * eps


def test_number_states_reach_the_bound():
    for n in range(11):
        res = alpha_min(number_state_g(n))
        assert res.alpha_min == pytest.approx(2 * n + 1, abs=1e-9)
        rho = res.state(n + 4)
        assert gaussianity(rho).g == pytest.approx(number_state_g(n), abs=1e-12)


def test_jumps_at_interval_endpoints():
    for n in range(1, 8):
        g = number_state_g(n)
        right = alpha_min(g * (1 + 1e-11)).alpha_min
        left = alpha_min(g * (1 - 1e-11)).alpha_min
        assert left - right > 0.1


def test_bisection_bracket_starts_at_branch_peak():
    # the (n, n+1) branch rises on [2n+1, peak] and falls on [peak, 2n+3]
    for n in range(0, 6):
        peak = _branch_peak(n)
        assert 2 * n + 1 <= peak < 2 * n + 3
        assert _min_branch_g(peak, n) >= _min_branch_g(2 * n + 1, n)
        if n:
            assert _min_branch_g(peak, n) > _min_branch_g(2 * n + 1, n)
        xs = np.linspace(peak, 2 * n + 3, 200)
        assert np.all(np.diff([_min_branch_g(x, n) for x in xs]) < 0)


def test_monotone_v_shape():
    low = np.linspace(LOWER_G + 1e-3, 1.0, 400)
    vals = [alpha_min(g).alpha_min for g in low]
    assert np.all(np.diff(vals) <= 1e-12)
    high = np.linspace(1.0, 1.999, 200)
    vals = [alpha_min(g).alpha_min for g in high]
    assert np.all(np.diff(vals) >= 0)


def test_reconstruction_consistency():
    gs = np.linspace(LOWER_G + 1e-3, 2.0, 500)
    checked = 0
    for g in gs:
        res = alpha_min(float(g))
        assert res.alpha_min >= 1.0
        if g > 1:
            continue  # the bound is a limit there (rho_max with n -> infinity)
        rho = res.state(res.n + 4)
        assert gaussianity(rho).g == pytest.approx(g, abs=1e-8)
        assert moments(rho).alpha == pytest.approx(res.alpha_min, abs=1e-8)
        checked += 1
    assert checked > 100


def test_min_branch_points():
    p = min_branch_point(3.0)
    assert (p.n, p.r) == (1, 1.0) and p.g == pytest.approx(0.75)
    p = min_branch_point(5.0)
    assert p.g == pytest.approx(160 / 216, abs=1e-14)
    p = min_branch_point(2.0)
    assert (p.n, p.r) == (0, 0.5)
    assert min_branch_point(1.0).g == 1.0
    assert max_branch_point(5.0).g == pytest.approx(5 / 3)
    with pytest.raises(ParameterRangeError):
        min_branch_point(0.99)


@given(st.floats(1.0, 200.0))
def test_min_branch_point_invariants(alpha):
    p = min_branch_point(alpha)
    assert 0 < p.r <= 1
    assert p.r * (2 * p.n + 1) + (1 - p.r) * (2 * p.n + 3) == pytest.approx(alpha, abs=1e-12)
    direct = p.r * level_gaussianity(p.n, alpha) + (1 - p.r) * level_gaussianity(p.n + 1, alpha)
    assert p.g == pytest.approx(direct, abs=1e-12)
    assert LOWER_G < p.g <= 1.0 + 1e-15


@given(st.floats(LOWER_G + 1e-6, 1.0))
def test_bound_margin_zero_on_minimizer(g):
    res = alpha_min(g)
    assert bound_margin(res.alpha_min, g) == 0.0


def test_curve_outputs():
    rows = curve_rows(extremal_curve(1, 9, 9))
    assert len(rows) == 9
    by_alpha = {r.alpha: r for r in rows}
    assert by_alpha[3.0].g_min == pytest.approx(0.75, abs=1e-14)
    assert by_alpha[3.0].g_max == pytest.approx(1.5)
    assert by_alpha[1.0].g_min == by_alpha[1.0].g_max == 1.0
    text = curve_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(CURVE_COLUMNS) and len(lines) == 10
    assert float(lines[3].split(",")[1]) == rows[2].g_min  # 17 digits round-trip
    data = json.loads(curve_json(rows, {"cutoff": None}))
    assert data["rows"][2]["alpha"] == 3.0 and data["metadata"] == {"cutoff": None}
    with pytest.raises(ParameterRangeError):
        extremal_curve(0.5, 3, 5)
    with pytest.raises(ParameterRangeError):
        extremal_curve(1, 3, 1)


def test_min_curve_scallops_between_number_states():
    # g_min is not monotone between vertices: mixing |1> and |2> raises g above g(|1>) first
    assert min_branch_point(4.0).g == pytest.approx(0.768, abs=1e-14)
    assert min_branch_point(4.0).g > min_branch_point(3.0).g
    vertices = [min_branch_point(2 * n + 1.0).g for n in range(40)]
    assert np.all(np.diff(vertices) < 0) and vertices[-1] > LOWER_G
