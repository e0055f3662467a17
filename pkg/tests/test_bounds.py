import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nicd.bounds import (
    BoundQuery,
    ExponentRangeError,
    certifies,
    max_success_probability,
    min_alphabet,
    sigma,
    sigma_squared,
    solve_p,
    solve_p_residual,
    theorem3_lower_bound,
    trivial_success_probability,
    trivial_symbol_count,
    verify_hypercontractivity,
)
from nicd.noise import FunctionTable, apply_noise_operator


@given(st.floats(0.01, 0.5))
def test_sigma_is_one_at_p_two(alpha):
    assert sigma(alpha, 2.0) == 1.0


def test_sigma_quarter_three_halves():
    num = 0.75 ** (2 / 3) - 0.25 ** (2 / 3)
    den = 0.25 ** (-1 / 3) * 0.75 - 0.75 ** (-1 / 3) * 0.25
    assert math.isclose(sigma(0.25, 1.5), math.sqrt(num / den), rel_tol=1e-14)


@pytest.mark.parametrize("p", [1.1, 4 / 3, 1.5, 1.9])
def test_sigma_at_half_is_continuous(p):
    assert math.isclose(sigma_squared(0.5, p), p - 1)
    assert math.isclose(sigma_squared(0.5 - 1e-7, p), p - 1, rel_tol=1e-5)


def test_sigma_grows_with_p():
    # sigma(alpha, 2) = 1 is the maximum, and the threshold shrinks as p decreases
    for alpha in (0.01, 0.1, 0.25, 0.4, 0.5):
        vals = [sigma(alpha, p) for p in np.linspace(1.01, 2.0, 100)]
        assert np.all(np.diff(vals) >= -1e-12)


def test_sigma_rejects_bad_arguments():
    with pytest.raises(ValueError):
        sigma(0.6, 1.5)
    with pytest.raises(ExponentRangeError):
        sigma(0.25, 2.5)


def test_binary_threshold_is_sharp():
    # f = 1 + a x on {-1, 1}: ||T f||_2 <= ||f||_p exactly when tau^2 <= p - 1 as a -> 0
    p, a = 1.5, 1e-3
    f = FunctionTable(2, 1, np.array([1 + a, 1 - a]))
    for tau, ok in ((math.sqrt(p - 1) * 0.999, True), (math.sqrt(p - 1) * 1.01, False)):
        lhs = apply_noise_operator(f, tau).norm(2)
        assert (lhs <= f.norm(p)) == ok


def test_solve_p_closed_example():
    p = solve_p(1 / 16, 0.0, 0.75)
    assert math.isclose(p, 4 / 3)
    assert solve_p_residual(1 / 16, 0.0, 0.75, p) < 1e-14


def test_solve_p_tends_to_two():
    assert math.isclose(solve_p(0.1, 0.0, 1e-12), 2.0, rel_tol=1e-10)


@given(st.floats(1e-4, 0.45), st.floats(0.0, 0.3), st.floats(0.01, 0.99))
def test_solve_p_resubstitution(alpha, delta, eps):
    try:
        p = solve_p(alpha, delta, eps)
    except ExponentRangeError:
        assert delta >= -math.log1p(-eps) or (math.log1p(-eps) + delta) / math.log(alpha) >= 1
        return
    assert solve_p_residual(alpha, delta, eps, p) < 1e-12


def test_solve_p_example_residual():
    p = solve_p(0.01, 0.05, 0.5)
    assert solve_p_residual(0.01, 0.05, 0.5, p) < 1e-12


def test_solve_p_above_two_is_rejected():
    with pytest.raises(ExponentRangeError):
        solve_p(0.25, 1.0, 0.5)


def test_bound_query_validation():
    with pytest.raises(ValueError):
        BoundQuery(0.0, 0.5)
    with pytest.raises(ValueError):
        BoundQuery(0.1, 1.0)


def test_min_alphabet_trivial_regime():
    res = min_alphabet(math.log(2), 0.5)
    assert res.S == 2 and res.trivial


def test_min_alphabet_hit_is_first_certified_size():
    res = min_alphabet(0.1, 0.5, trace=True)
    assert res.S == 13 and res.monotone and not res.capped
    assert certifies(13, 0.1, 0.5) and not any(certifies(s, 0.1, 0.5) for s in range(2, 13))
    assert [row[0] for row in res.trace] == list(range(2, 14))
    assert math.isclose(res.sigma_sq, sigma_squared(1 / 13, res.p))
    assert res.sigma_sq >= 0.5


def test_min_alphabet_caps():
    res = min_alphabet(0.001, 0.5, s_max=50)
    assert res.capped and res.S is None


def test_curves_fall_in_delta_and_order_in_epsilon():
    deltas = np.geomspace(1e-2, 1, 25)
    curves = {eps: [min_alphabet(d, eps).S for d in deltas] for eps in (0.5, 0.1, 1e-3)}
    for vals in curves.values():
        assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert all(a <= b <= c for a, b, c in zip(curves[1e-3], curves[0.1], curves[0.5]))


def test_lower_bound_values():
    eps = 0.3
    assert theorem3_lower_bound(10, eps, -math.log1p(-eps)).value == pytest.approx(0.0, abs=1e-15)
    lb = theorem3_lower_bound(40, 0.5, 0.1)
    assert lb.certified and lb.S == 13
    assert math.isclose(lb.value, 2 / solve_p(1 / 40, 0.1, 0.5) - 1)
    assert not theorem3_lower_bound(5, 0.5, 0.1).certified
    assert theorem3_lower_bound(10**6, 0.5, 0.1).value < theorem3_lower_bound(100, 0.5, 0.1).value


def test_success_probability_examples():
    assert math.isclose(max_success_probability(1, 0.4, 0.0), 0.6)
    assert math.isclose(max_success_probability(10, 0.5, 0.05), 0.5**10 * math.exp(0.5))
    # the trivial protocol beats (1 - eps)^k
    assert trivial_success_probability(5, 7, 0.3) > 0.7**5


def test_trivial_symbol_count_examples():
    assert trivial_symbol_count(37, 0.3, 0.0).count == 37
    res = trivial_symbol_count(100, 0.5, 0.1 * math.log(2))
    assert res.count == 111 and res.inflated
    assert res.corrected == 90


def test_corrected_symbol_count_falls_with_delta():
    eps, k = 0.4, 50
    counts = [trivial_symbol_count(k, eps, d).corrected for d in np.linspace(0, 0.5, 40)]
    assert all(a >= b for a, b in zip(counts, counts[1:])) and counts[0] == k


def test_literal_symbol_count_rises_with_delta():
    counts = [trivial_symbol_count(50, 0.4, d).count for d in np.linspace(0, 0.5, 40)]
    assert all(a <= b for a, b in zip(counts, counts[1:])) and counts[-1] > 50


def test_hypercontractivity_constant_and_zero_noise():
    rep = verify_hypercontractivity(3, 2, 1.5, 0.0, 50, seed=0)
    assert rep.passed and rep.max_ratio <= 1 + 1e-12
    f = FunctionTable(3, 2, np.full(9, 4.0))
    assert math.isclose(apply_noise_operator(f, sigma(1 / 3, 1.5)).norm(2), f.norm(1.5))


def test_hypercontractivity_sweep_at_threshold():
    rep = verify_hypercontractivity(3, 2, 4 / 3, sigma(1 / 3, 4 / 3), 1000, seed=1)
    assert rep.guaranteed and rep.passed
