import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_joint
from nicd.noise import FunctionTable, NoiseModel, all_points, joint_probability
from nicd.sets import (
    Cylinder,
    DegenerateSetError,
    Explicit,
    HammingBall,
    MinEntropyError,
    ball_joint_dp,
    best_preimage_set,
    check_min_entropy,
    conditional_agreement,
    cylinder_m_value,
    evaluate,
    joint_agreement,
    m_epsilon,
    membership_mask,
    parse_explicit_set,
    protocol_agreement,
    read_explicit_set,
    set_probability,
    to_explicit,
    write_explicit_set,
)

EPS_GRID = np.linspace(0.0, 1.0, 10)


def brute_pair(spec, eps):
    mask = membership_mask(spec)
    return brute_joint(mask, mask, spec.s, spec.n, eps)


def test_cylinder_probability():
    assert math.isclose(set_probability(Cylinder(3, 5, 2)), 1 / 9)


def test_half_domain_explicit_probability():
    pts = all_points(2, 4)[:8]
    assert math.isclose(set_probability(Explicit(2, 4, tuple(map(tuple, pts)))), 0.5)


def test_small_ball_probability():
    ball = HammingBall(2, 4, 0.5)
    assert ball.cutoff == 1
    assert math.isclose(set_probability(ball), 5 / 16)
    assert math.isclose(set_probability(to_explicit(ball)), 5 / 16)


def test_cylinder_joint_example():
    assert math.isclose(joint_agreement(Cylinder(2, 1, 1), NoiseModel(2, 0.5)), 3 / 8)
    assert math.isclose(brute_pair(Cylinder(2, 1, 1), 0.5), 3 / 8)


@pytest.mark.parametrize("spec", [Cylinder(3, 3, 2), HammingBall(3, 4, 0.3), HammingBall(4, 3, 0.2, "zero")])
def test_noiseless_joint_is_probability(spec):
    assert math.isclose(joint_agreement(spec, NoiseModel(spec.s, 0.0)), set_probability(spec))


def test_ball_dp_matches_enumeration_example():
    ball = HammingBall(3, 5, 0.3)
    for eps in (0.4,):
        assert abs(ball_joint_dp(ball, NoiseModel(3, eps)) - brute_pair(ball, eps)) <= 1e-12


@given(
    st.integers(2, 4),
    st.integers(1, 4),
    st.floats(0.0, 1.2),
    st.sampled_from(["nonzero", "zero"]),
    st.sampled_from(list(EPS_GRID)),
)
@settings(max_examples=40, deadline=None)
def test_ball_dp_matches_enumeration(s, n, alpha, variant, eps):
    try:
        ball = HammingBall(s, n, alpha, variant)
    except DegenerateSetError:
        return
    assert abs(joint_agreement(ball, NoiseModel(s, float(eps))) - brute_pair(ball, float(eps))) <= 1e-11


@given(st.integers(2, 4), st.integers(1, 4), st.data(), st.sampled_from(list(EPS_GRID)))
@settings(max_examples=30, deadline=None)
def test_cylinder_matches_enumeration(s, n, data, eps):
    k = data.draw(st.integers(0, n))
    spec = Cylinder(s, n, k)
    assert abs(joint_agreement(spec, NoiseModel(s, float(eps))) - brute_pair(spec, float(eps))) <= 1e-11


def test_explicit_joint_matches_enumeration(rng):
    s, n = 3, 3
    mask = rng.random(s**n) < 0.3
    spec = Explicit(s, n, tuple(map(tuple, all_points(s, n)[mask])))
    assert math.isclose(joint_agreement(spec, NoiseModel(s, 0.35)), brute_pair(spec, 0.35), abs_tol=1e-13)


def test_binary_cylinder_m_value():
    assert math.isclose(m_epsilon(Cylinder(2, 1, 1), NoiseModel(2, 0.5)), math.log(4 / 3) / math.log(2))
    assert math.isclose(cylinder_m_value(2, 0.5), 0.41503749927884376)


@pytest.mark.parametrize("spec", [Cylinder(3, 3, 1), HammingBall(3, 5, 0.4), Explicit(2, 2, ((0, 1), (1, 1), (1, 0)))])
def test_m_value_is_one_under_independence(spec):
    assert math.isclose(m_epsilon(spec, NoiseModel(spec.s, 1.0)), 1.0)


@given(st.integers(2, 6), st.integers(1, 6), st.floats(0.01, 0.99))
@settings(max_examples=40)
def test_cylinder_m_value_does_not_depend_on_k(s, n, eps):
    vals = [m_epsilon(Cylinder(s, n, k), NoiseModel(s, eps)) for k in range(1, n + 1)]
    assert np.allclose(vals, cylinder_m_value(s, eps), rtol=1e-12)


def test_degenerate_sets_raise_or_are_reported():
    with pytest.raises(DegenerateSetError):
        m_epsilon(Cylinder(3, 2, 0), NoiseModel(3, 0.2))
    with pytest.raises(DegenerateSetError):
        m_epsilon(Cylinder(3, 2, 1), NoiseModel(3, 0.0))
    with pytest.raises(DegenerateSetError):
        HammingBall(2, 4, 5.0)
    report = evaluate(Cylinder(3, 2, 0), NoiseModel(3, 0.2))
    assert report.m_value is None and report.degenerate


def test_evaluate_methods():
    assert evaluate(Cylinder(4, 8, 3), NoiseModel(4, 0.25)).method == "closed-form"
    assert evaluate(HammingBall(3, 200, 0.5), NoiseModel(3, 0.3)).method == "dp"
    assert evaluate(Explicit(2, 2, ((0, 0),)), NoiseModel(2, 0.3)).method == "enumeration"


@given(st.integers(2, 3), st.integers(1, 3), st.floats(0.05, 0.95), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_conditional_at_least_probability(s, n, eps, seed):
    # positive definiteness of the kernel: P(Y in A | X in A) >= P(A)
    mask = np.random.default_rng(seed).random(s**n) < 0.4
    if not mask.any() or mask.all():
        return
    spec = Explicit(s, n, tuple(map(tuple, all_points(s, n)[mask])))
    assert conditional_agreement(spec, NoiseModel(s, eps)) >= set_probability(spec) - 1e-12


def trivial_protocol(s, n, k):
    return FunctionTable.from_callable(s, n, lambda x: sum(v * s**i for i, v in enumerate(x[:k])), dtype=np.int64)


def brute_protocol_agreement(f, g, model):
    pts = all_points(f.s, f.n)
    fx, gy = f.flat(), g.flat()
    total = 0.0
    for i, x in enumerate(pts):
        for j, y in enumerate(pts):
            if fx[i] == gy[j]:
                total += joint_probability(model, x, y)
    return total


def test_best_preimage_on_trivial_protocol():
    s, n, k, eps = 3, 3, 2, 0.4
    f = trivial_protocol(s, n, k)
    spec, cond = best_preimage_set(f, f, k, NoiseModel(s, eps))
    assert len(spec) == s ** (n - k)
    assert math.isclose(cond, (1 - (1 - 1 / s) * eps) ** k)


def test_best_preimage_constant_protocol_is_degenerate():
    f = FunctionTable(2, 3, np.zeros(8, dtype=np.int64))
    with pytest.raises(DegenerateSetError):
        best_preimage_set(f, f, 0, NoiseModel(2, 0.3))


def test_min_entropy_is_enforced():
    f = FunctionTable(2, 3, np.array([0, 0, 0, 1, 2, 3, 4, 5]))
    with pytest.raises(MinEntropyError):
        check_min_entropy(f, 2)


def test_best_preimage_beats_random_protocols(rng):
    s, n, k = 2, 4, 2
    for trial in range(20):
        labels_f = rng.permutation(np.repeat(np.arange(4), 4))
        labels_g = labels_f if trial % 3 == 0 else rng.permutation(np.repeat(np.arange(4), 4))
        f, g = FunctionTable(s, n, labels_f), FunctionTable(s, n, labels_g)
        model = NoiseModel(s, float(rng.uniform(0.05, 0.95)))
        _, cond = best_preimage_set(f, g, k, model)
        exact = brute_protocol_agreement(f, g, model)
        assert math.isclose(protocol_agreement(f, g, model), exact, abs_tol=1e-13)
        assert cond >= exact - 1e-12


def test_explicit_set_round_trip(tmp_path):
    spec = Explicit(12, 3, ((0, 11, 3), (10, 0, 0), (1, 2, 3)))
    path = tmp_path / "a.txt"
    write_explicit_set(spec, path)
    assert read_explicit_set(path) == spec


def test_explicit_set_parse_errors_name_the_line():
    with pytest.raises(ValueError, match="line 3"):
        parse_explicit_set("3 2\n01\n0x\n")
    with pytest.raises(ValueError):
        parse_explicit_set("3 2\n01\n01\n")
    assert len(parse_explicit_set("# comment\n2 2\n00\n# another\n11\n")) == 2
