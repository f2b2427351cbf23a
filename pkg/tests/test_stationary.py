import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anharm.errors import IllConditionedPolynomial
from anharm.model import OscillatorSpec, UnitSystem, apply_n_scaling
from anharm.stationary import (
    CONVERGENCE_VIOLATION,
    MAXIMUM_OR_SADDLE,
    ROOT_RESIDUAL_TOL,
    Branch,
    StationarityPolynomial,
    build_polynomial,
    classify_and_filter,
    convergence_ratios,
    find_positive_real_roots,
    second_derivative,
    solve_branches,
)
from helpers import bisection_roots, random_spec

# sign-change scan of x**5 - x + 0.06 on (0, 10], step 1e-4, bisection to 1e-12
CUBIC_ROOTS = (0.06000077765039, 0.98440110113774)


def poly(coeffs, order=None):
    return StationarityPolynomial(tuple(coeffs), order=len(coeffs) - 3 if order is None else order)


def test_polynomial_harmonic(harmonic_spec):
    p = build_polynomial(harmonic_spec)
    assert p.coefficients == (1.0, 0.0, 0.0, 0.0, -1.0)
    assert p.degree == 4


def test_polynomial_cubic(cubic_spec):
    assert build_polynomial(cubic_spec).coefficients == pytest.approx((1.0, 0.0, 0.0, 0.0, -1.0, 0.06), abs=1e-16)


def test_polynomial_mass_scaling():
    spec = OscillatorSpec(UnitSystem(mass=2.0), 2, {2: 0.3})
    assert build_polynomial(spec).coefficients == (1.0, 0.0, 0.0, 0.0, -4 * 0.3)


def test_polynomial_invariants_on_higher_order():
    spec = OscillatorSpec(UnitSystem(), 5, {2: 0.5, 3: -0.02, 5: 1e-5})
    p = build_polynomial(spec)
    assert p.degree == 7
    assert p.coefficients[0] == 1.0
    # dp**(N-i) coefficient is -m i a'_i, placed at index i + 2
    assert p.coefficients[4] == -1.0
    assert p.coefficients[5] == pytest.approx(0.06)
    assert p.coefficients[6] == 0.0
    assert p.coefficients[7] == pytest.approx(-5e-5)


def test_effective_degree_drops_for_missing_top_term():
    spec = OscillatorSpec(UnitSystem(), 4, {2: 0.5, 3: -0.02})
    p = build_polynomial(spec)
    assert p.degree == 6
    assert p.effective_degree == 5
    assert find_positive_real_roots(p) == pytest.approx(CUBIC_ROOTS, rel=1e-12)


def test_roots_unit_quartic():
    assert find_positive_real_roots(poly([1, 0, 0, 0, -1])) == [1.0]


def test_roots_no_real():
    assert find_positive_real_roots(poly([1, 0, 0, 0, 1])) == []


def test_bisection_oracle_reproduces_frozen_cubic_roots():
    roots = bisection_roots(lambda x: x**5 - x + 0.06)
    assert roots == pytest.approx(CUBIC_ROOTS, abs=1e-11)


def test_roots_cubic_match_oracle(cubic_spec):
    p = build_polynomial(cubic_spec)
    roots = find_positive_real_roots(p)
    assert roots == pytest.approx(CUBIC_ROOTS, abs=1e-12)
    for r in roots:
        assert p.relative_residual(r) <= ROOT_RESIDUAL_TOL


def test_roots_sorted_and_positive():
    # (x-0.5)(x-1)(x-2)(x+1) = x^4 - 2.5x^3 + 2.5x - 1
    p = StationarityPolynomial((1.0, -2.5, 0.0, 2.5, -1.0), order=2)
    assert find_positive_real_roots(p) == pytest.approx([0.5, 1.0, 2.0], rel=1e-12)


def test_double_root_collapses():
    # (x-1)^2 (x+1)(x+2) = x^4 + x^3 - 3x^2 - x + 2
    p = StationarityPolynomial((1.0, 1.0, -3.0, -1.0, 2.0), order=2)
    roots = find_positive_real_roots(p)
    assert roots == pytest.approx([1.0], rel=1e-7)


def test_ill_conditioned_polynomial_is_diagnosed():
    spec = OscillatorSpec(UnitSystem(), 3, {2: 0.5, 3: -1e-14})
    with pytest.raises(IllConditionedPolynomial, match="rescale"):
        find_positive_real_roots(build_polynomial(spec))


def test_dimensionful_units_are_reduced_before_solving():
    units = UnitSystem(hbar=1.054571817e-34, mass=9.1093837e-31, omega_har=1e15)
    s = units.momentum_scale
    spec = OscillatorSpec(units, 3, {2: units.mass * (units.hbar * units.omega_har) ** 2 / 2, 3: -0.02 * s**5 / units.mass})
    roots = find_positive_real_roots(build_polynomial(spec))
    assert [r / s for r in roots] == pytest.approx(CUBIC_ROOTS, rel=1e-10)


def test_classify_cubic(cubic_spec):
    low, high = classify_and_filter(cubic_spec, find_positive_real_roots(build_polynomial(cubic_spec)))
    assert (low.index_j, high.index_j) == (1, 2)
    assert not low.accepted and low.rejection_reason == MAXIMUM_OR_SADDLE
    # second-derivative formula evaluated at the bisection-oracle root
    x = CUBIC_ROOTS[0]
    assert low.second_derivative == pytest.approx(1 + 3.0 / x**4 - 0.24 / x**5, rel=1e-8)
    assert low.second_derivative == pytest.approx(-77151.49, rel=1e-6)
    assert high.accepted and high.rejection_reason is None
    assert high.convergence_ratios == pytest.approx((0.02 / (0.5 * CUBIC_ROOTS[1]),), rel=1e-12)
    assert high.convergence_ratios[0] == pytest.approx(0.040634, abs=1e-6)


def test_classify_harmonic(harmonic_spec):
    (b,) = solve_branches(harmonic_spec)
    assert b.accepted
    assert b.convergence_ratios == ()
    assert b.second_derivative == pytest.approx(4.0, rel=1e-14)


def test_convergence_violation_is_reported():
    spec = OscillatorSpec(UnitSystem(), 3, {2: 0.5, 3: 0.2})
    branches = solve_branches(spec)
    assert branches and not any(b.accepted for b in branches)
    assert {b.rejection_reason for b in branches} == {CONVERGENCE_VIOLATION}


def test_eta_is_configurable():
    loose = OscillatorSpec(UnitSystem(), 3, {2: 0.5, 3: 0.2}, eta=1.0)
    assert any(b.accepted for b in solve_branches(loose))


def test_convergence_ratio_skips_vanishing_terms():
    spec = OscillatorSpec(UnitSystem(), 4, {2: 0.5, 4: -0.001})
    ratios = convergence_ratios(spec, 1.0)
    assert ratios == pytest.approx((0.0, 0.001 / 0.5))


def test_double_root_is_rejected():
    # fold of x**5 - x - 3 a'_3 at x**4 = 1/5
    xf = 0.2**0.25
    a3 = xf * (xf**4 - 1) / 3
    spec = OscillatorSpec(UnitSystem(), 3, {2: 0.5, 3: a3}, eta=10.0)
    (b,) = classify_and_filter(spec, [xf])
    assert b.rejection_reason == MAXIMUM_OR_SADDLE


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), order=st.integers(3, 8))
def test_root_residual_and_count_bounds(seed, order):
    spec = random_spec(np.random.default_rng(seed), order)
    p = build_polynomial(spec)
    roots = find_positive_real_roots(p)
    for r in roots:
        assert p.relative_residual(r) <= ROOT_RESIDUAL_TOL
    nonzero = [c for c in p.coefficients if c != 0.0]
    sign_changes = sum(1 for a, b in zip(nonzero, nonzero[1:]) if a * b < 0)
    assert len(roots) <= min(order + 2, sign_changes)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), order=st.integers(3, 8))
def test_roots_agree_with_bisection_oracle(seed, order):
    spec = random_spec(np.random.default_rng(seed), order)
    p = build_polynomial(spec)
    c = p.coefficients
    # reduced units; every positive root of these specs lies below 4
    expected = bisection_roots(lambda x: float(np.polyval(c, x)), 0.0, 4.0, 1e-3, 1e-13)
    got = find_positive_real_roots(p)
    assert got == pytest.approx(expected, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), order=st.integers(3, 8), n=st.sampled_from([2, 3, 4, 9]))
def test_roots_scale_with_sqrt_n(seed, order, n):
    spec = random_spec(np.random.default_rng(seed), order)
    base = find_positive_real_roots(build_polynomial(spec))
    scaled = find_positive_real_roots(build_polynomial(apply_n_scaling(spec, n)))
    assert len(base) == len(scaled)
    for r, rn in zip(base, scaled):
        assert rn == pytest.approx(math.sqrt(n) * r, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), order=st.integers(3, 8))
def test_accepted_branch_sum_rule(seed, order):
    spec = random_spec(np.random.default_rng(seed), order)
    for b in solve_branches(spec):
        if b.accepted:
            total = sum(i * a * b.dp_min ** -(i + 2) for i, a in spec.effective_coeffs().items())
            assert total == pytest.approx(1.0, abs=1e-10)
            assert b.dp_min > 0 and b.second_derivative > 0
            assert max(b.convergence_ratios) <= spec.eta


def test_second_derivative_matches_finite_difference(cubic_spec):
    from anharm.model import energy_at

    x, h = 0.8, 1e-4
    fd = (energy_at(cubic_spec, x + h) - 2 * energy_at(cubic_spec, x) + energy_at(cubic_spec, x - h)) / h**2
    assert second_derivative(cubic_spec, x) == pytest.approx(fd, rel=1e-6)


def test_branch_is_frozen():
    b = Branch(1.0, 1, 4.0, (), True)
    with pytest.raises(Exception):
        b.dp_min = 2.0
