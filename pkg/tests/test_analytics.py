import math

import mpmath
import numpy as np
import pytest

import chasescape as cs
from chasescape.errors import ParameterError


def rho_forms_extended(x: float):
    """Both algebraic forms in 50-digit arithmetic (the dual route)."""
    with mpmath.workdps(50):
        z = mpmath.mpf(x)
        textbook = 2 * z - 1 - 2 * mpmath.sqrt(z * z - z)
        stable = (mpmath.sqrt(z) - mpmath.sqrt(z - 1)) ** 2
        return float(textbook), float(stable)


class TestRho:
    def test_at_one(self):
        assert cs.rho(1.0) == 1.0

    def test_figure_operating_point(self):
        # mu_s = 3, r = 1 in d = 2: x = 3 pi
        assert cs.rho(3 * math.pi) == pytest.approx(0.028033915937234730, rel=1e-12)

    def test_agrees_with_both_algebraic_forms(self):
        for x in np.geomspace(1.0 + 1e-9, 1e6, 400):
            textbook, stable = rho_forms_extended(float(x))
            assert cs.rho(float(x)) == pytest.approx(textbook, rel=1e-12)
            assert cs.rho(float(x)) == pytest.approx(stable, rel=1e-12)

    def test_strictly_decreasing(self):
        xs = np.arange(1.0, 100.0, 0.25)
        for x in xs:
            assert cs.rho(float(x)) > cs.rho(float(x) + 1e-3)

    def test_range(self):
        for x in np.geomspace(1.0, 1e6, 50):
            v = cs.rho(float(x))
            assert 0.0 < v <= 1.0

    def test_domain(self):
        with pytest.raises(ParameterError):
            cs.rho(0.999)


class TestTreeCriticalRate:
    def test_k_one(self):
        assert cs.tree_critical_rate(1) == 1.0

    def test_k_two(self):
        assert cs.tree_critical_rate(2) == pytest.approx(3.0 - 2.0 * math.sqrt(2.0),
                                                         rel=1e-12)

    def test_equals_rho_at_integers(self):
        for k in range(1, 51):
            assert cs.tree_critical_rate(k) == pytest.approx(cs.rho(float(k)), rel=1e-9)

    def test_domain(self):
        with pytest.raises(ParameterError):
            cs.tree_critical_rate(0)


class TestLocalSurvivalBounds:
    def test_zero_intensities(self):
        lower, upper = cs.local_survival_bounds(0.0, 0.0, 1.0, 2, theta=0.25)
        assert lower == 1.0 and upper == 0.75

    def test_half_half(self):
        lower, upper = cs.local_survival_bounds(0.5, 0.5, 1.0, 2, theta=0.0)
        assert lower == pytest.approx(math.exp(-math.pi), rel=1e-12)
        assert upper == pytest.approx(math.exp(-math.pi / 2), rel=1e-12)

    def test_order_condition(self):
        # lower <= upper whenever theta <= 1 - exp(-mu_s kappa_r)
        kappa = cs.ball_volume(2, 1.0)
        for mu_s in (0.1, 0.5, 1.0, 2.0):
            for mu_w in (0.0, 0.5, 1.5):
                cutoff = 1.0 - math.exp(-mu_s * kappa)
                for theta in (0.0, cutoff / 2, cutoff):
                    lower, upper = cs.local_survival_bounds(mu_s, mu_w, 1.0, 2, theta)
                    assert lower <= upper + 1e-15


class TestClosedNodeProb:
    def test_no_knights(self):
        assert cs.closed_node_prob(0, 3, 1.0) == 0.0

    def test_symmetric_race(self):
        assert cs.closed_node_prob(1, 1, 1.0) == 0.5

    def test_star_value(self):
        assert cs.closed_node_prob(1, 2, 1.0) == pytest.approx(1.0 / 3.0)

    def test_requires_susceptible_neighbor(self):
        with pytest.raises(ParameterError):
            cs.closed_node_prob(1, 0, 1.0)


class TestOpenNodeLowerBound:
    def test_no_susceptible_neighbors(self):
        assert cs.open_node_lower_bound(0, 5, 1.0) == 1.0

    def test_single_neighbor(self):
        assert cs.open_node_lower_bound(1, 0, 1.0) == 0.5

    def test_monotone_in_lambda(self):
        values = [cs.open_node_lower_bound(3, 2, lam) for lam in (1.0, 2.0, 4.0, 8.0)]
        assert all(a < b for a, b in zip(values, values[1:]))


class TestReflectionDecay:
    def test_fixed_points(self):
        assert cs.reflection_decay(1.0) == 1.0
        assert cs.reflection_decay(0.0) == 0.0

    def test_below_one_off_unity(self):
        for lam in (0.2, 0.9, 1.1, 7.0):
            assert cs.reflection_decay(lam) < 1.0

    def test_inversion_symmetry(self):
        for lam in (2.0, 3.0, 10.0):
            assert cs.reflection_decay(lam) == pytest.approx(
                cs.reflection_decay(1.0 / lam), rel=1e-12)


class TestSpeedConstant:
    def test_diverges_for_fast_speeds(self):
        values = [cs.speed_constant(1.0, 1.0, 1.0, a) for a in (10.0, 100.0, 1e4)]
        assert values[0] < values[1] < values[2]
        assert values[-1] > 5.0

    def test_vanishes_at_slow_limit(self):
        assert cs.speed_constant(1.0, 1.0, 1.0, 1.0 + 1e-6) == pytest.approx(0.0, abs=1e-9)

    def test_root_at_critical_speed(self):
        assert cs.speed_constant(math.e, 1.0, 1.0, 6.3054) == pytest.approx(0.0, abs=1e-4)

    def test_domain(self):
        with pytest.raises(ParameterError):
            cs.speed_constant(1.0, 1.0, 1.0, 0.5)


def bisect_alpha_oracle(gamma, lambda_i, r):
    """Independent route: bisection directly on alpha for the sign change of C."""
    lo = r * lambda_i * (1.0 + 1e-12)
    hi = r * lambda_i * 2.0
    while cs.speed_constant(gamma, lambda_i, r, hi) <= 0:
        hi *= 2.0
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if cs.speed_constant(gamma, lambda_i, r, mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


class TestCriticalSpeed:
    def test_reference_value(self):
        sol = cs.critical_speed(math.e, 1.0, 1.0)
        oracle = bisect_alpha_oracle(math.e, 1.0, 1.0)
        assert sol.alpha_c == pytest.approx(oracle, abs=1e-6)
        assert sol.alpha_c == pytest.approx(6.3054, abs=1e-4)
        assert sol.t_star == pytest.approx(0.15859433956303936, rel=1e-9)

    def test_linear_in_lambda(self):
        base = cs.critical_speed(2.0, 1.0, 1.0).alpha_c
        assert cs.critical_speed(2.0, 2.0, 1.0).alpha_c == pytest.approx(2 * base, rel=1e-12)
        assert cs.critical_speed(2.0, 1.0, 3.0).alpha_c == pytest.approx(3 * base, rel=1e-12)

    def test_increasing_in_gamma(self):
        values = [cs.critical_speed(g, 1.0, 1.0).alpha_c for g in (1.5, math.e, 10.0)]
        assert values[0] < values[1] < values[2]

    def test_exceeds_trivial_speed(self):
        sol = cs.critical_speed(1.2, 0.7, 2.0)
        assert sol.alpha_c > 0.7 * 2.0
        assert 0.0 < sol.t_star < 1.0

    def test_sign_pattern_around_root(self):
        sol = cs.critical_speed(math.e, 1.0, 1.0)
        assert cs.speed_constant(math.e, 1.0, 1.0, sol.alpha_c * (1 + 1e-6)) > 0
        for frac in (0.05, 0.3, 0.7, 0.99):
            alpha = 1.0 * (1 + 1e-9) + frac * (sol.alpha_c * (1 - 1e-9) - 1.0)
            assert cs.speed_constant(math.e, 1.0, 1.0, alpha) < 0

    def test_domain(self):
        with pytest.raises(ParameterError):
            cs.critical_speed(1.0, 1.0, 1.0)


class TestExpectedSawCount:
    def test_length_zero(self):
        assert cs.expected_saw_count(1.0, 1.0, 2, 0) == 1.0

    def test_pi_cubed(self):
        assert cs.expected_saw_count(1.0, 1.0, 2, 3) == pytest.approx(
            31.00627668029982, rel=1e-12)

    def test_purity(self):
        a = cs.expected_saw_count(0.7, 1.3, 3, 4)
        b = cs.expected_saw_count(0.7, 1.3, 3, 4)
        assert a == b
