import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from optframe import (Capability as C, ConfigurationError, brute_force_grid_min, check_gradient,
                      evaluate_full, finite_difference_gradient, make_four_quadratics,
                      make_rosenbrock, make_sparse_quadratic, make_sphere, synthetic_logistic)
from optframe.core import Problem, densify, gradient_full
from optframe.validation import relative_error


class FlippedSphere(Problem):
    capabilities = C.FULL_EVALUATE | C.FULL_GRADIENT
    name = "flipped_sphere"

    def __init__(self, dim=3):
        self.dim = dim

    def evaluate(self, params):
        return float(np.sum(np.square(params)))

    def gradient(self, params):
        return -2.0 * np.asarray(params, dtype=float)


class Pole(Problem):
    """1/x: non-finite at the origin."""

    capabilities = C.FULL_EVALUATE
    dim = 1

    def evaluate(self, params):
        with np.errstate(divide="ignore"):
            return float(np.float64(1.0) / params[0])


class TestFiniteDifferences:
    def test_sphere(self):
        assert finite_difference_gradient(make_sphere(1), [3.0], 1e-5)[0] == pytest.approx(6.0, abs=1e-9)

    def test_four_quadratics(self):
        np.testing.assert_allclose(finite_difference_gradient(make_four_quadratics(), np.zeros(4)),
                                   [-4, -2, -3, -8], atol=1e-8)

    def test_rosenbrock(self):
        np.testing.assert_allclose(finite_difference_gradient(make_rosenbrock(), [0, 0], 1e-6),
                                   [-2, 0], atol=1e-6)

    def test_non_finite_probe_is_named(self):
        with pytest.raises(FloatingPointError, match="coordinate 0"):
            finite_difference_gradient(Pole(), [0.5], 0.5)

    def test_bad_step(self):
        with pytest.raises(ConfigurationError):
            finite_difference_gradient(make_sphere(1), [0.0], 0.0)

    @given(st.sampled_from(["four_quadratics", "sphere", "sparse_quadratic"]), st.data())
    def test_exact_for_quadratics(self, kind, data):
        p = {"four_quadratics": make_four_quadratics(), "sphere": make_sphere(4),
             "sparse_quadratic": make_sparse_quadratic([0.5, 1.0, 2.0, 4.0], 2)}[kind]
        x = data.draw(hnp.arrays(np.float64, p.dim, elements=st.floats(-10, 10)))
        np.testing.assert_allclose(finite_difference_gradient(p, x),
                                   densify(gradient_full(p, x)), rtol=0, atol=1e-8)


class TestCheckGradient:
    def test_sphere_passes(self):
        report = check_gradient(make_sphere(4), points=20, h=1e-5, threshold=1e-5)
        assert report.passed and report.points_checked == 20
        assert 0 <= report.max_relative_error < 1e-5

    def test_sign_flip_fails(self):
        report = check_gradient(FlippedSphere(3), points=20, seed=0)
        assert not report.passed
        # |2g - (-2g)| / max(1, |2g|) -> 2 once |2x| >= 1
        assert report.max_relative_error == pytest.approx(2.0, abs=1e-6)
        x = report.worst_point[report.worst_coordinate]
        assert abs(2 * x) >= 1

    def test_same_seed_same_report(self):
        p = synthetic_logistic(30, 2, seed=1)
        assert check_gradient(p, seed=4) == check_gradient(p, seed=4)

    def test_report_dict(self):
        d = check_gradient(make_rosenbrock(), points=3).to_dict()
        assert set(d) >= {"max_relative_error", "worst_coordinate", "points_checked", "passed"}

    def test_relative_error_denominator(self):
        np.testing.assert_allclose(relative_error([0.0, 10.0, -3.0], [1e-3, 11.0, 3.0]),
                                   [1e-3, 1 / 11, 2.0])


class TestGrid:
    def test_four_quadratics(self):
        point, value = brute_force_grid_min(make_four_quadratics(), -10, 10, 0.5)
        assert point.tolist() == [2.0, 1.0, 1.5, 4.0] and value == 123.75

    def test_sphere(self):
        point, value = brute_force_grid_min(make_sphere(2), -1, 1, 0.5)
        assert point.tolist() == [0.0, 0.0] and value == 0.0

    def test_rosenbrock(self):
        point, value = brute_force_grid_min(make_rosenbrock(), 0, 2, 1.0)
        assert point.tolist() == [1.0, 1.0] and value == 0.0

    def test_refuses_large_grid(self):
        with pytest.raises(ConfigurationError, match="exceeds"):
            brute_force_grid_min(make_sphere(2), -10, 10, 0.1)
        with pytest.raises(ConfigurationError, match="exceeds"):
            brute_force_grid_min(make_sphere(5), -1, 1, 0.05)

    def test_tie_goes_to_lexicographically_smallest(self):
        class Flat(Problem):
            capabilities = C.FULL_EVALUATE
            dim = 2

            def evaluate(self, params):
                return float(abs(abs(params[0]) - 1) + abs(params[1]))
        point, value = brute_force_grid_min(Flat(), -2, 2, 1.0)
        assert point.tolist() == [-1.0, 0.0] and value == 0.0

    def test_vectorised_and_scalar_paths_agree(self):
        class NoFastPath(Problem):
            capabilities = C.FULL_EVALUATE
            dim = 4

            def evaluate(self, params):
                return evaluate_full(make_four_quadratics(), params)
        fast = brute_force_grid_min(make_four_quadratics(), 0, 4, 0.5)
        slow = brute_force_grid_min(NoFastPath(), 0, 4, 0.5)
        assert fast[0].tolist() == slow[0].tolist() and fast[1] == slow[1]

    @settings(max_examples=30)
    @given(st.integers(1, 3), st.data())
    def test_exhaustive(self, d, data):
        a = data.draw(hnp.arrays(np.float64, d, elements=st.floats(0.1, 5)))
        p = make_sparse_quadratic(a, 1)
        shift = data.draw(hnp.arrays(np.float64, d, elements=st.floats(-1, 1)))

        class Shifted(Problem):
            capabilities = C.FULL_EVALUATE
            dim = d

            def evaluate(self, params):
                return evaluate_full(p, np.asarray(params) - shift)
        point, value = brute_force_grid_min(Shifted(), -1, 1, 0.5)
        axis = np.arange(-1, 1.0001, 0.5)
        for q in itertools.product(axis, repeat=d):
            assert value <= Shifted().evaluate(np.array(q))
        assert value == Shifted().evaluate(point)
