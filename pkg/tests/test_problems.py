import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from optframe import (SGD, BatchRange, Capability as C, CapabilityError, InputError,
                      TerminationConfig, brute_force_grid_min, check_gradient, densify,
                      evaluate_batch, evaluate_full, finite_difference_gradient, gradient_batch,
                      gradient_full, load_logistic_csv, make_four_quadratics,
                      make_logistic_regression, make_rosenbrock, make_sparse_quadratic,
                      make_sphere, partial_gradient, shuffle, synthetic_logistic)
from optframe.problems import FOUR_QUADRATICS_MINIMUM, FOUR_QUADRATICS_MINIMIZER, make_problem

from optframe.validation import relative_error


class TestFourQuadratics:
    def test_constants(self):
        fq = make_four_quadratics()
        np.testing.assert_array_equal(fq.intercepts, [20, 12, 15, 100])
        np.testing.assert_array_equal(fq.coefficients, [-4, -2, -3, -8])
        np.testing.assert_array_equal(fq.ord, np.arange(4))

    def test_capabilities_exact(self):
        assert make_four_quadratics().capabilities == (
            C.BATCH_EVALUATE | C.BATCH_GRADIENT | C.PARTIAL_GRADIENT | C.NUM_FUNCTIONS
            | C.NUM_FEATURES | C.SHUFFLE)

    def test_minimum(self):
        assert evaluate_full(make_four_quadratics(), FOUR_QUADRATICS_MINIMIZER) == FOUR_QUADRATICS_MINIMUM
        assert evaluate_full(make_four_quadratics(), np.zeros(4)) == 147.0

    def test_vertex_values(self):
        # each component c_i - b_i^2 / 4 at its vertex
        fq = make_four_quadratics()
        expected = [16.0, 11.0, 12.75, 84.0]
        for i, value in enumerate(expected):
            assert evaluate_batch(fq, FOUR_QUADRATICS_MINIMIZER, BatchRange(i, 1)) == value

    def test_grid_minimum(self):
        point, value = brute_force_grid_min(make_four_quadratics(), -10, 10, 0.5)
        np.testing.assert_array_equal(point, FOUR_QUADRATICS_MINIMIZER)
        assert value == 123.75

    @given(hnp.arrays(np.float64, 4, elements=st.floats(-20, 20)), st.integers(0, 3))
    def test_partial_support(self, x, j):
        assert partial_gradient(make_four_quadratics(), x, j).indices.tolist() == [j]

    @given(hnp.arrays(np.float64, (5, 4), elements=st.floats(-20, 20)))
    def test_vectorised_objective_matches(self, points):
        fq = make_four_quadratics()
        np.testing.assert_allclose(fq.evaluate_points(points),
                                   [evaluate_full(fq, p) for p in points], rtol=1e-14)

    def test_no_full_methods(self):
        fq = make_four_quadratics()
        assert not hasattr(fq, "evaluate") and not hasattr(fq, "gradient")


class TestSimpleProblems:
    def test_sphere(self):
        assert evaluate_full(make_sphere(2), [3, 4]) == 25.0
        assert make_sphere(3).capabilities == (C.FULL_EVALUATE | C.FULL_GRADIENT
                                               | C.PARTIAL_GRADIENT | C.NUM_FEATURES)

    def test_rosenbrock(self):
        r = make_rosenbrock()
        assert evaluate_full(r, [1, 1]) == 0.0
        np.testing.assert_array_equal(densify(gradient_full(r, [1, 1])), [0, 0])
        assert r.capabilities == C.FULL_EVALUATE | C.FULL_GRADIENT
        with pytest.raises(CapabilityError, match="PartialGradient"):
            partial_gradient(r, [0, 0], 0)

    @pytest.mark.parametrize("d", [0, -1])
    def test_sphere_bad_dimension(self, d):
        with pytest.raises(InputError):
            make_sphere(d)


class TestSparseQuadratic:
    @given(st.integers(1, 10), st.data())
    def test_component_support(self, d, data):
        k = data.draw(st.integers(1, d))
        p = make_sparse_quadratic(np.linspace(0.5, 3, d), k)
        x = data.draw(hnp.arrays(np.float64, d, elements=st.floats(-5, 5)))
        for i in range(d):
            g = gradient_batch(p, x, BatchRange(i, 1), sparse=True)
            assert g.nnz <= k
            assert np.count_nonzero(densify(g)) <= k

    def test_total_is_weighted_sphere(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        p = make_sparse_quadratic(a, 3)
        x = np.array([1.0, -1.0, 0.5, 2.0])
        assert evaluate_full(p, x) == pytest.approx(float(a @ x**2), rel=1e-14)

    @pytest.mark.parametrize("a,k", [([1.0, 0.0], 1), ([1.0, -2.0], 1), ([np.inf], 1),
                                     ([1.0, 2.0], 3), ([1.0], 0), ([], 1)])
    def test_input_errors(self, a, k):
        with pytest.raises(InputError):
            make_sparse_quadratic(a, k)


class TestLogisticRegression:
    def test_single_point_ln2(self):
        p = make_logistic_regression([[0.0]], [1])
        assert evaluate_full(p, [0.0, 0.0]) == pytest.approx(math.log(2), rel=1e-15)

    def test_counts(self):
        p = synthetic_logistic(150, 3)
        assert p.num_functions() == 150
        assert p.num_features() == 4

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_at_zero_matches_fd(self, seed):
        p = synthetic_logistic(40, 3, seed=seed)
        x = np.zeros(p.dim)
        analytic = densify(gradient_full(p, x))
        assert np.max(relative_error(analytic, finite_difference_gradient(p, x))) < 1e-6

    def test_stable_at_large_margins(self):
        p = make_logistic_regression([[1.0], [-1.0]], [1, 0])
        for w in (40.0, 400.0, -400.0):
            x = np.array([w, 0.0])
            assert math.isfinite(evaluate_full(p, x))
            assert np.all(np.isfinite(densify(gradient_full(p, x))))
        report = check_gradient(p, points=20, seed=1, low=-60, high=60)
        assert report.passed, report

    def test_objective_shuffle_invariant(self):
        p = synthetic_logistic(30, 2, seed=4)
        x = np.array([0.2, -0.3, 0.1])
        f = evaluate_full(p, x)
        for seed in range(10):
            shuffle(p, seed)
            assert evaluate_full(p, x) == pytest.approx(f, rel=1e-12)

    def test_sgd_epoch_objective_decreases(self):
        p = make_logistic_regression([[1.0, 2.0], [-1.5, -0.5]], [1, 0])
        term = TerminationConfig(20, objective_tolerance=0.0, gradient_tolerance=0.0, seed=3)
        result = SGD(0.1, 1, termination=term).optimize(p, np.zeros(3))
        epoch_ends = [pt.objective for pt in result.trace if pt.iteration % 2 == 0]
        assert len(epoch_ends) == 11
        assert all(b < a for a, b in zip(epoch_ends, epoch_ends[1:]))

    @pytest.mark.parametrize("data,labels,match", [
        ([[0.0]], [2], "labels"),
        ([[np.nan]], [1], "non-finite"),
        ([[0.0], [1.0]], [1], "labels"),
        (np.zeros((0, 2)), [], "at least one"),
    ])
    def test_input_errors(self, data, labels, match):
        with pytest.raises(InputError, match=match):
            make_logistic_regression(data, labels)


class TestCsv:
    def test_load(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("0.5,1.0,1\n-0.5,2.0,0\n1.5,-1.0,1\n")
        p = load_logistic_csv(path)
        assert p.num_functions() == 3 and p.dim == 3
        np.testing.assert_array_equal(p.labels, [1, 0, 1])

    def test_header(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("x1,label\n0.25,1\n")
        p = load_logistic_csv(path, header=True)
        np.testing.assert_array_equal(p.data, [[0.25]])
        with pytest.raises(InputError):
            load_logistic_csv(path)

    def test_bad_label_in_file(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("0.5,3\n")
        with pytest.raises(InputError, match="labels"):
            load_logistic_csv(path)

    def test_registry(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("0.5,1\n0.1,0\n")
        assert make_problem("logistic_regression", data=str(path)).num_functions() == 2
        with pytest.raises(KeyError):
            make_problem("no_such_problem")


@pytest.mark.parametrize("problem", [make_four_quadratics(), make_sphere(4), make_rosenbrock(),
                                     make_sparse_quadratic([1.0, 2.0, 3.0], 2),
                                     synthetic_logistic(50, 3, seed=1)], ids=lambda p: p.name)
def test_finite_difference_check(problem):
    report = check_gradient(problem, points=20, seed=0, threshold=1e-5)
    assert report.passed
    assert report.max_relative_error < 1e-5
