"""A problem without a gradient is rejected by the type checker at the call site."""
import pytest

from typecheck import EVALUATE_ONLY, WITH_GRADIENT, mypy_available, run_mypy

pytestmark = pytest.mark.skipif(not mypy_available(), reason="mypy not installed")


def test_missing_gradient_fails_type_check(tmp_path):
    status, report = run_mypy(EVALUATE_ONLY, tmp_path)
    assert status == 1
    assert "optimize_lbfgs" in report
    assert "HasGradient" in report and "gradient" in report


def test_differentiable_problem_type_checks(tmp_path):
    status, report = run_mypy(WITH_GRADIENT, tmp_path)
    assert status == 0, report
