"""Run mypy on a snippet that uses the package; shared by the typing tests."""
import os
import subprocess
import sys
import textwrap
from pathlib import Path

SRC = Path(__file__).resolve().parents[1] / "src"

EVALUATE_ONLY = """
import numpy as np
from optframe import optimize_lbfgs


class EvaluateOnly:
    dim = 2

    def evaluate(self, params: np.ndarray) -> float:
        return float(params @ params)


optimize_lbfgs(EvaluateOnly(), np.zeros(2))
"""

WITH_GRADIENT = """
import numpy as np
from optframe import make_sphere, optimize_lbfgs

optimize_lbfgs(make_sphere(2), np.ones(2))
"""


def mypy_available() -> bool:
    try:
        import mypy  # noqa: F401
    except ImportError:
        return False
    return True


def run_mypy(source: str, workdir: Path) -> tuple[int, str]:
    """Type-check ``source``; return (exit status, lines reported for the snippet)."""
    snippet = workdir / "snippet.py"
    snippet.write_text(textwrap.dedent(source))
    env = {**os.environ, "MYPYPATH": str(SRC)}
    proc = subprocess.run(
        [sys.executable, "-m", "mypy", "--no-incremental", "--follow-imports=silent",
         "--ignore-missing-imports", "--no-error-summary", str(snippet)],
        cwd=workdir, env=env, capture_output=True, text=True, timeout=300)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith(str(snippet)) or "snippet.py" in ln]
    return proc.returncode, "\n".join(lines)
