"""Command-line benchmark harness: run optimizer x problem experiments.

Example::

    optframe-bench --problem four_quadratics --optimizer sgd --lr 0.02 \\
        --batch 1 --iters 5000 --seed 1 --out runs/sgd

writes ``trace_rep0.csv`` and ``summary.json`` under ``runs/sgd``.

Exit codes: 0 success, 1 failed gradient check, 2 unknown name or bad
argument, 3 capability mismatch, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import re
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, core
from .optimizers import (OPTIMIZERS, SGD, AnnealingSchedule, GradientDescent, LBFGS, SCD,
                         SGDRSchedule, SimulatedAnnealing, TerminationConfig)
from .policies import POLICIES
from .problems import PROBLEMS, InputError, make_problem
from .validation import check_gradient

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_UNKNOWN_NAME = 2
EXIT_CAPABILITY = 3
EXIT_IO = 4

SEED_ENV = "OPTFRAME_SEED"
TRACE_COLUMNS = ("iteration", "evaluations", "objective", "gradient_norm", "elapsed_seconds")


class BenchError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class ExperimentSpec:
    problem: str
    optimizer: str
    lr: float = 0.01
    batch: int = 1
    policy: str = "vanilla"
    traversal: str = "epoch"
    sgdr_period: Optional[float] = None
    sgdr_mult: float = 1.0
    memory: int = 10
    order: str = "cyclic"
    temperature: float = 10.0
    cooling: float = 0.95
    moves: int = 50
    move_scale: float = 0.5
    iters: int = 100_000
    obj_tol: float = 1e-10
    grad_tol: float = 1e-9
    seed: int = 0
    reps: int = 1
    x0: str = "zeros"
    dim: Optional[int] = None
    data: Optional[str] = None
    header: bool = False
    trace_every: Optional[int] = None
    timing: bool = True
    out: Optional[str] = None

    def echo(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()


_FIELDS = {f.name: f for f in fields(ExperimentSpec)}


def _parse_bool(key: str, text: str) -> bool:
    text = str(text).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise BenchError(f"{key}: expected a boolean, got {text!r}", EXIT_UNKNOWN_NAME)


def _coerce(key: str, value):
    """Convert a config-file / echo value to the field's type."""
    if value is None:
        return None
    kind = str(_FIELDS[key].type)
    if isinstance(value, str):
        text = value.strip().strip('"').strip("'")
        if text.lower() in ("none", "null", "") and "Optional" in kind:
            return None
        if "bool" in kind:
            return _parse_bool(key, text)
        value = text
    try:
        if "bool" in kind:
            return bool(value)
        if "int" in kind:
            return int(value)
        if "float" in kind:
            return float(value)
    except (TypeError, ValueError):
        raise BenchError(f"{key}: cannot parse {value!r}", EXIT_UNKNOWN_NAME) from None
    return str(value)


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file. ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise BenchError(f"cannot read config file {path}: {exc}", EXIT_IO) from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BenchError(f"{path}:{lineno}: expected 'key = value'", EXIT_UNKNOWN_NAME)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key == "no_timing":
            key, value = "timing", str(not _parse_bool(key, value))
        if key == "check_gradient":
            out[key] = _parse_bool(key, value)
            continue
        if key not in _FIELDS:
            raise BenchError(f"{path}:{lineno}: unknown key {key!r}", EXIT_UNKNOWN_NAME)
        out[key] = value
    return out


def spec_from_mapping(values: dict) -> ExperimentSpec:
    """Build and validate a spec from flag/config/echo values."""
    values = {k: _coerce(k, v) for k, v in values.items() if k in _FIELDS}
    for key in ("problem", "optimizer"):
        if not values.get(key):
            raise BenchError(f"--{key} is required", EXIT_UNKNOWN_NAME)
    spec = ExperimentSpec(**values)
    if spec.problem not in PROBLEMS:
        raise BenchError(f"unknown problem {spec.problem!r}; known problems: "
                         f"{', '.join(PROBLEMS)}", EXIT_UNKNOWN_NAME)
    if spec.optimizer not in OPTIMIZERS:
        raise BenchError(f"unknown optimizer {spec.optimizer!r}; known optimizers: "
                         f"{', '.join(OPTIMIZERS)}", EXIT_UNKNOWN_NAME)
    if spec.policy not in POLICIES:
        raise BenchError(f"unknown policy {spec.policy!r}; known policies: "
                         f"{', '.join(POLICIES)}", EXIT_UNKNOWN_NAME)
    if spec.reps < 1:
        raise BenchError("--reps must be >= 1", EXIT_UNKNOWN_NAME)
    return spec


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optframe-bench", description=__doc__.split("\n")[0])
    S = argparse.SUPPRESS
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--problem", default=S, help=f"one of {', '.join(PROBLEMS)}")
    p.add_argument("--optimizer", default=S, help=f"one of {', '.join(OPTIMIZERS)}")
    p.add_argument("--lr", type=float, default=S, help="step size (gd, sgd, scd)")
    p.add_argument("--batch", type=int, default=S, help="SGD batch size")
    p.add_argument("--policy", default=S, help=f"SGD update policy: {', '.join(POLICIES)}")
    p.add_argument("--traversal", choices=("epoch", "modular"), default=S)
    p.add_argument("--sgdr-period", type=float, default=S, help="enable SGDR restarts, period in epochs")
    p.add_argument("--sgdr-mult", type=float, default=S)
    p.add_argument("--memory", type=int, default=S, help="L-BFGS memory")
    p.add_argument("--order", choices=("cyclic", "random"), default=S, help="SCD coordinate order")
    p.add_argument("--temperature", type=float, default=S)
    p.add_argument("--cooling", type=float, default=S)
    p.add_argument("--moves", type=int, default=S, help="annealing moves per temperature")
    p.add_argument("--move-scale", type=float, default=S)
    p.add_argument("--iters", type=int, default=S, help="maximum iterations")
    p.add_argument("--obj-tol", type=float, default=S)
    p.add_argument("--grad-tol", type=float, default=S)
    p.add_argument("--seed", type=int, default=S, help=f"base seed (default ${SEED_ENV} or 0)")
    p.add_argument("--reps", type=int, default=S, help="repetitions, seeded base_seed + rep")
    p.add_argument("--x0", default=S, help="zeros | ones | uniform(lo,hi) | comma-separated values "
                   "(write --x0=-1,2 when the first value is negative)")
    p.add_argument("--dim", type=int, default=S, help="problem dimension where applicable")
    p.add_argument("--data", default=S, help="CSV file for logistic_regression")
    p.add_argument("--header", action="store_true", default=S, help="CSV has a header row")
    p.add_argument("--trace-every", type=int, default=S, help="also log every N steps")
    p.add_argument("--no-timing", dest="timing", action="store_false", default=S,
                   help="write 0 for elapsed time, making trace files reproducible byte for byte")
    p.add_argument("--out", default=S, help="output directory for traces and summary")
    p.add_argument("--check-gradient", action="store_true", default=False,
                   help="run the finite-difference gradient check instead of optimizing")
    return p


def parse_spec(argv=None) -> tuple[ExperimentSpec, bool]:
    """Return ``(spec, check_gradient)`` from command-line arguments."""
    args = vars(build_parser().parse_args(argv))
    config_path = args.pop("config", None)
    check = args.pop("check_gradient")
    values: dict = {}
    if SEED_ENV in os.environ:
        values["seed"] = os.environ[SEED_ENV]
    if config_path:
        cfg = read_config(config_path)
        check = check or bool(cfg.pop("check_gradient", False))
        values.update(cfg)
    values.update(args)
    return spec_from_mapping(values), check


_UNIFORM = re.compile(r"^(?:seeded-)?uniform\(\s*([^,]+),\s*([^)]+)\)$")


def initial_point(spec: ExperimentSpec, dim: int, seed: int) -> np.ndarray:
    text = spec.x0.strip()
    if text == "zeros":
        return np.zeros(dim)
    if text == "ones":
        return np.ones(dim)
    m = _UNIFORM.match(text)
    if m:
        lo, hi = float(m.group(1)), float(m.group(2))
        return np.random.default_rng(seed).uniform(lo, hi, dim)
    try:
        x = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise BenchError(f"cannot parse --x0 {spec.x0!r}", EXIT_UNKNOWN_NAME) from None
    if x.size != dim:
        raise BenchError(f"--x0 has {x.size} entries, problem dimension is {dim}", EXIT_UNKNOWN_NAME)
    return x


def build_problem(spec: ExperimentSpec):
    try:
        return make_problem(spec.problem, dim=spec.dim, seed=spec.seed,
                            data=spec.data, header=spec.header)
    except OSError as exc:
        raise BenchError(f"cannot read data: {exc}", EXIT_IO) from exc
    except InputError as exc:
        raise BenchError(str(exc), EXIT_UNKNOWN_NAME) from exc


def build_optimizer(spec: ExperimentSpec, seed: int):
    term = TerminationConfig(spec.iters, spec.obj_tol, spec.grad_tol, seed)
    common = dict(termination=term, trace_every=spec.trace_every)
    if not spec.timing:
        common["clock"] = lambda: 0.0
    name = spec.optimizer
    if name == "gd":
        return GradientDescent(spec.lr, **common)
    if name == "sgd":
        restart = SGDRSchedule(spec.sgdr_period, spec.sgdr_mult) if spec.sgdr_period else None
        return SGD(spec.lr, spec.batch, spec.policy, restart=restart,
                   traversal=spec.traversal, **common)
    if name == "scd":
        return SCD(spec.lr, spec.order, **common)
    if name == "lbfgs":
        return LBFGS(spec.memory, **common)
    if name == "sa":
        sched = AnnealingSchedule(spec.temperature, spec.cooling, spec.moves, spec.move_scale)
        return SimulatedAnnealing(sched, **common)
    raise BenchError(f"unknown optimizer {name!r}", EXIT_UNKNOWN_NAME)  # pragma: no cover


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def write_trace(path: Path, trace) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for pt in trace:
            w.writerow([_fmt(pt.iteration), _fmt(pt.evaluations), _fmt(pt.objective),
                        _fmt(pt.gradient_norm), _fmt(pt.elapsed)])


def _prepare_out(out) -> Path | None:
    if out is None:
        return None
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise BenchError(f"cannot write to output directory {out}: {exc}", EXIT_IO) from exc
    return path


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run every repetition; write traces and summary when ``spec.out`` is set."""
    out = _prepare_out(spec.out)
    probe_problem = build_problem(spec)
    probe_opt = build_optimizer(spec, spec.seed)
    check = core.check_capabilities(core.capabilities_of(probe_problem), probe_opt.requires,
                                    optimizer=probe_opt.name,
                                    problem=core.problem_name(probe_problem))
    if not check:
        raise BenchError(check.message, EXIT_CAPABILITY)

    reps = []
    for rep in range(spec.reps):
        seed = spec.seed + rep
        problem = build_problem(spec)
        optimizer = build_optimizer(spec, seed)
        x0 = initial_point(spec, problem.dim, seed)
        result = optimizer.optimize(problem, x0)
        entry = {
            "rep": rep,
            "seed": seed,
            "best_objective": result.best_objective,
            "final_objective": result.final_objective,
            "termination_reason": result.termination_reason,
            "iterations": result.iterations,
            "evaluations": result.trace[-1].evaluations if result.trace else 0,
            "best_params": [float(v) for v in result.best_params],
            "warnings": result.warnings,
        }
        if out is not None:
            name = f"trace_rep{rep}.csv"
            try:
                write_trace(out / name, result.trace)
            except OSError as exc:
                raise BenchError(f"cannot write trace {name}: {exc}", EXIT_IO) from exc
            entry["trace_file"] = name
        reps.append(entry)

    bests = [r["best_objective"] for r in reps]
    reasons: dict[str, int] = {}
    for r in reps:
        reasons[r["termination_reason"]] = reasons.get(r["termination_reason"], 0) + 1
    summary = {
        "version": __version__,
        "spec_hash": spec.digest(),
        "config": spec.echo(),
        "seeds": [r["seed"] for r in reps],
        "best_objective": {"mean": float(np.mean(bests)), "min": float(np.min(bests))},
        "termination_reasons": reasons,
        "repetitions": reps,
    }
    if out is not None:
        try:
            (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise BenchError(f"cannot write summary: {exc}", EXIT_IO) from exc
    return summary


def run_gradient_check(spec: ExperimentSpec) -> dict:
    problem = build_problem(spec)
    caps = core.capabilities_of(problem)
    check = core.check_capabilities(caps, core.DIFFERENTIABLE, optimizer="check_gradient",
                                    problem=core.problem_name(problem))
    if not check:
        raise BenchError(check.message, EXIT_CAPABILITY)
    report = check_gradient(problem, points=20, seed=spec.seed).to_dict()
    report["problem"] = spec.problem
    out = _prepare_out(spec.out)
    if out is not None:
        try:
            (out / "gradient_check.json").write_text(json.dumps(report, indent=2) + "\n")
        except OSError as exc:
            raise BenchError(f"cannot write report: {exc}", EXIT_IO) from exc
    return report


def _print_table(summary: dict) -> None:
    print(f"{'rep':>4} {'seed':>6} {'best objective':>24} {'iterations':>10}  reason")
    for r in summary["repetitions"]:
        print(f"{r['rep']:>4} {r['seed']:>6} {r['best_objective']:>24.17g} "
              f"{r['iterations']:>10}  {r['termination_reason']}")
    b = summary["best_objective"]
    print(f"mean {b['mean']:.17g}  min {b['min']:.17g}")


def main(argv=None) -> int:
    try:
        try:
            spec, check = parse_spec(argv)
        except SystemExit as exc:  # argparse errors and --help
            return int(exc.code or 0)
        if check:
            report = run_gradient_check(spec)
            print(json.dumps(report, indent=2))
            return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED
        summary = run_experiment(spec)
    except BenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except core.ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN_NAME
    if spec.out is None:
        print(json.dumps(summary, indent=2, default=float))
    else:
        _print_table(summary)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

