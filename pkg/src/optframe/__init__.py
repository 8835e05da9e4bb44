"""Capability-based numerical optimization framework.

Objective functions implement a few contract methods and publish which ones
they have; optimizers declare what they need and are matched against that
before any evaluation happens.
"""
__version__ = "0.1.0"

from .core import (BatchRange, Capability, CapabilityCheck, CapabilityError, CapabilitySet,
                   ConfigurationError, ContractViolation, Problem, SparseGradient,
                   adapt_full_to_separable, adapt_separable_to_full, adapter_closure,
                   check_capabilities, densify, detect_capabilities, evaluate_batch,
                   evaluate_full, gradient_batch, gradient_full, num_features, num_functions,
                   partial_gradient, resolve, shuffle, sparsify)
from .optimizers import (LBFGS, SCD, SGD, AnnealingSchedule, GradientDescent,
                         OptimizationResult, Optimizer, SGDRSchedule, SimulatedAnnealing,
                         TerminationConfig, TracePoint, optimize, optimize_gradient_descent,
                         optimize_lbfgs, optimize_scd, optimize_sgd,
                         optimize_simulated_annealing)
from .policies import POLICIES, UpdatePolicy, apply_update, initialize_policy
from .problems import (FourQuadratics, InputError, LogisticRegression, NoGradientToy,
                       Rosenbrock, SparseQuadratic, Sphere, load_logistic_csv,
                       make_four_quadratics, make_logistic_regression, make_rosenbrock,
                       make_sparse_quadratic, make_sphere, synthetic_logistic)
from .validation import (GradientCheckReport, brute_force_grid_min, check_gradient,
                         finite_difference_gradient)
