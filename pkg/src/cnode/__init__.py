"""Constrained Neural-ODE training toolkit.

Neural ODEs trained under prior-knowledge constraints via a self-adaptive
penalty function, with fixed-mu quadratic-penalty and unconstrained
baselines, synthetic constrained-system datasets, and a CLI experiment
harness.
"""

from .autodiff import DiffValue, Graph
from .config import ExperimentConfig
from .constraints import (Constraint, ViolationVector, adaptive_mu,
                          constraints_for, penalty_term, raw_violation_metric,
                          violations)
from .datasets import (STATE_COLUMNS, SYSTEM_DEFAULTS, TASKS, SystemSpec,
                       TaskSpec, dynamics, generate, load_dataset, make_task,
                       save_dataset, system_spec, task_spec)
from .errors import (CnodeError, ConfigError, DivergenceError, DomainError,
                     GraphMismatchError, NumericalError, ReportError,
                     ShapeError, StaleGradientError)
from .network import (ARCHITECTURE_PRESETS, Adam, Mlp, load_params,
                      save_params)
from .penalty import (LossRegime, PenaltyReport, PenaltyTerms,
                      compute_penalty_terms, normalised_objective,
                      objective_l, phi_quadratic, phi_self_adaptive, psi)
from .rng import Prng
from .solver import TimeGrid, Trajectory, ode_solve
from .training import RunResult, evaluate, run_experiment, train_baseline, \
    train_self_adaptive, write_run

__version__ = "0.1.0"
