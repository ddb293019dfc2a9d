"""Constraint evaluation over trajectories.

Per-time-step squared violations, their normalised penalty terms, the
self-adaptive penalty parameters, and the raw (un-normalised) violation
metric used for reporting.  All evaluation is generic over DiffValue and
plain-float states.
"""

import math
from dataclasses import dataclass
from typing import Callable

from .errors import ShapeError
from .penalty import psi


@dataclass(frozen=True)
class Constraint:
    """One constraint function c; violation is |c|^2 (equality) or
    ([c]+)^2 (inequality).

    Per-step constraints see one state; per-pair constraints see two
    consecutive states.
    """
    id: str
    kind: str      # "equality" | "inequality"
    arity: str     # "step" | "pair"
    dim: int       # expected state dimension
    fn: Callable   # (state, t) or (state_t, state_next, t) -> scalar

    def __post_init__(self):
        if self.kind not in ("equality", "inequality"):
            raise ValueError(f"bad constraint kind {self.kind!r}")
        if self.arity not in ("step", "pair"):
            raise ValueError(f"bad constraint arity {self.arity!r}")


@dataclass
class ViolationVector:
    constraint_id: str
    values: list   # squared violations; DiffValues during training


def _square(x):
    if hasattr(x, "square"):
        return x.square()
    return x * x


def _sq_positive_part(x):
    if hasattr(x, "max0"):
        return x.max0().square()
    x = max(float(x), 0.0)
    return x * x


def violations(constraint, traj):
    """Squared violations of one constraint along a trajectory.

    Length N for per-step constraints, N-1 for per-pair constraints.
    """
    if traj.dim != constraint.dim:
        raise ShapeError(
            f"constraint {constraint.id!r} expects dimension "
            f"{constraint.dim}, trajectory has {traj.dim}")
    times = traj.grid.points
    if constraint.arity == "step":
        raw = [constraint.fn(s, t) for s, t in zip(traj.states, times)]
    else:
        raw = [constraint.fn(a, b, t)
               for a, b, t in zip(traj.states, traj.states[1:], times)]
    if constraint.kind == "equality":
        return ViolationVector(constraint.id, [_square(c) for c in raw])
    return ViolationVector(constraint.id, [_sq_positive_part(c) for c in raw])


def penalty_term(vv):
    """Normalised total violation: mean of psi over the vector's entries."""
    values = vv.values if isinstance(vv, ViolationVector) else vv
    if not values:
        raise ValueError("empty violation vector")
    total = psi(values[0])
    for v in values[1:]:
        total = total + psi(v)
    return total / len(values)


def adaptive_mu(vv, zero_threshold=0.0):
    """Fraction of entries whose violation exceeds the zero threshold."""
    if zero_threshold < 0.0:
        raise ValueError("zero_threshold must be >= 0")
    values = vv.values if isinstance(vv, ViolationVector) else vv
    if not values:
        raise ValueError("empty violation vector")
    hits = sum(1 for v in values if float(v) > zero_threshold)
    return hits / len(values)


def raw_violation_metric(constraints, traj):
    """Reported evaluation metric P: mean over constraints of the mean
    un-normalised squared violation.  Unlike the psi-normalised training
    terms this is unbounded above."""
    if not constraints:
        return 0.0
    total = 0.0
    for c in constraints:
        vv = violations(c, traj)
        total += sum(float(v) for v in vv.values) / len(vv.values)
    return total / len(constraints)


# -- dataset constraint presets ---------------------------------------


def constraints_for(system, params):
    """Constraint set registered for a dataset name.

    Physical constants come from the dataset's parameter map.
    """
    if system == "wpg":
        cap = float(params["K"])

        def carrying_capacity(state, t):
            return state[0] - cap

        return [Constraint("carrying_capacity", "inequality", "step", 1,
                           carrying_capacity)]
    if system == "cr":
        m_total = float(params["m_total"])

        def mass_balance(state, t):
            return state[0] + state[1] + state[2] + state[3] - m_total

        return [Constraint("mass_conservation", "equality", "step", 4,
                           mass_balance)]
    if system == "dho":
        m = float(params["m"])
        k = float(params["k"])
        c = float(params["c"])

        def energy(state):
            x, v = state[0], state[1]
            return 0.5 * m * _square(v) + 0.5 * k * _square(x)

        def energy_decrease(s0, s1, t):
            return energy(s1) - energy(s0)

        def dissipation(state):
            return -c * state[1] * state[0]

        def dissipation_rate_change(s0, s1, t):
            return dissipation(s1) - dissipation(s0)

        return [
            Constraint("energy_decrease", "inequality", "pair", 2,
                       energy_decrease),
            Constraint("dissipation_rate", "equality", "pair", 2,
                       dissipation_rate_change),
        ]
    raise ValueError(f"no constraint preset for system {system!r}")
