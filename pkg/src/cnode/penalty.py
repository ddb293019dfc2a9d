"""Loss regimes: vanilla objective, fixed-mu quadratic penalty, and the
self-adaptive penalty function.

psi(x) = 1 - 1/(1+x) maps nonnegative quantities into [0, 1) so the
objective and the violation terms share magnitude.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

from .errors import DomainError, ShapeError


def psi(x):
    """Normaliser 1 - 1/(1+x); accepts floats or DiffValues, x >= 0."""
    if float(x) < 0.0:
        raise DomainError(f"psi requires x >= 0, got {float(x)}")
    return 1.0 - 1.0 / (1.0 + x)


@dataclass(frozen=True)
class LossRegime:
    kind: str              # "vanilla" | "quadratic" | "self-adaptive"
    mu: float = None       # required for quadratic
    feasibility_tol: float = 1e-4

    def __post_init__(self):
        if self.kind not in ("vanilla", "quadratic", "self-adaptive"):
            raise ValueError(f"unknown loss regime {self.kind!r}")
        if self.kind == "quadratic" and (self.mu is None or self.mu <= 0):
            raise ValueError("quadratic penalty requires mu > 0")
        if self.feasibility_tol <= 0:
            raise ValueError("feasibility_tol must be > 0")


@dataclass
class PenaltyTerms:
    """Per-constraint normalised penalty values and adaptive parameters.

    `entries` holds (constraint_id, kind, P, mu) with P a DiffValue (or
    float) in [0, 1) and mu in [0, 1] detached from the graph.
    `violations` optionally keeps the underlying violation vectors keyed
    by constraint id, so mu can be recomputed after a tape replay.
    """
    entries: List[Tuple[str, str, object, float]]
    violations: dict = None

    @property
    def p_theta(self):
        return sum(float(p) for _, _, p, _ in self.entries)


@dataclass
class PenaltyReport:
    """Per-iteration training record."""
    iteration: int
    l: float
    F: float
    p_theta: float
    phi: float
    feasible: bool
    per_constraint: List[Tuple[str, float, float]] = field(default_factory=list)
    # per_constraint entries are (constraint_id, P, mu)

    def csv_row(self):
        row = [self.iteration, self.l, self.F, self.p_theta, self.phi,
               int(self.feasible)]
        for _, p, mu in self.per_constraint:
            row.extend([p, mu])
        return row

    def csv_header(self):
        cols = ["iteration", "l", "F", "P_theta", "phi", "feasible"]
        for cid, _, _ in self.per_constraint:
            cols.extend([f"P_{cid}", f"mu_{cid}"])
        return cols


def objective_l(pred, truth):
    """Sum over time steps and components of squared error (sum, not mean)."""
    if len(pred) != len(truth) or pred.grid.points != truth.grid.points:
        raise ShapeError("prediction and ground truth grids differ")
    if pred.dim != truth.dim:
        raise ShapeError("prediction and ground truth dimensions differ")
    total = None
    for ps, ts in zip(pred.states, truth.states):
        for p, t in zip(ps, ts):
            sq = _sq_diff(p, t)
            total = sq if total is None else total + sq
    return total


def _sq_diff(p, t):
    d = p - t
    if hasattr(d, "square"):
        return d.square()
    return d * d


def normalised_objective(l):
    """F = psi(l), in [0, 1)."""
    return psi(l)


def compute_penalty_terms(constraints, traj, zero_threshold=0.0):
    """Normalised P and adaptive mu for every constraint on a trajectory.

    mu is computed from detached float values (it is piecewise constant,
    so no gradient flows through the counting)."""
    from .constraints import adaptive_mu, penalty_term, violations
    entries = []
    vecs = {}
    for c in constraints:
        vv = violations(c, traj)
        p = penalty_term(vv)
        mu = adaptive_mu(vv, zero_threshold)
        entries.append((c.id, c.kind, p, mu))
        vecs[c.id] = vv.values
    return PenaltyTerms(entries, vecs)


def phi_self_adaptive(F, terms, feasibility_tol=1e-4):
    """Self-adaptive penalty function.

    Feasible branch (P_theta <= tol) returns F itself; otherwise F plus
    the class-averaged mu*P terms.  An empty constraint class contributes
    0 (no division by zero)."""
    if terms.p_theta <= feasibility_tol:
        return F
    phi = F
    for kind in ("equality", "inequality"):
        members = [(p, mu) for _, k, p, mu in terms.entries if k == kind]
        if not members:
            continue
        acc = None
        for p, mu in members:
            term = p * mu if hasattr(p, "graph") else mu * p
            acc = term if acc is None else acc + term
        phi = phi + acc / len(members)
    return phi


def phi_quadratic(l, constraints, traj, mu):
    """Classical quadratic penalty l + (mu/2) * P with P the un-normalised
    mean squared violations summed over constraints."""
    if mu <= 0:
        raise ValueError("quadratic penalty requires mu > 0")
    from .constraints import violations
    phi = l
    for c in constraints:
        vv = violations(c, traj)
        acc = None
        for v in vv.values:
            acc = v if acc is None else acc + v
        phi = phi + (mu / 2.0) * (acc / len(vv.values))
    return phi
