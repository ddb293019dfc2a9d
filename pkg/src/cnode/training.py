"""Training loops: the self-adaptive penalty algorithm with best-point
tracking, plus plain-descent vanilla and quadratic-penalty baselines.

One forward graph is built per run; iterations rewrite the parameter
leaves and replay the tape, so the per-iteration cost is two compiled
array sweeps rather than millions of Python node allocations.
"""

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

import numpy as np

from .autodiff import Graph
from .config import ExperimentConfig
from .constraints import constraints_for, raw_violation_metric
from .datasets import system_spec, task_spec, make_task
from .errors import DivergenceError, NumericalError
from .network import Adam, Mlp, save_params
from .penalty import (PenaltyReport, compute_penalty_terms,
                      normalised_objective, objective_l, phi_quadratic,
                      phi_self_adaptive, psi)
from .rng import Prng
from .solver import ode_solve


@dataclass
class RunResult:
    theta_final: np.ndarray
    train_mse: float
    test_mse: float
    test_p_raw: float
    history: List[PenaltyReport]
    wall_time: float
    status: str = "ok"                  # "ok" | "diverged"
    eval_diverged: bool = False
    config: ExperimentConfig = None


@dataclass
class _RunSetup:
    net: Mlp
    train: object
    test: object
    constraints: list
    theta0: np.ndarray


def _setup(config):
    base = system_spec(config.system, config.task,
                       params=config.system_params, scale=config.scale)
    train, test = make_task(base, task_spec(config.system, config.task,
                                            config.scale))
    constraints = constraints_for(config.system, base.params)
    net = Mlp(config.layers())
    theta0 = net.init_params(Prng(config.seed))
    return _RunSetup(net, train, test, constraints, theta0)


@dataclass
class _Tape:
    """Static forward tape of one training problem."""
    graph: Graph
    param_idx: np.ndarray
    l_node: object
    F_node: object
    loss_node: object      # baselines only: the full training loss
    terms: object          # self-adaptive only: PenaltyTerms with P nodes
    mark: int

    def set_theta(self, theta):
        self.graph._val[self.param_idx] = theta

    def replay(self):
        self.graph.truncate(self.mark)
        self.graph.replay()

    def param_grads(self):
        return self.graph._grad[self.param_idx].copy()


def _build_tape(config, setup):
    g = Graph(capacity=1 << 16)
    param_nodes = [g.leaf(v) for v in setup.theta0]
    param_idx = np.array([p.index for p in param_nodes], dtype=np.int64)
    y0 = [g.constant(v) for v in setup.train.states[0]]

    def f(y):
        return setup.net.forward(param_nodes, y)

    pred = ode_solve(f, y0, setup.train.grid, method=config.solver_method,
                     substeps=config.substeps)
    l_node = objective_l(pred, setup.train)
    F_node = None
    loss_node = None
    terms = None
    if config.method == "self-adaptive":
        F_node = normalised_objective(l_node)
        terms = compute_penalty_terms(setup.constraints, pred,
                                      config.zero_threshold)
    elif config.method == "quadratic":
        loss_node = phi_quadratic(l_node, setup.constraints, pred, config.mu)
    else:
        loss_node = l_node
    # diagnostics for baseline reports
    if config.method != "self-adaptive":
        terms = compute_penalty_terms(setup.constraints, pred,
                                      config.zero_threshold)
    return _Tape(g, param_idx, l_node, F_node, loss_node, terms, g.mark())


def _mu_update(terms, zero_threshold):
    """PenaltyTerms with mu recomputed from current violation node values."""
    from .penalty import PenaltyTerms
    entries = []
    for cid, kind, p, _ in terms.entries:
        vv = terms.violations[cid]
        hits = 0
        for v in vv:
            if float(v) > zero_threshold:
                hits += 1
        entries.append((cid, kind, p, hits / len(vv)))
    return PenaltyTerms(entries, terms.violations)


def train_self_adaptive(config):
    """The self-adaptive penalty training loop (best-point tracking)."""
    t0 = time.monotonic()
    setup = _setup(config)
    history = []
    status = "ok"
    theta = setup.theta0.copy()
    theta_best = theta.copy()
    try:
        tape = _build_tape(config, setup)
    except (DivergenceError, NumericalError):
        # initial forward failed; nothing trainable
        return _finish(config, setup, theta, history, t0, status="diverged")

    g = tape.graph
    adam = Adam(setup.net.param_count, config.lr)
    phi_best = math.inf
    grad_best = np.zeros(setup.net.param_count)
    tol = config.feasibility_tol

    for k in range(1, config.k_max + 1):
        try:
            tape.set_theta(theta)
            tape.replay()
        except NumericalError:
            status = "diverged"
            break
        terms = _mu_update(tape.terms, config.zero_threshold)
        p_theta = terms.p_theta
        feasible = p_theta <= tol
        phi_node = phi_self_adaptive(tape.F_node, terms, tol)
        phi = float(phi_node)
        l_val = float(tape.l_node)
        history.append(PenaltyReport(
            iteration=k, l=l_val, F=float(tape.F_node), p_theta=p_theta,
            phi=phi, feasible=feasible,
            per_constraint=[(cid, float(p), mu)
                            for cid, _, p, mu in terms.entries]))
        if phi < phi_best:
            theta_best = theta.copy()
            phi_best = phi
            g.backward(phi_node)
            grad_best = tape.param_grads()
        theta = adam.step(theta_best.copy(), grad_best)

    return _finish(config, setup, theta_best, history, t0, status=status)


def train_baseline(config):
    """Plain gradient descent on l (vanilla) or the quadratic penalty."""
    if config.method not in ("vanilla", "quadratic"):
        raise ValueError("train_baseline handles vanilla/quadratic only")
    t0 = time.monotonic()
    setup = _setup(config)
    history = []
    status = "ok"
    theta = setup.theta0.copy()
    try:
        tape = _build_tape(config, setup)
    except (DivergenceError, NumericalError):
        return _finish(config, setup, theta, history, t0, status="diverged")

    g = tape.graph
    adam = Adam(setup.net.param_count, config.lr)
    tol = config.feasibility_tol

    for k in range(1, config.k_max + 1):
        try:
            tape.set_theta(theta)
            tape.replay()
        except NumericalError:
            status = "diverged"
            break
        terms = _mu_update(tape.terms, config.zero_threshold)
        p_theta = terms.p_theta
        l_val = float(tape.l_node)
        loss = float(tape.loss_node)
        history.append(PenaltyReport(
            iteration=k, l=l_val, F=psi(l_val), p_theta=p_theta,
            phi=loss, feasible=p_theta <= tol,
            per_constraint=[(cid, float(p), mu)
                            for cid, _, p, mu in terms.entries]))
        g.backward(tape.loss_node)
        theta = adam.step(theta, tape.param_grads())

    return _finish(config, setup, theta, history, t0, status=status)


def run_experiment(config):
    if config.method == "self-adaptive":
        return train_self_adaptive(config)
    return train_baseline(config)


def evaluate(theta, net, test, constraints, method="rk4", substeps=1):
    """(MSE, raw P, diverged) of the IVP solved from the test set's initial
    state over the test grid."""
    theta = np.asarray(theta, dtype=float)

    def f(y):
        return net.forward_array(theta, y)

    try:
        pred = ode_solve(f, np.asarray(test.states[0], dtype=float),
                         test.grid, method=method, substeps=substeps)
    except DivergenceError:
        return math.inf, math.inf, True
    truth = test.values()
    mse = float(np.mean((pred.values() - truth) ** 2))
    p_raw = raw_violation_metric(constraints, pred)
    return mse, p_raw, False


def _finish(config, setup, theta, history, t0, status="ok"):
    if status == "ok":
        train_mse, _, d1 = evaluate(theta, setup.net, setup.train,
                                    setup.constraints, config.solver_method,
                                    config.substeps)
        test_mse, test_p, d2 = evaluate(theta, setup.net, setup.test,
                                        setup.constraints,
                                        config.solver_method, config.substeps)
        eval_diverged = d1 or d2
    else:
        train_mse = test_mse = test_p = math.inf
        eval_diverged = True
    return RunResult(theta_final=theta, train_mse=train_mse,
                     test_mse=test_mse, test_p_raw=test_p, history=history,
                     wall_time=time.monotonic() - t0, status=status,
                     eval_diverged=eval_diverged, config=config)


# -- run directory artifacts ------------------------------------------


def write_run(out_dir, result):
    """history.csv + params.bin + result.json for one run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if result.history:
        with open(out / "history.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(result.history[0].csv_header())
            for rep in result.history:
                writer.writerow(rep.csv_row())
    save_params(out / "params.bin", result.theta_final)
    payload = {
        "status": result.status,
        "seed": result.config.seed,
        "metrics": {
            "train_mse": result.train_mse,
            "test_mse": result.test_mse,
            "test_p_raw": result.test_p_raw,
        },
        "eval_diverged": result.eval_diverged,
        "wall_time": result.wall_time,
        "config": result.config.to_dict(),
    }
    with open(out / "result.json", "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")
    return out


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not JSON serialisable: {type(x)}")
