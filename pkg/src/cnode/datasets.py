"""Synthetic constrained-system datasets and evaluation tasks.

Three systems, each generated by high-accuracy fixed-step integration of
its governing law:

  wpg  logistic population growth  dp/dt = r p (1 - p/K), bound p <= K
  cr   reaction chain A->B->C->D, conserving total mass
  dho  damped harmonic oscillator  x' = v, v' = -(k/m) x - (c/m) v

Tasks: reconstruction (test == train), extrapolation (longer horizon),
completion (denser grid over the same span).
"""

from dataclasses import dataclass
from typing import Tuple

from .errors import ConfigError
from .rng import Prng
from .solver import TimeGrid, Trajectory, ode_solve

SYSTEM_DEFAULTS = {
    "wpg": {"r": 0.025, "K": 12.0, "p0": 0.5},
    "cr": {"k1": 0.08, "k2": 0.04, "k3": 0.02,
           "mA0": 1.0, "mB0": 0.0, "mC0": 0.0, "mD0": 0.0, "m_total": 1.0},
    "dho": {"m": 1.0, "k": 1.0, "c": 0.1, "x0": 1.0, "v0": 0.0},
}

STATE_COLUMNS = {
    "wpg": ["p"],
    "cr": ["m_A", "m_B", "m_C", "m_D"],
    "dho": ["x", "v"],
}

# (train span, train points, test span, test points) per system and task,
# at full scale.
_TASK_GRIDS = {
    "wpg": {
        "reconstruction": ((0.0, 300.0), 200, (0.0, 300.0), 200),
        "extrapolation": ((0.0, 300.0), 200, (0.0, 400.0), 200),
        "completion": ((0.0, 300.0), 200, (0.0, 300.0), 300),
    },
    "cr": {
        "reconstruction": ((0.0, 100.0), 100, (0.0, 100.0), 100),
        "extrapolation": ((0.0, 100.0), 100, (0.0, 200.0), 100),
        "completion": ((0.0, 100.0), 100, (0.0, 100.0), 200),
    },
    "dho": {
        "reconstruction": ((0.0, 50.0), 400, (0.0, 50.0), 400),
        "extrapolation": ((0.0, 50.0), 400, (0.0, 400.0), 400),
        "completion": ((0.0, 50.0), 400, (0.0, 50.0), 600),
    },
}

TASKS = ("reconstruction", "extrapolation", "completion")


@dataclass(frozen=True)
class SystemSpec:
    name: str
    params: dict
    y0: tuple
    span: Tuple[float, float]
    n_points: int
    noise_std: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        if self.name not in SYSTEM_DEFAULTS:
            raise ConfigError(f"unknown system {self.name!r}")
        if self.n_points < 2:
            raise ConfigError("n_points must be >= 2")
        if not self.span[1] > self.span[0]:
            raise ConfigError("span must be increasing")
        missing = set(SYSTEM_DEFAULTS[self.name]) - set(self.params)
        if missing:
            raise ConfigError(
                f"missing parameters for {self.name}: {sorted(missing)}")


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    train: Tuple[Tuple[float, float], int]   # (span, n_points)
    test: Tuple[Tuple[float, float], int]

    def __post_init__(self):
        if self.kind not in TASKS:
            raise ConfigError(f"unknown task {self.kind!r}")
        (tr_span, tr_n), (te_span, te_n) = self.train, self.test
        if self.kind == "reconstruction":
            if self.train != self.test:
                raise ConfigError("reconstruction requires test == train")
        elif self.kind == "extrapolation":
            if te_span[0] > tr_span[0] or te_span[1] <= tr_span[1]:
                raise ConfigError(
                    "extrapolation test span must contain the train span "
                    "and end later")
        else:  # completion
            if te_span != tr_span or te_n <= tr_n:
                raise ConfigError(
                    "completion requires the same span and more test points")


def system_spec(name, task="reconstruction", params=None, scale="paper",
                noise_std=0.0, noise_seed=0):
    """SystemSpec for a named system, gridded per the task's training set."""
    task_spec_ = task_spec(name, task, scale)
    (span, n_points) = task_spec_.train
    return _make_spec(name, params, span, n_points, noise_std, noise_seed)


def _make_spec(name, params, span, n_points, noise_std=0.0, noise_seed=0):
    if name not in SYSTEM_DEFAULTS:
        raise ConfigError(f"unknown system {name!r}")
    merged = dict(SYSTEM_DEFAULTS[name])
    merged.update(params or {})
    if name == "wpg":
        y0 = (merged["p0"],)
    elif name == "cr":
        y0 = (merged["mA0"], merged["mB0"], merged["mC0"], merged["mD0"])
    else:
        y0 = (merged["x0"], merged["v0"])
    return SystemSpec(name, merged, y0, (float(span[0]), float(span[1])),
                      int(n_points), noise_std, noise_seed)


def task_spec(system, task, scale="paper"):
    """Task grids per system; `desk` scale halves all point counts."""
    try:
        tr_span, tr_n, te_span, te_n = _TASK_GRIDS[system][task]
    except KeyError:
        raise ConfigError(f"unknown system/task {system!r}/{task!r}") from None
    if scale == "desk":
        tr_n, te_n = tr_n // 2, te_n // 2
    elif scale != "paper":
        raise ConfigError(f"unknown scale {scale!r}")
    return TaskSpec(task, (tr_span, tr_n), (te_span, te_n))


def dynamics(name, params):
    """Governing law as a plain autonomous float function."""
    if name == "wpg":
        r, K = params["r"], params["K"]

        def f(y):
            p = y[0]
            return [r * p * (1.0 - p / K)]
    elif name == "cr":
        k1, k2, k3 = params["k1"], params["k2"], params["k3"]

        def f(y):
            a, b, c, _ = y
            return [-k1 * a, k1 * a - k2 * b, k2 * b - k3 * c, k3 * c]
    elif name == "dho":
        m, k, c = params["m"], params["k"], params["c"]

        def f(y):
            x, v = y
            return [v, -(k / m) * x - (c / m) * v]
    else:
        raise ConfigError(f"unknown system {name!r}")
    return f


def generate(spec):
    """Ground-truth trajectory for a system spec.

    High-accuracy rk4 (10 substeps per output interval); optional
    additive Gaussian observation noise (off by default)."""
    grid = TimeGrid.linspace(spec.span[0], spec.span[1], spec.n_points)
    f = dynamics(spec.name, spec.params)
    traj = ode_solve(f, list(spec.y0), grid, method="rk4", substeps=10)
    states = traj.states
    if spec.noise_std > 0.0:
        rng = Prng(spec.noise_seed)
        states = [[x + rng.normal(0.0, spec.noise_std) for x in s]
                  for s in states]
    return Trajectory(grid, states, kind="ground-truth")


def make_task(base, task):
    """(train, test) trajectories for a task, from one system and y0."""
    (tr_span, tr_n), (te_span, te_n) = task.train, task.test
    if (tr_span[0], tr_span[1]) != base.span or tr_n != base.n_points:
        raise ConfigError("task train grid is inconsistent with the system spec")
    train = generate(base)
    if task.kind == "reconstruction":
        return train, train
    test_spec = _make_spec(base.name, base.params, te_span, te_n,
                           base.noise_std, base.noise_seed)
    return train, generate(test_spec)


# -- CSV dataset files ------------------------------------------------

_DATASET_MAGIC = "# cnode-dataset v1"


def save_dataset(path, traj, system, params):
    """CSV with a metadata comment line, then `t,<state columns>` rows."""
    cols = STATE_COLUMNS[system]
    kv = ";".join(f"{k}={params[k]!r}" for k in sorted(params))
    with open(path, "w") as fh:
        fh.write(f"{_DATASET_MAGIC} system={system} params={kv}\n")
        fh.write("t," + ",".join(cols) + "\n")
        for t, state in zip(traj.grid.points, traj.states):
            fh.write(",".join(repr(float(x)) for x in [t, *state]) + "\n")


def load_dataset(path):
    """Returns (trajectory, system, params); lossless round trip."""
    with open(path) as fh:
        meta = fh.readline().rstrip("\n")
        if not meta.startswith(_DATASET_MAGIC):
            raise ConfigError(f"{path} is not a dataset file")
        fields = meta[len(_DATASET_MAGIC):].strip()
        sys_part, params_part = fields.split(" params=", 1)
        system = sys_part.split("system=", 1)[1]
        params = {}
        if params_part:
            for item in params_part.split(";"):
                k, v = item.split("=", 1)
                params[k] = float(v)
        fh.readline()  # column header
        times, states = [], []
        for line in fh:
            if not line.strip():
                continue
            vals = [float(x) for x in line.split(",")]
            times.append(vals[0])
            states.append(vals[1:])
    traj = Trajectory(TimeGrid(times), states, kind="ground-truth")
    return traj, system, params
