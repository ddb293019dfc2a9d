"""Fixed-step explicit ODE integrators producing full trajectories.

The stepping code is generic over the scalar type: states may be lists of
DiffValue (differentiable end-to-end), lists of floats, or numpy arrays.
Dynamics are autonomous: f(y) -> dy/dt.
"""

import math

import numpy as np

from .errors import DivergenceError, NumericalError


class TimeGrid:
    """Strictly increasing sequence of output times."""

    def __init__(self, points):
        pts = [float(t) for t in points]
        if len(pts) < 2:
            raise ValueError("a time grid needs at least 2 points")
        for t in pts:
            if not math.isfinite(t):
                raise ValueError("non-finite time point")
        for a, b in zip(pts, pts[1:]):
            if not b > a:
                raise ValueError("time grid must be strictly increasing")
        self.points = pts

    @classmethod
    def linspace(cls, t_start, t_end, n):
        return cls(np.linspace(float(t_start), float(t_end), int(n)).tolist())

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and self.points == other.points


class Trajectory:
    """Time grid plus one state vector per grid point."""

    def __init__(self, grid, states, kind="predicted"):
        if len(states) != len(grid):
            raise ValueError("states length must match grid length")
        dims = {len(s) for s in states}
        if len(dims) != 1:
            raise ValueError("state dimension must be uniform")
        self.grid = grid
        self.states = states
        self.kind = kind

    @property
    def dim(self):
        return len(self.states[0])

    def __len__(self):
        return len(self.states)

    def values(self):
        """States as a plain float array (detaches DiffValues)."""
        return np.array([[float(x) for x in s] for s in self.states])


def _is_array(y):
    return isinstance(y, np.ndarray)


def _add_scaled(y, a, k):
    if _is_array(y):
        return y + a * k
    return [yi + a * ki for yi, ki in zip(y, k)]


def _rk4_combine(y, h, k1, k2, k3, k4):
    if _is_array(y):
        return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return [yi + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
            for yi, a, b, c, d in zip(y, k1, k2, k3, k4)]


def _euler_step(f, y, h):
    return _add_scaled(y, h, f(y))


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(_add_scaled(y, h / 2.0, k1))
    k3 = f(_add_scaled(y, h / 2.0, k2))
    k4 = f(_add_scaled(y, h, k3))
    return _rk4_combine(y, h, k1, k2, k3, k4)


_STEPPERS = {"euler": _euler_step, "rk4": _rk4_step}


def _check_finite(y, time_index):
    if _is_array(y):
        if not np.isfinite(y).all():
            raise DivergenceError(
                f"non-finite state at output time index {time_index}",
                time_index=time_index)
    else:
        for x in y:
            if not math.isfinite(float(x)):
                raise DivergenceError(
                    f"non-finite state at output time index {time_index}",
                    time_index=time_index)


def ode_solve(f, y0, grid, method="rk4", substeps=1):
    """Integrate y' = f(y) from the first grid time across the whole grid.

    Each consecutive grid interval is covered by `substeps` equal steps of
    the chosen method.  The initial condition is emitted as states[0].
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    try:
        stepper = _STEPPERS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}") from None
    y = y0
    states = [y]
    times = grid.points
    for n in range(1, len(times)):
        h = (times[n] - times[n - 1]) / substeps
        try:
            for _ in range(substeps):
                y = stepper(f, y, h)
        except NumericalError as exc:
            raise DivergenceError(
                f"non-finite state at output time index {n}: {exc}",
                time_index=n) from exc
        _check_finite(y, n)
        states.append(y)
    return Trajectory(grid, states, kind="predicted")
