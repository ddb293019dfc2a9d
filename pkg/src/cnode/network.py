"""Multilayer perceptrons for ODE dynamics, plus the Adam optimizer.

Architectures are data: a list of ("linear", n_in, n_out) tuples and
activation names.  Parameters live in one flat float vector, layer by
layer, weights (row-major, out x in) then biases.
"""

import math
import struct

import numpy as np

from .errors import NumericalError, ShapeError

ARCHITECTURE_PRESETS = {
    # system name -> layer list
    "wpg": [("linear", 1, 50), "tanh", ("linear", 50, 50), "elu",
            ("linear", 50, 1)],
    "cr": [("linear", 4, 50), "tanh", ("linear", 50, 64), "elu",
           ("linear", 64, 50), "tanh", ("linear", 50, 4)],
    "dho": [("linear", 2, 50), "tanh", ("linear", 50, 50), "elu",
            ("linear", 50, 2)],
}

_ACTIVATIONS = ("tanh", "elu")


def normalize_layers(layers):
    """Validate a layer list (tuples or JSON-style lists) into tuples."""
    out = []
    prev_out = None
    for layer in layers:
        if isinstance(layer, str):
            if layer not in _ACTIVATIONS:
                raise ShapeError(f"unknown activation {layer!r}")
            out.append(layer)
            continue
        tag, n_in, n_out = layer
        if tag != "linear":
            raise ShapeError(f"unknown layer kind {tag!r}")
        n_in, n_out = int(n_in), int(n_out)
        if n_in < 1 or n_out < 1:
            raise ShapeError("linear layer dimensions must be positive")
        if prev_out is not None and n_in != prev_out:
            raise ShapeError(
                f"linear layer expects {prev_out} inputs, got {n_in}")
        out.append(("linear", n_in, n_out))
        prev_out = n_out
    if not any(isinstance(l, tuple) for l in out):
        raise ShapeError("architecture needs at least one linear layer")
    return out


class Mlp:
    """Feed-forward network over scalar autodiff values or numpy arrays."""

    def __init__(self, layers):
        self.layers = normalize_layers(layers)
        self._linears = [l for l in self.layers if isinstance(l, tuple)]
        self.in_dim = self._linears[0][1]
        self.out_dim = self._linears[-1][2]
        self.param_count = sum(i * o + o for _, i, o in self._linears)

    def init_params(self, rng):
        """Glorot-style uniform weights, zero biases."""
        params = np.zeros(self.param_count)
        pos = 0
        for _, n_in, n_out in self._linears:
            a = math.sqrt(6.0 / (n_in + n_out))
            for k in range(n_in * n_out):
                params[pos + k] = rng.uniform(-a, a)
            pos += n_in * n_out + n_out  # biases stay 0
        return params

    def forward(self, params, x):
        """Apply the network to a list of DiffValues (or plain floats).

        `params` is a flat sequence of the same scalar type as `x`.
        """
        if len(x) != self.in_dim:
            raise ShapeError(
                f"expected input of dimension {self.in_dim}, got {len(x)}")
        pos = 0
        h = list(x)
        for layer in self.layers:
            if layer == "tanh":
                h = [v.tanh() if hasattr(v, "tanh") else math.tanh(v)
                     for v in h]
            elif layer == "elu":
                h = [v.elu() if hasattr(v, "elu") else _elu_float(v)
                     for v in h]
            else:
                _, n_in, n_out = layer
                w_base = pos
                b_base = pos + n_in * n_out
                out = []
                for o in range(n_out):
                    acc = params[b_base + o]
                    row = w_base + o * n_in
                    for i in range(n_in):
                        acc = acc + params[row + i] * h[i]
                    out.append(acc)
                h = out
                pos = b_base + n_out
        return h

    def forward_array(self, params, x):
        """Fast float path: numpy vectors in, numpy vector out."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.in_dim:
            raise ShapeError(
                f"expected input of dimension {self.in_dim}, got {x.shape[0]}")
        pos = 0
        h = x
        for layer in self.layers:
            if layer == "tanh":
                h = np.tanh(h)
            elif layer == "elu":
                h = np.where(h > 0.0, h, np.expm1(np.minimum(h, 0.0)))
            else:
                _, n_in, n_out = layer
                w = params[pos: pos + n_in * n_out].reshape(n_out, n_in)
                b = params[pos + n_in * n_out: pos + n_in * n_out + n_out]
                h = w @ h + b
                pos += n_in * n_out + n_out
        return h


def _elu_float(v, alpha=1.0):
    return v if v > 0.0 else alpha * (math.exp(v) - 1.0)


class Adam:
    """Adam with bias correction; state for one flat parameter vector."""

    def __init__(self, n_params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)

    def step(self, params, grads):
        """Update `params` in place from `grads`; returns params."""
        grads = np.asarray(grads, dtype=float)
        if grads.shape != params.shape:
            raise ShapeError("params/grads length mismatch")
        if not np.isfinite(grads).all():
            raise NumericalError("non-finite gradient in Adam step")
        self.step_count += 1
        t = self.step_count
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grads
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grads * grads
        m_hat = self.m / (1.0 - self.beta1 ** t)
        v_hat = self.v / (1.0 - self.beta2 ** t)
        params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return params


_PARAMS_MAGIC = b"cnode-params v1"


def save_params(path, params):
    """Snapshot format: header line `cnode-params v1 <count>\\n`, then
    little-endian float64 values."""
    params = np.asarray(params, dtype=float)
    with open(path, "wb") as fh:
        fh.write(_PARAMS_MAGIC + b" %d\n" % params.shape[0])
        fh.write(struct.pack("<%dd" % params.shape[0], *params.tolist()))


def load_params(path):
    with open(path, "rb") as fh:
        header = fh.readline().rstrip(b"\n")
        parts = header.rsplit(b" ", 1)
        if parts[0] != _PARAMS_MAGIC:
            raise ValueError(f"bad params header in {path}")
        count = int(parts[1])
        data = fh.read(8 * count)
        if len(data) != 8 * count:
            raise ValueError(f"truncated params file {path}")
        return np.array(struct.unpack("<%dd" % count, data))
