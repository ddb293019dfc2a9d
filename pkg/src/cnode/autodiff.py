"""Reverse-mode automatic differentiation over scalar computation graphs.

The graph is a flat tape: parallel arrays of op codes, parent indices and
values, in insertion (topological) order.  Nodes are created eagerly in
Python; the hot paths (re-running the forward pass with new leaf values,
the backward sweep, finite-difference probing) are numba-compiled loops
over the raw arrays so that training-sized graphs (millions of nodes) stay
tractable.

Semantics are strictly scalar: one node is one real number.  max0 (the
positive-part hinge) uses subgradient 0 at exactly 0.  Any non-finite
forward result raises NumericalError immediately.
"""

import math

import numpy as np
from numba import njit, prange

from .errors import GraphMismatchError, NumericalError, StaleGradientError

LEAF = 0
ADD = 1
SUB = 2
MUL = 3
DIV = 4
NEG = 5
POWI = 6
EXP = 7
TANH = 8
MAX0 = 9
RECIP = 10
SQUARE = 11
ELU = 12

_OP_NAMES = {
    LEAF: "leaf", ADD: "add", SUB: "sub", MUL: "mul", DIV: "div",
    NEG: "neg", POWI: "pow-int", EXP: "exp", TANH: "tanh",
    MAX0: "max-with-zero", RECIP: "reciprocal", SQUARE: "square",
    ELU: "elu",
}


@njit(cache=True)
def _int_pow(base, k):
    neg = k < 0
    n = -k if neg else k
    out = 1.0
    b = base
    while n > 0:
        if n & 1:
            out *= b
        b *= b
        n >>= 1
    return 1.0 / out if neg else out


@njit(cache=True)
def _forward(op, pa, pb, aux, val, n):
    """Recompute all non-leaf values in place; return first non-finite index or -1."""
    for i in range(n):
        o = op[i]
        if o == LEAF:
            continue
        a = val[pa[i]]
        if o == ADD:
            v = a + val[pb[i]]
        elif o == SUB:
            v = a - val[pb[i]]
        elif o == MUL:
            v = a * val[pb[i]]
        elif o == DIV:
            v = a / val[pb[i]]
        elif o == NEG:
            v = -a
        elif o == POWI:
            v = _int_pow(a, int(aux[i]))
        elif o == EXP:
            v = math.exp(a)
        elif o == TANH:
            v = math.tanh(a)
        elif o == MAX0:
            v = a if a > 0.0 else 0.0
        elif o == RECIP:
            v = 1.0 / a
        elif o == SQUARE:
            v = a * a
        else:  # ELU
            v = a if a > 0.0 else aux[i] * (math.exp(a) - 1.0)
        val[i] = v
        if not math.isfinite(v):
            return i
    return -1


@njit(cache=True)
def _backward(op, pa, pb, aux, val, grad, n):
    for i in range(n - 1, -1, -1):
        g = grad[i]
        if g == 0.0:
            continue
        o = op[i]
        if o == LEAF:
            continue
        ia = pa[i]
        a = val[ia]
        if o == ADD:
            grad[ia] += g
            grad[pb[i]] += g
        elif o == SUB:
            grad[ia] += g
            grad[pb[i]] -= g
        elif o == MUL:
            ib = pb[i]
            grad[ia] += g * val[ib]
            grad[ib] += g * a
        elif o == DIV:
            ib = pb[i]
            vb = val[ib]
            grad[ia] += g / vb
            grad[ib] -= g * a / (vb * vb)
        elif o == NEG:
            grad[ia] -= g
        elif o == POWI:
            k = int(aux[i])
            grad[ia] += g * k * _int_pow(a, k - 1)
        elif o == EXP:
            grad[ia] += g * val[i]
        elif o == TANH:
            t = val[i]
            grad[ia] += g * (1.0 - t * t)
        elif o == MAX0:
            if a > 0.0:
                grad[ia] += g
        elif o == RECIP:
            grad[ia] -= g / (a * a)
        elif o == SQUARE:
            grad[ia] += 2.0 * a * g
        else:  # ELU
            if a > 0.0:
                grad[ia] += g
            else:
                grad[ia] += g * (val[i] + aux[i])


@njit(cache=True, parallel=True)
def _central_diff(op, pa, pb, aux, val, n, root, leaves, h):
    """Central finite differences of val[root] w.r.t. each leaf, via tape replay."""
    m = leaves.shape[0]
    out = np.empty(m)
    for j in prange(m):
        scratch = val[:n].copy()
        x0 = scratch[leaves[j]]
        scratch[leaves[j]] = x0 + h
        _forward(op, pa, pb, aux, scratch, n)
        fp = scratch[root]
        scratch[leaves[j]] = x0 - h
        # leaves keep their values across replays, so only re-seed the probe
        _forward(op, pa, pb, aux, scratch, n)
        fm = scratch[root]
        out[j] = (fp - fm) / (2.0 * h)
    return out


class DiffValue:
    """Handle to one scalar node of a Graph."""

    __slots__ = ("graph", "index")

    def __init__(self, graph, index):
        self.graph = graph
        self.index = index

    @property
    def value(self):
        return self.graph._val[self.index]

    @property
    def grad(self):
        return self.graph._grad[self.index]

    def set_value(self, x):
        g = self.graph
        if g._op[self.index] != LEAF:
            raise ValueError("set_value is only valid on leaf nodes")
        g._val[self.index] = float(x)

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        return f"DiffValue({self.value!r})"

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, DiffValue):
            if other.graph is not self.graph:
                raise GraphMismatchError("operands belong to different graphs")
            return other
        return self.graph.constant(other)

    def __add__(self, other):
        other = self._coerce(other)
        return self.graph._push(ADD, self.index, other.index, 0.0,
                                self.value + other.value)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return self.graph._push(SUB, self.index, other.index, 0.0,
                                self.value - other.value)

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        other = self._coerce(other)
        return self.graph._push(MUL, self.index, other.index, 0.0,
                                self.value * other.value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.value == 0.0:
            raise NumericalError("division by zero")
        return self.graph._push(DIV, self.index, other.index, 0.0,
                                self.value / other.value)

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __neg__(self):
        return self.graph._push(NEG, self.index, -1, 0.0, -self.value)

    def __pow__(self, exponent):
        if not isinstance(exponent, int):
            raise TypeError("only integer exponents are supported")
        return self.graph._push(POWI, self.index, -1, float(exponent),
                                _int_pow(self.value, exponent))

    def exp(self):
        try:
            out = math.exp(self.value)
        except OverflowError:
            raise NumericalError(
                f"exp overflow at x = {self.value!r}") from None
        return self.graph._push(EXP, self.index, -1, 0.0, out)

    def tanh(self):
        return self.graph._push(TANH, self.index, -1, 0.0, math.tanh(self.value))

    def max0(self):
        """max(x, 0); subgradient 0 at exactly 0."""
        v = self.value
        return self.graph._push(MAX0, self.index, -1, 0.0, v if v > 0.0 else 0.0)

    def recip(self):
        if self.value == 0.0:
            raise NumericalError("reciprocal of zero")
        return self.graph._push(RECIP, self.index, -1, 0.0, 1.0 / self.value)

    def square(self):
        """|x|^2 for real scalars."""
        v = self.value
        return self.graph._push(SQUARE, self.index, -1, 0.0, v * v)

    def elu(self, alpha=1.0):
        v = self.value
        out = v if v > 0.0 else alpha * (math.exp(v) - 1.0)
        return self.graph._push(ELU, self.index, -1, float(alpha), out)

    def backward(self):
        self.graph.backward(self)


class Graph:
    """Append-only tape of scalar operations.

    Insertion order is topological order; backward visits nodes exactly
    once in reverse insertion order.  ``mark``/``truncate`` let a caller
    discard nodes appended after a checkpoint, and ``replay`` re-runs the
    forward pass after leaf values changed.
    """

    def __init__(self, capacity=256):
        cap = max(int(capacity), 16)
        self._op = np.zeros(cap, dtype=np.int8)
        self._pa = np.zeros(cap, dtype=np.int64)
        self._pb = np.zeros(cap, dtype=np.int64)
        self._aux = np.zeros(cap, dtype=np.float64)
        self._val = np.zeros(cap, dtype=np.float64)
        self._grad = np.zeros(cap, dtype=np.float64)
        self._n = 0
        self._grads_valid = False

    def __len__(self):
        return self._n

    def _grow(self):
        cap = self._op.shape[0] * 2
        for name in ("_op", "_pa", "_pb", "_aux", "_val", "_grad"):
            old = getattr(self, name)
            new = np.zeros(cap, dtype=old.dtype)
            new[: self._n] = old[: self._n]
            setattr(self, name, new)

    def _push(self, op, ia, ib, aux, value):
        if not math.isfinite(value):
            raise NumericalError(
                f"non-finite result in {_OP_NAMES[op]} (node {self._n})")
        i = self._n
        if i >= self._op.shape[0]:
            self._grow()
        self._op[i] = op
        self._pa[i] = ia
        self._pb[i] = ib
        self._aux[i] = aux
        self._val[i] = value
        self._grad[i] = 0.0
        self._n = i + 1
        return DiffValue(self, i)

    def leaf(self, value):
        """Input node; keeps its value across replays."""
        value = float(value)
        if not math.isfinite(value):
            raise NumericalError("non-finite leaf value")
        return self._push(LEAF, -1, -1, 0.0, value)

    constant = leaf

    def mark(self):
        return self._n

    def truncate(self, mark):
        if mark < 0 or mark > self._n:
            raise ValueError("bad truncation mark")
        self._n = mark
        self._grads_valid = False

    def replay(self):
        """Re-run the forward pass over the whole tape (leaves untouched)."""
        bad = _forward(self._op, self._pa, self._pb, self._aux, self._val,
                       self._n)
        self._grads_valid = False
        if bad >= 0:
            raise NumericalError(
                f"non-finite result in {_OP_NAMES[self._op[bad]]} "
                f"(node {bad}) during replay")

    def reset_grads(self):
        self._grad[: self._n] = 0.0
        self._grads_valid = False

    def backward(self, root):
        """Accumulate d(root)/d(node) into every node's grad."""
        if not isinstance(root, DiffValue) or root.graph is not self:
            raise GraphMismatchError("root does not belong to this graph")
        if self._grads_valid:
            raise StaleGradientError(
                "backward called twice without reset_grads/replay")
        self._grad[: self._n] = 0.0
        self._grad[root.index] = 1.0
        _backward(self._op, self._pa, self._pb, self._aux, self._val,
                  self._grad, root.index + 1)
        self._grads_valid = True

    def finite_diff_grads(self, root, leaves, h=1e-5):
        """Central-difference d(root)/d(leaf) for each leaf, by tape replay.

        Independent of the backward sweep; used as a gradient oracle.
        Restores all values afterwards.
        """
        idx = np.asarray([v.index for v in leaves], dtype=np.int64)
        out = _central_diff(self._op, self._pa, self._pb, self._aux,
                            self._val, self._n, root.index, idx, h)
        return out
