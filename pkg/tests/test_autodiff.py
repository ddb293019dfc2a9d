"""Gradient correctness of the scalar reverse-mode tape."""

import math
import random

import numpy as np
import pytest

from cnode import (DiffValue, Graph, GraphMismatchError, NumericalError,
                   StaleGradientError)


def fd(f, x, h=1e-5):
    """Central finite difference of a plain-float function."""
    return (f(x + h) - f(x - h)) / (2.0 * h)


def rel_err(a, b):
    denom = max(abs(a), abs(b))
    if denom < 1e-7:
        return abs(a - b)  # absolute near zero
    return abs(a - b) / denom


# -- forward examples --------------------------------------------------

def test_mul_product_rule():
    g = Graph()
    a, b = g.leaf(2.0), g.leaf(3.0)
    out = a * b
    assert out.value == 6.0
    g.backward(out)
    assert a.grad == 3.0
    assert b.grad == 2.0


def test_max0_inactive_hinge():
    g = Graph()
    x = g.leaf(-1.5)
    out = x.max0()
    assert out.value == 0.0
    g.backward(out)
    assert x.grad == 0.0


def test_max0_subgradient_zero_at_zero():
    g = Graph()
    x = g.leaf(0.0)
    out = x.max0()
    g.backward(out)
    assert x.grad == 0.0


def test_tanh_at_zero():
    g = Graph()
    x = g.leaf(0.0)
    out = x.tanh()
    assert out.value == 0.0
    g.backward(out)
    assert x.grad == 1.0


def test_backward_square():
    g = Graph()
    x = g.leaf(3.0)
    g.backward(x * x)
    assert x.grad == 6.0


def test_backward_psi_shape():
    # 1 - 1/(1+x) has derivative 1/(1+x)^2 = 1/4 at x = 1
    g = Graph()
    x = g.leaf(1.0)
    out = 1.0 - 1.0 / (1.0 + x)
    assert out.value == pytest.approx(0.5)
    g.backward(out)
    assert x.grad == pytest.approx(0.25, abs=1e-12)


def test_shared_subexpression_accumulates():
    g = Graph()
    x = g.leaf(2.0)
    g.backward(x * x + x)
    assert x.grad == 5.0


# -- per-primitive finite-difference sweep -----------------------------

UNARY = [
    ("neg", lambda v: -v, lambda x: -x, None),
    ("exp", lambda v: v.exp(), math.exp, (-5, 3)),
    ("tanh", lambda v: v.tanh(), math.tanh, None),
    ("max0", lambda v: v.max0(), lambda x: max(x, 0.0), None),
    ("recip", lambda v: v.recip(), lambda x: 1.0 / x, (0.3, 5)),
    ("square", lambda v: v.square(), lambda x: x * x, None),
    ("elu", lambda v: v.elu(), lambda x: x if x > 0 else math.expm1(x), None),
    ("pow3", lambda v: v ** 3, lambda x: x ** 3, None),
    ("pow-2", lambda v: v ** -2, lambda x: x ** -2, (0.5, 5)),
]


@pytest.mark.parametrize("name,op,ref,domain", UNARY, ids=[u[0] for u in UNARY])
def test_unary_gradients_match_finite_differences(name, op, ref, domain):
    rnd = random.Random(hash(name) & 0xFFFF)
    lo, hi = domain or (-5, 5)
    for _ in range(50):
        x0 = rnd.uniform(lo, hi)
        if name == "max0" and abs(x0) < 1e-3:
            continue  # hinge point excluded
        g = Graph()
        x = g.leaf(x0)
        out = op(x)
        g.backward(out)
        expected = fd(ref, x0)
        assert rel_err(x.grad, expected) <= 1e-5, (name, x0)


BINARY = [
    ("add", lambda a, b: a + b),
    ("sub", lambda a, b: a - b),
    ("mul", lambda a, b: a * b),
    ("div", lambda a, b: a / b),
]


@pytest.mark.parametrize("name,op", BINARY, ids=[b[0] for b in BINARY])
def test_binary_gradients_match_finite_differences(name, op):
    rnd = random.Random(hash(name) & 0xFFFF)
    for _ in range(50):
        a0 = rnd.uniform(-5, 5)
        b0 = rnd.uniform(-5, 5)
        if name == "div" and abs(b0) < 0.2:
            b0 = 0.5
        g = Graph()
        a, b = g.leaf(a0), g.leaf(b0)
        g.backward(op(a, b))
        for leaf, x0, f in (
                (a, a0, lambda x: _float_op(name, x, b0)),
                (b, b0, lambda x: _float_op(name, a0, x))):
            assert rel_err(leaf.grad, fd(f, x0)) <= 1e-5, (name, a0, b0)


def _float_op(name, a, b):
    return {"add": a + b, "sub": a - b, "mul": a * b, "div": a / b}[name]


def test_random_mlp_grads_match_finite_differences():
    # 20-parameter random scalar MLP: 1 -> 4 (tanh) -> 1, plus biases.
    rnd = random.Random(7)
    weights = [rnd.uniform(-1, 1) for _ in range(20)]

    def build(g, params):
        x = g.leaf(0.7)
        hidden = []
        for j in range(4):
            hidden.append((params[j] * x + params[4 + j]).tanh())
        acc = params[12]
        for j in range(4):
            acc = acc + params[8 + j] * hidden[j]
        # extra nonlinear mix to touch more primitives
        return acc.square() + (params[13] * acc).exp() * params[14] \
            + params[15] * acc + sum(params[16:20]) * 0.1

    g = Graph()
    nodes = [g.leaf(w) for w in weights]
    root = build(g, nodes)
    g.backward(root)
    analytic = [n.grad for n in nodes]
    numeric = g.finite_diff_grads(root, nodes, h=1e-5)
    for a, b in zip(analytic, numeric):
        assert rel_err(a, b) <= 1e-4


# -- graph mechanics ---------------------------------------------------

def test_grad_zero_before_backward():
    g = Graph()
    x = g.leaf(2.0)
    y = x * x
    assert x.grad == 0.0 and y.grad == 0.0


def test_backward_twice_raises():
    g = Graph()
    x = g.leaf(2.0)
    y = x * x
    g.backward(y)
    with pytest.raises(StaleGradientError):
        g.backward(y)
    g.reset_grads()
    g.backward(y)  # fine after reset


def test_cross_graph_operands_raise():
    g1, g2 = Graph(), Graph()
    a = g1.leaf(1.0)
    b = g2.leaf(2.0)
    with pytest.raises(GraphMismatchError):
        a + b


def test_nonfinite_forward_raises():
    g = Graph()
    x = g.leaf(1000.0)
    with pytest.raises(NumericalError):
        x.exp()


def test_division_by_zero_raises():
    g = Graph()
    with pytest.raises(NumericalError):
        g.leaf(1.0) / g.leaf(0.0)


def test_replay_and_truncate():
    g = Graph()
    x = g.leaf(1.0)
    y = (x * 2.0 + 1.0).square()
    mark = g.mark()
    extra = y + 5.0
    assert extra.value == 14.0
    g.truncate(mark)
    assert len(g) == mark
    x.set_value(2.0)
    g.replay()
    assert y.value == 25.0


def test_deterministic_values():
    def build():
        g = Graph()
        x = g.leaf(0.123456)
        y = g.leaf(-1.5)
        out = ((x * y).tanh() + x.exp() / (y.square() + 1.0)) ** 3
        return out.value

    assert build() == build()


def test_pow_requires_int_exponent():
    g = Graph()
    with pytest.raises(TypeError):
        g.leaf(2.0) ** 0.5
