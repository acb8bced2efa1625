"""Autodiff tests: finite-difference checks per primitive, a convolution
oracle, graph bookkeeping, and finiteness guards."""

import numpy as np
import pytest
from gradcheck import max_rel_err

from pepfuse.autodiff import (Tensor, _unbroadcast, backward, concat, conv1d,
                              constant, parameter, stack_scalars, zero_grad)
from pepfuse.errors import NonFiniteError

TOL = 1e-6


def rnd(rng, *shape):
    return parameter(rng.uniform(-1.5, 1.5, size=shape))


def check(build, params):
    assert max_rel_err(build, params) < TOL


def test_arithmetic_grads():
    rng = np.random.default_rng(0)
    for _ in range(3):
        x, y = rnd(rng, 3, 4), rnd(rng, 3, 4)
        check(lambda: ((x * y + x - y / 2.0) ** 3.0).sum(),
              {"x": x, "y": y})


def test_broadcast_grads():
    rng = np.random.default_rng(1)
    x, row, col = rnd(rng, 3, 4), rnd(rng, 4), rnd(rng, 3, 1)
    check(lambda: ((x + row) * col).sum(), {"x": x, "row": row, "col": col})
    s = parameter(0.7)
    check(lambda: (x * s + s).sum(), {"x": x, "s": s})


def test_matmul_grads():
    rng = np.random.default_rng(2)
    a, b = rnd(rng, 3, 4), rnd(rng, 4, 2)
    check(lambda: (a @ b).sum(), {"a": a, "b": b})
    v = rnd(rng, 4)
    check(lambda: ((a @ v) ** 2.0).sum(), {"a": a, "v": v})


def test_elementwise_function_grads():
    rng = np.random.default_rng(3)
    x = parameter(rng.uniform(0.2, 1.5, size=(2, 5)))
    check(lambda: x.exp().sum(), {"x": x})
    check(lambda: x.log().sum(), {"x": x})
    check(lambda: x.sqrt().sum(), {"x": x})
    y = rnd(rng, 2, 5)
    check(lambda: y.sigmoid().sum(), {"y": y})
    check(lambda: y.tanh().sum(), {"y": y})


def test_relu_and_clip_grads_away_from_kinks():
    x = parameter(np.array([-1.3, -0.4, 0.5, 1.2, 2.0]))
    check(lambda: (x.relu() * x.relu()).sum(), {"x": x})
    assert np.array_equal(x.relu().data, [0.0, 0.0, 0.5, 1.2, 2.0])
    check(lambda: x.clip(-1.0, 1.0).sum(), {"x": x})
    loss = x.clip(-1.0, 1.0).sum()
    zero_grad([x])
    backward(loss)
    assert np.array_equal(x.grad, [0.0, 1.0, 1.0, 0.0, 0.0])


def test_reduction_and_shape_grads():
    rng = np.random.default_rng(4)
    x = rnd(rng, 3, 4)
    check(lambda: (x.sum(axis=0) ** 2.0).sum(), {"x": x})
    check(lambda: (x.mean(axis=1) ** 2.0).sum(), {"x": x})
    check(lambda: (x.mean() ** 2.0), {"x": x})
    check(lambda: (x.reshape(4, 3)[1:3, :] ** 2.0).sum(), {"x": x})


def test_softmax_grads_and_normalization():
    rng = np.random.default_rng(5)
    x = rnd(rng, 3, 4)
    sm = x.softmax(axis=-1)
    assert np.allclose(sm.data.sum(axis=-1), 1.0)
    w = constant(rng.uniform(0.5, 1.5, size=(3, 4)))
    check(lambda: (x.softmax(axis=-1) * w).sum(), {"x": x})
    check(lambda: (x.softmax(axis=0) * w).sum(), {"x": x})


def test_getitem_concat_stack_grads():
    rng = np.random.default_rng(6)
    x, y = rnd(rng, 4, 3), rnd(rng, 2, 3)
    check(lambda: (concat([x, y], axis=0) ** 2.0).sum(), {"x": x, "y": y})
    check(lambda: (x[1] * x[2]).sum(), {"x": x})
    a, b = parameter(0.3), parameter(-0.8)
    check(lambda: (stack_scalars([a, b]) ** 2.0).sum(), {"a": a, "b": b})
    loss = x[0].sum()
    zero_grad([x])
    backward(loss)
    expect = np.zeros((4, 3))
    expect[0] = 1.0
    assert np.array_equal(x.grad, expect)


def conv_oracle(x, w, b):
    length, c_in = x.shape
    kernels, width, _ = w.shape
    out = np.zeros((length - width + 1, kernels))
    for j in range(length - width + 1):
        for k in range(kernels):
            acc = b[k]
            for h in range(width):
                for c in range(c_in):
                    acc += x[j + h, c] * w[k, h, c]
            out[j, k] = acc
    return out


def test_conv1d_matches_triple_loop_oracle():
    rng = np.random.default_rng(7)
    for _ in range(5):
        length, c_in, kernels, width = (int(rng.integers(4, 10)),
                                        int(rng.integers(1, 4)),
                                        int(rng.integers(1, 4)),
                                        int(rng.integers(1, 4)))
        x = rng.standard_normal((length, c_in))
        w = rng.standard_normal((kernels, width, c_in))
        b = rng.standard_normal(kernels)
        got = conv1d(Tensor(x), Tensor(w), Tensor(b)).data
        assert np.allclose(got, conv_oracle(x, w, b), atol=1e-12)


def test_conv1d_special_cases():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((6, 3))
    b = rng.standard_normal(2)
    zero_w = np.zeros((2, 2, 3))
    got = conv1d(Tensor(x), Tensor(zero_w), Tensor(b)).data
    assert np.allclose(got, np.broadcast_to(b, (5, 2)))
    eye_w = np.zeros((3, 1, 3))
    for k in range(3):
        eye_w[k, 0, k] = 1.0
    got = conv1d(Tensor(x), Tensor(eye_w), Tensor(np.zeros(3))).data
    assert np.allclose(got, x)
    with pytest.raises(ValueError):
        conv1d(Tensor(x[:2]), Tensor(rng.standard_normal((1, 3, 3))),
               Tensor(np.zeros(1)))


def test_conv1d_grads():
    rng = np.random.default_rng(9)
    x, w, b = rnd(rng, 6, 2), rnd(rng, 3, 2, 2), rnd(rng, 3)
    check(lambda: (conv1d(x, w, b) ** 2.0).sum(), {"x": x, "w": w, "b": b})


def test_unbroadcast():
    g = np.ones((3, 4))
    assert _unbroadcast(g, (3, 4)).shape == (3, 4)
    assert np.array_equal(_unbroadcast(g, (4,)), np.full(4, 3.0))
    assert np.array_equal(_unbroadcast(g, (1, 4)), np.full((1, 4), 3.0))
    assert np.array_equal(_unbroadcast(g, (3, 1)), np.full((3, 1), 4.0))
    g3 = np.ones((2, 3, 4))
    assert np.array_equal(_unbroadcast(g3, (3, 1)), np.full((3, 1), 8.0))
    assert float(_unbroadcast(g, ())) == 12.0


def test_leaf_grads_accumulate_across_backwards():
    x = parameter(np.array([1.0, 2.0, 3.0]))
    loss = (x * x).sum()
    backward(loss)
    backward(loss)
    assert np.allclose(x.grad, 4.0 * x.data)


def test_interior_grads_reset_each_backward():
    x = parameter(np.array([1.0, 2.0]))
    y = x * 2.0
    loss = (y * y).sum()
    backward(loss)
    backward(loss)
    assert np.allclose(y.grad, 2.0 * y.data)  # not doubled
    assert np.allclose(x.grad, 2.0 * 8.0 * x.data)


def test_backward_requires_scalar():
    x = parameter(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        backward(x * 2.0)


def test_non_finite_guards():
    with np.errstate(all="ignore"):
        with pytest.raises(NonFiniteError):
            Tensor(np.array([1.0, np.inf]))
        with pytest.raises(NonFiniteError, match="log"):
            constant(np.array([0.0])).log()
        with pytest.raises(NonFiniteError, match="exp"):
            constant(np.array([1000.0])).exp()
        with pytest.raises(NonFiniteError):
            constant(1.0) / constant(0.0)


def test_zero_grad_accepts_dict_and_iterable():
    x = parameter(np.array([1.0]))
    backward((x * x).sum())
    assert x.grad[0] != 0.0
    zero_grad({"x": x})
    assert x.grad[0] == 0.0
    backward((x * x).sum())
    zero_grad([x])
    assert x.grad[0] == 0.0


def test_detach_copies_and_constant_has_no_grad():
    x = parameter(np.array([1.0, 2.0]))
    d = x.detach()
    d[0] = 99.0
    assert x.data[0] == 1.0
    c = constant(np.array([1.0]))
    assert not c.requires_grad and c.grad is None
