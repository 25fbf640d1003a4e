"""Tensor / Tape / 연산 테스트."""

import numpy as np
import pytest

from core import ops
from core.errors import AutodiffError, DomainError, ShapeError
from core.gradcheck import grad_check
from core.tensor import Tape, Tensor, backward, grad, no_grad, parameter, vjp


def test_tensor_is_read_only():
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 5.0


def test_zero_sized_dimension_rejected():
    with pytest.raises(ShapeError):
        Tensor(np.zeros((0, 3)))


def test_backward_accumulates_leaf_grad():
    x = parameter([1.0, -2.0, 3.0])
    with Tape() as tape:
        loss = ops.sum(ops.mul(x, x))
    backward(loss, tape)
    np.testing.assert_allclose(x.grad, [2.0, -4.0, 6.0])

    with Tape() as tape:
        loss = ops.sum(x)
    backward(loss, tape)
    np.testing.assert_allclose(x.grad, [3.0, -3.0, 7.0])


def test_grad_does_not_touch_grad_field():
    x = parameter([[1.0, 2.0]])
    with Tape() as tape:
        loss = ops.sum(ops.exp(x))
    (g,) = grad(loss, [x], tape)
    np.testing.assert_allclose(g, np.exp([[1.0, 2.0]]))
    assert x.grad is None


def test_non_scalar_loss_rejected():
    x = parameter([1.0, 2.0])
    with Tape() as tape:
        y = ops.mul(x, x)
    with pytest.raises(AutodiffError):
        backward(y, tape)


def test_loss_from_other_tape_rejected():
    x = parameter([1.0])
    with Tape():
        loss = ops.sum(ops.square(x))
    with Tape() as other:
        pass
    with pytest.raises(AutodiffError):
        backward(loss, other)


def test_no_grad_records_nothing():
    x = parameter([1.0, 2.0])
    with Tape() as tape:
        with no_grad():
            y = ops.mul(x, x)
    assert len(tape) == 0
    assert not y.requires_grad


def test_constants_are_not_recorded():
    with Tape() as tape:
        ops.add(Tensor([1.0]), Tensor([2.0]))
    assert len(tape) == 0


def test_replay_matches_forward():
    x = parameter(np.arange(6.0).reshape(2, 3))
    with Tape() as tape:
        out = ops.sum(ops.tanh(ops.scale(x, 0.5)))
    (value,) = tape.replay()
    np.testing.assert_allclose(value, out.data)


def test_vjp_seed_shape_checked():
    x = parameter([1.0, 2.0])
    with Tape() as tape:
        y = ops.square(x)
    with pytest.raises(ShapeError):
        vjp([y], [np.ones(3)], [x], tape)
    (g,) = vjp([y], [np.array([1.0, 10.0])], [x], tape)
    np.testing.assert_allclose(g, [2.0, 40.0])


def test_broadcast_only_on_unit_dims():
    a = Tensor(np.ones((2, 3)))
    with pytest.raises(ShapeError):
        ops.add(a, Tensor(np.ones((2, 2))))
    with pytest.raises(ShapeError):
        ops.add(a, Tensor(np.ones(3)))
    assert ops.add(a, Tensor(np.ones((1, 3)))).shape == (2, 3)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


@pytest.mark.parametrize("op, value", [(ops.log, 0.0), (ops.log, -1.0), (ops.sqrt, -1.0)])
def test_domain_errors(op, value):
    with pytest.raises(DomainError):
        op(Tensor([1.0, value]))


def test_division_by_zero():
    with pytest.raises(DomainError):
        ops.div(Tensor([1.0]), Tensor([0.0]))


def test_softmax_rows_sum_to_one_and_mask():
    x = Tensor(np.random.default_rng(0).standard_normal((3, 5)))
    p = ops.softmax(x, -1).data
    np.testing.assert_allclose(p.sum(axis=-1), 1.0)

    mask = np.zeros((3, 5), dtype=bool)
    mask[:, 0] = True
    masked = ops.softmax(x, -1, mask).data
    assert np.all(masked[:, 0] == 0.0)
    np.testing.assert_allclose(masked.sum(axis=-1), 1.0)

    with pytest.raises(DomainError):
        ops.softmax(x, -1, np.ones((3, 5), dtype=bool))


def test_softmax_is_shift_invariant():
    x = np.random.default_rng(1).standard_normal((2, 4))
    a = ops.softmax(Tensor(x), -1).data
    b = ops.softmax(Tensor(x + 1000.0), -1).data
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_logsumexp_stable():
    x = Tensor([[1000.0, 1000.0]])
    np.testing.assert_allclose(ops.logsumexp(x, -1).data, [1000.0 + np.log(2.0)])


def test_sum_is_left_to_right():
    values = np.array([1e16, 1.0, -1e16, 1.0])
    assert ops.sum(Tensor(values)).item() == ((1e16 + 1.0) - 1e16) + 1.0


def test_gelu_matches_tanh_approximation():
    x = np.linspace(-3, 3, 7)
    expected = 0.5 * x * (1 + np.tanh(np.sqrt(2 / np.pi) * (x + 0.044715 * x ** 3)))
    np.testing.assert_allclose(ops.gelu(Tensor(x)).data, expected)


def test_circular_correlation_matches_loop():
    rng = np.random.default_rng(2)
    q, k = rng.standard_normal((6, 2)), rng.standard_normal((6, 2))
    expected = np.array([[np.mean([q[t, c] * k[(t - tau) % 6, c] for t in range(6)]) for c in range(2)]
                         for tau in range(6)])
    out = ops.circular_correlation(Tensor(q), Tensor(k), axis=0).data
    np.testing.assert_allclose(out, expected, atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_composite_gradient(seed):
    rng = np.random.default_rng(seed)
    w = Tensor(rng.standard_normal((4, 3)))

    def f(t):
        h = ops.tanh(ops.matmul(t, w))
        return ops.sum(ops.mul(ops.softmax(h, -1), ops.sigmoid(h)))

    assert grad_check(f, Tensor(rng.standard_normal((2, 4)))) < 1e-6


def test_gather_and_scatter_gradients():
    rng = np.random.default_rng(3)
    idx = np.array([[2, 0], [1, 1]])
    weights = Tensor(rng.standard_normal((2, 2)))
    f = lambda t: ops.sum(ops.mul(ops.gather(t, idx, axis=1), weights))  # noqa: E731
    assert grad_check(f, Tensor(rng.standard_normal((2, 3)))) < 1e-8

    place = np.array([[0, 2]])
    g = lambda t: ops.sum(ops.square(ops.scatter(t, place, axis=1, size=4)))  # noqa: E731
    assert grad_check(g, Tensor(rng.standard_normal((1, 2)))) < 1e-6


def test_grad_check_requires_scalar():
    with pytest.raises(AutodiffError):
        grad_check(lambda t: ops.square(t), Tensor([1.0, 2.0]))
