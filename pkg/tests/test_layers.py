"""nn 기본 요소: Linear, LayerNorm, Conv1d, LSTM, 위치 인코딩, Adam, 체크포인트."""

import numpy as np
import pytest

from core import ops
from core.errors import NumericalError, ShapeError
from core.gradcheck import grad_check
from core.tensor import Tape, Tensor, backward, parameter
from layers.base import Layer
from layers.checkpoint import file_sha256, load_tensors, save_tensors
from layers.conv import Conv1d, conv1d
from layers.embedding import positional_encoding
from layers.linear import Linear
from layers.norm import LayerNorm
from layers.optim import Adam
from layers.recurrent import LSTM, LSTMCell, LstmCellState


class _Stack(Layer):
    def __init__(self, rng):
        self.first = Linear(3, 4, rng)
        self.blocks = [Linear(4, 4, rng), Linear(4, 2, rng)]
        self.norm = LayerNorm(2)

    def forward(self, x):
        h = self.first(x)
        for block in self.blocks:
            h = ops.tanh(block(h))
        return self.norm(h)


def test_linear_shape_error():
    layer = Linear(3, 2, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        layer(Tensor(np.ones((4, 5))))


def test_linear_from_arrays():
    layer = Linear.from_arrays(np.array([[2.0, 0.0], [0.0, 3.0]]), np.array([1.0, -1.0]))
    np.testing.assert_allclose(layer(Tensor([[1.0, 1.0]])).data, [[3.0, 2.0]])


def test_linear_without_bias_has_no_bias_parameter(rng):
    layer = Linear(3, 2, rng, bias=False)
    assert list(layer.named_parameters()) == ["weight"]
    assert layer.num_parameters() == 6
    x = rng.standard_normal((4, 3))
    np.testing.assert_allclose(layer(Tensor(x)).data, x @ layer.weight.data.T, atol=1e-12)

    plain = Linear.from_arrays(np.eye(2))
    assert plain.bias is None
    np.testing.assert_array_equal(plain(Tensor([[1.5, -2.0]])).data, [[1.5, -2.0]])


def test_layer_norm_output_statistics():
    x = Tensor(np.random.default_rng(0).standard_normal((5, 8)) * 3 + 7)
    out = LayerNorm(8)(x).data
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-10)
    np.testing.assert_allclose(out.var(axis=-1), 1.0, atol=1e-4)


def test_conv1d_matches_loop():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 3, 7))
    k = rng.standard_normal((4, 3, 3))
    out = conv1d(Tensor(x), Tensor(k), stride=2, padding=1).data
    padded = np.pad(x, ((0, 0), (0, 0), (1, 1)))
    l_out = (7 + 2 - 3) // 2 + 1
    expected = np.zeros((2, 4, l_out))
    for b in range(2):
        for o in range(4):
            for t in range(l_out):
                expected[b, o, t] = np.sum(padded[b, :, 2 * t:2 * t + 3] * k[o])
    assert out.shape == (2, 4, l_out)
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_conv1d_rejects_bad_geometry():
    with pytest.raises(ShapeError):
        conv1d(Tensor(np.ones((1, 2, 3))), Tensor(np.ones((1, 2, 5))))
    with pytest.raises(ShapeError):
        conv1d(Tensor(np.ones((1, 2, 8))), Tensor(np.ones((1, 3, 2))))


def test_conv1d_layer_gradient():
    rng = np.random.default_rng(2)
    layer = Conv1d(2, 3, 3, rng, padding=1)
    w = Tensor(rng.standard_normal((1, 3, 5)))
    assert grad_check(lambda t: ops.sum(ops.mul(layer(t), w)), Tensor(rng.standard_normal((1, 2, 5)))) < 1e-6


def test_lstm_shapes_and_gradient():
    rng = np.random.default_rng(3)
    lstm = LSTM(3, 4, 2, rng)
    out, states = lstm(Tensor(rng.standard_normal((2, 5, 3))))
    assert out.shape == (2, 5, 4)
    assert len(states) == 2 and states[-1].hidden.shape == (2, 4)
    np.testing.assert_allclose(out.data[:, -1], states[-1].hidden.data)

    w = Tensor(rng.standard_normal((2, 5, 4)))
    err = grad_check(lambda t: ops.sum(ops.mul(lstm(t)[0], w)), Tensor(rng.standard_normal((2, 5, 3))))
    assert err < 1e-6


def test_lstm_cell_state_mismatch():
    cell = LSTMCell(3, 4, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        cell(Tensor(np.ones((2, 3))), LstmCellState.zeros(2, 5))


def test_positional_encoding_values():
    pe = positional_encoding(4, 6).data
    np.testing.assert_allclose(pe[0], [0, 1, 0, 1, 0, 1])
    assert pe[1, 0] == pytest.approx(np.sin(1.0))
    assert pe[2, 3] == pytest.approx(np.cos(2.0 / 10000 ** (2 / 6)))
    with pytest.raises(ShapeError):
        positional_encoding(4, 5)


def test_named_parameters_use_dotted_keys():
    names = list(_Stack(np.random.default_rng(0)).named_parameters())
    assert names[:2] == ["first.weight", "first.bias"]
    assert "blocks.1.weight" in names
    assert names[-2:] == ["norm.gamma", "norm.beta"]


def test_state_dict_round_trip():
    a, b = _Stack(np.random.default_rng(0)), _Stack(np.random.default_rng(1))
    x = Tensor(np.random.default_rng(2).standard_normal((2, 3)))
    assert not np.allclose(a(x).data, b(x).data)
    b.load_state_dict(a.state_dict())
    np.testing.assert_array_equal(a(x).data, b(x).data)


def test_load_state_dict_rejects_mismatch():
    model = _Stack(np.random.default_rng(0))
    state = model.state_dict()
    state.pop("norm.beta")
    with pytest.raises(KeyError):
        model.load_state_dict(state)
    state = model.state_dict()
    state["norm.beta"] = np.zeros(3)
    with pytest.raises(ValueError):
        model.load_state_dict(state)


def test_adam_minimizes_quadratic():
    x = parameter([3.0, -2.0])
    opt = Adam({"x": x}, learning_rate=0.1)
    for _ in range(300):
        x.zero_grad()
        with Tape() as tape:
            loss = ops.sum(ops.square(x))
        backward(loss, tape)
        opt.step()
    np.testing.assert_allclose(x.data, 0.0, atol=1e-2)
    assert opt.state.step_count == 300


def test_adam_first_step_moves_by_learning_rate():
    x = parameter([1.0, -1.0])
    x.accumulate_grad(np.array([0.5, -4.0]))
    Adam({"x": x}, learning_rate=0.01).step()
    np.testing.assert_allclose(x.data, [0.99, -0.99], atol=1e-6)


def test_adam_rejects_nan_gradient():
    x = parameter([1.0])
    x.accumulate_grad(np.array([np.nan]))
    with pytest.raises(NumericalError):
        Adam({"x": x}, learning_rate=0.01).step()
    assert x.data[0] == 1.0


def test_checkpoint_round_trip(tmp_path):
    tensors = {"b.weight": np.arange(6.0).reshape(2, 3), "a.bias": np.array([0.5])}
    sha = save_tensors(tmp_path / "m.ckpt", tensors, {"note": "x"})
    loaded, header = load_tensors(tmp_path / "m.ckpt")
    assert list(loaded) == ["b.weight", "a.bias"]
    np.testing.assert_array_equal(loaded["b.weight"], tensors["b.weight"])
    assert header == {"note": "x"}
    assert file_sha256(tmp_path / "m.ckpt") == sha
    assert save_tensors(tmp_path / "again.ckpt", tensors, {"note": "x"}) == sha


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOTACKPT" + bytes(16))
    with pytest.raises(ValueError):
        load_tensors(path)
