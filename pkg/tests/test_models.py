"""예측 모델 7종: 출력 형태, 재현성, 체크포인트, 설정 검증."""

import numpy as np
import pytest

from core import ops
from core.errors import ShapeError
from core.tensor import Tape, Tensor, backward
from models.base import ModelKind, ModelSpec, decoder_input
from models.lstm import LstmForecaster
from models.registry import MODEL_CLASSES, build_model, load_model, save_model

ALL_KINDS = list(ModelKind)


def _inputs(spec, batch=3, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((batch, spec.lookback, spec.n_features))
    future = rng.standard_normal((batch, spec.horizon, 4))
    return x, future


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_output_shape(kind, tiny):
    spec = tiny(kind)
    model = build_model(spec, seed=0)
    x, future = _inputs(spec)
    assert model.predict(x, future).shape == (3, spec.horizon, 1)
    assert model.predict(x).shape == (3, spec.horizon, 1)
    assert model.predict(x[0], future[0]).shape == (spec.horizon, 1)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_same_seed_same_parameters(kind, tiny):
    spec = tiny(kind)
    a, b, c = build_model(spec, 7), build_model(spec, 7), build_model(spec, 8)
    for key, value in a.state_dict().items():
        np.testing.assert_array_equal(value, b.state_dict()[key])
    assert any(not np.array_equal(v, c.state_dict()[k]) for k, v in a.state_dict().items())


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_gradients_reach_parameters(kind, tiny):
    spec = tiny(kind)
    model = build_model(spec, seed=1)
    x, future = _inputs(spec, batch=2)
    with Tape() as tape:
        loss = ops.mean(ops.square(model(Tensor(x), Tensor(future))))
    backward(loss, tape)
    grads = [p.grad for p in model.parameters() if p.grad is not None]
    assert grads
    assert all(np.all(np.isfinite(g)) for g in grads)
    assert any(np.any(g != 0) for g in grads)


def test_reformer_with_decoder(tiny):
    spec = tiny(ModelKind.REFORMER, reformer={"lsh": {"n_buckets": 2, "n_rounds": 1, "chunk_len": 4},
                                               "decoder": True})
    model = build_model(spec, seed=0)
    x, future = _inputs(spec, batch=2)
    assert model.predict(x, future).shape == (2, spec.horizon, 1)
    assert "decoder_norm.gamma" in model.state_dict()


def test_save_load_reproduces_predictions(tmp_path, tiny):
    spec = tiny(ModelKind.INFORMER)
    model = build_model(spec, seed=3)
    sha = save_model(model, tmp_path / "informer.ckpt")
    assert len(sha) == 64
    restored = load_model(tmp_path / "informer.ckpt")
    assert restored.spec == spec
    x, future = _inputs(spec)
    np.testing.assert_array_equal(restored.predict(x, future), model.predict(x, future))


def test_wrong_input_shape(tiny):
    spec = tiny(ModelKind.CNN)
    model = build_model(spec, seed=0)
    with pytest.raises(ShapeError):
        model.predict(np.zeros((2, spec.lookback + 1, spec.n_features)))
    with pytest.raises(ShapeError):
        model.predict(np.zeros((2, spec.lookback, spec.n_features)), np.zeros((2, spec.horizon, 3)))


def test_model_class_checks_kind(tiny):
    with pytest.raises(ValueError):
        LstmForecaster(tiny(ModelKind.CNN), np.random.default_rng(0))
    assert set(MODEL_CLASSES) == set(ModelKind)


@pytest.mark.parametrize("overrides", [
    {"horizon": 100, "allow_custom_horizon": False},
    {"moving_avg": 4},
    {"label_len": 9},
    {"d_model": 9, "n_heads": 3},
    {"activation": "swish"},
])
def test_spec_validation(overrides, tiny):
    with pytest.raises(ValueError):
        tiny(ModelKind.AUTOFORMER, **overrides)


def test_spec_defaults():
    spec = ModelSpec(kind=ModelKind.VANILLA)
    assert (spec.d_model, spec.n_heads, spec.lookback, spec.label_len, spec.horizon) == (64, 4, 96, 48, 96)
    assert spec.target_index == 7
    assert ModelKind.ETSFORMER.is_transformer and not ModelKind.LSTM.is_transformer


def test_decoder_input_layout(tiny):
    spec = tiny(ModelKind.VANILLA)
    x, future = _inputs(spec, batch=2)
    dec = decoder_input(Tensor(x), spec, Tensor(future)).data
    assert dec.shape == (2, spec.label_len + spec.horizon, spec.n_features)
    np.testing.assert_array_equal(dec[:, :spec.label_len], x[:, -spec.label_len:])
    np.testing.assert_array_equal(dec[:, spec.label_len:, :-4], 0.0)
    np.testing.assert_array_equal(dec[:, spec.label_len:, -4:], future)


def test_etsformer_keeps_constant_input(tiny):
    spec = tiny(ModelKind.ETSFORMER)
    model = build_model(spec, seed=2)
    x = np.full((2, spec.lookback, spec.n_features), 0.7)
    np.testing.assert_allclose(model.predict(x), 0.7, rtol=0, atol=1e-12)


# ── 1층 Vanilla 직접 재계산 ──────────────────────────


def _linear(p, name, x):
    return x @ p[f"{name}.weight"].T + p[f"{name}.bias"]


def _layer_norm(p, name, x):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + 1e-5) * p[f"{name}.gamma"] + p[f"{name}.beta"]


def _gelu(x):
    return 0.5 * x * (1.0 + np.tanh(np.sqrt(2.0 / np.pi) * (x + 0.044715 * x ** 3)))


def _embed(p, name, x):
    length, d = x.shape[-2], p[f"{name}.value.weight"].shape[0]
    pe = np.zeros((length, d))
    for pos in range(length):
        for i in range(0, d, 2):
            angle = pos / 10000.0 ** (i / d)
            pe[pos, i], pe[pos, i + 1] = np.sin(angle), np.cos(angle)
    return _linear(p, f"{name}.value", x) + pe


def _attention(p, name, x_q, x_kv, n_heads, causal):
    q, k, v = (_linear(p, f"{name}.{proj}", src)
               for proj, src in (("q_proj", x_q), ("k_proj", x_kv), ("v_proj", x_kv)))
    dk = q.shape[-1] // n_heads
    heads = []
    for h in range(n_heads):
        cols = slice(h * dk, (h + 1) * dk)
        scores = q[..., cols] @ np.swapaxes(k[..., cols], -1, -2) / np.sqrt(dk)
        if causal:
            scores = np.where(np.triu(np.ones(scores.shape[-2:], dtype=bool), 1), -np.inf, scores)
        w = np.exp(scores - scores.max(axis=-1, keepdims=True))
        heads.append(w / w.sum(axis=-1, keepdims=True) @ v[..., cols])
    return _linear(p, f"{name}.out_proj", np.concatenate(heads, axis=-1))


def _ffn(p, name, x):
    return _linear(p, f"{name}.down", _gelu(_linear(p, f"{name}.up", x)))


def test_vanilla_matches_direct_recomputation(tiny):
    spec = tiny(ModelKind.VANILLA)
    model = build_model(spec, seed=4)
    p = model.state_dict()
    x, future = _inputs(spec, batch=2)
    heads = spec.n_heads

    memory = _embed(p, "enc_embedding", x)
    memory = _layer_norm(p, "encoder.0.norm1", memory + _attention(p, "encoder.0.attention", memory, memory, heads, False))
    memory = _layer_norm(p, "encoder.0.norm2", memory + _ffn(p, "encoder.0.ffn", memory))

    dec = np.concatenate([
        x[:, -spec.label_len:],
        np.concatenate([np.zeros((2, spec.horizon, spec.n_features - 4)), future], axis=2),
    ], axis=1)
    h = _embed(p, "dec_embedding", dec)
    h = _layer_norm(p, "decoder.0.norm1", h + _attention(p, "decoder.0.self_attention", h, h, heads, True))
    h = _layer_norm(p, "decoder.0.norm2", h + _attention(p, "decoder.0.cross_attention", h, memory, heads, False))
    h = _layer_norm(p, "decoder.0.norm3", h + _ffn(p, "decoder.0.ffn", h))
    expected = _linear(p, "projection", h[:, -spec.horizon:])

    np.testing.assert_allclose(model.predict(x, future), expected, rtol=0, atol=1e-10)


def test_vanilla_parameter_count(tiny):
    spec = tiny(ModelKind.VANILLA)
    d, ff, m = spec.d_model, spec.d_ff, spec.n_features
    embedding = m * d + d
    attention = 4 * (d * d + d)
    norm = 2 * d
    ffn = (d * ff + ff) + (ff * d + d)
    expected = (2 * embedding + (attention + 2 * norm + ffn)
                + (2 * attention + 3 * norm + ffn) + (d + 1))
    assert expected == 1625
    assert build_model(spec, seed=0).num_parameters() == expected
