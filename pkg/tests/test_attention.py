"""어텐션 커널: 전체, ProbSparse, LSH, 자기상관, 지수 평활, 주파수, Holt-Winters."""

import math

import numpy as np
import pytest

from attention.auto_correlation import (
    AutoCorrelationLayer, auto_correlation_attention, lag_correlation, n_delays, top_delays,
)
from attention.config import AttentionConfig, AutoCorrelationConfig, LshConfig, ProbSparseConfig
from attention.full import MultiHeadAttention, causal_mask, full_kernel, scaled_dot_attention
from attention.lsh import LSHSelfAttention, allowed_pairs, dense_shared_qk_attention, lsh_attend, lsh_hash
from attention.prob_sparse import prob_sparse_attention, select_queries, sparsity_measurement
from attention.smoothing import (
    dominant_frequencies, exponential_smoothing_attention, frequency_attention, holt_winters_forecast,
    holt_winters_path, smoothing_weights,
)
from core import ops
from core.errors import DomainError, ShapeError
from core.gradcheck import grad_check
from core.tensor import Tensor
from layers.linear import Linear
from training.diagnostics import check_equivalences, one_bucket_inputs


def _softmax_attention(q, k, v, causal=False):
    scores = q @ np.swapaxes(k, -1, -2) / math.sqrt(q.shape[-1])
    if causal:
        scores = np.where(causal_mask(q.shape[-2], k.shape[-2]), -np.inf, scores)
    w = np.exp(scores - scores.max(axis=-1, keepdims=True))
    return (w / w.sum(axis=-1, keepdims=True)) @ v


def _dense_shared_qk(qk, v, causal):
    """쿼리별로 허용 키를 나열해 계산한 공유 QK 어텐션."""
    keys = qk / np.sqrt((qk ** 2).sum(axis=-1, keepdims=True) + 1e-6)
    batch, length, d = qk.shape
    out = np.empty((batch, length, v.shape[-1]))
    for b in range(batch):
        for i in range(length):
            cand = [j for j in range(length) if j != i and (not causal or j <= i)] or [i]
            s = np.array([qk[b, i] @ keys[b, j] for j in cand]) / math.sqrt(d)
            w = np.exp(s - s.max())
            out[b, i] = (w / w.sum()) @ v[b, cand]
    return out


def _holt_winters_oracle(x, alpha, beta, gamma, p, h, level0, growth0, season0):
    """e[t+1] = e_t, b[t+1] = b_t, s[t+p] = s_t 로 배열에 직접 채우는 재귀."""
    n = len(x)
    e, b, s = np.empty(n + 1), np.empty(n + 1), np.empty(n + p)
    e[0], b[0], s[:p] = level0, growth0, season0
    for t in range(n):
        e[t + 1] = alpha * (x[t] - s[t]) + (1 - alpha) * (e[t] + b[t])
        b[t + 1] = beta * (e[t + 1] - e[t]) + (1 - beta) * b[t]
        s[t + p] = gamma * (x[t] - e[t]) + (1 - gamma) * s[t]
    m = (h - 1) // p + 1
    return e[n] + h * b[n] + s[n - 1 + h - p * m + p]


@pytest.fixture
def qkv(rng):
    return [rng.standard_normal((2, 16, 4)) for _ in range(3)]


class TestFullAttention:
    def test_matches_direct_formula(self, qkv):
        q, k, v = qkv
        out = scaled_dot_attention(Tensor(q), Tensor(k), Tensor(v)).data
        np.testing.assert_allclose(out, _softmax_attention(q, k, v), atol=1e-12)

    def test_causal_ignores_future_values(self, qkv):
        q, k, v = qkv
        changed = v.copy()
        changed[:, 10:] += 100.0
        a = full_kernel(Tensor(q), Tensor(k), Tensor(v), causal=True).data
        b = full_kernel(Tensor(q), Tensor(k), Tensor(changed), causal=True).data
        np.testing.assert_allclose(a[:, :10], b[:, :10])
        assert not np.allclose(a[:, 10:], b[:, 10:])

    def test_single_head_identity_projections(self, rng):
        layer = MultiHeadAttention(AttentionConfig(d_model=4, n_heads=1), rng)
        for name in ("q_proj", "k_proj", "v_proj", "out_proj"):
            setattr(layer, name, Linear.from_arrays(np.eye(4), np.zeros(4)))
        x_q, x_kv = rng.standard_normal((2, 6, 4)), rng.standard_normal((2, 9, 4))
        out = layer(Tensor(x_q), Tensor(x_kv)).data
        expected = scaled_dot_attention(Tensor(x_q), Tensor(x_kv), Tensor(x_kv)).data
        np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)

    def test_mask_shape_checked(self, qkv):
        q, k, v = qkv
        with pytest.raises(ShapeError):
            scaled_dot_attention(Tensor(q), Tensor(k), Tensor(v), np.zeros((3, 3), dtype=bool))

    def test_multi_head_gradient(self, rng):
        layer = MultiHeadAttention(AttentionConfig(d_model=8, n_heads=2), rng)
        kv = Tensor(rng.standard_normal((1, 5, 8)))
        w = Tensor(rng.standard_normal((1, 4, 8)))
        err = grad_check(lambda t: ops.sum(ops.mul(layer(t, kv), w)), Tensor(rng.standard_normal((1, 4, 8))))
        assert err < 1e-6

    def test_heads_must_divide_model_width(self):
        with pytest.raises(ValueError):
            AttentionConfig(d_model=10, n_heads=4)


class TestProbSparse:
    @pytest.mark.parametrize("causal", [False, True])
    def test_all_queries_selected_equals_full(self, qkv, causal):
        q, k, v = qkv
        config = ProbSparseConfig(sampling_factor=100.0, full_key_sample=True)
        out = prob_sparse_attention(Tensor(q), Tensor(k), Tensor(v), config, causal).data
        np.testing.assert_allclose(out, _softmax_attention(q, k, v, causal), atol=1e-12)

    def test_lazy_rows_are_value_mean(self, rng):
        q, k, v = (rng.standard_normal((32, 4)) for _ in range(3))
        config = ProbSparseConfig(sampling_factor=1.0, seed=3)
        top = select_queries(q, k, config)
        assert len(top) == math.ceil(math.log(32))
        out = prob_sparse_attention(Tensor(q), Tensor(k), Tensor(v), config).data
        lazy = np.setdiff1d(np.arange(32), top)
        np.testing.assert_allclose(out[lazy], np.broadcast_to(v.mean(axis=0), (len(lazy), 4)), atol=1e-12)
        np.testing.assert_allclose(out[top], _softmax_attention(q[top], k, v), atol=1e-12)

    def test_sparsity_measurement_is_non_negative(self, rng):
        k = rng.standard_normal((10, 4))
        assert sparsity_measurement(rng.standard_normal(4), k) >= 0.0
        assert sparsity_measurement(np.zeros(4), k) == pytest.approx(0.0)

    def test_causal_requires_square(self, rng):
        q, k = rng.standard_normal((4, 2)), rng.standard_normal((6, 2))
        with pytest.raises(ShapeError):
            prob_sparse_attention(Tensor(q), Tensor(k), Tensor(k), ProbSparseConfig(), causal=True)


class TestLsh:
    def test_buckets_in_range_and_deterministic(self, rng):
        x = rng.standard_normal((2, 40, 8))
        config = LshConfig(n_buckets=6, n_rounds=3, seed=5)
        buckets = lsh_hash(x, config)
        assert buckets.shape == (2, 3, 40)
        assert buckets.min() >= 0 and buckets.max() < 6
        np.testing.assert_array_equal(buckets, lsh_hash(x, config))

    def test_hash_ignores_scale(self, rng):
        x = rng.standard_normal((1, 12, 4))
        np.testing.assert_array_equal(lsh_hash(x, LshConfig()), lsh_hash(3.0 * x, LshConfig()))

    def test_negated_vectors_hash_to_opposite_buckets(self, rng):
        x = rng.standard_normal((1, 20, 4))
        config = LshConfig(n_buckets=2, n_rounds=3, seed=1)
        np.testing.assert_array_equal(lsh_hash(x, config) + lsh_hash(-x, config), 1)

    @pytest.mark.parametrize("causal", [False, True])
    def test_one_bucket_one_chunk_equals_dense(self, rng, causal):
        config = LshConfig(n_buckets=2, n_rounds=1, chunk_len=12)
        qk = one_bucket_inputs(rng.standard_normal((2, 12, 4)), config)
        assert np.all(lsh_hash(qk, config) == 0)
        v = rng.standard_normal((2, 12, 3))
        expected = _dense_shared_qk(qk, v, causal)
        out = lsh_attend(Tensor(qk), Tensor(v), config, causal).data
        np.testing.assert_allclose(out, expected, rtol=0, atol=1e-10)
        np.testing.assert_allclose(dense_shared_qk_attention(qk, v, causal), expected, rtol=0, atol=1e-12)

    def test_odd_bucket_count_rejected(self):
        with pytest.raises(ValueError):
            LshConfig(n_buckets=5)

    def test_self_allowed_only_when_alone(self):
        pos = np.array([[0, 1, 2]])
        bucket = np.array([[0, 0, 1]])
        allowed = allowed_pairs(pos, pos, bucket, bucket, causal=False)
        np.testing.assert_array_equal(allowed[0], [[False, True, False], [True, False, False], [False, False, True]])

    def test_constant_values_pass_through(self, rng):
        qk = Tensor(rng.standard_normal((2, 30, 4)))
        v = Tensor(np.full((2, 30, 3), 2.5))
        out = lsh_attend(qk, v, LshConfig(n_buckets=4, chunk_len=8), causal=True).data
        np.testing.assert_allclose(out, 2.5, atol=1e-9)

    def test_causal_ignores_future_values(self, rng):
        qk = rng.standard_normal((1, 20, 4))
        v = rng.standard_normal((1, 20, 2))
        changed = v.copy()
        changed[:, 12:] -= 50.0
        config = LshConfig(n_buckets=2, chunk_len=10)
        a = lsh_attend(Tensor(qk), Tensor(v), config, causal=True).data
        b = lsh_attend(Tensor(qk), Tensor(changed), config, causal=True).data
        np.testing.assert_allclose(a[:, :12], b[:, :12], atol=1e-12)

    def test_layer_shape(self, rng):
        layer = LSHSelfAttention(AttentionConfig(d_model=8, n_heads=2), LshConfig(chunk_len=4), rng)
        assert layer(Tensor(rng.standard_normal((2, 10, 8)))).shape == (2, 10, 8)


class TestAutoCorrelation:
    def test_lag_correlation_matches_loop(self, rng):
        q, k = rng.standard_normal((12, 3)), rng.standard_normal((12, 3))
        corr = lag_correlation(Tensor(q), Tensor(k)).data
        expected = [np.mean([q[t] @ k[(t - tau) % 12] for t in range(12)]) / 3 for tau in range(12)]
        np.testing.assert_allclose(corr, expected, atol=1e-12)

    def test_periodic_signal_picks_its_period(self):
        t = np.arange(32, dtype=np.float64)
        x = np.sin(2 * np.pi * t / 8)[:, None]
        corr = lag_correlation(Tensor(x), Tensor(x)).data
        assert top_delays(corr, 1)[0] == 0
        assert top_delays(corr, 1, exclude_zero_lag=True)[0] == 8
        np.testing.assert_array_equal(top_delays(corr, 4), [0, 8, 16, 24])

    def test_single_delay_rolls_values(self, rng):
        t = np.arange(32, dtype=np.float64)
        x = np.sin(2 * np.pi * t / 8)[:, None]
        v = rng.standard_normal((32, 2))
        config = AutoCorrelationConfig(c_factor=0.1, exclude_zero_lag=True)
        assert n_delays(32, config) == 1
        out = auto_correlation_attention(Tensor(x), Tensor(x), Tensor(v), config).data
        np.testing.assert_allclose(out, v[(np.arange(32) + 8) % 32])

    def test_delay_count(self):
        assert n_delays(96, AutoCorrelationConfig()) == 4
        assert n_delays(2, AutoCorrelationConfig(c_factor=10, exclude_zero_lag=True)) == 1

    def test_length_one_rejected(self):
        x = Tensor(np.ones((1, 2)))
        with pytest.raises(ShapeError):
            auto_correlation_attention(x, x, x)

    def test_cross_layer_aligns_lengths(self, rng):
        layer = AutoCorrelationLayer(AttentionConfig(d_model=4, n_heads=2), rng)
        out = layer(Tensor(rng.standard_normal((1, 10, 4))), Tensor(rng.standard_normal((1, 6, 4))))
        assert out.shape == (1, 10, 4)


class TestSmoothing:
    def test_weights_rows_sum_to_one(self):
        a, w0 = smoothing_weights(0.3, 10)
        np.testing.assert_allclose(a.sum(axis=1) + w0, 1.0)
        assert np.all(np.triu(a, 1) == 0)

    def test_matches_recursion(self, rng):
        v = rng.standard_normal((9, 2))
        init = rng.standard_normal(2)
        out = exponential_smoothing_attention(Tensor(v), 0.4, Tensor(init)).data
        state = init
        for t in range(9):
            state = 0.4 * v[t] + 0.6 * state
            np.testing.assert_allclose(out[t], state, atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
    def test_alpha_out_of_range(self, alpha):
        with pytest.raises(DomainError):
            smoothing_weights(alpha, 4)

    def test_alpha_gradient(self, rng):
        v = Tensor(rng.standard_normal((6, 2)))
        init = Tensor(rng.standard_normal(2))
        err = grad_check(lambda a: ops.sum(exponential_smoothing_attention(v, a, init)), Tensor([0.35]))
        assert err < 1e-6

    def test_frequency_attention_reconstructs_sinusoid(self):
        length, horizon = 48, 12
        t = np.arange(length + horizon, dtype=np.float64)
        wave = 2.0 * np.cos(2 * np.pi * 3 * t / length + 0.4)
        x = Tensor(wave[:length].reshape(1, length, 1))
        seasonal_in, seasonal_out = frequency_attention(x, top_k=1, horizon=horizon)
        np.testing.assert_allclose(seasonal_in.data[0, :, 0], wave[:length], atol=1e-9)
        np.testing.assert_allclose(seasonal_out.data[0, :, 0], wave[length:], atol=1e-9)

    def test_frequency_attention_ignores_constant_offset(self):
        length, horizon = 32, 8
        t = np.arange(length + horizon, dtype=np.float64)
        tone = np.sin(2 * np.pi * 2 * t / length)
        seasonal_in, seasonal_out = frequency_attention(
            Tensor((5.0 + tone[:length]).reshape(length, 1)), top_k=1, horizon=horizon)
        np.testing.assert_allclose(seasonal_in.data[:, 0], tone[:length], atol=1e-9)
        np.testing.assert_allclose(seasonal_out.data[:, 0], tone[length:], atol=1e-9)

        flat_in, _ = frequency_attention(Tensor(np.full((16, 1), 3.0)), top_k=1, horizon=4)
        np.testing.assert_allclose(flat_in.data, 0.0, atol=1e-9)

    def test_frequency_attention_two_tones(self):
        length, horizon = 32, 8
        t = np.arange(length + horizon, dtype=np.float64)
        big = 2.0 * np.cos(2 * np.pi * 3 * t / length + 0.3)
        small = 0.5 * np.sin(2 * np.pi * 7 * t / length)
        x = (big + small)[:length].reshape(1, length, 1)
        np.testing.assert_array_equal(dominant_frequencies(x, 2)[0, 0], [3, 7])

        both_in, both_out = frequency_attention(Tensor(x), top_k=2, horizon=horizon)
        np.testing.assert_allclose(both_in.data[0, :, 0], (big + small)[:length], atol=1e-9)
        np.testing.assert_allclose(both_out.data[0, :, 0], (big + small)[length:], atol=1e-9)
        larger_in, _ = frequency_attention(Tensor(x), top_k=1, horizon=horizon)
        np.testing.assert_allclose(larger_in.data[0, :, 0], big[:length], atol=1e-9)

    def test_frequency_attention_without_horizon(self, rng):
        _, out = frequency_attention(Tensor(rng.standard_normal((16, 2))), top_k=2, horizon=0)
        assert out is None
        with pytest.raises(DomainError):
            frequency_attention(Tensor(rng.standard_normal((16, 2))), top_k=9, horizon=0)


class TestHoltWinters:
    def test_path_matches_pointwise_forecast(self, rng):
        x = np.sin(np.arange(30) * 2 * np.pi / 6) + 0.1 * rng.standard_normal(30)
        season0 = np.sin(np.arange(6) * 2 * np.pi / 6)
        path = holt_winters_path(x, 0.3, 0.1, 0.2, 6, 14, level0=0.0, season0=season0)
        pointwise = [holt_winters_forecast(x, 0.3, 0.1, 0.2, 6, h, season0=season0) for h in range(1, 15)]
        np.testing.assert_allclose(path, pointwise)

    def test_matches_direct_recursion(self):
        rng = np.random.default_rng(11)
        period, horizon = 4, 9
        for _ in range(100):
            x = 3.0 * rng.standard_normal(20)
            alpha, beta, gamma = rng.uniform(0.05, 0.95, 3)
            level0, growth0 = rng.standard_normal(2)
            season0 = rng.standard_normal(period)
            path = holt_winters_path(x, alpha, beta, gamma, period, horizon, level0, growth0, season0)
            for h in range(1, horizon + 1):
                expected = _holt_winters_oracle(x, alpha, beta, gamma, period, h, level0, growth0, season0)
                assert abs(path[h - 1] - expected) <= 1e-12
                assert abs(holt_winters_forecast(x, alpha, beta, gamma, period, h, level0, growth0, season0)
                           - expected) <= 1e-12

    def test_constant_series_forecast(self):
        forecast = holt_winters_forecast(np.full(12, 4.0), 0.5, 0.5, 0.5, 4, 7, level0=4.0)
        assert forecast == pytest.approx(4.0)

    def test_rejects_bad_parameters(self):
        with pytest.raises(DomainError):
            holt_winters_forecast(np.ones(8), 1.0, 0.5, 0.5, 4, 1)
        with pytest.raises(DomainError):
            holt_winters_forecast(np.ones(8), 0.5, 0.5, 0.5, 4, 0)
        with pytest.raises(ShapeError):
            holt_winters_forecast(np.ones(3), 0.5, 0.5, 0.5, 4, 1)


def test_equivalence_checks_pass():
    results = check_equivalences(seed=3)
    assert "equiv:lsh_full" in [r.name for r in results]
    assert all(r.passed for r in results), [(r.name, r.error) for r in results if not r.passed]
