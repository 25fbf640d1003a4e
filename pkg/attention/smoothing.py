"""지수평활 어텐션, 주파수 어텐션, Holt-Winters 예측."""

import numpy as np

from core import fft, ops
from core.errors import DomainError, ShapeError
from core.tensor import Tensor


def _check_alpha(alpha: float | Tensor) -> Tensor:
    value = alpha.data if isinstance(alpha, Tensor) else np.asarray([alpha], dtype=np.float64)
    if np.any(value <= 0) or np.any(value >= 1):
        raise DomainError(f"alpha는 (0, 1) 범위여야 합니다: {value.reshape(-1)}")
    return alpha if isinstance(alpha, Tensor) else Tensor(value)


def smoothing_weights(alpha: float, length: int) -> tuple[np.ndarray, np.ndarray]:
    """(A [L×L], w0 [L]) 를 배열로 반환한다. A[t,j] = α(1−α)^(t−j), w0[t] = (1−α)^(t+1)."""
    _check_alpha(alpha)
    t = np.arange(length)
    lag = t[:, None] - t[None, :]
    a = np.where(lag >= 0, alpha * (1.0 - alpha) ** np.maximum(lag, 0), 0.0)
    return a, (1.0 - alpha) ** (t + 1)


def exponential_smoothing_attention(v: Tensor, alpha: float | Tensor, v_init: Tensor) -> Tensor:
    """out_t = Σ_{j≤t} α(1−α)^(t−j)·V_j + (1−α)^(t+1)·v_init.

    v [..., L, d], v_init [..., d] (또는 [d]). alpha는 상수 또는 shape (1,) 텐서.
    """
    alpha = _check_alpha(alpha)
    if v_init.shape[-1] != v.shape[-1]:
        raise ShapeError(f"ESA: v_init {v_init.shape} 와 V {v.shape} 채널 불일치")
    length = v.shape[-2]
    t = np.arange(length, dtype=np.float64)
    lag = t[:, None] - t[None, :]
    lower = np.tril(np.ones((length, length)))

    log_decay = ops.reshape(ops.log(ops.neg(ops.shift(alpha, -1.0))), (1, 1))  # ln(1−α)
    decay = ops.exp(ops.mul(Tensor(np.maximum(lag, 0)), log_decay))
    weights = ops.mul(ops.mul(decay, Tensor(lower)), ops.reshape(alpha, (1, 1)))

    if v.ndim == 2:
        smoothed = ops.matmul(weights, v)
    else:
        smoothed = ops.swapaxes(ops.matmul(ops.swapaxes(v, -1, -2), ops.transpose(weights)), -1, -2)

    init_w = ops.exp(ops.mul(Tensor((t + 1.0).reshape(-1, 1)), log_decay))  # [L, 1]
    init_w = ops.reshape(init_w, (1,) * (v.ndim - 2) + (length, 1))
    lead = (1,) * (v.ndim - v_init.ndim - 1) + v_init.shape[:-1]
    init = ops.mul(init_w, ops.reshape(v_init, lead + (1, v.shape[-1])))
    return ops.add(smoothed, init)


def dominant_frequencies(x: np.ndarray, top_k: int) -> np.ndarray:
    """채널별 진폭 상위 top_k 주파수 bin [..., d, top_k] (DC 제외, 1..L/2, 동점은 낮은 bin)."""
    length = x.shape[-2]
    spectrum = fft.dft(np.moveaxis(x, -2, -1))
    amplitude = np.abs(spectrum[..., 1:length // 2 + 1])
    return np.argsort(-amplitude, axis=-1, kind="stable")[..., :top_k] + 1


def frequency_attention(x: Tensor, top_k: int, horizon: int) -> tuple[Tensor, Tensor | None]:
    """상위 진폭 주파수만 남겨 복원한 계절 성분 (입력 구간 [..., L, d], 외삽 구간 [..., H, d])."""
    length = x.shape[-2]
    if not 1 <= top_k <= length // 2:
        raise DomainError(f"top_k={top_k} 는 1..{length // 2} 범위여야 합니다")
    if horizon < 0:
        raise DomainError(f"horizon은 음수일 수 없습니다: {horizon}")
    bins = dominant_frequencies(x.data, top_k)
    n_bins = length // 2 + 1

    # 선택된 bin의 가중치: 켤레 쌍이 있으면 2/L, 나이퀴스트 bin은 1/L
    select = np.zeros(bins.shape[:-1] + (n_bins,))
    pair = np.where((length % 2 == 0) & (bins == length // 2), 1.0, 2.0) / length
    np.put_along_axis(select, bins, pair, axis=-1)

    k = np.arange(n_bins)
    t_in = np.arange(length)
    t_all = np.arange(length + horizon)
    cos_in = np.cos(2 * np.pi * np.outer(t_in, k) / length)
    sin_in = np.sin(2 * np.pi * np.outer(t_in, k) / length)
    cos_out = np.cos(2 * np.pi * np.outer(k, t_all) / length)
    sin_out = np.sin(2 * np.pi * np.outer(k, t_all) / length)

    channels = ops.swapaxes(x, -1, -2)  # [..., d, L]
    weight = Tensor(select)
    re = ops.mul(ops.matmul(channels, Tensor(cos_in)), weight)
    im = ops.mul(ops.matmul(channels, Tensor(sin_in)), weight)
    wave = ops.add(ops.matmul(re, Tensor(cos_out)), ops.matmul(im, Tensor(sin_out)))
    wave = ops.swapaxes(wave, -1, -2)  # [..., L+H, d]
    seasonal_in = ops.getitem(wave, (..., slice(0, length), slice(None)))
    if horizon == 0:
        return seasonal_in, None
    seasonal_out = ops.getitem(wave, (..., slice(length, length + horizon), slice(None)))
    return seasonal_in, seasonal_out


# ── 고전 Holt-Winters ──────────────────────────────────


def _check_unit(name: str, value: float):
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name}는 (0, 1) 범위여야 합니다: {value}")


def holt_winters_states(x, alpha: float, beta: float, gamma: float, period: int,
                        level0: float, growth0: float, season0) -> tuple[float, float, list[float]]:
    """가법 Holt-Winters 재귀를 끝까지 돌려 (level, growth, 계절 이력)을 반환한다.

    e_t = α(x_t − s_{t−p}) + (1−α)(e_{t−1} + b_{t−1})
    b_t = β(e_t − e_{t−1}) + (1−β)·b_{t−1}
    s_t = γ(x_t − e_{t−1}) + (1−γ)·s_{t−p}
    """
    for name, value in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        _check_unit(name, value)
    series = [float(v) for v in np.asarray(x, dtype=np.float64).reshape(-1)]
    season = [float(v) for v in np.asarray(season0, dtype=np.float64).reshape(-1)]
    if period < 1 or len(season) != period:
        raise ShapeError(f"계절 초기값 길이 {len(season)} != period {period}")
    if len(series) < period:
        raise ShapeError(f"시계열 길이 {len(series)} 가 period {period} 보다 짧습니다")

    level, growth = float(level0), float(growth0)
    for t, value in enumerate(series):
        past_season = season[t]  # season[t] == s_{t−p}
        new_level = alpha * (value - past_season) + (1 - alpha) * (level + growth)
        growth = beta * (new_level - level) + (1 - beta) * growth
        season.append(gamma * (value - level) + (1 - gamma) * past_season)
        level = new_level
    return level, growth, season


def holt_winters_forecast(x, alpha: float, beta: float, gamma: float, period: int, h: int,
                          level0: float = 0.0, growth0: float = 0.0, season0=None) -> float:
    """x̂_{T+h|T} = e_T + h·b_T + s_{T+h−p·m}, m = ⌈h/p⌉."""
    if h < 1:
        raise DomainError(f"예측 거리 h는 1 이상이어야 합니다: {h}")
    season0 = np.zeros(period) if season0 is None else season0
    level, growth, season = holt_winters_states(x, alpha, beta, gamma, period, level0, growth0, season0)
    steps = len(season) - period  # = T
    back = period * ((h - 1) // period + 1)
    return level + h * growth + season[period + steps - 1 + h - back]


def holt_winters_path(x, alpha: float, beta: float, gamma: float, period: int, horizon: int,
                      level0: float = 0.0, growth0: float = 0.0, season0=None) -> np.ndarray:
    """h = 1..horizon 예측을 한 번에 계산한다."""
    season0 = np.zeros(period) if season0 is None else season0
    level, growth, season = holt_winters_states(x, alpha, beta, gamma, period, level0, growth0, season0)
    steps = len(season) - period
    out = np.empty(horizon)
    for h in range(1, horizon + 1):
        back = period * ((h - 1) // period + 1)
        out[h - 1] = level + h * growth + season[period + steps - 1 + h - back]
    return out
