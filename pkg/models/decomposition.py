"""이동평균 기반 시계열 분해."""

import numpy as np

from core import ops
from core.errors import DomainError
from core.tensor import Tensor


def moving_average(x: Tensor, kernel: int) -> Tensor:
    """시간 축(뒤에서 두 번째) 중심 이동평균. 가장자리는 끝값 복제로 채운다."""
    axis = x.ndim - 2
    length = x.shape[axis]
    half = kernel // 2
    idx = np.clip(np.arange(length)[:, None] + np.arange(-half, half + 1)[None, :], 0, length - 1)
    windows = ops.take(x, idx, axis=axis)  # [..., L, k, d]
    return ops.mean(windows, axis=axis + 1)


def series_decompose(x: Tensor, kernel: int) -> tuple[Tensor, Tensor]:
    """x [..., L, d] → (seasonal, trend).

    seasonal = x − MA(x), trend = x − seasonal. trend를 잔차로 다시 구하면
    |x| ≥ |MA(x)| 인 칸(지수 기준)에서 seasonal + trend 가 x와 비트 단위로 같다.
    """
    if kernel < 1 or kernel % 2 == 0:
        raise DomainError(f"분해 커널은 1 이상의 홀수여야 합니다: {kernel}")
    if kernel == 1:
        return ops.sub(x, x), x
    seasonal = ops.sub(x, moving_average(x, kernel))
    return seasonal, ops.sub(x, seasonal)
