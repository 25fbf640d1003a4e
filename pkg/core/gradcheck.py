"""중앙 차분 기반 기울기 검증."""

from typing import Callable

import numpy as np

from core.errors import AutodiffError
from core.tensor import Tape, Tensor, grad, no_grad


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5) -> float:
    """해석적 기울기와 중앙 차분의 최대 상대 오차를 반환한다.

    오차 = max_i |analytic_i − numeric_i| / max(1, |numeric_i|)

    f는 입력 텐서 하나를 받아 스칼라 텐서를 돌려주는 함수여야 한다.
    f 내부에서 쓰는 파라미터의 grad는 이 함수가 건드리지 않는다.
    """
    if eps <= 0:
        raise ValueError("eps는 양수여야 합니다")
    leaf = Tensor(x.data, requires_grad=True)
    with Tape() as tape:
        out = f(leaf)
    if out.size != 1:
        raise AutodiffError(f"grad_check: f의 출력이 스칼라가 아닙니다 {out.shape}")
    if out in tape:
        analytic = grad(out, [leaf], tape)[0]
    else:
        analytic = np.zeros(x.shape)

    base = x.data.reshape(-1)
    numeric = np.zeros(base.size)
    with no_grad():
        for i in range(base.size):
            plus = base.copy()
            minus = base.copy()
            plus[i] += eps
            minus[i] -= eps
            f_plus = f(Tensor(plus.reshape(x.shape))).item()
            f_minus = f(Tensor(minus.reshape(x.shape))).item()
            numeric[i] = (f_plus - f_minus) / (2.0 * eps)

    err = np.abs(analytic.reshape(-1) - numeric) / np.maximum(1.0, np.abs(numeric))
    return float(np.max(err))
