"""ADAM 옵티마이저.

학습률 외 값(β1=0.9, β2=0.999, ε=1e-8)은 프레임워크 표준값을 따른다.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from core.errors import NumericalError
from core.tensor import Tensor

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


@dataclass
class AdamState:
    """파라미터 이름별 1·2차 모멘트와 스텝 수."""
    learning_rate: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError(f"beta 값은 (0,1) 범위여야 합니다: {self.beta1}, {self.beta2}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate는 양수여야 합니다: {self.learning_rate}")


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray], state: AdamState) -> AdamState:
    """편향 보정 ADAM 한 스텝. 파라미터 값을 갱신하고 같은 state를 반환한다."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"[{name}] 기울기에 NaN/Inf가 있습니다")
        if g.shape != params[name].shape:
            raise ValueError(f"[{name}] 기울기 shape {g.shape} != 파라미터 {params[name].shape}")

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros(p.shape)
        m = state.first_moment.get(name, np.zeros(p.shape))
        v = state.second_moment.get(name, np.zeros(p.shape))
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.first_moment[name] = m
        state.second_moment[name] = v
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p.assign(p.data - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon))
    return state


class Adam:
    """named 파라미터 묶음에 대해 grad 필드를 읽어 adam_step을 수행한다."""

    def __init__(self, params: dict[str, Tensor], learning_rate: float):
        self.params = params
        self.state = AdamState(learning_rate=learning_rate)

    def step(self):
        grads = {name: p.grad for name, p in self.params.items() if p.grad is not None}
        adam_step(self.params, grads, self.state)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()
