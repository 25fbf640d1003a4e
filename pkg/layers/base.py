"""레이어 베이스 클래스.

모든 레이어는 이 클래스를 상속받아 forward를 구현한다. 파라미터는 속성으로
보관된 requires_grad 텐서와 하위 레이어(및 그 리스트)에서 자동으로 수집된다.
"""

from abc import ABC, abstractmethod

import numpy as np

from core.tensor import Tensor, parameter


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """[−1/√fan_in, +1/√fan_in] 균등 분포 초기값."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Layer(ABC):
    """학습 가능한 파라미터를 가진 연산 단위."""

    @abstractmethod
    def forward(self, *args, **kwargs):
        """순전파."""

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> dict[str, Tensor]:
        """'블록.하위.이름' 형태의 키로 모든 파라미터를 반환한다 (선언 순서)."""
        params: dict[str, Tensor] = {}
        for name, value in vars(self).items():
            key = f"{prefix}{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                params[key] = value
            elif isinstance(value, Layer):
                params.update(value.named_parameters(f"{key}."))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Layer):
                        params.update(item.named_parameters(f"{key}.{i}."))
                    elif isinstance(item, Tensor) and item.requires_grad:
                        params[f"{key}.{i}"] = item
        return params

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.numpy() for k, v in self.named_parameters().items()}

    def load_state_dict(self, state: dict[str, np.ndarray]):
        """같은 이름·shape의 값으로 파라미터를 교체한다 (텐서 객체는 새로 만든다)."""
        current = self.named_parameters()
        missing = sorted(set(current) - set(state))
        unexpected = sorted(set(state) - set(current))
        if missing or unexpected:
            raise KeyError(f"state_dict 키 불일치 (누락: {missing}, 초과: {unexpected})")
        for key, value in state.items():
            if tuple(value.shape) != current[key].shape:
                raise ValueError(f"[{key}] shape 불일치: {value.shape} != {current[key].shape}")
            self._assign(key.split("."), parameter(value, name=key))

    def _assign(self, path: list[str], tensor: Tensor):
        head, rest = path[0], path[1:]
        target = getattr(self, head)
        if not rest:
            setattr(self, head, tensor)
            return
        if isinstance(target, (list, tuple)):
            idx = int(rest[0])
            if len(rest) == 1:
                target[idx] = tensor
            else:
                target[idx]._assign(rest[1:], tensor)
            return
        target._assign(rest, tensor)
