"""텐서와 테이프 기반 역전파 엔진.

모든 모델 연산은 Tensor 위에서 이루어진다. 활성 Tape가 있고 입력 중 하나라도
requires_grad이면 연산 노드가 테이프에 순서대로 기록되며, backward는 그 기록을
역순으로 훑어 리프 텐서의 grad에 기울기를 누적한다.

테이프 스택은 스레드마다 따로 존재하므로 서로 다른 스레드의 학습 작업은
테이프를 공유하지 않는다.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from numbers import Number
from typing import Callable, Iterable, Sequence

import numpy as np

from core.errors import AutodiffError, ShapeError

_state = threading.local()


def _tape_stack() -> list[Tape | None]:
    if not hasattr(_state, "stack"):
        _state.stack = []
    return _state.stack


def active_tape() -> Tape | None:
    """현재 스레드에서 기록 중인 테이프를 반환한다. no_grad 구간이면 None."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class no_grad:
    """기록을 일시 중지하는 컨텍스트. 추론과 가역 블록 재계산에 쓴다."""

    def __enter__(self):
        _tape_stack().append(None)
        return self

    def __exit__(self, *exc):
        _tape_stack().pop()
        return False


@dataclass(eq=False)
class Node:
    """테이프에 기록된 연산 하나."""
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]]
    forward_fn: Callable[..., np.ndarray]


class Tape:
    """연산 기록. 노드는 항상 위상 순서(입력이 먼저)로 쌓인다."""

    def __init__(self):
        self.nodes: list[Node] = []
        self._index: dict[int, int] = {}

    def __enter__(self) -> Tape:
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc):
        _tape_stack().pop()
        return False

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, tensor: Tensor) -> bool:
        return tensor._node is not None and id(tensor._node) in self._index

    def record(self, node: Node):
        self._index[id(node)] = len(self.nodes)
        self.nodes.append(node)

    def position(self, tensor: Tensor) -> int:
        if tensor not in self:
            raise AutodiffError("텐서가 이 테이프에서 생성되지 않았습니다")
        return self._index[id(tensor._node)]

    @property
    def outputs(self) -> list[Tensor]:
        """다른 노드의 입력으로 쓰이지 않은 말단 출력들."""
        consumed = {id(t) for node in self.nodes for t in node.inputs}
        return [node.output for node in self.nodes if id(node.output) not in consumed]

    def replay(self) -> list[np.ndarray]:
        """기록된 순서대로 순전파를 다시 계산해 말단 출력 값을 반환한다."""
        values: dict[int, np.ndarray] = {}
        for node in self.nodes:
            args = [values.get(id(t), t.data) for t in node.inputs]
            values[id(node.output)] = node.forward_fn(*args)
        return [values[id(t)] for t in self.outputs]


class Tensor:
    """float64 numpy 배열을 담는 불변 텐서. grad만 누적으로 갱신된다."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_node")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        arr = np.array(data, dtype=np.float64)
        if any(d == 0 for d in arr.shape):
            raise ShapeError(f"크기 0인 차원은 허용되지 않습니다: {arr.shape}")
        arr.flags.writeable = False
        self.data: np.ndarray = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._node: Node | None = None

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool = False) -> Tensor:
        out = cls.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        if not arr.flags.owndata or arr.flags.writeable is False:
            arr = arr.copy()
        arr.flags.writeable = False
        out.data = arr
        out.requires_grad = requires_grad
        out.grad = None
        out.name = ""
        out._node = None
        return out

    # ── 속성 ────────────────────────────────────────────

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"스칼라가 아닌 텐서입니다: {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor._wrap(self.data)

    def zero_grad(self):
        self.grad = None

    def assign(self, value: np.ndarray):
        """옵티마이저 전용 갱신. 배열을 새 객체로 교체하며 shape는 유지해야 한다."""
        arr = np.array(value, dtype=np.float64)
        if arr.shape != self.shape:
            raise ShapeError(f"assign: shape {arr.shape} != {self.shape}")
        arr.flags.writeable = False
        self.data = arr

    def accumulate_grad(self, grad: np.ndarray):
        if grad.shape != self.shape:
            raise ShapeError(f"기울기 shape {grad.shape} != 텐서 shape {self.shape}")
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        label = f" '{self.name}'" if self.name else ""
        return f"Tensor{label}(shape={self.shape}{flag})"

    def __len__(self) -> int:
        return self.shape[0]

    # ── 연산자 ──────────────────────────────────────────

    def __add__(self, other):
        from core import ops
        return ops.shift(self, other) if isinstance(other, Number) else ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from core import ops
        return ops.shift(self, -other) if isinstance(other, Number) else ops.sub(self, other)

    def __rsub__(self, other):
        from core import ops
        return ops.shift(ops.neg(self), other)

    def __mul__(self, other):
        from core import ops
        return ops.scale(self, other) if isinstance(other, Number) else ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from core import ops
        if isinstance(other, Number):
            if other == 0:
                from core.errors import DomainError
                raise DomainError("0으로 나눌 수 없습니다")
            return ops.scale(self, 1.0 / other)
        return ops.div(self, other)

    def __neg__(self):
        from core import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from core import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from core import ops
        return ops.getitem(self, index)

    # ── 자주 쓰는 메서드 ────────────────────────────────

    def sum(self, axis: int | None = None, keepdims: bool = False) -> Tensor:
        from core import ops
        return ops.sum(self, axis, keepdims)

    def mean(self, axis: int | None = None, keepdims: bool = False) -> Tensor:
        from core import ops
        return ops.mean(self, axis, keepdims)

    def reshape(self, *shape) -> Tensor:
        from core import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes) -> Tensor:
        from core import ops
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes or None)

    def swapaxes(self, a: int, b: int) -> Tensor:
        from core import ops
        return ops.swapaxes(self, a, b)

    def exp(self) -> Tensor:
        from core import ops
        return ops.exp(self)

    def log(self) -> Tensor:
        from core import ops
        return ops.log(self)


def constant(data) -> Tensor:
    """기울기가 필요 없는 상수 텐서."""
    return Tensor(data, requires_grad=False)


def parameter(data, name: str = "") -> Tensor:
    """학습 대상 파라미터 텐서."""
    return Tensor(data, requires_grad=True, name=name)


# ── 역전파 ──────────────────────────────────────────────


def _propagate(outputs: Sequence[Tensor], seeds: Sequence[np.ndarray], tape: Tape) -> dict[int, tuple[Tensor, np.ndarray]]:
    grads: dict[int, np.ndarray] = {}
    refs: dict[int, Tensor] = {}
    end = -1
    for out, seed in zip(outputs, seeds):
        end = max(end, tape.position(out))
        key = id(out)
        grads[key] = grads[key] + seed if key in grads else np.array(seed, dtype=np.float64)
        refs[key] = out

    for node in reversed(tape.nodes[: end + 1]):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        input_grads = node.backward_fn(g)
        for tensor, ig in zip(node.inputs, input_grads):
            if ig is None or not tensor.requires_grad:
                continue
            if ig.shape != tensor.shape:
                raise AutodiffError(
                    f"'{node.op}' 역전파 shape 불일치: {ig.shape} != {tensor.shape}"
                )
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + ig
            else:
                grads[key] = ig
                refs[key] = tensor
    return {key: (refs[key], g) for key, g in grads.items()}


def _check_loss(loss: Tensor, tape: Tape):
    if loss.size != 1:
        raise AutodiffError(f"손실은 스칼라여야 합니다: shape {loss.shape}")
    if loss not in tape:
        raise AutodiffError("손실 텐서가 주어진 테이프에 기록되어 있지 않습니다")


def backward(loss: Tensor, tape: Tape):
    """loss에 대한 기울기를 모든 requires_grad 리프의 grad에 누적한다."""
    _check_loss(loss, tape)
    result = _propagate([loss], [np.ones_like(loss.data)], tape)
    for tensor, g in result.values():
        if tensor.requires_grad and tensor not in tape:
            tensor.accumulate_grad(g)


def grad(loss: Tensor, wrt: Iterable[Tensor], tape: Tape) -> list[np.ndarray]:
    """grad 필드를 건드리지 않고 wrt 각각에 대한 기울기를 반환한다."""
    _check_loss(loss, tape)
    return vjp([loss], [np.ones_like(loss.data)], wrt, tape)


def vjp(outputs: Sequence[Tensor], seeds: Sequence[np.ndarray], wrt: Iterable[Tensor], tape: Tape) -> list[np.ndarray]:
    """출력 쪽 기울기 seeds를 입력 wrt까지 전파한다 (vector-Jacobian product)."""
    for out, seed in zip(outputs, seeds):
        if np.shape(seed) != out.shape:
            raise ShapeError(f"seed shape {np.shape(seed)} != 출력 shape {out.shape}")
    result = _propagate(outputs, seeds, tape)
    grads = []
    for tensor in wrt:
        entry = result.get(id(tensor))
        grads.append(entry[1] if entry is not None else np.zeros(tensor.shape))
    return grads
