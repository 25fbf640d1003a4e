"""미분 가능한 텐서 연산 모음.

각 연산은 순전파 함수(fwd)와 역전파 클로저(bwd)를 함께 정의하고 _make로 기록한다.
fwd는 Tape.replay에서도 그대로 재사용된다.

브로드캐스팅은 같은 rank에서 크기 1인 차원에 대해서만 허용한다.
축 합산은 누적합의 마지막 원소를 취하는 방식으로 항상 왼쪽에서 오른쪽 순서로 더한다.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from core import fft
from core.errors import DomainError, ShapeError
from core.tensor import Node, Tensor, active_tape

GELU_COEF = 0.044715
SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))


# ── 내부 도우미 ─────────────────────────────────────────


def _make(op: str, data: np.ndarray, inputs: Sequence[Tensor],
          bwd: Callable[[np.ndarray], Sequence[np.ndarray | None]],
          fwd: Callable[..., np.ndarray]) -> Tensor:
    tape = active_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(data, requires_grad=needs)
    if needs:
        node = Node(op=op, inputs=tuple(inputs), output=out, backward_fn=bwd, forward_fn=fwd)
        out._node = node
        tape.record(node)
    return out


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _axis(axis: int, ndim: int, op: str) -> int:
    if not -ndim <= axis < ndim:
        raise ShapeError(f"{op}: axis {axis}가 rank {ndim} 범위를 벗어났습니다")
    return axis % ndim


def _check_broadcast(op: str, a: Tensor, b: Tensor):
    if a.ndim != b.ndim:
        raise ShapeError(f"{op}: rank가 다릅니다 {a.shape} vs {b.shape}")
    for da, db in zip(a.shape, b.shape):
        if da != db and da != 1 and db != 1:
            raise ShapeError(f"{op}: 브로드캐스트 불가 {a.shape} vs {b.shape}")


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    if axes:
        g = _sum(g, axes, keepdims=True)
    return g


def _sum(a: np.ndarray, axis=None, keepdims: bool = False) -> np.ndarray:
    """왼쪽→오른쪽 순서 고정 합."""
    if axis is None:
        total = np.cumsum(a.reshape(-1))[-1]
        return np.full((1,) * a.ndim, total) if keepdims else np.asarray(total)
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    out = a
    for ax in sorted((x % a.ndim for x in axes), reverse=True):
        out = np.take(np.cumsum(out, axis=ax), -1, axis=ax)
        if keepdims:
            out = np.expand_dims(out, ax)
    return out


# ── 원소별 연산 ─────────────────────────────────────────


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("add", a, b)

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make("add", np.add(a.data, b.data), (a, b), bwd, np.add)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("sub", a, b)

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make("sub", np.subtract(a.data, b.data), (a, b), bwd, np.subtract)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("mul", a, b)

    def bwd(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make("mul", np.multiply(a.data, b.data), (a, b), bwd, np.multiply)


def div(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("div", a, b)
    if np.any(b.data == 0):
        raise DomainError("div: 분모에 0이 있습니다")
    out = a.data / b.data

    def bwd(g):
        ga = g / b.data
        gb = -g * np.broadcast_to(out, g.shape) / b.data
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make("div", out, (a, b), bwd, np.divide)


def neg(a: Tensor) -> Tensor:
    return _make("neg", -a.data, (a,), lambda g: (-g,), np.negative)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _make("scale", a.data * c, (a,), lambda g: (g * c,), lambda x: x * c)


def shift(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _make("shift", a.data + c, (a,), lambda g: (g,), lambda x: x + c)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _make("exp", out, (a,), lambda g: (g * out,), np.exp)


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0):
        raise DomainError("log: 0 이하 값이 있습니다")
    return _make("log", np.log(a.data), (a,), lambda g: (g / a.data,), np.log)


def sqrt(a: Tensor) -> Tensor:
    if np.any(a.data < 0):
        raise DomainError("sqrt: 음수 값이 있습니다")
    out = np.sqrt(a.data)
    return _make("sqrt", out, (a,), lambda g: (g * 0.5 / out,), np.sqrt)


def square(a: Tensor) -> Tensor:
    return _make("square", a.data * a.data, (a,), lambda g: (2.0 * g * a.data,), lambda x: x * x)


def abs(a: Tensor) -> Tensor:  # noqa: A001
    return _make("abs", np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),), np.abs)


_ELEMENTWISE_BINARY = {"add": add, "sub": sub, "mul": mul, "div": div}
_ELEMENTWISE_UNARY = {"exp": exp, "log": log, "neg": neg}


def elementwise(op: str, a: Tensor, b: Tensor | float | None = None) -> Tensor:
    """이름으로 원소별 연산을 선택한다. scale은 b에 실수 상수를 받는다."""
    if op in _ELEMENTWISE_BINARY:
        if b is None:
            raise ShapeError(f"{op}: 두 번째 피연산자가 필요합니다")
        return _ELEMENTWISE_BINARY[op](a, b)
    if op in _ELEMENTWISE_UNARY:
        return _ELEMENTWISE_UNARY[op](a)
    if op == "scale":
        return scale(a, float(b))
    raise ValueError(f"지원하지 않는 원소별 연산: {op}")


# ── 활성 함수 ───────────────────────────────────────────


def relu(a: Tensor) -> Tensor:
    fwd = lambda x: np.maximum(x, 0.0)  # noqa: E731
    return _make("relu", fwd(a.data), (a,), lambda g: (g * (a.data > 0),), fwd)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a: Tensor) -> Tensor:
    out = _sigmoid(a.data)
    return _make("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),), _sigmoid)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _make("tanh", out, (a,), lambda g: (g * (1.0 - out * out),), np.tanh)


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + np.tanh(SQRT_2_OVER_PI * (x + GELU_COEF * x ** 3)))


def gelu(a: Tensor) -> Tensor:
    """tanh 근사 GELU."""
    x = a.data
    t = np.tanh(SQRT_2_OVER_PI * (x + GELU_COEF * x ** 3))

    def bwd(g):
        d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_COEF * x * x)
        return (g * d,)

    return _make("gelu", 0.5 * x * (1.0 + t), (a,), bwd, _gelu)


_ACTIVATIONS = {"relu": relu, "gelu": gelu, "sigmoid": sigmoid, "tanh": tanh}


def activation(kind: str, x: Tensor) -> Tensor:
    if kind not in _ACTIVATIONS:
        raise ValueError(f"지원하지 않는 활성 함수: {kind}")
    return _ACTIVATIONS[kind](x)


# ── 행렬 곱 ─────────────────────────────────────────────


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """[..., m, k] @ [..., k, n]. b가 2차원이면 모든 배치에 공유된다."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: shape 불일치 {a.shape} × {b.shape}")
    shared = b.ndim == 2
    if not shared and (a.ndim != b.ndim or a.shape[:-2] != b.shape[:-2]):
        raise ShapeError(f"matmul: 배치 차원 불일치 {a.shape} × {b.shape}")

    def bwd(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        if shared and a.ndim > 2:
            gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return ga, gb

    return _make("matmul", np.matmul(a.data, b.data), (a, b), bwd, np.matmul)


# ── 축소 연산 ───────────────────────────────────────────


def sum(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    if axis is not None:
        axis = _axis(axis, x.ndim, "sum")
    shape = x.shape

    def fwd(a):
        out = _sum(a, axis, keepdims)
        return out.reshape(1) if out.ndim == 0 else out

    def bwd(g):
        if axis is None:
            return (np.full(shape, g.reshape(-1)[0]),)
        g = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _make("sum", fwd(x.data), (x,), bwd, fwd)


def mean(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    n = x.size if axis is None else x.shape[_axis(axis, x.ndim, "mean")]
    return scale(sum(x, axis, keepdims), 1.0 / n)


def max(x: Tensor, axis: int, keepdims: bool = False) -> tuple[Tensor, np.ndarray]:  # noqa: A001
    """축 최댓값과 argmax(동률이면 첫 위치)를 반환한다."""
    axis = _axis(axis, x.ndim, "max")
    if x.shape[axis] == 0:
        raise ShapeError("max: 빈 축입니다")
    idx = np.argmax(x.data, axis=axis)
    idx_k = np.expand_dims(idx, axis)

    def fwd(a):
        out = np.take_along_axis(a, idx_k, axis)
        return out if keepdims else np.squeeze(out, axis)

    def bwd(g):
        gx = np.zeros(x.shape)
        np.put_along_axis(gx, idx_k, g if keepdims else np.expand_dims(g, axis), axis)
        return (gx,)

    return _make("max", fwd(x.data), (x,), bwd, fwd), idx


def reduce(kind: str, x: Tensor, axis: int):
    """sum/mean/max 축소. max는 (값, argmax)를 반환한다."""
    if kind == "sum":
        return sum(x, axis)
    if kind == "mean":
        return mean(x, axis)
    if kind == "max":
        return max(x, axis)
    raise ValueError(f"지원하지 않는 축소 연산: {kind}")


def softmax(x: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """최댓값을 빼고 계산하는 softmax. mask에서 True인 위치는 확률 0이 된다."""
    axis = _axis(axis, x.ndim, "softmax")
    blocked = None
    if mask is not None:
        blocked = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        if np.any(np.all(blocked, axis=axis)):
            raise DomainError("softmax: 모든 위치가 마스킹된 행이 있습니다")

    def fwd(a):
        z = a if blocked is None else np.where(blocked, -np.inf, a)
        e = np.exp(z - np.max(z, axis=axis, keepdims=True))
        return e / _sum(e, axis, keepdims=True)

    out = fwd(x.data)

    def bwd(g):
        dot = _sum(g * out, axis, keepdims=True)
        return (out * (g - dot),)

    return _make("softmax", out, (x,), bwd, fwd)


def logsumexp(x: Tensor, axis: int = -1, keepdims: bool = False) -> Tensor:
    axis = _axis(axis, x.ndim, "logsumexp")

    def fwd(a):
        m = np.max(a, axis=axis, keepdims=True)
        out = m + np.log(_sum(np.exp(a - m), axis, keepdims=True))
        return out if keepdims else np.squeeze(out, axis)

    out = fwd(x.data)
    out_k = out if keepdims else np.expand_dims(out, axis)

    def bwd(g):
        g_k = g if keepdims else np.expand_dims(g, axis)
        return (g_k * np.exp(x.data - out_k),)

    return _make("logsumexp", out, (x,), bwd, fwd)


def cumsum(x: Tensor, axis: int) -> Tensor:
    axis = _axis(axis, x.ndim, "cumsum")
    fwd = lambda a: np.cumsum(a, axis=axis)  # noqa: E731

    def bwd(g):
        return (np.flip(np.cumsum(np.flip(g, axis), axis=axis), axis),)

    return _make("cumsum", fwd(x.data), (x,), bwd, fwd)


# ── 형태 변환 ───────────────────────────────────────────


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        out = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"reshape: {x.shape} → {shape} 불가") from e
    return _make("reshape", out, (x,), lambda g: (g.reshape(x.shape),), lambda a: a.reshape(shape))


def transpose(x: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    axes = tuple(range(x.ndim))[::-1] if axes is None else tuple(a % x.ndim for a in axes)
    inverse = tuple(np.argsort(axes))
    fwd = lambda a: np.transpose(a, axes)  # noqa: E731
    return _make("transpose", fwd(x.data), (x,), lambda g: (np.transpose(g, inverse),), fwd)


def swapaxes(x: Tensor, a: int, b: int) -> Tensor:
    axes = list(range(x.ndim))
    a, b = _axis(a, x.ndim, "swapaxes"), _axis(b, x.ndim, "swapaxes")
    axes[a], axes[b] = axes[b], axes[a]
    return transpose(x, axes)


def broadcast_to(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if len(shape) != x.ndim or any(s != d and d != 1 for s, d in zip(shape, x.shape)):
        raise ShapeError(f"broadcast_to: {x.shape} → {shape} 불가")
    fwd = lambda a: np.broadcast_to(a, shape).copy()  # noqa: E731
    return _make("broadcast_to", fwd(x.data), (x,), lambda g: (_unbroadcast(g, x.shape),), fwd)


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    axis = _axis(axis, tensors[0].ndim, "concat")
    for t in tensors[1:]:
        if t.ndim != tensors[0].ndim or any(
            s != r for i, (s, r) in enumerate(zip(t.shape, tensors[0].shape)) if i != axis
        ):
            raise ShapeError(f"concat: {tensors[0].shape} 와 {t.shape} 결합 불가 (axis={axis})")
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]
    fwd = lambda *arrs: np.concatenate(arrs, axis=axis)  # noqa: E731
    return _make("concat", fwd(*[t.data for t in tensors]), tensors,
                 lambda g: tuple(np.split(g, cuts, axis=axis)), fwd)


def getitem(x: Tensor, index) -> Tensor:
    fwd = lambda a: np.array(a[index])  # noqa: E731

    def bwd(g):
        gx = np.zeros(x.shape)
        np.add.at(gx, index, g)
        return (gx,)

    return _make("getitem", fwd(x.data), (x,), bwd, fwd)


def take(x: Tensor, indices: np.ndarray, axis: int) -> Tensor:
    """np.take와 같은 의미의 정수 인덱스 선택. 인덱스는 역전파에서 상수다."""
    axis = _axis(axis, x.ndim, "take")
    indices = np.asarray(indices, dtype=np.int64)
    fwd = lambda a: np.take(a, indices, axis=axis)  # noqa: E731

    def bwd(g):
        gx = np.zeros(x.shape)
        np.add.at(gx, (slice(None),) * axis + (indices,), g)
        return (gx,)

    return _make("take", fwd(x.data), (x,), bwd, fwd)


def _along(index: np.ndarray, axis: int) -> tuple:
    grid = list(np.indices(index.shape, sparse=True))
    grid[axis] = index
    return tuple(grid)


def gather(x: Tensor, index: np.ndarray, axis: int) -> Tensor:
    """np.take_along_axis 의미의 선택."""
    axis = _axis(axis, x.ndim, "gather")
    index = np.asarray(index, dtype=np.int64)
    if index.ndim != x.ndim:
        raise ShapeError(f"gather: 인덱스 rank {index.shape} != 입력 rank {x.shape}")
    fwd = lambda a: np.take_along_axis(a, index, axis)  # noqa: E731

    def bwd(g):
        gx = np.zeros(x.shape)
        np.add.at(gx, _along(index, axis), g)
        return (gx,)

    return _make("gather", fwd(x.data), (x,), bwd, fwd)


def scatter(src: Tensor, index: np.ndarray, axis: int, size: int) -> Tensor:
    """gather의 역: 크기 size인 0 텐서의 index 위치에 src를 배치한다 (인덱스 중복 없음)."""
    axis = _axis(axis, src.ndim, "scatter")
    index = np.asarray(index, dtype=np.int64)
    shape = src.shape[:axis] + (size,) + src.shape[axis + 1:]

    def fwd(a):
        out = np.zeros(shape)
        out[_along(index, axis)] = a
        return out

    return _make("scatter", fwd(src.data), (src,),
                 lambda g: (np.take_along_axis(g, index, axis),), fwd)


def where(mask: np.ndarray, a: Tensor, b: Tensor | float) -> Tensor:
    """mask가 True인 곳은 a, 아니면 b. mask는 상수 취급."""
    a = _as_tensor(a)
    b = _as_tensor(np.full((1,) * a.ndim, float(b))) if not isinstance(b, Tensor) else b
    _check_broadcast("where", a, b)
    cond = np.asarray(mask, dtype=bool)
    if cond.ndim != a.ndim:
        raise ShapeError(f"where: mask rank {cond.shape} != {a.shape}")
    fwd = lambda x, y: np.where(cond, x, y)  # noqa: E731

    def bwd(g):
        return _unbroadcast(np.where(cond, g, 0.0), a.shape), _unbroadcast(np.where(cond, 0.0, g), b.shape)

    return _make("where", fwd(a.data, b.data), (a, b), bwd, fwd)


# ── 주파수 영역 ─────────────────────────────────────────


def circular_correlation(q: Tensor, k: Tensor, axis: int) -> Tensor:
    """R[τ] = (1/L)·Σ_t q[t]·k[(t−τ) mod L] 을 FFT로 계산한다 (채널별)."""
    if q.shape != k.shape:
        raise ShapeError(f"circular_correlation: {q.shape} vs {k.shape}")
    axis = _axis(axis, q.ndim, "circular_correlation")
    n = q.shape[axis]

    def spectrum(a):
        return fft.dft(np.moveaxis(a, axis, -1))

    def back(spec):
        return np.moveaxis(fft.idft(spec).real, -1, axis) / n

    def fwd(a, b):
        return back(spectrum(a) * np.conj(spectrum(b)))

    def bwd(g):
        gs, qs, ks = spectrum(g), spectrum(q.data), spectrum(k.data)
        return back(gs * ks), back(qs * np.conj(gs))

    return _make("circular_correlation", fwd(q.data, k.data), (q, k), bwd, fwd)


# ── 복합 연산 ───────────────────────────────────────────


def custom(op: str, data: np.ndarray, inputs: Sequence[Tensor],
           bwd: Callable[[np.ndarray], Sequence[np.ndarray | None]],
           fwd: Callable[..., np.ndarray]) -> Tensor:
    """순전파/역전파를 직접 정의한 연산을 하나의 노드로 기록한다 (가역 스택 등)."""
    return _make(op, np.asarray(data, dtype=np.float64), inputs, bwd, fwd)
