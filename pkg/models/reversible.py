"""가역 잔차 블록.

    y1 = x1 + F(x2)
    y2 = x2 + G(y1)

역변환으로 입력을 정확히 복원할 수 있으므로 역전파 때 블록별 활성값을
저장하지 않고 출력에서부터 한 블록씩 다시 계산한다.
"""

import logging
from typing import Callable, Sequence

import numpy as np

from core import ops
from core.errors import NumericalError, ShapeError
from core.tensor import Tape, Tensor, no_grad, vjp
from layers.base import Layer

logger = logging.getLogger(__name__)

RECONSTRUCTION_TOLERANCE = 1e-6

SubLayer = Callable[[Tensor], Tensor]


class ActivationMeter:
    """역전파 중 동시에 보관되는 블록 활성값 수를 센다 (테스트 훅)."""

    def __init__(self):
        self.live = 0
        self.peak = 0
        self.recomputed = 0

    def acquire(self):
        self.live += 1
        self.recomputed += 1
        self.peak = max(self.peak, self.live)

    def release(self):
        self.live -= 1


class RevBlock(Layer):
    """F, G는 shape를 보존하는 하위 레이어(또는 함수)."""

    def __init__(self, f: SubLayer, g: SubLayer):
        self.f = f
        self.g = g

    def forward(self, x1: Tensor, x2: Tensor) -> tuple[Tensor, Tensor]:
        return rev_forward(self, x1, x2)


def _residual(x: Tensor, fx: Tensor, name: str) -> Tensor:
    if fx.shape != x.shape:
        raise ShapeError(f"가역 블록의 {name}가 shape를 바꿨습니다: {x.shape} → {fx.shape}")
    return ops.add(x, fx)


def rev_forward(block: RevBlock, x1: Tensor, x2: Tensor) -> tuple[Tensor, Tensor]:
    if x1.shape != x2.shape:
        raise ShapeError(f"rev_forward: x1 {x1.shape} != x2 {x2.shape}")
    y1 = _residual(x1, block.f(x2), "F")
    y2 = _residual(x2, block.g(y1), "G")
    return y1, y2


def rev_inverse(block: RevBlock, y1: Tensor, y2: Tensor) -> tuple[Tensor, Tensor]:
    """x2 = y2 − G(y1), x1 = y1 − F(x2). 기록하지 않는다."""
    if y1.shape != y2.shape:
        raise ShapeError(f"rev_inverse: y1 {y1.shape} != y2 {y2.shape}")
    with no_grad():
        x2 = ops.sub(y2, block.g(y1))
        x1 = ops.sub(y1, block.f(x2))
    return x1.detach(), x2.detach()


def _block_parameters(block: RevBlock) -> dict[str, Tensor]:
    return block.named_parameters() if isinstance(block, Layer) else {}


def rev_backward(blocks: Sequence[RevBlock], y1: Tensor, y2: Tensor,
                 grad_y1: np.ndarray, grad_y2: np.ndarray,
                 meter: ActivationMeter | None = None) -> tuple[np.ndarray, np.ndarray, list[dict[str, np.ndarray]]]:
    """스택 출력과 출력 기울기로 입력 기울기와 블록별 파라미터 기울기를 구한다.

    블록마다 입력을 역변환으로 복원하고, 그 블록만 작은 테이프에 다시 기록해
    vjp를 계산한다. 복원한 입력으로 다시 만든 출력이 원래 출력과 1e-6 넘게
    어긋나면 NumericalError.
    """
    meter = meter or ActivationMeter()
    gy1, gy2 = np.asarray(grad_y1, dtype=np.float64), np.asarray(grad_y2, dtype=np.float64)
    param_grads: list[dict[str, np.ndarray]] = [{} for _ in blocks]
    for i in range(len(blocks) - 1, -1, -1):
        block = blocks[i]
        x1, x2 = rev_inverse(block, y1, y2)
        params = _block_parameters(block)
        meter.acquire()
        try:
            leaf1 = Tensor(x1.data, requires_grad=True)
            leaf2 = Tensor(x2.data, requires_grad=True)
            with Tape() as tape:
                o1, o2 = rev_forward(block, leaf1, leaf2)
            drift = max(np.max(np.abs(o1.data - y1.data)), np.max(np.abs(o2.data - y2.data)))
            if drift > RECONSTRUCTION_TOLERANCE:
                raise NumericalError(f"가역 블록 {i} 복원 오차 {drift:.3e} > {RECONSTRUCTION_TOLERANCE}")
            names = list(params)
            grads = vjp([o1, o2], [gy1, gy2], [leaf1, leaf2] + [params[n] for n in names], tape)
        finally:
            meter.release()
        gy1, gy2 = grads[0], grads[1]
        param_grads[i] = dict(zip(names, grads[2:]))
        y1, y2 = x1, x2
    return gy1, gy2, param_grads


def reversible_stack(blocks: Sequence[RevBlock], x1: Tensor, x2: Tensor,
                     meter: ActivationMeter | None = None) -> tuple[Tensor, Tensor]:
    """블록 스택을 테이프상 노드 하나로 기록한다.

    순전파는 기록 없이 돌리고, 역전파 때 rev_backward로 활성값을 다시 만든다.
    노드 출력은 [2, ...] 로 쌓은 (y1, y2) 이다.
    """
    with no_grad():
        y1, y2 = x1, x2
        for block in blocks:
            y1, y2 = rev_forward(block, y1, y2)
    stacked = np.stack([y1.data, y2.data])

    params: list[Tensor] = []
    for block in blocks:
        params.extend(_block_parameters(block).values())
    inputs = (x1, x2, *params)

    def bwd(g):
        gx1, gx2, per_block = rev_backward(blocks, y1, y2, g[0], g[1], meter)
        flat = [grads for block_grads in per_block for grads in block_grads.values()]
        return (gx1, gx2, *flat)

    def fwd(a1, a2, *_):
        with no_grad():
            r1, r2 = Tensor(a1), Tensor(a2)
            for block in blocks:
                r1, r2 = rev_forward(block, r1, r2)
        return np.stack([r1.data, r2.data])

    out = ops.custom("reversible_stack", stacked, inputs, bwd, fwd)
    return ops.getitem(out, 0), ops.getitem(out, 1)
