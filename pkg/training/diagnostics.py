"""기울기·불변식 점검 묶음.

연산, 어텐션 커널, 가역 층, 모델 각각에 대해 중앙 차분 기울기 검사와
수치 불변식 검사를 돌려 CheckResult 목록을 만든다. 하나라도 실패하면
gradcheck 명령은 0이 아닌 코드로 끝난다.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from attention.auto_correlation import auto_correlation_attention
from attention.config import LshConfig, ProbSparseConfig
from attention.full import full_kernel
from attention.lsh import dense_shared_qk_attention, lsh_attend, lsh_hash
from attention.prob_sparse import prob_sparse_attention
from attention.smoothing import exponential_smoothing_attention, frequency_attention
from core import fft, ops
from core.gradcheck import grad_check
from core.tensor import Tape, Tensor, grad
from layers.base import Layer
from layers.conv import conv1d
from layers.linear import Linear
from layers.norm import layer_norm
from models.base import CnnPlan, LstmPlan, ModelKind, ModelSpec, ReformerConfig
from models.registry import build_model
from models.reversible import RevBlock, rev_backward, rev_forward, rev_inverse

logger = logging.getLogger(__name__)

GRAD_TOLERANCE = 1e-4
EQUIVALENCE_TOLERANCE = 1e-9
REVERSE_TOLERANCE = 1e-9
DEFAULT_INSTANCES = 10


@dataclass
class CheckResult:
    name: str
    error: float
    passed: bool
    detail: str = ""


def _weighted(f: Callable[[Tensor], Tensor], x: np.ndarray, rng: np.random.Generator) -> Callable[[Tensor], Tensor]:
    """f의 출력을 고정된 무작위 가중합으로 스칼라화한다 (행 합이 상수여도 기울기가 남는다)."""
    w = Tensor(rng.standard_normal(f(Tensor(x)).shape))
    return lambda t: ops.sum(ops.mul(f(t), w))


def _positive(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.uniform(0.5, 2.0, shape)


# ── 연산 ─────────────────────────────────────────────

OP_NAMES = ("add", "mul", "div", "exp", "log", "sqrt", "tanh", "sigmoid", "gelu", "softmax",
            "logsumexp", "matmul", "cumsum", "layer_norm", "conv1d", "circular_correlation")


def _op_case(name: str, rng: np.random.Generator) -> tuple[Callable[[Tensor], Tensor], np.ndarray]:
    other = Tensor(rng.standard_normal((3, 4)))
    x = rng.standard_normal((3, 4))
    if name in ("div", "log", "sqrt"):
        x = _positive(rng, (3, 4))
    if name == "matmul":
        right = Tensor(rng.standard_normal((4, 2)))
        return (lambda t: ops.matmul(t, right)), x
    if name == "layer_norm":
        gamma, beta = Tensor(rng.standard_normal(4)), Tensor(rng.standard_normal(4))
        return (lambda t: layer_norm(t, gamma, beta)), x
    if name == "conv1d":
        kernels = Tensor(rng.standard_normal((2, 3, 2)))
        return (lambda t: conv1d(ops.reshape(t, (1, 3, 4)), kernels, padding=1)), x
    table = {
        "add": lambda t: ops.add(t, other),
        "mul": lambda t: ops.mul(t, other),
        "div": lambda t: ops.div(other, t),
        "exp": ops.exp,
        "log": ops.log,
        "sqrt": ops.sqrt,
        "tanh": ops.tanh,
        "sigmoid": ops.sigmoid,
        "gelu": ops.gelu,
        "softmax": lambda t: ops.softmax(t, -1),
        "logsumexp": lambda t: ops.logsumexp(t, -1),
        "cumsum": lambda t: ops.cumsum(t, 1),
        "circular_correlation": lambda t: ops.circular_correlation(t, other, axis=1),
    }
    return table[name], x


def check_ops(instances: int = DEFAULT_INSTANCES, seed: int = 0) -> list[CheckResult]:
    results = []
    for name in OP_NAMES:
        worst = 0.0
        for i in range(instances):
            rng = np.random.default_rng(seed + i)
            f, x = _op_case(name, rng)
            worst = max(worst, grad_check(_weighted(f, x, rng), Tensor(x)))
        results.append(CheckResult(f"op:{name}", worst, worst < GRAD_TOLERANCE))
    return results


# ── 어텐션 커널 ───────────────────────────────────────

def _kernel_cases() -> dict[str, Callable[[Tensor, Tensor, Tensor], Tensor]]:
    small_lsh = LshConfig(n_buckets=2, n_rounds=2, chunk_len=4, seed=1)
    return {
        "full": lambda q, k, v: full_kernel(q, k, v, False),
        "full_causal": lambda q, k, v: full_kernel(q, k, v, True),
        "prob_sparse": lambda q, k, v: prob_sparse_attention(q, k, v, ProbSparseConfig(sampling_factor=1.0)),
        "lsh": lambda q, k, v: lsh_attend(q, v, small_lsh),
        "auto_correlation": lambda q, k, v: auto_correlation_attention(q, k, v),
        "exponential_smoothing": lambda q, k, v: exponential_smoothing_attention(v, 0.3, ops.mean(k, axis=-2)),
        "frequency": lambda q, k, v: frequency_attention(q, 2, 3)[1],
    }


def check_kernels(instances: int = DEFAULT_INSTANCES, seed: int = 0, length: int = 8, dim: int = 4) -> list[CheckResult]:
    """각 커널의 Q, K, V 기울기를 하나씩 중앙 차분과 비교한다."""
    results = []
    for name, kernel in _kernel_cases().items():
        worst = 0.0
        for i in range(instances):
            rng = np.random.default_rng(seed + i)
            qkv = [rng.standard_normal((1, length, dim)) for _ in range(3)]
            for slot in range(3):
                def only(t, slot=slot):
                    args = [Tensor(a) for a in qkv]
                    args[slot] = t
                    return kernel(*args)

                worst = max(worst, grad_check(_weighted(only, qkv[slot], rng), Tensor(qkv[slot])))
        results.append(CheckResult(f"kernel:{name}", worst, worst < GRAD_TOLERANCE))
    return results


def one_bucket_inputs(qk: np.ndarray, config: LshConfig) -> np.ndarray:
    """버킷이 두 개일 때 1번 버킷에 걸린 행의 부호를 뒤집어 모두 0번 버킷에 모은다."""
    first_round = lsh_hash(qk, config)[..., 0, :]
    return np.where(first_round[..., None] == 1, -qk, qk)


def check_equivalences(seed: int = 0) -> list[CheckResult]:
    """축퇴 조건에서 희소 커널이 전체 어텐션과 같은지, 고속 DFT가 직접 DFT와 같은지."""
    rng = np.random.default_rng(seed)
    length, dim = 8, 4
    q, k, v = (Tensor(rng.standard_normal((1, length, dim))) for _ in range(3))
    full = full_kernel(q, k, v, False).data
    dense = prob_sparse_attention(q, k, v, ProbSparseConfig(sampling_factor=100.0, full_key_sample=True)).data
    err_ps = float(np.max(np.abs(full - dense)))

    lsh = LshConfig(n_buckets=2, n_rounds=1, chunk_len=length)
    qk = one_bucket_inputs(rng.standard_normal((1, length, dim)), lsh)
    err_lsh = 0.0
    for causal in (False, True):
        out = lsh_attend(Tensor(qk), v, lsh, causal).data
        err_lsh = max(err_lsh, float(np.max(np.abs(out - dense_shared_qk_attention(qk, v.data, causal)))))

    x = rng.standard_normal((3, 64))
    fast, slow = fft.dft(x), fft.naive_dft(x)
    err_fft = float(np.max(np.abs(fast - slow)))
    energy_t = np.sum(np.abs(x) ** 2, axis=-1)
    energy_f = np.sum(np.abs(fast) ** 2, axis=-1) / x.shape[-1]
    err_parseval = float(np.max(np.abs(energy_t - energy_f) / energy_t))
    return [
        CheckResult("equiv:prob_sparse_full", err_ps, err_ps < 1e-10),
        CheckResult("equiv:lsh_full", err_lsh, err_lsh < 1e-10),
        CheckResult("equiv:fft_naive", err_fft, err_fft < EQUIVALENCE_TOLERANCE),
        CheckResult("equiv:parseval", err_parseval, err_parseval < EQUIVALENCE_TOLERANCE),
    ]


# ── 가역 층 ─────────────────────────────────────────

class _TanhLinear(Layer):
    def __init__(self, dim: int, rng: np.random.Generator):
        self.linear = Linear(dim, dim, rng)

    def forward(self, x: Tensor) -> Tensor:
        return ops.tanh(self.linear(x))


def check_reversible(seed: int = 0, depth: int = 4, dim: int = 4) -> list[CheckResult]:
    """역변환 복원 오차와, 재계산 역전파 vs 저장 활성값 역전파의 기울기 차이."""
    rng = np.random.default_rng(seed)
    blocks = [RevBlock(_TanhLinear(dim, rng), _TanhLinear(dim, rng)) for _ in range(depth)]
    x1 = Tensor(rng.standard_normal((2, 3, dim)), requires_grad=True)
    x2 = Tensor(rng.standard_normal((2, 3, dim)), requires_grad=True)

    with Tape() as tape:
        y1, y2 = x1, x2
        for block in blocks:
            y1, y2 = rev_forward(block, y1, y2)
        loss = ops.add(ops.sum(ops.square(y1)), ops.sum(ops.mul(y2, y1)))
    params = [p for block in blocks for p in block.named_parameters().values()]
    stored = grad(loss, [x1, x2, *params], tape)

    r1, r2 = y1.detach(), y2.detach()
    for block in reversed(blocks):
        r1, r2 = rev_inverse(block, r1, r2)
    err_inverse = float(max(np.max(np.abs(r1.data - x1.data)), np.max(np.abs(r2.data - x2.data))))

    # d(loss)/dy1 = 2·y1 + y2, d(loss)/dy2 = y1
    gx1, gx2, per_block = rev_backward(blocks, y1.detach(), y2.detach(), 2.0 * y1.data + y2.data, y1.data)
    recomputed = [gx1, gx2] + [g for block_grads in per_block for g in block_grads.values()]
    err_grad = float(max(np.max(np.abs(a - b)) for a, b in zip(recomputed, stored)))
    return [
        CheckResult("reversible:inverse", err_inverse, err_inverse < 1e-8),
        CheckResult("reversible:backward", err_grad, err_grad < REVERSE_TOLERANCE),
    ]


# ── 모델 ─────────────────────────────────────────────

def tiny_spec(kind: ModelKind, **overrides) -> ModelSpec:
    """기울기 검사와 빠른 테스트용 소형 설정 (관측 피처 1개 + 목표 + 시간 피처 4개)."""
    base = {
        "kind": kind,
        "d_model": 8,
        "n_heads": 2,
        "n_encoder_layers": 1,
        "n_decoder_layers": 1,
        "d_ff": 16,
        "lookback": 8,
        "label_len": 4,
        "horizon": 4,
        "n_features": 6,
        "moving_avg": 3,
        "allow_custom_horizon": True,
        "prob_sparse": {"sampling_factor": 1.0},
        "reformer": ReformerConfig(lsh=LshConfig(n_buckets=2, n_rounds=1, chunk_len=4)),
        "ets": {"top_k_freq": 2, "period": 4},
        "lstm": LstmPlan(units=4, n_layers=1),
        "cnn": CnnPlan(channels=(4,), kernel_size=3),
    }
    base.update(overrides)
    return ModelSpec.model_validate(base)


def check_models(seed: int = 0) -> list[CheckResult]:
    """종류별 소형 모델의 입력 기울기를 중앙 차분과 비교한다."""
    results = []
    for kind in ModelKind:
        spec = tiny_spec(kind)
        model = build_model(spec, seed)
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((1, spec.lookback, spec.n_features))
        future = Tensor(rng.standard_normal((1, spec.horizon, 4)))
        w = Tensor(rng.standard_normal((1, spec.horizon, 1)))
        try:
            err = grad_check(lambda t: ops.sum(ops.mul(model(t, future), w)), Tensor(x))
        except Exception as e:
            logger.error("[%s] 모델 기울기 검사 실패: %s", kind.value, e)
            results.append(CheckResult(f"model:{kind.value}", float("nan"), False, str(e)))
            continue
        results.append(CheckResult(f"model:{kind.value}", err, err < GRAD_TOLERANCE))
    return results


def run_suite(instances: int = DEFAULT_INSTANCES, seed: int = 0) -> list[CheckResult]:
    results = (check_ops(instances, seed) + check_kernels(instances, seed) + check_equivalences(seed)
               + check_reversible(seed) + check_models(seed))
    for r in results:
        if r.passed:
            logger.info("통과 %-32s 오차 %.2e", r.name, r.error)
        else:
            logger.error("실패 %-32s 오차 %.2e %s", r.name, r.error, r.detail)
    return results
