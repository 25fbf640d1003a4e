"""이산 푸리에 변환.

길이가 2의 거듭제곱이면 반복형 radix-2 Cooley-Tukey를, 아니면 O(n²) 직접 DFT를 쓴다.
모든 함수는 마지막 축을 따라 변환하며 앞쪽 축들은 한꺼번에 벡터화된다.
"""

import numpy as np

from core.errors import DomainError


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def naive_dft(x: np.ndarray) -> np.ndarray:
    """X[k] = Σ_t x[t]·e^(−2πi·kt/n) 직접 계산."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if n == 0:
        raise DomainError("길이 0 시퀀스는 변환할 수 없습니다")
    k = np.arange(n)
    # kt를 n으로 나눈 나머지로 위상을 줄여 큰 n에서도 정확도를 유지한다
    phase = np.outer(k, k) % n
    w = np.exp(-2j * np.pi * phase / n)
    return x @ w.T


def _radix2(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    lead = x.shape[:-1]
    a = x[..., _bit_reverse_indices(n)]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(*lead, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        a = np.concatenate([even + odd, even - odd], axis=-1).reshape(*lead, n)
        size *= 2
    return a


def dft(x: np.ndarray) -> np.ndarray:
    """마지막 축 DFT. 2의 거듭제곱 길이는 고속 경로를 탄다."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if n == 0:
        raise DomainError("길이 0 시퀀스는 변환할 수 없습니다")
    if n == 1:
        return x.copy()
    if _is_power_of_two(n):
        return _radix2(x)
    return naive_dft(x)


def idft(spectrum: np.ndarray) -> np.ndarray:
    """역변환. 1/n 스케일을 포함한다."""
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    n = spectrum.shape[-1]
    return np.conj(dft(np.conj(spectrum))) / n
