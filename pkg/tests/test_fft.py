import numpy as np
import pytest

from core import fft
from core.errors import DomainError


@pytest.mark.parametrize("n", [1, 2, 8, 64, 256])
def test_radix2_matches_direct(n):
    x = np.random.default_rng(n).standard_normal((3, n))
    np.testing.assert_allclose(fft.dft(x), fft.naive_dft(x), atol=1e-9)


@pytest.mark.parametrize("n", [3, 12, 100])
def test_non_power_of_two_falls_back(n):
    x = np.random.default_rng(n).standard_normal(n)
    np.testing.assert_allclose(fft.dft(x), np.fft.fft(x), atol=1e-9)


def test_inverse_round_trip():
    x = np.random.default_rng(0).standard_normal((2, 32))
    np.testing.assert_allclose(fft.idft(fft.dft(x)).real, x, atol=1e-12)


def test_parseval():
    x = np.random.default_rng(1).standard_normal(128)
    spectrum = fft.dft(x)
    assert np.sum(np.abs(spectrum) ** 2) / 128 == pytest.approx(np.sum(x ** 2), rel=1e-9)


def test_impulse_has_flat_spectrum():
    x = np.zeros(16)
    x[0] = 1.0
    np.testing.assert_allclose(fft.dft(x), np.ones(16), atol=1e-12)


def test_empty_sequence_rejected():
    with pytest.raises(DomainError):
        fft.dft(np.zeros(0))
    with pytest.raises(DomainError):
        fft.naive_dft(np.zeros(0))
