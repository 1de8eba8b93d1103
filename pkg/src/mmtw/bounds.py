"""Cramer-Rao bounds for single-tone frequency estimation and a Monte Carlo harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .superres import OffsetMode, _resolve, as_mode


@dataclass(frozen=True)
class CrbParams:
    amplitude: float
    noise_sigma: float
    sample_rate: float = 1.0
    block_size: int = 64
    gain_constant: float = 1.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.block_size < 2:
            raise ValueError("block_size must be >= 2")
        if not 0 < self.gain_constant <= 2:
            raise ValueError("gain_constant must lie in (0, 2]")


def _poly(n: int) -> float:
    # exact integer product before the float conversion
    return float(n * (n + 1) * (2 * n + 1))


def crb_unfiltered(p: CrbParams) -> float:
    """``3 sigma^2 fs^2 / (4 pi^2 A^2 N (N+1) (2N+1))`` in Hz^2."""
    return 3.0 * p.noise_sigma ** 2 * p.sample_rate ** 2 / (
        4.0 * np.pi ** 2 * p.amplitude ** 2 * _poly(p.block_size))


def processing_gain(sample_rate: float, bin_width: float) -> float:
    """Amplitude-SNR gain ``sqrt(fs / bin_width)`` from filtering to one bin."""
    if not 0 < bin_width <= sample_rate:
        raise ValueError("need 0 < bin_width <= sample_rate")
    return float(np.sqrt(sample_rate / bin_width))


def crb_filtered(p: CrbParams) -> float:
    """Bound after the ``sqrt(C N)`` pre-filtering gain.

    ``3 fs^2 / (4 pi^2 C N^2 (N+1) (2N+1)) (sigma/A)^2``, i.e. the unfiltered
    bound divided by ``C N``.
    """
    n = p.block_size
    return 3.0 * p.sample_rate ** 2 / (
        4.0 * np.pi ** 2 * p.gain_constant * n * _poly(n)) * (p.noise_sigma / p.amplitude) ** 2


def quantization_floor(sample_rate: float, block_size: int, mode=OffsetMode.EQ3) -> float:
    """``step^2 / 12`` for the estimator's fine-grid step."""
    return as_mode(mode).grid_step(sample_rate, block_size) ** 2 / 12.0


@dataclass(frozen=True)
class MonteCarloReport:
    """Error statistics in Hz and Hz^2.

    ``variance`` is the spread of the estimates about their own mean;
    ``mse`` is about the true frequency and is the quantity the bounds cap,
    since the grid estimator is biased by up to one step.
    """

    trials: int
    true_freq: float
    rmse: float
    variance: float
    mse: float
    bias: float
    crb_unfiltered: float
    crb_filtered: float
    quantization_floor: float


def estimate_blocks(blocks: np.ndarray, sample_rate: float, mode=OffsetMode.EQ3) -> np.ndarray:
    """Fine frequency of each row of ``blocks`` in ``[0, fs)``."""
    n = blocks.shape[1]
    rect = np.fft.fft(blocks, axis=1)
    res = _resolve(rect, rect - blocks[:, :1], as_mode(mode))
    return ((res.base + res.alpha) % n) * sample_rate / n


def monte_carlo(true_freq: float, p: CrbParams, trials: int = 1000, seed: int = 0,
                mode=OffsetMode.EQ3) -> MonteCarloReport:
    """Noisy single-block tones through the MMTW estimator.

    Trial ``i`` draws its noise from ``default_rng(seed + i)``, so the
    result does not depend on how trials are scheduled.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    fs = p.sample_rate
    if not -fs / 2 <= true_freq < fs:
        raise ValueError("true_freq must lie in [-fs/2, fs)")
    n = p.block_size
    cycles = true_freq / fs * np.arange(n)
    clean = p.amplitude * np.exp(2j * np.pi * (cycles - np.floor(cycles)))
    blocks = np.empty((trials, n), dtype=np.complex128)
    scale = p.noise_sigma / np.sqrt(2.0)
    for i in range(trials):
        w = np.random.default_rng(seed + i).standard_normal((n, 2)) @ np.array([1.0, 1j])
        blocks[i] = clean + scale * w
    est = estimate_blocks(blocks, fs, mode)
    err = (est - true_freq + fs / 2) % fs - fs / 2
    mse = float(np.mean(err ** 2))
    return MonteCarloReport(
        trials=trials,
        true_freq=float(true_freq),
        rmse=float(np.sqrt(mse)),
        variance=float(np.var(err)),
        mse=mse,
        bias=float(np.mean(err)),
        crb_unfiltered=crb_unfiltered(p),
        crb_filtered=crb_filtered(p),
        quantization_floor=quantization_floor(fs, n, mode),
    )
