"""Complex baseband buffers and synthetic signal generators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal as sps


@dataclass(frozen=True)
class IqBuffer:
    """Uniformly sampled complex baseband signal.

    The sample array is copied to ``complex128`` and marked read-only, so a
    buffer can be shared freely between threads.
    """

    samples: np.ndarray
    sample_rate: float = 1.0

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.complex128).ravel()
        if x.size == 0:
            raise ValueError("IqBuffer needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("IqBuffer samples must be finite")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate


@dataclass(frozen=True)
class ToneSpec:
    """Single tone ``A exp(j 2 pi (k0 + alpha) n / N)``."""

    amplitude: complex
    coarse_bin: int
    bin_offset: float
    block_size: int

    def __post_init__(self):
        if self.block_size < 2:
            raise ValueError("block_size must be >= 2")
        if not 0 <= self.coarse_bin < self.block_size:
            raise ValueError("coarse_bin must lie in [0, block_size)")
        if not 0.0 <= self.bin_offset < 1.0:
            raise ValueError("bin_offset must lie in [0, 1)")

    def frequency(self, sample_rate: float = 1.0) -> float:
        return (self.coarse_bin + self.bin_offset) * sample_rate / self.block_size


@dataclass(frozen=True)
class FskSpec:
    """Binary continuous-phase FSK; bit 0 maps to ``carrier - deviation``."""

    carrier_freq: float
    deviation: float
    symbol_rate: float
    symbols: Sequence[int] = field(default_factory=lambda: (0, 1))

    def __post_init__(self):
        if not self.symbol_rate > 0:
            raise ValueError("symbol_rate must be positive")
        if not self.deviation > 0:
            raise ValueError("deviation must be positive")
        if len(self.symbols) == 0:
            raise ValueError("symbols must be non-empty")
        if any(b not in (0, 1) for b in self.symbols):
            raise ValueError("symbols must be bits (0 or 1)")
        object.__setattr__(self, "symbols", tuple(int(b) for b in self.symbols))

    def check_band(self, sample_rate: float):
        lo = self.carrier_freq - self.deviation
        hi = self.carrier_freq + self.deviation
        if not (-sample_rate / 2 < lo and hi < sample_rate / 2):
            raise ValueError("carrier +/- deviation must lie inside (-fs/2, fs/2)")


@dataclass(frozen=True)
class DopplerScenario:
    """Pseudo-Doppler antenna traversing a circle.

    ``peak_deviation`` is the Doppler amplitude in Hz; ``true_doa`` is in
    degrees and appears as the phase of the sinusoidal frequency modulation.
    """

    carrier_freq: float
    rotation_rate: float
    peak_deviation: float
    true_doa: float = 0.0

    def __post_init__(self):
        if not self.rotation_rate > 0:
            raise ValueError("rotation_rate must be positive")
        if not self.peak_deviation > 0:
            raise ValueError("peak_deviation must be positive")
        if not 0.0 <= self.true_doa < 360.0:
            raise ValueError("true_doa must lie in [0, 360)")

    def instantaneous_frequency(self, t: np.ndarray) -> np.ndarray:
        return self.carrier_freq + self.peak_deviation * np.sin(
            2 * np.pi * self.rotation_rate * t + np.deg2rad(self.true_doa)
        )


def gen_tone(spec: ToneSpec, total_samples: int, sample_rate: float = 1.0) -> IqBuffer:
    if total_samples < 1:
        raise ValueError("total_samples must be >= 1")
    n = np.arange(total_samples)
    cycles = (spec.coarse_bin + spec.bin_offset) * n / spec.block_size
    # reduce before multiplying by 2 pi to keep phase accurate for long buffers
    cycles = cycles - np.floor(cycles)
    return IqBuffer(spec.amplitude * np.exp(2j * np.pi * cycles), sample_rate)


def _phase_from_frequency(freq: np.ndarray, sample_rate: float) -> np.ndarray:
    # phase[n] = 2 pi sum_{m<n} f[m] / fs, so phase[0] = 0 and the per-sample
    # phase increment equals the instantaneous frequency exactly
    cycles = np.concatenate(([0.0], np.cumsum(freq[:-1]))) / sample_rate
    return 2 * np.pi * (cycles - np.floor(cycles))


def gen_fsk(spec: FskSpec, duration: float, sample_rate: float = 1.0) -> IqBuffer:
    """Continuous-phase binary FSK.

    The symbol sequence is repeated cyclically when the duration holds more
    symbols than ``spec.symbols``.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    if duration * spec.symbol_rate < 1:
        raise ValueError("duration must span at least one symbol")
    spec.check_band(sample_rate)
    total = int(round(duration * sample_rate))
    t = np.arange(total) / sample_rate
    idx = np.floor(t * spec.symbol_rate + 1e-9).astype(int) % len(spec.symbols)
    bits = np.asarray(spec.symbols)[idx]
    freq = spec.carrier_freq + spec.deviation * (2 * bits - 1)
    return IqBuffer(np.exp(1j * _phase_from_frequency(freq, sample_rate)), sample_rate)


def gen_doppler(scenario: DopplerScenario, duration: float, sample_rate: float = 1.0) -> IqBuffer:
    """Unit-amplitude carrier with sinusoidal Doppler frequency modulation.

    The phase is the closed-form integral of the instantaneous frequency, so
    the phase derivative reproduces the modulation to rounding error.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    total = int(round(duration * sample_rate))
    if total < 1:
        raise ValueError("duration shorter than one sample")
    t = np.arange(total) / sample_rate
    w = 2 * np.pi * scenario.rotation_rate
    phi0 = np.deg2rad(scenario.true_doa)
    carrier_cycles = scenario.carrier_freq * t
    carrier_cycles -= np.floor(carrier_cycles)
    fm_phase = -scenario.peak_deviation / scenario.rotation_rate * (np.cos(w * t + phi0) - np.cos(phi0))
    return IqBuffer(np.exp(1j * (2 * np.pi * carrier_cycles + fm_phase)), sample_rate)


def add_noise(x: IqBuffer, sigma: float, seed: int) -> IqBuffer:
    """Add circular complex Gaussian noise of total standard deviation ``sigma``.

    Each quadrature receives variance ``sigma**2 / 2``.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return IqBuffer(x.samples.copy(), x.sample_rate)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((len(x), 2)) @ np.array([1.0, 1j])
    return IqBuffer(x.samples + noise * (sigma / np.sqrt(2.0)), x.sample_rate)


def snr_sigma(snr_db: float, amplitude: float = 1.0) -> float:
    """Noise sigma giving ``amplitude**2 / sigma**2`` equal to ``snr_db``."""
    return abs(amplitude) * 10 ** (-snr_db / 20)


def interpolation_taps(factor: int, lobes: int = 8) -> np.ndarray:
    """Blackman-tapered sinc low-pass at the pre-interpolation Nyquist.

    Gain is ``factor`` in the passband so zero-stuffing loses no amplitude.
    """
    half = lobes * factor
    n = np.arange(-half, half + 1)
    taps = np.sinc(n / factor) * np.blackman(2 * half + 1)
    return taps * factor / taps.sum()


def upsample(x: IqBuffer, factor: int) -> IqBuffer:
    """Band-limited interpolation by an integer factor.

    Output sample ``m * factor`` is aligned with input sample ``m``; the
    filter delay is removed.
    """
    if factor < 2 or int(factor) != factor:
        raise ValueError("upsample factor must be an integer >= 2")
    factor = int(factor)
    stuffed = np.zeros(len(x) * factor, dtype=np.complex128)
    stuffed[::factor] = x.samples
    taps = interpolation_taps(factor)
    delay = (taps.size - 1) // 2
    y = sps.fftconvolve(stuffed, taps)[delay:delay + stuffed.size]
    return IqBuffer(y, x.sample_rate * factor)
