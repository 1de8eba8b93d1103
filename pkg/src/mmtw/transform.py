"""Windowed DFTs and the half-overlap spectrogram.

The transform is the unnormalized sum

    X(l, k) = sum_n x[n + l N / 2] w[n] exp(-j 2 pi k n / N)

evaluated with ``numpy.fft`` (which handles any N, not only powers of two).
The mismatched time window (MMTW) is a rectangular window with one or more
samples zeroed; the standard MMTW zeroes sample 0 only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .iq import IqBuffer

RECTANGULAR = "rectangular"
MMTW = "mmtw"
TAPER = "taper"


@dataclass(frozen=True)
class WindowSpec:
    """Analysis window of length ``block_size``.

    Build instances with :meth:`rectangular`, :meth:`mmtw` or :meth:`taper`.
    """

    kind: str
    block_size: int
    zeroed_indices: tuple = ()
    coefficients: Optional[tuple] = None

    def __post_init__(self):
        if self.block_size < 2:
            raise ValueError("block_size must be >= 2")
        if self.kind == MMTW:
            z = tuple(sorted(set(int(i) for i in self.zeroed_indices)))
            if not z:
                raise ValueError("MMTW window needs at least one zeroed index")
            if z[0] < 0 or z[-1] >= self.block_size:
                raise ValueError("zeroed indices must lie in [0, block_size)")
            object.__setattr__(self, "zeroed_indices", z)
        elif self.kind == TAPER:
            c = np.asarray(self.coefficients, dtype=float)
            if c.shape != (self.block_size,) or not np.all(np.isfinite(c)):
                raise ValueError("taper needs block_size finite coefficients")
            object.__setattr__(self, "coefficients", tuple(c.tolist()))
        elif self.kind != RECTANGULAR:
            raise ValueError(f"unknown window kind {self.kind!r}")

    @classmethod
    def rectangular(cls, block_size: int) -> "WindowSpec":
        return cls(RECTANGULAR, block_size)

    @classmethod
    def mmtw(cls, block_size: int, zeroed_indices: Sequence[int] = (0,)) -> "WindowSpec":
        return cls(MMTW, block_size, zeroed_indices=tuple(zeroed_indices))

    @classmethod
    def taper(cls, coefficients: Sequence[float]) -> "WindowSpec":
        return cls(TAPER, len(coefficients), coefficients=tuple(coefficients))

    @property
    def is_standard_mmtw(self) -> bool:
        return self.kind == MMTW and self.zeroed_indices == (0,)

    def weights(self) -> np.ndarray:
        if self.kind == TAPER:
            return np.array(self.coefficients)
        w = np.ones(self.block_size)
        if self.kind == MMTW:
            w[list(self.zeroed_indices)] = 0.0
        return w


@dataclass(frozen=True)
class SpectrumSlice:
    """One N-point DFT of one time block."""

    bins: np.ndarray
    block_index: int
    block_size: int
    sample_rate: float
    window: WindowSpec

    def __post_init__(self):
        if self.bins.shape != (self.block_size,):
            raise ValueError("bins length must equal block_size")

    @property
    def bin_width(self) -> float:
        return self.sample_rate / self.block_size

    def bin_freqs(self) -> np.ndarray:
        return np.arange(self.block_size) * self.bin_width


@dataclass(frozen=True)
class SpectrogramMatrix:
    """Half-overlap spectrogram.

    ``bins`` has shape ``(n_blocks, N)``: row ``l`` is the DFT of samples
    ``[l N/2, l N/2 + N)``. Iterating over :attr:`columns` yields the per-block
    slices one by one.
    """

    bins: np.ndarray
    sample_rate: float
    window: WindowSpec

    @property
    def block_size(self) -> int:
        return self.window.block_size

    @property
    def hop(self) -> int:
        return self.block_size // 2

    @property
    def n_blocks(self) -> int:
        return self.bins.shape[0]

    def __len__(self):
        return self.n_blocks

    def column(self, index: int) -> SpectrumSlice:
        return SpectrumSlice(self.bins[index], index, self.block_size, self.sample_rate, self.window)

    @property
    def columns(self) -> Iterator[SpectrumSlice]:
        return (self.column(i) for i in range(self.n_blocks))

    def block_times(self) -> np.ndarray:
        """Block-center time stamps in seconds."""
        return (np.arange(self.n_blocks) * self.hop + self.block_size / 2) / self.sample_rate


def _as_block(block, n: int) -> np.ndarray:
    b = np.asarray(block, dtype=np.complex128)
    if b.shape != (n,):
        raise ValueError(f"block length {b.size} does not match window length {n}")
    return b


def dft(block, sample_rate: float, window: WindowSpec, block_index: int = 0) -> SpectrumSlice:
    b = _as_block(block, window.block_size)
    bins = np.fft.fft(b * window.weights())
    return SpectrumSlice(bins, block_index, window.block_size, float(sample_rate), window)


def mmtw_spectrum(block, sample_rate: float, block_index: int = 0) -> SpectrumSlice:
    """Standard-MMTW spectrum via the rectangular DFT minus ``block[0]``."""
    b = np.asarray(block, dtype=np.complex128).ravel()
    if b.size < 2:
        raise ValueError("block must hold at least 2 samples")
    bins = np.fft.fft(b) - b[0]
    return SpectrumSlice(bins, block_index, b.size, float(sample_rate), WindowSpec.mmtw(b.size))


def n_blocks(total_samples: int, block_size: int) -> int:
    if total_samples < block_size:
        return 0
    return (total_samples - block_size) // (block_size // 2) + 1


def frame(samples: np.ndarray, block_size: int) -> np.ndarray:
    """Read-only ``(n_blocks, N)`` view of half-overlapping blocks."""
    hop = block_size // 2
    count = n_blocks(samples.size, block_size)
    view = np.lib.stride_tricks.sliding_window_view(samples, block_size)
    return view[: (count - 1) * hop + 1 : hop]


def spectrogram(x: IqBuffer, window: WindowSpec) -> SpectrogramMatrix:
    n = window.block_size
    if len(x) < n:
        raise ValueError(f"buffer of {len(x)} samples is shorter than one block ({n})")
    blocks = frame(x.samples, n)
    if window.is_standard_mmtw:
        bins = np.fft.fft(blocks, axis=1) - blocks[:, :1]
    else:
        bins = np.fft.fft(blocks * window.weights(), axis=1)
    return SpectrogramMatrix(bins, x.sample_rate, window)


def magnitude_db(slice_or_bins, floor_db: float = -60.0) -> np.ndarray:
    """Peak-normalized magnitude in dB, clamped below at ``floor_db``.

    Accepts a :class:`SpectrumSlice` or a raw array; for 2-D arrays each row
    is normalized independently.
    """
    if not floor_db < 0:
        raise ValueError("floor_db must be negative")
    bins = slice_or_bins.bins if isinstance(slice_or_bins, SpectrumSlice) else np.asarray(slice_or_bins)
    mag = np.abs(bins)
    peak = mag.max(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        db = 20 * np.log10(mag / peak)
    db = np.where(np.isfinite(db), db, floor_db)
    return np.maximum(db, floor_db)
