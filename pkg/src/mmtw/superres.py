"""Sub-bin frequency estimation from the MMTW spectral null.

For a tone ``A exp(j 2 pi (k0 + alpha) n / N)`` the standard MMTW spectrum is

    |X(k) - x[0]| = |A sin(pi d (N-1)/N) / sin(pi d / N)|,   d = k0 + alpha - k

which vanishes when ``d (N - 1) / N`` is an integer. With ``alpha = r/(N-1)``
the null sits exactly at ``k = (k0 - r) mod N``, so the circular distance from
the spectral peak down to the null encodes the bin offset.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from .iq import IqBuffer
from .transform import SpectrogramMatrix, SpectrumSlice, n_blocks

DEFAULT_TAU = 0.8
CLAMP_REL = 1e-12


class OffsetMode(str, Enum):
    """Map from null distance ``r`` (bins) to bin offset ``alpha``.

    ``EQ3`` uses ``r / N``, reproducing the worked peak/null arithmetic;
    ``EXACT_GRID`` uses ``r / (N - 1)``, the lattice on which nulls are exact.
    """

    EQ3 = "eq3"
    EXACT_GRID = "exactgrid"

    def alpha(self, r, n: int):
        return np.asarray(r, dtype=float) / (n if self is OffsetMode.EQ3 else n - 1)

    def grid_step(self, sample_rate: float, n: int) -> float:
        """Frequency quantum of the estimator in Hz."""
        return sample_rate / (n * n if self is OffsetMode.EQ3 else n * (n - 1))


def as_mode(mode) -> OffsetMode:
    return mode if isinstance(mode, OffsetMode) else OffsetMode(str(mode).lower())


@dataclass(frozen=True)
class NullReport:
    peak_bin: int
    null_bin: int
    null_depth_ratio: float
    offset_bins: float
    alpha: float
    bin_centered: bool
    mode: OffsetMode
    base_bin: int = -1

    def __post_init__(self):
        if self.base_bin < 0:
            object.__setattr__(self, "base_bin", self.peak_bin)


@dataclass(frozen=True)
class FrequencyTrack:
    """Per-block frequency estimates.

    Stored column-wise; ``len(track)`` is the number of blocks and
    :meth:`entries` yields row tuples.
    """

    time_s: np.ndarray
    coarse_freq: np.ndarray
    fine_freq: np.ndarray
    bin_centered: np.ndarray
    null_depth_ratio: np.ndarray

    def __post_init__(self):
        cols = {}
        for name, dtype in (("time_s", float), ("coarse_freq", float), ("fine_freq", float),
                            ("bin_centered", bool), ("null_depth_ratio", float)):
            a = np.array(getattr(self, name), dtype=dtype).ravel()
            a.setflags(write=False)
            cols[name] = a
            object.__setattr__(self, name, a)
        if len({a.size for a in cols.values()}) != 1:
            raise ValueError("track columns must have equal length")
        if np.any(np.diff(cols["time_s"]) <= 0):
            raise ValueError("track times must be strictly increasing")

    def __len__(self):
        return self.time_s.size

    def entries(self):
        return zip(self.time_s.tolist(), self.coarse_freq.tolist(), self.fine_freq.tolist(),
                   self.bin_centered.tolist(), self.null_depth_ratio.tolist())

    def shifted(self, freq_offset: float = 0.0, time_offset: float = 0.0) -> "FrequencyTrack":
        return FrequencyTrack(self.time_s + time_offset, self.coarse_freq + freq_offset,
                              self.fine_freq + freq_offset, self.bin_centered, self.null_depth_ratio)


@dataclass(frozen=True)
class FineScaleSpectrum:
    fine_freqs: np.ndarray
    values: np.ndarray
    coarse_center: float

    @property
    def peak_freq(self) -> float:
        return float(self.fine_freqs[np.argmax(self.values)])


def find_peak(slice_: SpectrumSlice) -> int:
    mag = np.abs(slice_.bins)
    if not mag.any():
        raise ValueError("cannot locate a peak in an all-zero spectrum")
    return int(np.argmax(mag))


def _null_search(mag: np.ndarray, peak: np.ndarray):
    """Vectorized null search along the last axis, excluding the peak bin."""
    rows = np.arange(mag.shape[0])
    masked = mag.copy()
    masked[rows, peak] = np.inf
    null = np.argmin(masked, axis=1)
    masked[rows, peak] = np.nan
    median = np.nanmedian(masked, axis=1)
    depth = masked[rows, null]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(median > 0, depth / median, 1.0)
    return null, np.clip(ratio, 0.0, 1.0)


def _parabolic_offset(mag: np.ndarray, null: np.ndarray) -> np.ndarray:
    n = mag.shape[1]
    rows = np.arange(mag.shape[0])
    ym = mag[rows, (null - 1) % n]
    y0 = mag[rows, null]
    yp = mag[rows, (null + 1) % n]
    den = ym - 2 * y0 + yp
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(den > 0, 0.5 * (ym - yp) / den, 0.0)
    return np.clip(p, -0.5, 0.5)


def _rect_offset(mag: np.ndarray, peak: np.ndarray) -> np.ndarray:
    # two-bin leakage estimate of the tone position relative to the peak,
    # exact for a noiseless rectangular-window tone; only used to pick a side
    n = mag.shape[1]
    rows = np.arange(mag.shape[0])
    m0 = mag[rows, peak]
    lo = mag[rows, (peak - 1) % n]
    hi = mag[rows, (peak + 1) % n]
    return np.where(hi >= lo, hi / (m0 + hi), -lo / (m0 + lo))


@dataclass(frozen=True)
class _Resolved:
    peak: np.ndarray
    null: np.ndarray
    ratio: np.ndarray
    r: np.ndarray
    base: np.ndarray
    alpha: np.ndarray
    centered: np.ndarray


def _resolve(rect_bins: np.ndarray, mmtw_bins: np.ndarray, mode: OffsetMode,
             tau: float = DEFAULT_TAU, refine: bool = False) -> _Resolved:
    """Shared per-block estimator; every public entry point goes through here."""
    n = rect_bins.shape[1]
    rect_mag = np.abs(rect_bins)
    mmtw_mag = np.abs(mmtw_bins)
    peak = np.argmax(rect_mag, axis=1)
    null, ratio = _null_search(mmtw_mag, peak)
    r = ((peak - null) % n).astype(float)
    if refine:
        r = r - _parabolic_offset(mmtw_mag, null)

    # the null fixes alpha relative to floor(tone); the tone lies either just
    # above the peak bin (base = peak) or in the upper half of the bin below
    alpha_above = mode.alpha(r, n)
    alpha_below = mode.alpha(r - 1, n)
    hint = _rect_offset(rect_mag, peak)
    use_below = np.abs(alpha_below - 1.0 - hint) < np.abs(alpha_above - hint)
    base = np.where(use_below, peak - 1, peak)
    alpha = np.where(use_below, alpha_below, alpha_above)
    # r = N - 1 on the exact grid means alpha = 1, i.e. the next bin up
    wrap = alpha >= 1.0
    base = np.where(wrap, base + 1, base)
    alpha = np.where(wrap, alpha - 1.0, alpha)

    centered = ratio > tau
    base = np.where(centered, peak, base) % n
    alpha = np.where(centered, 0.0, alpha)
    return _Resolved(peak, null, ratio, r, base, alpha, centered)


def find_null(mmtw_slice: SpectrumSlice, peak_bin: int, mode=OffsetMode.EQ3,
              tau: float = DEFAULT_TAU, refine: bool = False) -> NullReport:
    """Locate the MMTW null and read off the bin offset relative to ``peak_bin``."""
    if not mmtw_slice.window.is_standard_mmtw:
        raise ValueError("find_null requires a standard MMTW (zeroed sample 0) slice")
    mode = as_mode(mode)
    n = mmtw_slice.block_size
    if not 0 <= peak_bin < n:
        raise ValueError("peak_bin out of range")
    mag = np.abs(mmtw_slice.bins)[None, :]
    peak = np.array([peak_bin])
    null, ratio = _null_search(mag, peak)
    r = float((peak_bin - null[0]) % n)
    if refine:
        r -= float(_parabolic_offset(mag, null)[0])
    centered = bool(ratio[0] > tau)
    alpha = 0.0 if centered else float(mode.alpha(r, n)) % 1.0
    return NullReport(peak_bin, int(null[0]), float(ratio[0]), 0.0 if centered else r,
                      alpha, centered, mode)


def bin_offset(peak_bin: int, null_bin: int, n: int, mode=OffsetMode.EQ3) -> float:
    if peak_bin == null_bin:
        return 0.0
    return float(as_mode(mode).alpha((peak_bin - null_bin) % n, n)) % 1.0


def compose_frequency(coarse_freq: float, offset_hz: float) -> float:
    """Super-resolved frequency: coarse bin frequency plus the measured offset."""
    return coarse_freq + offset_hz


def super_resolve(rect_slice: SpectrumSlice, mmtw_slice: SpectrumSlice, mode=OffsetMode.EQ3,
                  tau: float = DEFAULT_TAU, refine: bool = False) -> Tuple[float, NullReport]:
    """Fine frequency of the dominant tone in one block.

    Returns the frequency in ``[0, sample_rate)`` and the null report. The
    report's ``base_bin`` is the bin holding the tone (``peak_bin`` or the
    bin below it) and ``alpha`` is measured from ``base_bin``.
    """
    if (rect_slice.block_size != mmtw_slice.block_size
            or rect_slice.sample_rate != mmtw_slice.sample_rate
            or rect_slice.block_index != mmtw_slice.block_index):
        raise ValueError("rectangular and MMTW slices come from different blocks")
    if rect_slice.window.kind != "rectangular" or not mmtw_slice.window.is_standard_mmtw:
        raise ValueError("need a rectangular slice and a standard MMTW slice")
    mode = as_mode(mode)
    res = _resolve(rect_slice.bins[None, :], mmtw_slice.bins[None, :], mode, tau, refine)
    report = NullReport(int(res.peak[0]), int(res.null[0]), float(res.ratio[0]),
                        0.0 if res.centered[0] else float(res.r[0]), float(res.alpha[0]),
                        bool(res.centered[0]), mode, int(res.base[0]))
    return (report.base_bin + report.alpha) * rect_slice.bin_width, report


def fine_scale_spectrum(mmtw_slice: SpectrumSlice, peak_bin: int) -> FineScaleSpectrum:
    """Inverse MMTW magnitudes laid out on the sub-bin frequency scale.

    Entry ``i`` reads bin ``(peak_bin - i) mod N`` and sits at
    ``bin_center(peak_bin) + i / N * bin_width``.
    """
    n = mmtw_slice.block_size
    bw = mmtw_slice.bin_width
    i = np.arange(n)
    mag = np.abs(mmtw_slice.bins)[(peak_bin - i) % n]
    eps = max(CLAMP_REL * float(np.abs(mmtw_slice.bins).max()), np.finfo(float).tiny)
    values = 1.0 / np.maximum(mag, eps)
    center = peak_bin * bw
    return FineScaleSpectrum(center + i / n * bw, values, center)


def signed_freq(freq, sample_rate: float):
    """Wrap frequencies from ``[0, fs)`` into ``[-fs/2, fs/2)``."""
    return (np.asarray(freq) + sample_rate / 2) % sample_rate - sample_rate / 2


def track_from_spectrograms(rect: SpectrogramMatrix, mmtw: SpectrogramMatrix, mode=OffsetMode.EQ3,
                            tau: float = DEFAULT_TAU, refine: bool = False,
                            signed: bool = False) -> FrequencyTrack:
    """Apply the per-block estimator to every column pair.

    Frequencies are in ``[0, fs)``, or ``[-fs/2, fs/2)`` with ``signed=True``.
    """
    if (rect.block_size != mmtw.block_size or rect.n_blocks != mmtw.n_blocks
            or rect.sample_rate != mmtw.sample_rate):
        raise ValueError("spectrograms are not aligned")
    if rect.window.kind != "rectangular" or not mmtw.window.is_standard_mmtw:
        raise ValueError("need a rectangular and a standard MMTW spectrogram")
    n = rect.block_size
    bw = rect.sample_rate / n
    res = _resolve(rect.bins, mmtw.bins, as_mode(mode), tau, refine)
    coarse = res.peak * bw
    fine = ((res.base + res.alpha) % n) * bw
    if signed:
        coarse = signed_freq(coarse, rect.sample_rate)
        fine = signed_freq(fine, rect.sample_rate)
    return FrequencyTrack(rect.block_times(), coarse, fine, res.centered, res.ratio)


def instantaneous_frequency(x: IqBuffer) -> np.ndarray:
    """Per-sample frequency from the wrapped phase difference, in ``[-fs/2, fs/2)``.

    Entry ``i`` is the phase advance from sample ``i`` to ``i + 1``.
    """
    if len(x) < 2:
        raise ValueError("need at least 2 samples")
    s = x.samples
    return np.angle(s[1:] * np.conj(s[:-1])) * x.sample_rate / (2 * np.pi)


def instantaneous_frequency_baseline(x: IqBuffer, block_size: int) -> FrequencyTrack:
    """Unwrapped-phase-derivative frequency averaged onto the spectrogram grid.

    Block ``l`` averages the ``N - 1`` phase increments inside samples
    ``[l N/2, l N/2 + N)`` and is stamped at the block center.
    """
    if len(x) < block_size:
        raise ValueError("buffer shorter than one block")
    inst = instantaneous_frequency(x)
    hop = block_size // 2
    count = n_blocks(len(x), block_size)
    starts = np.arange(count) * hop
    csum = np.concatenate(([0.0], np.cumsum(inst)))
    mean = (csum[starts + block_size - 1] - csum[starts]) / (block_size - 1)
    times = (starts + block_size / 2) / x.sample_rate
    return FrequencyTrack(times, mean, mean, np.zeros(count, bool), np.full(count, np.nan))
