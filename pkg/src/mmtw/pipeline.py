"""Down-conversion and dual-spectrogram tracking chain, plus FSK and DOA readouts.

The chain mixes the signal of interest to baseband, low-pass filters and
decimates it, optionally interpolates, then runs rectangular and MMTW
spectrograms over the same blocks and extracts a per-block frequency track.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import signal as sps

from .iq import DopplerScenario, IqBuffer, upsample
from .superres import (FrequencyTrack, OffsetMode, as_mode, instantaneous_frequency_baseline,
                       signed_freq, track_from_spectrograms)
from .transform import SpectrogramMatrix, WindowSpec, spectrogram

MAX_TAPS = 8193


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class FilterSpec:
    center_freq: float
    passband_halfwidth: float
    transition_width: float
    decimation: int = 1
    stopband_atten_db: float = 60.0

    def __post_init__(self):
        if self.decimation < 1 or int(self.decimation) != self.decimation:
            raise ValueError("decimation must be an integer >= 1")
        if not self.passband_halfwidth > 0 or not self.transition_width > 0:
            raise ValueError("passband_halfwidth and transition_width must be positive")
        if self.stopband_atten_db < 40:
            raise ValueError("stopband_atten_db must be >= 40")

    @classmethod
    def for_block(cls, center_freq: float, sample_rate: float, block_size: int,
                  decimation: int = 1, bins: float = 4.0, **kw) -> "FilterSpec":
        """Filter passing ``bins`` MMTW bin widths (post-decimation) around the center."""
        bw = sample_rate / decimation / block_size
        return cls(center_freq, bins * bw / 2, kw.pop("transition_width", bins * bw / 2),
                   decimation, **kw)

    def check(self, sample_rate: float):
        edge = self.passband_halfwidth + self.transition_width
        if edge * self.decimation >= sample_rate / 2:
            raise ValueError(
                f"stopband edge {edge:g} Hz is not below the decimated Nyquist "
                f"{sample_rate / (2 * self.decimation):g} Hz")


@dataclass(frozen=True)
class PipelineConfig:
    """``filter=None`` skips down-conversion and analyzes the input as-is."""

    filter: Optional[FilterSpec]
    block_size: int = 512
    offset_mode: OffsetMode = OffsetMode.EQ3
    upsample_factor: int = 1
    tau: float = 0.8

    def __post_init__(self):
        if self.block_size < 8:
            raise ValueError("block_size must be >= 8")
        if self.upsample_factor < 1:
            raise ValueError("upsample_factor must be >= 1")
        object.__setattr__(self, "offset_mode", as_mode(self.offset_mode))


@dataclass(frozen=True)
class PipelineOutput:
    track: FrequencyTrack
    baseline_track: FrequencyTrack
    rect_sgram: SpectrogramMatrix
    mmtw_sgram: SpectrogramMatrix
    signal: IqBuffer = field(repr=False)


def design_lowpass(cutoff: float, transition: float, atten_db: float, sample_rate: float) -> np.ndarray:
    """Linear-phase Kaiser-windowed sinc low-pass with an odd tap count.

    The passband ends at ``cutoff`` and the stopband starts at
    ``cutoff + transition``. The tap count starts at the Kaiser estimate and
    grows until the measured stopband meets ``atten_db``.
    """
    nyq = sample_rate / 2
    if not (cutoff > 0 and transition > 0 and cutoff + transition < nyq):
        raise ValueError("need 0 < cutoff and cutoff + transition < sample_rate / 2")
    numtaps, beta = sps.kaiserord(atten_db + 1.0, transition / nyq)
    numtaps |= 1
    edge = cutoff + transition
    while numtaps <= MAX_TAPS:
        taps = sps.firwin(numtaps, cutoff + transition / 2, window=("kaiser", beta), fs=sample_rate)
        f_stop = np.linspace(edge, nyq, 4096)
        _, h = sps.freqz(taps, worN=f_stop, fs=sample_rate)
        f_pass = np.linspace(0, cutoff, 1024)
        _, hp = sps.freqz(taps, worN=f_pass, fs=sample_rate)
        ripple = 20 * np.log10(np.abs(hp))
        if 20 * np.log10(np.abs(h).max()) <= -atten_db and np.ptp(ripple) <= 0.5:
            return taps / taps.sum()
        numtaps = (int(numtaps * 1.1) + 1) | 1
    raise ValueError(f"transition {transition:g} Hz too narrow for {MAX_TAPS} taps")


def _zero_delay_filter(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    delay = (taps.size - 1) // 2
    return sps.fftconvolve(x, taps)[delay:delay + x.size]


def tune_filter_decimate(x: IqBuffer, spec: FilterSpec) -> IqBuffer:
    """Mix ``spec.center_freq`` to DC, low-pass, keep every D-th sample.

    The filter's group delay is removed, so output sample ``m`` is aligned
    with input sample ``m * D``.
    """
    spec.check(x.sample_rate)
    taps = design_lowpass(spec.passband_halfwidth, spec.transition_width,
                          spec.stopband_atten_db, x.sample_rate)
    n = np.arange(len(x))
    cycles = spec.center_freq / x.sample_rate * n
    mixed = x.samples * np.exp(-2j * np.pi * (cycles - np.floor(cycles)))
    y = _zero_delay_filter(mixed, taps)[:: spec.decimation]
    return IqBuffer(y, x.sample_rate / spec.decimation)


def run_pipeline(x: IqBuffer, cfg: PipelineConfig) -> PipelineOutput:
    n = cfg.block_size
    try:
        y = x if cfg.filter is None else tune_filter_decimate(x, cfg.filter)
    except ValueError as exc:
        raise PipelineError("filter", str(exc)) from exc
    if cfg.upsample_factor > 1:
        try:
            y = upsample(y, cfg.upsample_factor)
        except ValueError as exc:
            raise PipelineError("upsample", str(exc)) from exc
    if len(y) < n:
        raise PipelineError("spectrogram", f"{len(y)} samples after filtering, need {n} for one block")

    rect = spectrogram(y, WindowSpec.rectangular(n))
    mmtw = spectrogram(y, WindowSpec.mmtw(n))
    baseband = cfg.filter is not None
    track = track_from_spectrograms(rect, mmtw, cfg.offset_mode, tau=cfg.tau, signed=baseband)
    baseline = instantaneous_frequency_baseline(y, n)
    if baseband:
        track = track.shifted(cfg.filter.center_freq)
        baseline = baseline.shifted(cfg.filter.center_freq)
    else:
        wrapped = baseline.fine_freq % y.sample_rate
        baseline = FrequencyTrack(baseline.time_s, wrapped, wrapped, baseline.bin_centered,
                                  baseline.null_depth_ratio)
    return PipelineOutput(track, baseline, rect, mmtw, y)


def _block_hop_seconds(track: FrequencyTrack) -> float:
    if len(track) < 2:
        raise ValueError("track needs at least two entries")
    return float(track.time_s[1] - track.time_s[0])


@dataclass(frozen=True)
class FskLevels:
    """Per-symbol median frequencies and the two-level decision threshold."""

    symbol_medians: np.ndarray
    threshold: float
    low_level: float
    high_level: float

    @property
    def separation(self) -> float:
        return self.high_level - self.low_level


def fsk_levels(track: FrequencyTrack, symbol_rate: float, n_symbols: Optional[int] = None,
               t0: float = 0.0) -> FskLevels:
    """Median fine frequency inside each symbol window and the level split.

    The threshold comes from 2-means clustering of the per-symbol medians,
    which stays centered between the levels for unbalanced bit patterns.
    """
    hop = _block_hop_seconds(track)
    if 1.0 / symbol_rate < 2 * hop:
        raise ValueError("track too sparse: need at least 2 entries per symbol")
    sym = np.floor((track.time_s - t0) * symbol_rate).astype(int)
    if n_symbols is None:
        n_symbols = int(sym.max()) + 1
    if n_symbols < 2:
        raise ValueError("track must span at least 2 symbols")
    medians = np.empty(n_symbols)
    for i in range(n_symbols):
        sel = track.fine_freq[sym == i]
        if sel.size == 0:
            raise ValueError(f"symbol {i} has no track entries")
        medians[i] = np.median(sel)

    lo, hi = medians.min(), medians.max()
    for _ in range(100):
        thr = 0.5 * (lo + hi)
        upper = medians > thr
        if upper.all() or not upper.any():
            break
        new_lo, new_hi = medians[~upper].mean(), medians[upper].mean()
        if new_lo == lo and new_hi == hi:
            break
        lo, hi = new_lo, new_hi
    return FskLevels(medians, 0.5 * (lo + hi), lo, hi)


def demod_fsk(track: FrequencyTrack, symbol_rate: float, n_symbols: Optional[int] = None,
              t0: float = 0.0) -> np.ndarray:
    """Hard bit decisions, 1 for the upper tone."""
    levels = fsk_levels(track, symbol_rate, n_symbols, t0)
    scale = max(abs(levels.high_level), abs(levels.low_level), 1e-300)
    if levels.separation <= 1e-12 * scale:
        warnings.warn("zero level separation: track carries no FSK modulation", RuntimeWarning)
        return np.zeros(levels.symbol_medians.size, dtype=int)
    return (levels.symbol_medians > levels.threshold).astype(int)


@dataclass(frozen=True)
class DoaFit:
    doa_deg: float
    amplitude: float
    offset: float
    residual_rms: float


def fit_doa(track: FrequencyTrack, rotation_rate: float) -> DoaFit:
    """Least-squares ``a sin(wt) + b cos(wt) + c`` fit; DOA is ``atan2(b, a)``."""
    span = (track.time_s[-1] - track.time_s[0]) * rotation_rate
    if span < 2:
        raise ValueError(f"track spans {span:.2f} rotations, need at least 2")
    w = 2 * np.pi * rotation_rate * track.time_s
    design = np.column_stack([np.sin(w), np.cos(w), np.ones_like(w)])
    coef, *_ = np.linalg.lstsq(design, track.fine_freq, rcond=None)
    a, b, c = coef
    resid = track.fine_freq - design @ coef
    doa = float(np.rad2deg(np.arctan2(b, a)) % 360.0)
    return DoaFit(doa, float(np.hypot(a, b)), float(c), float(np.sqrt(np.mean(resid ** 2))))


def estimate_doa(track: FrequencyTrack, scenario: DopplerScenario) -> float:
    return fit_doa(track, scenario.rotation_rate).doa_deg


def doa_error(estimate: float, truth: float) -> float:
    """Signed angular difference wrapped into [-180, 180)."""
    return (estimate - truth + 180.0) % 360.0 - 180.0


__all__ = [
    "FilterSpec", "PipelineConfig", "PipelineOutput", "PipelineError", "design_lowpass",
    "tune_filter_decimate", "run_pipeline", "fsk_levels", "FskLevels", "demod_fsk",
    "fit_doa", "DoaFit", "estimate_doa", "doa_error", "signed_freq",
]
