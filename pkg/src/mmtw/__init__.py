"""Mismatched-time-window (MMTW) spectrogram frequency super-resolution.

Zeroing the first sample of a rectangular DFT window turns the spectral
leakage of an off-bin tone into a null whose distance from the peak encodes
the tone's sub-bin offset. This package provides the transforms, the
peak/null estimator, a down-conversion pipeline, FSK and Doppler-DOA
readouts, and Cramer-Rao bound tooling.
"""

__version__ = "0.1.0"

from .iq import (DopplerScenario, FskSpec, IqBuffer, ToneSpec, add_noise, gen_doppler, gen_fsk,
                 gen_tone, snr_sigma, upsample)
from .transform import (SpectrogramMatrix, SpectrumSlice, WindowSpec, dft, magnitude_db,
                        mmtw_spectrum, spectrogram)
from .superres import (FineScaleSpectrum, FrequencyTrack, NullReport, OffsetMode, bin_offset,
                       compose_frequency, find_null, find_peak, fine_scale_spectrum,
                       instantaneous_frequency_baseline, super_resolve, track_from_spectrograms)
from .pipeline import (FilterSpec, PipelineConfig, PipelineError, PipelineOutput, demod_fsk,
                       design_lowpass, estimate_doa, fit_doa, fsk_levels, run_pipeline,
                       tune_filter_decimate)
from .bounds import (CrbParams, MonteCarloReport, crb_filtered, crb_unfiltered, monte_carlo,
                     processing_gain, quantization_floor)
