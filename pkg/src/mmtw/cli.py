"""Command-line entry point: ``mmtw {synth,analyze,crb,doa,fsk}``."""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import io as mio
from .bounds import CrbParams, crb_filtered, crb_unfiltered, processing_gain, quantization_floor
from .iq import (DopplerScenario, FskSpec, IqBuffer, ToneSpec, add_noise, gen_doppler, gen_fsk,
                 gen_tone, snr_sigma)
from .pipeline import (FilterSpec, PipelineConfig, PipelineError, demod_fsk, doa_error, fit_doa,
                       fsk_levels, run_pipeline)
from .superres import OffsetMode, super_resolve
from .transform import n_blocks


class CliError(Exception):
    pass


def truth_path(path) -> Path:
    return Path(str(path) + ".truth")


def manifest_path(path) -> Path:
    return Path(str(path) + ".manifest.json")


def _outputs_guard(paths):
    """Remove every path in ``paths`` that exists; used on failure."""
    for p in paths:
        Path(p).unlink(missing_ok=True)


# --- synth -----------------------------------------------------------------

def _parse_bits(text: str):
    bits = [int(c) for c in text.replace(",", "").strip()]
    if not bits or any(b not in (0, 1) for b in bits):
        raise CliError("--symbols must be a string of 0/1 characters")
    return bits


def cmd_synth(args) -> int:
    fs = args.sample_rate
    truth = {"kind": args.kind, "sample_rate": fs}
    try:
        if args.kind == "tone":
            spec = ToneSpec(complex(args.amplitude), args.coarse_bin, args.bin_offset, args.block_size)
            x = gen_tone(spec, args.samples, fs)
            truth.update(frequency_hz=spec.frequency(fs), coarse_bin=spec.coarse_bin,
                         bin_offset=spec.bin_offset, block_size=spec.block_size,
                         amplitude=abs(spec.amplitude))
        elif args.kind == "fsk":
            if args.symbols:
                bits = _parse_bits(args.symbols)
            else:
                bits = np.random.default_rng(args.seed).integers(0, 2, args.n_symbols).tolist()
            spec = FskSpec(args.carrier, args.deviation, args.symbol_rate, bits)
            x = gen_fsk(spec, len(bits) / spec.symbol_rate, fs)
            truth.update(carrier_hz=spec.carrier_freq, deviation_hz=spec.deviation,
                         symbol_rate_hz=spec.symbol_rate, n_symbols=len(bits),
                         symbols="".join(map(str, bits)), amplitude=1.0)
        else:
            sc = DopplerScenario(args.carrier, args.rotation_rate, args.peak_deviation, args.doa)
            duration = args.duration if args.duration else args.rotations / sc.rotation_rate
            x = gen_doppler(sc, duration, fs)
            truth.update(carrier_hz=sc.carrier_freq, rotation_rate_hz=sc.rotation_rate,
                         peak_deviation_hz=sc.peak_deviation, doa_deg=float(sc.true_doa),
                         amplitude=1.0)
    except ValueError as exc:
        raise CliError(f"invalid {args.kind} parameters: {exc}") from exc
    if args.snr_db is not None:
        x = add_noise(x, snr_sigma(args.snr_db), args.seed)
    truth.update(samples=len(x), snr_db="inf" if args.snr_db is None else args.snr_db, seed=args.seed)

    out = Path(args.out)
    outputs = [out, truth_path(out)]
    try:
        mio.write_iq(out, x)
        mio.write_kv(truth_path(out), truth)
        mio.write_manifest(manifest_path(out), "synth", _config(args), None, outputs, __version__)
    except OSError as exc:
        _outputs_guard(outputs + [manifest_path(out)])
        raise CliError(f"cannot write {out}: {exc}") from exc
    print(mio.format_kv(truth), end="")
    return 0


# --- analysis helpers -------------------------------------------------------

def load_input(path, sample_rate):
    path = Path(path)
    if not path.is_file():
        raise CliError(f"cannot read {path}")
    try:
        if path.suffix.lower() == ".wav":
            return mio.read_wav(path), True
        return mio.read_iq(path, sample_rate), False
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def pipeline_config(args, sample_rate) -> PipelineConfig:
    try:
        filt = None
        if args.center_freq is not None:
            n_dec = args.block_size
            bw = sample_rate / args.decimation / n_dec
            half = args.passband_halfwidth if args.passband_halfwidth else args.bandwidth_bins * bw / 2
            trans = args.transition_width if args.transition_width else half
            filt = FilterSpec(args.center_freq, half, trans, args.decimation, args.stopband_atten)
        return PipelineConfig(filt, args.block_size, args.offset_mode, args.upsample_factor, args.tau)
    except ValueError as exc:
        raise CliError(f"infeasible pipeline config: {exc}") from exc


def analyze_signal(x: IqBuffer, args):
    cfg = pipeline_config(args, x.sample_rate)
    try:
        return cfg, run_pipeline(x, cfg)
    except PipelineError as exc:
        raise CliError(f"pipeline stage {exc}") from exc


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


# --- analyze ----------------------------------------------------------------

def cmd_analyze(args) -> int:
    x, is_wav = load_input(args.input, args.sample_rate)
    cfg, out = analyze_signal(x, args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = ["track.csv", "baseline_track.csv", "rect_sgram.pgm", "mmtw_sgram.pgm", "report.txt"]
    paths = [out_dir / n for n in names]
    report = analysis_report(out, cfg, is_wav)
    try:
        mio.write_track_csv(paths[0], out.track)
        mio.write_track_csv(paths[1], out.baseline_track)
        mio.write_pgm(paths[2], mio.spectrogram_image(out.rect_sgram, args.floor_db))
        mio.write_pgm(paths[3], mio.spectrogram_image(out.mmtw_sgram, args.floor_db))
        mio.write_kv(paths[4], report)
        mio.write_manifest(out_dir / "manifest.json", "analyze", _config(args),
                           mio.file_digest(args.input), paths, __version__)
    except OSError as exc:
        _outputs_guard(paths + [out_dir / "manifest.json"])
        raise CliError(f"cannot write outputs: {exc}") from exc
    print(mio.format_kv(report), end="")
    return 0


def analysis_report(out, cfg: PipelineConfig, is_wav: bool) -> dict:
    y = out.signal
    n = cfg.block_size
    bw = y.sample_rate / n
    center = cfg.filter.center_freq if cfg.filter else 0.0
    first = out.rect_sgram.column(0)
    _, rep = super_resolve(first, out.mmtw_sgram.column(0), cfg.offset_mode, cfg.tau)
    track = out.track
    return {
        "frequency_axis": "bin_offset" if is_wav or cfg.upsample_factor > 1 else "absolute",
        "analysis_sample_rate_hz": y.sample_rate,
        "block_size": n,
        "n_blocks": len(track),
        "expected_n_blocks": n_blocks(len(y), n),
        "offset_mode": cfg.offset_mode.value,
        "bin_width_hz": bw,
        "fine_grid_step_hz": cfg.offset_mode.grid_step(y.sample_rate, n),
        "center_freq_hz": center,
        "block0.peak_bin": rep.peak_bin,
        "block0.null_bin": rep.null_bin,
        "block0.peak_freq_hz": rep.peak_bin * y.sample_rate / n,
        "block0.null_freq_hz": rep.null_bin * y.sample_rate / n,
        "block0.base_bin": rep.base_bin,
        "block0.alpha": rep.alpha,
        "block0.offset_hz": rep.alpha * y.sample_rate / n,
        "block0.bin_centered": rep.bin_centered,
        "block0.null_depth_ratio": rep.null_depth_ratio,
        "block0.fine_freq_hz": float(track.fine_freq[0]),
        "median_fine_freq_hz": float(np.median(track.fine_freq)),
        "median_baseline_freq_hz": float(np.median(out.baseline_track.fine_freq)),
        "bin_centered_blocks": int(track.bin_centered.sum()),
    }


# --- crb --------------------------------------------------------------------

def cmd_crb(args) -> int:
    try:
        ns = [int(v) for v in args.n_values.split(",")]
        rows = []
        for n in ns:
            p = CrbParams(args.amplitude, args.sigma, args.sample_rate, n, args.gain_constant)
            rows.append((n, crb_unfiltered(p),
                         processing_gain(p.sample_rate, p.sample_rate / (p.gain_constant * n)),
                         crb_filtered(p), quantization_floor(p.sample_rate, n, args.offset_mode)))
    except ValueError as exc:
        raise CliError(f"invalid CRB parameters: {exc}") from exc
    print(f"{'N':>6} {'crb_unfiltered':>14} {'proc_gain':>10} {'crb_filtered':>14} "
          f"{'quant_floor':>12} {'ratio_unf':>9} {'ratio_filt':>10}")
    prev = None
    for n, cu, g, cf, q in rows:
        ru = rf = "-"
        if prev is not None and prev[1] > 0:
            ru = f"{prev[1] / cu:.4f}"
            rf = f"{prev[3] / cf:.4f}"
        print(f"{n:>6} {cu:>14.5e} {g:>10.4f} {cf:>14.5e} {q:>12.5e} {ru:>9} {rf:>10}")
        prev = (n, cu, g, cf, q)
    return 0


# --- doa / fsk --------------------------------------------------------------

def _truth_for(path):
    p = truth_path(path)
    return mio.read_kv(p) if p.is_file() else None


def cmd_doa(args) -> int:
    x, _ = load_input(args.input, args.sample_rate)
    truth = _truth_for(args.input)
    rate = args.rotation_rate
    if rate is None and truth and "rotation_rate_hz" in truth:
        rate = float(truth["rotation_rate_hz"])
    if rate is None:
        raise CliError("--rotation-rate is required without a ground-truth sidecar")
    _, out = analyze_signal(x, args)
    try:
        fit = fit_doa(out.track, rate)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    report = {"doa_deg": fit.doa_deg, "fit_residual_rms_hz": fit.residual_rms,
              "fit_amplitude_hz": fit.amplitude, "fit_offset_hz": fit.offset}
    if truth and "doa_deg" in truth:
        report["true_doa_deg"] = float(truth["doa_deg"])
        report["error_deg"] = doa_error(fit.doa_deg, float(truth["doa_deg"]))
    print(mio.format_kv(report), end="")
    return 0


def cmd_fsk(args) -> int:
    x, _ = load_input(args.input, args.sample_rate)
    truth = _truth_for(args.input)
    _, out = analyze_signal(x, args)
    n_sym = int(truth["n_symbols"]) if truth and "n_symbols" in truth else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            bits = demod_fsk(out.track, args.symbol_rate, n_sym)
            levels = fsk_levels(out.track, args.symbol_rate, n_sym)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    report = {"n_symbols": bits.size, "bits": "".join(map(str, bits)),
              "separation_hz": levels.separation, "threshold_hz": levels.threshold}
    if truth and "symbols" in truth:
        ref = np.array([int(c) for c in truth["symbols"]])
        m = min(ref.size, bits.size)
        report["bit_errors"] = int(np.sum(ref[:m] != bits[:m]) + abs(ref.size - bits.size))
    out_path = Path(args.out)
    try:
        mio.write_kv(out_path, report)
        mio.write_manifest(manifest_path(out_path), "fsk", _config(args),
                           mio.file_digest(args.input), [out_path], __version__)
    except OSError as exc:
        _outputs_guard([out_path, manifest_path(out_path)])
        raise CliError(f"cannot write {out_path}: {exc}") from exc
    print(mio.format_kv(report), end="")
    return 0


# --- parser -----------------------------------------------------------------

def _common(p):
    p.add_argument("--sample-rate", type=float, default=1.0, help="sample rate in Hz (IQ input)")
    p.add_argument("--seed", type=int, default=0)


def _pipeline_flags(p):
    p.add_argument("--block-size", type=int, default=512)
    p.add_argument("--offset-mode", choices=[m.value for m in OffsetMode], default="eq3")
    p.add_argument("--center-freq", type=float, default=None,
                   help="tune frequency; omit to analyze the input without down-conversion")
    p.add_argument("--bandwidth-bins", type=float, default=4.0,
                   help="filter passband width in post-decimation bin widths")
    p.add_argument("--passband-halfwidth", type=float, default=None)
    p.add_argument("--transition-width", type=float, default=None)
    p.add_argument("--decimation", type=int, default=1)
    p.add_argument("--stopband-atten", type=float, default=60.0)
    p.add_argument("--upsample-factor", type=int, default=1)
    p.add_argument("--tau", type=float, default=0.8, help="bin-centered null-depth threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmtw", description="MMTW spectrogram super-resolution")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic IQ file with a ground-truth sidecar")
    p.add_argument("kind", choices=["tone", "fsk", "doppler"])
    p.add_argument("-o", "--out", required=True)
    _common(p)
    p.add_argument("--snr-db", type=float, default=None, help="add noise at A^2/sigma^2 (dB)")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--coarse-bin", type=int, default=70)
    p.add_argument("--bin-offset", type=float, default=0.3)
    p.add_argument("--block-size", type=int, default=100)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--carrier", type=float, default=0.25)
    p.add_argument("--deviation", type=float, default=5e-5)
    p.add_argument("--symbol-rate", type=float, default=1 / 8192)
    p.add_argument("--symbols", default=None, help="bit string, e.g. 01101001")
    p.add_argument("--n-symbols", type=int, default=64, help="random bits when --symbols is absent")
    p.add_argument("--rotation-rate", type=float, default=1 / 8192)
    p.add_argument("--peak-deviation", type=float, default=1e-3)
    p.add_argument("--doa", type=float, default=0.0)
    p.add_argument("--rotations", type=float, default=6.0)
    p.add_argument("--duration", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="run the MMTW pipeline on an IQ or WAV file")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--floor-db", type=float, default=-60.0)
    _common(p)
    _pipeline_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("crb", help="tabulate Cramer-Rao bounds")
    _common(p)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--gain-constant", type=float, default=1.0)
    p.add_argument("--n-values", default="10,64,128,256,512")
    p.add_argument("--offset-mode", choices=[m.value for m in OffsetMode], default="eq3")
    p.set_defaults(func=cmd_crb)

    p = sub.add_parser("doa", help="estimate direction of arrival from Doppler FM")
    p.add_argument("input")
    p.add_argument("--rotation-rate", type=float, default=None)
    _common(p)
    _pipeline_flags(p)
    p.set_defaults(func=cmd_doa)

    p = sub.add_parser("fsk", help="demodulate binary FSK from the MMTW track")
    p.add_argument("input")
    p.add_argument("--symbol-rate", type=float, required=True)
    p.add_argument("-o", "--out", required=True)
    _common(p)
    _pipeline_flags(p)
    p.set_defaults(func=cmd_fsk)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"mmtw {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
