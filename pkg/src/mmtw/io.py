"""Readers and writers for the on-disk formats.

* IQ: headerless little-endian float32 pairs (I, Q).
* WAV: mono 16-bit PCM, read as real samples with zero imaginary part.
* PGM: binary P5, 8-bit, one column per block, row 0 is bin 0.
* Track CSV: ``time_s, coarse_freq_hz, fine_freq_hz, bin_centered, null_depth_ratio``.
* Reports and ground-truth sidecars: ``key=value`` lines in a stable order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import wave
from pathlib import Path
from typing import Dict, Mapping

import numpy as np

from .iq import IqBuffer
from .superres import FrequencyTrack
from .transform import SpectrogramMatrix, magnitude_db

TRACK_COLUMNS = ("time_s", "coarse_freq_hz", "fine_freq_hz", "bin_centered", "null_depth_ratio")


def write_iq(path, x: IqBuffer):
    inter = np.empty(2 * len(x), dtype="<f4")
    inter[0::2] = x.samples.real
    inter[1::2] = x.samples.imag
    Path(path).write_bytes(inter.tobytes())


def read_iq(path, sample_rate: float) -> IqBuffer:
    raw = np.frombuffer(Path(path).read_bytes(), dtype="<f4")
    if raw.size == 0 or raw.size % 2:
        raise ValueError(f"{path}: not an interleaved float32 IQ file")
    return IqBuffer(raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64), sample_rate)


def write_wav(path, samples: np.ndarray, sample_rate: int):
    """Mono PCM16; ``samples`` are floats in [-1, 1]."""
    pcm = np.clip(np.round(np.asarray(samples, dtype=float) * 32767), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(sample_rate))
        w.writeframes(pcm.tobytes())


def read_wav(path) -> IqBuffer:
    try:
        with wave.open(str(path), "rb") as w:
            if w.getnchannels() != 1 or w.getsampwidth() != 2:
                raise ValueError(f"{path}: only mono 16-bit PCM WAV is supported")
            rate = w.getframerate()
            frames = w.readframes(w.getnframes())
    except wave.Error as exc:
        raise ValueError(f"{path}: {exc}") from exc
    pcm = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
    if pcm.size == 0:
        raise ValueError(f"{path}: WAV holds no samples")
    return IqBuffer(pcm.astype(np.complex128), rate)


def spectrogram_image(sgram: SpectrogramMatrix, floor_db: float = -60.0) -> np.ndarray:
    """8-bit image, shape ``(N, n_blocks)``: 255 at each column's peak, 0 at the floor."""
    db = magnitude_db(sgram.bins, floor_db)
    img = np.round((db - floor_db) / -floor_db * 255.0)
    return img.T.astype(np.uint8)


def write_pgm(path, image: np.ndarray):
    img = np.ascontiguousarray(image, dtype=np.uint8)
    height, width = img.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (width, height) + img.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    width, height, maxval = (int(f) for f in fields[1:])
    if maxval > 255:
        raise ValueError(f"{path}: only 8-bit PGM is supported")
    pixels = np.frombuffer(data[pos + 1:pos + 1 + width * height], dtype=np.uint8)
    return pixels.reshape(height, width)


def write_track_csv(path, track: FrequencyTrack):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACK_COLUMNS)
        for t, c, f, b, r in track.entries():
            w.writerow([repr(t), repr(c), repr(f), int(b), repr(r)])


def read_track_csv(path) -> FrequencyTrack:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACK_COLUMNS:
        raise ValueError(f"{path}: unexpected track header")
    body = rows[1:]
    cols = list(zip(*body)) if body else [()] * 5
    return FrequencyTrack(
        np.array(cols[0], float), np.array(cols[1], float), np.array(cols[2], float),
        np.array(cols[3], int).astype(bool), np.array(cols[4], float))


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def format_kv(values: Mapping) -> str:
    return "".join(f"{k}={_fmt(v)}\n" for k, v in values.items())


def write_kv(path, values: Mapping):
    Path(path).write_text(format_kv(values))


def read_kv(path) -> Dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, command: str, config: Mapping, input_digest, outputs, tool_version: str):
    """JSON manifest: command, full config, input and output digests; no timestamps."""
    record = {
        "command": command,
        "config": dict(config),
        "input_digest": input_digest,
        "outputs": {Path(p).name: file_digest(p) for p in outputs},
        "tool_version": tool_version,
    }
    Path(path).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
