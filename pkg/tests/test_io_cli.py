import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mmtw import io as mio
from mmtw.cli import main, manifest_path, truth_path
from mmtw.iq import IqBuffer
from mmtw.superres import FrequencyTrack
from mmtw.transform import SpectrogramMatrix, WindowSpec, spectrogram


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


class TestFormats:
    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float32, st.integers(1, 300), elements=st.floats(-1e6, 1e6, width=32)),
           arrays(np.float32, st.integers(1, 300), elements=st.floats(-1e6, 1e6, width=32)))
    def test_iq_round_trip(self, tmp_path_factory, re, im):
        m = min(re.size, im.size)
        x = IqBuffer(re[:m].astype(float) + 1j * im[:m].astype(float), 2.5)
        p = tmp_path_factory.mktemp("iq") / "x.iq"
        mio.write_iq(p, x)
        assert p.stat().st_size == 8 * m
        y = mio.read_iq(p, 2.5)
        np.testing.assert_array_equal(y.samples, x.samples)

    def test_iq_layout(self, tmp_path):
        p = tmp_path / "x.iq"
        mio.write_iq(p, IqBuffer(np.array([1 + 2j, -3 + 0.5j])))
        np.testing.assert_array_equal(np.fromfile(p, "<f4"), [1, 2, -3, 0.5])

    def test_iq_odd_length_rejected(self, tmp_path):
        p = tmp_path / "x.iq"
        p.write_bytes(b"\0" * 12)
        with pytest.raises(ValueError):
            mio.read_iq(p, 1.0)

    def test_wav_round_trip(self, tmp_path, rng):
        s = rng.integers(-32768, 32767, 1000) / 32768.0
        p = tmp_path / "a.wav"
        mio.write_wav(p, s * 32768 / 32767, 44100)
        x = mio.read_wav(p)
        assert x.sample_rate == 44100
        np.testing.assert_allclose(x.samples.real, s, atol=1 / 32768)
        assert np.all(x.samples.imag == 0)

    def test_wav_stereo_rejected(self, tmp_path):
        import wave
        p = tmp_path / "s.wav"
        with wave.open(str(p), "wb") as w:
            w.setnchannels(2)
            w.setsampwidth(2)
            w.setframerate(8000)
            w.writeframes(b"\0" * 40)
        with pytest.raises(ValueError):
            mio.read_wav(p)

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.uint8, st.tuples(st.integers(1, 40), st.integers(1, 40))))
    def test_pgm_round_trip(self, tmp_path_factory, img):
        p = tmp_path_factory.mktemp("pgm") / "a.pgm"
        mio.write_pgm(p, img)
        np.testing.assert_array_equal(mio.read_pgm(p), img)

    def test_spectrogram_image_orientation(self):
        x = IqBuffer(np.exp(2j * np.pi * 5 / 32 * np.arange(320)))
        img = mio.spectrogram_image(spectrogram(x, WindowSpec.rectangular(32)))
        assert img.shape == (32, 19)
        assert np.all(img[5] == 255) and img.min() == 0

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.floats(-1e9, 1e9), st.floats(-1e9, 1e9), st.booleans(), st.floats(0, 1)),
                    min_size=1, max_size=30))
    def test_track_csv_round_trip(self, tmp_path_factory, rows):
        t = np.arange(len(rows), dtype=float) * 0.37
        c, f, b, r = (np.array(v) for v in zip(*rows))
        tr = FrequencyTrack(t, c, f, b, r)
        p = tmp_path_factory.mktemp("csv") / "t.csv"
        mio.write_track_csv(p, tr)
        back = mio.read_track_csv(p)
        for name in ("time_s", "coarse_freq", "fine_freq", "bin_centered", "null_depth_ratio"):
            np.testing.assert_array_equal(getattr(back, name), getattr(tr, name))

    def test_track_csv_header(self, tmp_path):
        p = tmp_path / "t.csv"
        mio.write_track_csv(p, FrequencyTrack([0.0], [1.0], [1.5], [True], [0.1]))
        assert p.read_text().splitlines()[0] == ",".join(mio.TRACK_COLUMNS)
        p.write_text("a,b\n")
        with pytest.raises(ValueError):
            mio.read_track_csv(p)

    def test_kv_round_trip(self, tmp_path):
        vals = {"z": 1, "a": 0.1, "flag": True, "name": "x"}
        p = tmp_path / "r.txt"
        mio.write_kv(p, vals)
        assert list(mio.read_kv(p)) == ["z", "a", "flag", "name"]
        assert mio.read_kv(p) == {"z": "1", "a": "0.1", "flag": "true", "name": "x"}

    def test_kv_numpy_scalars(self):
        text = mio.format_kv({"f": np.float64(0.25), "i": np.int64(3), "b": np.bool_(False)})
        assert text == "f=0.25\ni=3\nb=false\n"


class TestSynth:
    def test_tone_file_size(self, tmp_path, capsys):
        out = tmp_path / "tone.iq"
        code, stdout, _ = run(capsys, "synth", "tone", "-o", out, "--coarse-bin", 70, "--bin-offset", 0.3,
                              "--block-size", 100, "--samples", 100)
        assert code == 0 and out.stat().st_size == 800
        assert manifest_path(out).is_file()
        truth = mio.read_kv(truth_path(out))
        assert float(truth["frequency_hz"]) == pytest.approx(0.703)

    def test_fsk_sidecar_symbols(self, tmp_path, capsys):
        out = tmp_path / "f.iq"
        code, _, _ = run(capsys, "synth", "fsk", "-o", out, "--symbols", "01101001", "--symbol-rate", 1 / 1024,
                         "--deviation", 0.001)
        assert code == 0
        assert mio.read_kv(truth_path(out))["symbols"] == "01101001"

    def test_doppler_sidecar(self, tmp_path, capsys):
        out = tmp_path / "d.iq"
        assert run(capsys, "synth", "doppler", "-o", out, "--doa", 237)[0] == 0
        assert mio.read_kv(truth_path(out))["doa_deg"] == "237.0"

    def test_invalid_param_names_field(self, tmp_path, capsys):
        out = tmp_path / "t.iq"
        code, _, err = run(capsys, "synth", "tone", "-o", out, "--bin-offset", 1.5)
        assert code == 1 and "bin_offset" in err
        assert not out.exists() and not truth_path(out).exists()

    def test_unwritable(self, tmp_path, capsys):
        out = tmp_path / "missing" / "t.iq"
        code, _, err = run(capsys, "synth", "tone", "-o", out)
        assert code == 1 and "cannot write" in err
        assert not truth_path(out).exists()


@pytest.fixture
def tone_file(tmp_path, capsys):
    out = tmp_path / "tone.iq"
    run(capsys, "synth", "tone", "-o", out, "--samples", 2000)
    return out


class TestAnalyze:
    def test_worked_example(self, tmp_path, capsys):
        src = tmp_path / "t.iq"
        run(capsys, "synth", "tone", "-o", src)
        code, stdout, _ = run(capsys, "analyze", src, "--out-dir", tmp_path / "o", "--block-size", 100)
        rep = kv(stdout)
        assert code == 0
        assert float(rep["block0.peak_freq_hz"]) == pytest.approx(0.70)
        assert float(rep["block0.null_freq_hz"]) == pytest.approx(0.40)
        assert float(rep["block0.offset_hz"]) == pytest.approx(0.003)
        assert abs(float(rep["block0.fine_freq_hz"]) - 0.703) <= 1e-4

    def test_outputs_and_counts(self, tone_file, tmp_path, capsys):
        od = tmp_path / "out"
        code, stdout, _ = run(capsys, "analyze", tone_file, "--out-dir", od, "--block-size", 100)
        assert code == 0
        for name in ("track.csv", "baseline_track.csv", "rect_sgram.pgm", "mmtw_sgram.pgm", "report.txt",
                     "manifest.json"):
            assert (od / name).is_file()
        img = mio.read_pgm(od / "mmtw_sgram.pgm")
        assert img.shape == (100, (2000 - 100) // 50 + 1)
        tr = mio.read_track_csv(od / "track.csv")
        np.testing.assert_allclose(tr.fine_freq, 0.703, atol=5e-5)
        man = json.loads((od / "manifest.json").read_text())
        assert man["input_digest"] == mio.file_digest(tone_file)
        assert man["outputs"]["track.csv"] == mio.file_digest(od / "track.csv")
        assert man["config"]["block_size"] == 100

    def test_downconverted(self, tmp_path, capsys):
        src = tmp_path / "f.iq"
        run(capsys, "synth", "tone", "-o", src, "--coarse-bin", 30, "--bin-offset", 0.25, "--block-size", 128,
            "--samples", 20000)
        code, stdout, _ = run(capsys, "analyze", src, "--out-dir", tmp_path / "o", "--block-size", 64,
                              "--center-freq", 0.234, "--decimation", 4, "--offset-mode", "exactgrid")
        assert code == 0
        assert float(kv(stdout)["median_fine_freq_hz"]) == pytest.approx(30.25 / 128, abs=0.25 / (64 * 63))

    def test_unreadable(self, tmp_path, capsys):
        code, _, err = run(capsys, "analyze", tmp_path / "nope.iq", "--out-dir", tmp_path / "o")
        assert code == 1 and "cannot read" in err

    def test_undecodable(self, tmp_path, capsys):
        bad = tmp_path / "bad.iq"
        bad.write_bytes(b"\0" * 3)
        assert run(capsys, "analyze", bad, "--out-dir", tmp_path / "o")[0] == 1
        bad_wav = tmp_path / "bad.wav"
        bad_wav.write_bytes(b"RIFF0000")
        assert run(capsys, "analyze", bad_wav, "--out-dir", tmp_path / "o")[0] == 1

    def test_infeasible_config(self, tone_file, tmp_path, capsys):
        od = tmp_path / "o"
        code, _, err = run(capsys, "analyze", tone_file, "--out-dir", od, "--block-size", 64,
                           "--center-freq", 0.1, "--decimation", 64)
        assert code == 1
        assert not od.exists() or not any(od.iterdir())

    def test_wav_upsampled(self, tmp_path, capsys):
        fs = 44100
        t = np.arange(4410) / fs
        s = 0.5 * np.cos(2 * np.pi * 3000 * t) + 0.3 * np.cos(2 * np.pi * 5000 * t)
        p = tmp_path / "rec.wav"
        mio.write_wav(p, s, fs)
        code, stdout, _ = run(capsys, "analyze", p, "--out-dir", tmp_path / "o", "--block-size", 256,
                              "--upsample-factor", 8)
        rep = kv(stdout)
        assert code == 0 and rep["frequency_axis"] == "bin_offset"
        assert float(rep["analysis_sample_rate_hz"]) == 8 * fs

    def test_reproducible(self, tmp_path, capsys, monkeypatch):
        # same command line from the same working directory; manifests record paths as given
        digests = []
        for k in range(2):
            d = tmp_path / f"run{k}"
            d.mkdir()
            monkeypatch.chdir(d)
            run(capsys, "synth", "fsk", "-o", "f.iq", "--snr-db", 20, "--seed", 4, "--symbol-rate", 1 / 2048,
                "--deviation", 2e-4, "--n-symbols", 8)
            run(capsys, "analyze", "f.iq", "--out-dir", "o", "--block-size", 128, "--center-freq", 0.25)
            files = sorted(p for p in d.rglob("*") if p.is_file())
            digests.append({str(p.relative_to(d)): mio.file_digest(p) for p in files})
        assert digests[0] == digests[1] and len(digests[0]) == 9


class TestCrbCommand:
    def test_reference_row(self, capsys):
        code, stdout, _ = run(capsys, "crb", "--n-values", "10")
        assert code == 0
        row = stdout.splitlines()[1].split()
        assert row[0] == "10"
        assert float(row[1]) == pytest.approx(3.28965e-5, rel=1e-5)
        assert float(row[3]) == pytest.approx(3.28965e-6, rel=1e-5)

    def test_noiseless_zero(self, capsys):
        _, stdout, _ = run(capsys, "crb", "--sigma", 0, "--n-values", "64,128")
        for line in stdout.splitlines()[1:]:
            cols = line.split()
            assert float(cols[1]) == 0 and float(cols[3]) == 0

    def test_doubling_ratios(self, capsys):
        _, stdout, _ = run(capsys, "crb", "--n-values", "64,128,256,512")
        for line in stdout.splitlines()[2:]:
            cols = line.split()
            assert float(cols[5]) == pytest.approx(8, rel=0.1)
            assert float(cols[6]) == pytest.approx(16, rel=0.1)

    def test_invalid(self, capsys):
        assert run(capsys, "crb", "--amplitude", 0)[0] == 1


def synth_doppler(tmp_path, capsys, doa, snr=None, name="d.iq"):
    out = tmp_path / name
    args = ["synth", "doppler", "-o", out, "--doa", doa, "--carrier", 0.2, "--rotation-rate", 1 / 8192,
            "--peak-deviation", 1e-3, "--rotations", 6, "--seed", 3]
    if snr is not None:
        args += ["--snr-db", snr]
    run(capsys, *args)
    return out


DOA_FLAGS = ["--center-freq", 0.2, "--block-size", 256, "--offset-mode", "exactgrid"]


class TestDoaCommand:
    def test_noiseless_zero(self, tmp_path, capsys):
        src = synth_doppler(tmp_path, capsys, 0)
        code, stdout, _ = run(capsys, "doa", src, *DOA_FLAGS)
        assert code == 0 and abs(float(kv(stdout)["error_deg"])) < 1

    def test_covariance(self, tmp_path, capsys):
        a = float(kv(run(capsys, "doa", synth_doppler(tmp_path, capsys, 0, name="a.iq"), *DOA_FLAGS)[1])["doa_deg"])
        b = float(kv(run(capsys, "doa", synth_doppler(tmp_path, capsys, 90, name="b.iq"), *DOA_FLAGS)[1])["doa_deg"])
        assert abs((b - a - 90 + 180) % 360 - 180) <= 1

    def test_noisy_237(self, tmp_path, capsys):
        src = synth_doppler(tmp_path, capsys, 237, snr=20)
        assert abs(float(kv(run(capsys, "doa", src, *DOA_FLAGS)[1])["error_deg"])) <= 5

    def test_track_too_short(self, tmp_path, capsys):
        out = tmp_path / "s.iq"
        run(capsys, "synth", "doppler", "-o", out, "--rotation-rate", 1 / 8192, "--rotations", 1)
        code, _, err = run(capsys, "doa", out, "--center-freq", 0.25, "--block-size", 256)
        assert code == 1 and "rotations" in err

    def test_needs_rate_without_sidecar(self, tmp_path, capsys):
        src = synth_doppler(tmp_path, capsys, 10)
        truth_path(src).unlink()
        assert run(capsys, "doa", src, *DOA_FLAGS)[0] == 1
        code, stdout, _ = run(capsys, "doa", src, *DOA_FLAGS, "--rotation-rate", 1 / 8192)
        assert code == 0 and "error_deg" not in stdout


class TestFskCommand:
    def _synth(self, tmp_path, capsys, *extra):
        src = tmp_path / "f.iq"
        run(capsys, "synth", "fsk", "-o", src, "--snr-db", 20, "--seed", 2, "--n-symbols", 16, *extra)
        return src

    def test_ber_zero(self, tmp_path, capsys):
        src = self._synth(tmp_path, capsys)
        out = tmp_path / "bits.txt"
        code, stdout, _ = run(capsys, "fsk", src, "--symbol-rate", 1 / 8192, "-o", out, "--center-freq", 0.25)
        assert code == 0
        rep = mio.read_kv(out)
        assert rep["bit_errors"] == "0"
        assert rep["bits"] == mio.read_kv(truth_path(src))["symbols"]
        assert manifest_path(out).is_file()

    def test_missing_sidecar(self, tmp_path, capsys):
        src = self._synth(tmp_path, capsys)
        truth_path(src).unlink()
        out = tmp_path / "bits.txt"
        code, stdout, _ = run(capsys, "fsk", src, "--symbol-rate", 1 / 8192, "-o", out, "--center-freq", 0.25)
        assert code == 0 and "bits=" in stdout and "bit_errors" not in stdout

    def test_constant_tone_warns(self, tmp_path, capsys):
        src = tmp_path / "t.iq"
        run(capsys, "synth", "tone", "-o", src, "--samples", 8192, "--block-size", 512, "--coarse-bin", 100,
            "--bin-offset", 0)
        code, _, err = run(capsys, "fsk", src, "--symbol-rate", 1 / 2048, "-o", tmp_path / "b.txt")
        assert code == 0 and "zero level separation" in err

    def test_error_removes_outputs(self, tmp_path, capsys):
        src = self._synth(tmp_path, capsys)
        out = tmp_path / "bits.txt"
        code, _, _ = run(capsys, "fsk", src, "--symbol-rate", 0.01, "-o", out, "--center-freq", 0.25)
        assert code == 1 and not out.exists() and not manifest_path(out).exists()
