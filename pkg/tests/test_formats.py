import json

import numpy as np
import pandas as pd
import pytest
from scipy.io import wavfile

from src import __version__
from src.dsp import IQBuffer, SampleBuffer
from src.formats import (
    FormatError,
    RunManifest,
    read_iq,
    read_manifest,
    read_wav,
    round_sig,
    sidecar_path,
    write_csv,
    write_iq,
    write_json,
    write_manifest,
    write_wav,
)


def test_wav_round_trip_is_pcm16(tmp_path):
    path = str(tmp_path / "a.wav")
    audio = SampleBuffer(np.array([0.0, 0.5, -0.5, 1.0, -1.0]), 48_000.0)
    write_wav(path, audio)
    back = read_wav(path)
    assert back.sample_rate_hz == 48_000
    assert np.allclose(back.samples, audio.samples, atol=1 / 32768)


def test_read_wav_rejects_non_pcm16(tmp_path):
    stereo = str(tmp_path / "stereo.wav")
    wavfile.write(stereo, 8000, np.zeros((10, 2), dtype=np.int16))
    with pytest.raises(FormatError):
        read_wav(stereo)

    floats = str(tmp_path / "float.wav")
    wavfile.write(floats, 8000, np.zeros(10, dtype=np.float32))
    with pytest.raises(FormatError):
        read_wav(floats)

    with pytest.raises(FormatError):
        read_wav(str(tmp_path / "missing.wav"))


def test_iq_dump_layout(tmp_path):
    path = str(tmp_path / "x.iq")
    iq = IQBuffer(np.array([1 + 2j, -0.5 + 0.25j]), 400_000.0, center_freq_hz=614e6, deviation_hz=75_000.0)
    write_iq(path, iq)

    raw = np.fromfile(path, dtype="<f4")
    assert raw.tolist() == [1.0, 2.0, -0.5, 0.25]
    with open(sidecar_path(path), encoding="utf-8") as f:
        assert f.read() == "sample_rate_hz=400000.0\ncenter_freq_hz=614000000.0\ndeviation_hz=75000.0\n"

    back = read_iq(path)
    assert np.array_equal(back.samples, iq.samples)
    assert back.center_freq_hz == 614e6
    assert back.deviation_hz == 75_000.0


def test_iq_dump_without_deviation(tmp_path):
    path = str(tmp_path / "y.iq")
    write_iq(path, IQBuffer(np.ones(3), 1_000.0))
    assert read_iq(path).deviation_hz is None


def test_read_iq_errors(tmp_path):
    path = tmp_path / "odd.iq"
    np.zeros(3, dtype="<f4").tofile(path)
    (tmp_path / "odd.iq.txt").write_text("sample_rate_hz=1000.0\n", encoding="utf-8")
    with pytest.raises(FormatError):
        read_iq(str(path))

    np.zeros(4, dtype="<f4").tofile(path)
    (tmp_path / "odd.iq.txt").write_text("center_freq_hz=0.0\n", encoding="utf-8")
    with pytest.raises(FormatError):
        read_iq(str(path))

    with pytest.raises(FormatError):
        read_iq(str(tmp_path / "nothing.iq"))


def test_round_sig():
    assert round_sig(204666666.6666) == 204667000.0
    assert round_sig(-0.9382002) == -0.9382
    assert round_sig({"a": [1.23456789, True, 3, "x"]}) == {"a": [1.23457, True, 3, "x"]}


def test_csv_is_byte_stable(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(pd.DataFrame({"a": [1.0 / 3, 614e6], "b": ["OK", "FAIL"]}), str(path))
    assert path.read_bytes() == b"a,b\n0.333333,OK\n6.14e+08,FAIL\n"


def test_json_is_sorted_and_rounded(tmp_path):
    path = tmp_path / "t.json"
    write_json({"z": 1.0 / 3, "a": 1}, str(path))
    assert path.read_text(encoding="utf-8") == '{\n  "a": 1,\n  "z": 0.333333\n}\n'


def test_manifest_round_trip(tmp_path):
    manifest = RunManifest(command="plan", argv=["plan", "--out", str(tmp_path)], seed=7, out_dir=str(tmp_path))
    path = write_manifest(manifest)
    assert path.endswith("manifest.json")
    back = read_manifest(str(tmp_path))
    assert back == manifest
    assert back.version == __version__
    assert "time" not in json.loads(open(path, encoding="utf-8").read())


def test_read_manifest_errors(tmp_path):
    with pytest.raises(FormatError):
        read_manifest(str(tmp_path / "missing.json"))
    (tmp_path / "manifest.json").write_text('{"command": "plan"}', encoding="utf-8")
    with pytest.raises(FormatError):
        read_manifest(str(tmp_path))
