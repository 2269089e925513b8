import csv
import json
import struct
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from latentfire import plots
from latentfire.errors import FormatError
from latentfire.io import (RunManifest, decode_tensor, dumps_report, encode_tensor,
                           file_digest, read_factors, read_tensor, read_wav, write_factors,
                           write_report, write_tensor, write_wav)
from latentfire.pipelines import Event, EventReport
from latentfire.selection import KRecord, KSelectionReport, SelectionRule


@settings(max_examples=80, deadline=None)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=1, max_dims=8, max_side=3),
                  elements=st.floats(allow_nan=False)))
def test_ften_round_trip(x):
    y = decode_tensor(encode_tensor(x))
    assert y.shape == x.shape
    np.testing.assert_array_equal(y, x)


def test_ften_file_and_layout(tmp_path):
    x = np.arange(6.0).reshape(2, 3)
    write_tensor(tmp_path / "a.ften", x)
    raw = (tmp_path / "a.ften").read_bytes()
    assert raw[:4] == b"FTEN"
    assert struct.unpack_from("<HH2Q", raw, 4) == (1, 2, 2, 3)
    np.testing.assert_array_equal(np.frombuffer(raw[24:], "<f8"), np.arange(6.0))
    np.testing.assert_array_equal(read_tensor(tmp_path / "a.ften"), x)


def test_ften_rejects_bad_input():
    good = encode_tensor(np.ones((2, 2)))
    with pytest.raises(FormatError, match="magic"):
        decode_tensor(b"XTEN" + good[4:])
    with pytest.raises(FormatError, match="truncated"):
        decode_tensor(good[:5])
    with pytest.raises(FormatError, match="truncated"):
        decode_tensor(good[:12])
    with pytest.raises(FormatError, match="payload"):
        decode_tensor(good[:-1])
    with pytest.raises(FormatError, match="version"):
        decode_tensor(good[:4] + struct.pack("<H", 9) + good[6:])
    with pytest.raises(FormatError):
        encode_tensor(np.ones((1,) * 9))


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=64))
def test_ften_fuzz_never_crashes(blob):
    try:
        decode_tensor(blob)
    except FormatError:
        pass


def _wav_bytes(tag, channels, rate, bits, payload):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, rate, rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", len(body)) + body


def test_wav_silence(tmp_path):
    p = tmp_path / "s.wav"
    write_wav(p, np.zeros(16000), 16000)
    clip = read_wav(p)
    assert clip.sample_rate == 16000 and clip.samples.size == 16000
    assert not clip.samples.any()


def test_wav_full_scale_square(tmp_path):
    p = tmp_path / "sq.wav"
    write_wav(p, np.tile([1.0, -1.0], 50), 8000)
    clip = read_wav(p)
    assert set(np.abs(clip.samples)) == {32767 / 32768}


def test_wav_stereo_float_and_codec(tmp_path):
    p = tmp_path / "st.wav"
    frames = np.array([[0.5, -0.5], [1.0, 0.0]], dtype="<f4")
    p.write_bytes(_wav_bytes(3, 2, 8000, 32, frames.tobytes()))
    np.testing.assert_allclose(read_wav(p).samples, [0.0, 0.5])
    p.write_bytes(_wav_bytes(2, 1, 8000, 16, b"\x00" * 8))  # ADPCM
    with pytest.raises(FormatError, match="codec"):
        read_wav(p)
    p.write_bytes(b"RIFX" + b"\x00" * 40)
    with pytest.raises(FormatError):
        read_wav(p)


def test_factor_csv_round_trip(tmp_path):
    m = np.random.default_rng(0).uniform(size=(5, 3))
    write_factors(tmp_path / "w.csv", m)
    assert (tmp_path / "w.csv").read_text().splitlines()[0] == "c0,c1,c2"
    np.testing.assert_array_equal(read_factors(tmp_path / "w.csv"), m)


def test_json_reports(tmp_path):
    rec = KRecord(2, float("nan"), 0.5, 0.1, 0, valid=False)
    rep = KSelectionReport([rec], None, SelectionRule(), 10, 0.02, 0)
    d = json.loads(dumps_report(rep))
    assert d["selected_k"] is None
    assert d["records"][0]["min_silhouette"] is None
    ev = EventReport([Event(0, 1, 2, 3.5, 0.01, 0.035)], 1)
    write_report(tmp_path / "r.json", ev)
    got = json.loads((tmp_path / "r.json").read_text())
    assert got["events"][0]["start"] == 1
    assert json.loads(dumps_report(EventReport([], 0)))["events"] == []


def test_manifest_round_trip(tmp_path):
    data = tmp_path / "x.bin"
    data.write_bytes(b"abc")
    digest = file_digest(data)
    assert digest == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    m = RunManifest("nmf", ["nmf"], {"k": 2}, 0, {str(data): digest}, "0.1.0", 1.5, ["o"])
    write_report(tmp_path / "m.json", m)
    assert RunManifest.load(tmp_path / "m.json") == m


def _svg(text):
    return ET.fromstring(text)


NS = "{http://www.w3.org/2000/svg}"


def test_silhouette_svg_series():
    recs = [KRecord(k, 0.9, 0.95, 0.1 / k, 0) for k in (1, 2, 3)]
    rep = KSelectionReport(recs, 3, SelectionRule(), 10, 0.02, 0)
    root = _svg(plots.silhouette_curve(rep))
    names = {p.get("data-name") for p in root.iter(f"{NS}polyline")}
    assert names == {"min_silhouette", "mean_silhouette", "relative_error"}


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)),
                  elements=st.floats(allow_nan=True, allow_infinity=True)))
def test_svg_always_well_formed(m):
    for text in (plots.components(m, "w & <h>", "band"), plots.heatmap(m),
                 plots.objective_trace(m[:, 0])):
        assert _svg(text).tag == f"{NS}svg"
    ev = EventReport([Event(0, 0, 1, 2.0, 0.0, 1.0)], 1)
    assert len(list(_svg(plots.event_timeline(ev, 4)).iter(f"{NS}rect"))) >= 2


def _strict_constant(name):
    raise ValueError(f"non-standard JSON constant {name}")


@settings(max_examples=60, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 4)),
                  elements=st.floats(allow_nan=True, allow_infinity=True, width=64)))
def test_random_artifacts_parse_strictly(tmp_path_factory, m):
    d = tmp_path_factory.mktemp("art")
    finite = np.nan_to_num(m, nan=0.0, posinf=1e300, neginf=-1e300)
    write_factors(d / "f.csv", finite)
    with open(d / "f.csv", newline="") as fh:
        rows = list(csv.reader(fh, strict=True))
    assert len(rows) == m.shape[0] + 1 and all(len(r) == m.shape[1] for r in rows)
    np.testing.assert_array_equal(read_factors(d / "f.csv"), finite)
    vals = m.ravel()
    rec = [KRecord(j + 1, vals[j % vals.size], vals[-1], vals[0]) for j in range(2)]
    text = dumps_report(KSelectionReport(rec, None, SelectionRule(), 10, 0.02, 0))
    json.loads(text, parse_constant=_strict_constant)
