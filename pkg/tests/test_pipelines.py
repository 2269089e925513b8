import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latentfire.errors import DomainError
from latentfire.frontend import AudioClip
from latentfire.io import dumps_report
from latentfire.pipelines import (AudioConfig, EventReport, VideoConfig, audio_pipeline,
                                  robust_zscores, score_activations, video_pipeline)

from planted import tone_burst


def test_robust_zscores():
    z = robust_zscores([1.0, 2.0, 3.0, 4.0, 100.0])
    assert z[2] == 0.0
    assert z[4] == pytest.approx(97 / 1.4826)
    assert robust_zscores(np.full(6, 2.0)) is None
    # more than half the samples at the median: MAD is 0, mean deviation takes over
    sparse = robust_zscores([0.0] * 8 + [5.0, 5.0])
    assert sparse[-1] == pytest.approx(5.0 / (1.2533 * 1.0))


def test_plateau_gives_one_event():
    trace = np.zeros(50)
    trace[20:25] = 10.0
    rep = score_activations(trace[None])
    assert len(rep.events) == 1
    ev = rep.events[0]
    assert (ev.source, ev.start, ev.end) == (0, 20, 24)


def test_constant_trace_skipped_with_warning():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = score_activations(np.ones((1, 30)))
    assert rep.events == [] and rep.skipped_sources == [0]
    assert any("constant" in str(c.message) for c in caught)


def test_two_runs_separated_by_gap():
    trace = np.zeros(60)
    trace[10:14] = 8.0
    trace[15:19] = 8.0
    rep = score_activations(trace[None])
    assert [(e.start, e.end) for e in rep.events] == [(10, 13), (15, 18)]


def test_min_run_and_times():
    trace = np.zeros(40)
    trace[5:7] = 9.0
    trace[20:24] = 9.0
    rep = score_activations(trace[None], min_run=3, step_time=0.01, step_span=0.025)
    assert len(rep.events) == 1
    ev = rep.events[0]
    assert ev.start_time == pytest.approx(0.20) and ev.end_time == pytest.approx(0.255)


def test_negative_traces_rejected():
    with pytest.raises(DomainError):
        score_activations([[0.0, -1.0, 2.0]])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1.0, 4.0), st.floats(0.0, 4.0))
def test_events_properties(seed, sigma, bump):
    rng = np.random.default_rng(seed)
    traces = rng.exponential(size=(3, 80)) ** 2
    lo = score_activations(traces, threshold_sigma=sigma, min_run=1)
    hi = score_activations(traces, threshold_sigma=sigma + bump, min_run=1)
    for src in range(3):
        spans = sorted((e.start, e.end) for e in lo.events if e.source == src)
        assert all(a[1] < b[0] for a, b in zip(spans, spans[1:]))
        # a stricter threshold only shrinks events: each one nests inside a looser one
        for e in (e for e in hi.events if e.source == src):
            assert any(a <= e.start and e.end <= b for a, b in spans)
    assert sum(e.end - e.start + 1 for e in hi.events) <= sum(
        e.end - e.start + 1 for e in lo.events)


def test_raising_threshold_can_split_a_run():
    # the dip between the two peaks clears sigma=3 but not sigma=10
    trace = np.zeros(40)
    trace[10:13] = [5.0, 2.0, 5.0]
    z = robust_zscores(trace)
    assert 3 < z[11] < 10 < z[10]
    assert len(score_activations(trace[None], 3.0, min_run=1).events) == 1
    assert len(score_activations(trace[None], 10.0, min_run=1).events) == 2


def test_empty_report_json():
    text = dumps_report(EventReport([], 0))
    assert json.loads(text)["events"] == []


def test_audio_silence():
    model, selection, rep = audio_pipeline(AudioClip(np.zeros(16000), 16000))
    assert model is None and rep.events == []


def _iou(a, b):
    inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
    return inter / (max(a[1], b[1]) - min(a[0], b[0]))


def test_audio_single_burst():
    x, sr = tone_burst(0, duration=6.0)
    model, selection, rep = audio_pipeline(AudioClip(x, sr))
    assert selection.selected_k == rep.k_used == model.k
    best = max(rep.events, key=lambda e: _iou((e.start_time, e.end_time), (2.0, 3.0)))
    assert _iou((best.start_time, best.end_time), (2.0, 3.0)) >= 0.5
    peak = rep.sources[best.source]["peak_hz"]
    assert 900 < peak < 1100


def test_audio_two_bursts_two_sources():
    rng = np.random.default_rng(1)
    sr = 16000
    t = np.arange(8 * sr) / sr
    x = 0.05 * rng.uniform(-1, 1, t.size)
    x += 0.3 * np.sin(2 * np.pi * 500 * t) * ((t >= 1) & (t < 2))
    x += 0.3 * np.sin(2 * np.pi * 3000 * t) * ((t >= 5) & (t < 6))
    cfg = AudioConfig(band_labels=(("low", 400, 600), ("high", 2800, 3200)))
    _, _, rep = audio_pipeline(AudioClip(x, sr), cfg)
    first = [e for e in rep.events if _iou((e.start_time, e.end_time), (1, 2)) >= 0.5]
    second = [e for e in rep.events if _iou((e.start_time, e.end_time), (5, 6)) >= 0.5]
    assert len(first) == 1 and len(second) == 1
    assert first[0].source != second[0].source
    assert (first[0].label, second[0].label) == ("low", "high")


def test_audio_fixed_k_deterministic():
    x, sr = tone_burst(2, duration=4.0, span=(1.0, 2.0))
    cfg = AudioConfig(k=2)
    a = audio_pipeline(AudioClip(x, sr), cfg)[2]
    b = audio_pipeline(AudioClip(x, sr), cfg)[2]
    assert dumps_report(a) == dumps_report(b)


def _static(seed, t=160):
    rng = np.random.default_rng(seed)
    return 0.3 + rng.uniform(0, 0.02, (t, 8, 8))


def test_video_ramp_event():
    v = _static(0)
    v[:, 2:4, 4:6] += np.clip((np.arange(160) - 50) / 10, 0, 1)[:, None, None]
    _, _, rep = video_pipeline(v)
    assert len(rep.events) == 1
    ev = rep.events[0]
    assert ev.start_time <= 60 and ev.end_time >= 50


def test_video_constant_no_events():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, _, rep = video_pipeline(np.full((96, 8, 8), 0.5))
    assert rep.events == []


def test_video_flicker_and_spike():
    rng = np.random.default_rng(1)
    t = np.arange(160)
    v = 0.5 + 0.3 * np.sin(2 * np.pi * t / 8)[:, None, None] + rng.uniform(0, 0.02, (160, 8, 8))
    v[100:104, 0:2, 0:2] += 3.0
    _, _, rep = video_pipeline(v)
    assert len(rep.events) >= 1
    for ev in rep.events:
        assert ev.start_time <= 103 and ev.end_time >= 100


def test_video_fixed_ranks_config_echo():
    v = _static(2, t=96)
    v[40:44, :2, :2] += 2.0
    cfg = VideoConfig(ranks=(2, 2, 2), cpd_rank=2, ntf=VideoConfig().ntf)
    tucker, cpd, rep = video_pipeline(v, cfg)
    assert tucker.ranks == (2, 2, 2) and cpd.rank == 2
    assert rep.config["tucker_ranks"] == [2, 2, 2]
    assert rep.config["rank_selection"] == []
    json.loads(dumps_report(rep))
