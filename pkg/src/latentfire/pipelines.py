"""
End-to-end anomaly pipelines.

Audio: mel spectrogram -> NMFk rank selection -> KL-NMF; the rows of ``H``
are per-source activation traces and the columns of ``W`` their spectral
signatures.

Video: per-channel sliding-window DFT -> per-mode NMFk ranks -> non-negative
Tucker -> non-negative CPD of the Tucker core; each CPD component, mapped
back through the Tucker factors, gives a time trace, a frequency signature
and a channel signature.

Both score their traces with :func:`score_activations`.
"""

import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .frontend import (DEFAULT_BANDS, DEFAULT_HOP_S, DEFAULT_WINDOW_S, _samples,
                       band_of, mel_spectrogram, temporal_dft_tensor)
from .nmf import NmfConfig, nmf_solve
from .ntf import NtfConfig, ncpd_solve, ntucker_solve
from .salient import SpatioTemporalTensor
from .errors import DomainError, RankSelectionError
from .selection import (REPLICA_NMF, PerturbConfig, SelectionRule, select_k,
                        select_tensor_ranks)
from .tensor import unfold

MAD_TO_SIGMA = 1.4826
MEAN_AD_TO_SIGMA = 1.2533


@dataclass
class Event:
    source: int
    start: int
    end: int
    peak_score: float
    start_time: float = None
    end_time: float = None
    label: str = None


@dataclass
class EventReport:
    events: list
    k_used: int
    config: dict = field(default_factory=dict)
    time_unit: str = "step"
    skipped_sources: list = field(default_factory=list)
    sources: list = field(default_factory=list)

    def to_dict(self):
        return {
            "events": [asdict(e) for e in self.events],
            "k_used": self.k_used,
            "config": self.config,
            "time_unit": self.time_unit,
            "skipped_sources": self.skipped_sources,
            "sources": self.sources,
        }


def robust_zscores(trace):
    """``(x - median) / (1.4826 * MAD)``.

    Sparse traces (more than half the samples at the median) have MAD = 0;
    the mean absolute deviation from the median is used as the scale then.
    Returns None for a constant trace.
    """
    trace = np.asarray(trace, dtype=np.float64)
    med = np.median(trace)
    dev = np.abs(trace - med)
    scale = MAD_TO_SIGMA * np.median(dev)
    if scale == 0:
        scale = MEAN_AD_TO_SIGMA * dev.mean()
    if scale == 0:
        return None
    return (trace - med) / scale


def _runs(mask):
    """Inclusive ``(start, end)`` index pairs of the True runs of ``mask``."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return [(int(s), int(e) - 1) for s, e in zip(edges[::2], edges[1::2])]


def score_activations(traces, threshold_sigma=3.0, min_run=3, step_time=None,
                      step_span=None, time_unit="step"):
    """Turn per-source activation traces into events.

    Parameters
    ----------
    traces : array_like, shape (K, T)
        Non-negative traces, one row per source.
    threshold_sigma : float
        Robust z-score a step must exceed.
    min_run : int
        Minimum number of consecutive steps above threshold.
    step_time : float, optional
        Duration of one step; with ``step_span`` (duration covered by one
        step) it fills ``start_time``/``end_time`` of each event.
    """
    traces = np.atleast_2d(np.asarray(traces, dtype=np.float64))
    if np.any(traces < 0):
        raise DomainError("activation traces must be non-negative")
    events, skipped = [], []
    for src, trace in enumerate(traces):
        z = robust_zscores(trace)
        if z is None:
            warnings.warn(f"trace {src} is constant; skipped", stacklevel=2)
            skipped.append(src)
            continue
        for start, end in _runs(z > threshold_sigma):
            if end - start + 1 < min_run:
                continue
            ev = Event(src, start, end, float(z[start:end + 1].max()))
            if step_time is not None:
                ev.start_time = start * step_time
                ev.end_time = end * step_time + (step_span if step_span is not None else step_time)
            events.append(ev)
    events.sort(key=lambda e: (e.start, e.source))
    config = {"threshold_sigma": threshold_sigma, "min_run": min_run}
    return EventReport(events, traces.shape[0], config, time_unit, skipped)


@dataclass(frozen=True)
class AudioConfig:
    """Audio pipeline settings. ``k=None`` selects the rank with NMFk."""

    bands: int = DEFAULT_BANDS
    window_s: float = DEFAULT_WINDOW_S
    hop_s: float = DEFAULT_HOP_S
    k: int = None
    k_range: tuple = (1, 4)
    nmf: NmfConfig = NmfConfig(k=1, max_iters=1000, obj_stride=10)
    selection_nmf: NmfConfig = REPLICA_NMF
    perturb: PerturbConfig = PerturbConfig()
    rule: SelectionRule = SelectionRule()
    threshold_sigma: float = 3.0
    min_run: int = 3
    band_labels: tuple = ()  # ((label, f_lo, f_hi), ...)


def _label(freq, band_labels):
    for label, lo, hi in band_labels:
        if lo <= freq <= hi:
            return label
    return None


def audio_pipeline(clip, cfg=None, n_jobs=None):
    """Separate a clip into spectral sources and detect activation events.

    Returns
    -------
    (NmfModel, KSelectionReport or None, EventReport)
    """
    cfg = cfg or AudioConfig()
    sr = clip.sample_rate
    sgram = mel_spectrogram(clip, cfg.bands, _samples(cfg.window_s, sr), _samples(cfg.hop_s, sr))
    x = sgram.magnitude
    if not np.any(x > 0):
        report = EventReport([], 0, _audio_config_echo(cfg), "s")
        return None, None, report
    selection = None
    k = cfg.k
    if k is None:
        hi = min(cfg.k_range[1], *x.shape)
        selection = select_k(x, (cfg.k_range[0], hi), replace(cfg.selection_nmf, loss="kl"),
                             cfg.perturb, cfg.rule, n_jobs)
        if not selection.admissible:
            raise RankSelectionError("no admissible number of audio sources")
        k = selection.selected_k
    model = nmf_solve(x, replace(cfg.nmf, k=int(k), loss="kl", seed=cfg.perturb.master_seed))
    # unit-peak spectral signatures, scale moved into the activations
    peaks = model.w.max(axis=0)
    traces = model.h * peaks[:, None]
    report = score_activations(traces, cfg.threshold_sigma, cfg.min_run,
                               step_time=sgram.hop, step_span=sgram.window, time_unit="s")
    sources = []
    for s in range(model.k):
        band = int(np.argmax(model.w[:, s]))
        freq = float(sgram.band_centers[band])
        sources.append({"source": s, "peak_band": band, "peak_hz": freq,
                        "label": _label(freq, cfg.band_labels)})
    for ev in report.events:
        ev.label = sources[ev.source]["label"]
    report.sources = sources
    report.config = _audio_config_echo(cfg)
    return model, selection, report


def _audio_config_echo(cfg):
    d = asdict(cfg)
    d["band_labels"] = [list(b) for b in cfg.band_labels]
    d["k_range"] = list(cfg.k_range)
    return d


@dataclass(frozen=True)
class VideoConfig:
    """Video pipeline settings.

    ``ranks=None`` selects Tucker ranks per mode with NMFk over
    ``1..max_rank`` (capped by each mode's extent); ``cpd_rank=None``
    selects the CPD rank with NMFk on the core's largest unfolding.
    """

    window: int = 32
    hop: int = 16
    channels: str = "block"
    grid: int = 4
    ranks: tuple = None
    max_rank: int = 4
    cpd_rank: int = None
    ntf: NtfConfig = NtfConfig(max_iters=500)
    selection_nmf: NmfConfig = REPLICA_NMF
    perturb: PerturbConfig = PerturbConfig()
    rule: SelectionRule = SelectionRule()
    threshold_sigma: float = 3.0
    min_run: int = 1


def video_pipeline(video, cfg=None, n_jobs=None):
    """Detect time-localized anomalies in a ``(t, x, y[, z])`` video tensor.

    Returns
    -------
    (TuckerModel, CpdModel, EventReport)
        Event indices are DFT-window indices; ``start_time``/``end_time``
        are frame numbers.
    """
    cfg = cfg or VideoConfig()
    if not isinstance(video, SpatioTemporalTensor):
        video = SpatioTemporalTensor.from_array(video)
    sgram = temporal_dft_tensor(video, cfg.window, cfg.hop, cfg.channels, cfg.grid)
    scale = sgram.max()
    if scale == 0:
        return None, None, EventReport([], 0, _video_config_echo(cfg), "frame")
    sgram = sgram / scale
    ntf_cfg = replace(cfg.ntf, seed=cfg.perturb.master_seed)

    ranks = cfg.ranks
    rank_reports = []
    if ranks is None:
        ranges = []
        for n in range(sgram.ndim):
            m = unfold(sgram, n)
            ranges.append((1, max(1, min(cfg.max_rank, *m.shape))))
        sel = select_tensor_ranks(sgram, ranges, cfg.selection_nmf, cfg.perturb, cfg.rule, n_jobs)
        ranks, rank_reports = sel.ranks, sel.reports
    tucker = ntucker_solve(sgram, ranks, ntf_cfg)

    core = tucker.core
    cpd_rank = cfg.cpd_rank
    if cpd_rank is None:
        mode = int(np.argmax([unfold(core, n).shape[1] for n in range(core.ndim)]))
        m = unfold(core, mode)
        if min(m.shape) == 1:
            cpd_rank = 1
        else:
            rep = select_k(m, (1, min(m.shape)), cfg.selection_nmf, cfg.perturb, cfg.rule, n_jobs)
            cpd_rank = rep.selected_k or 1
    cpd = ncpd_solve(core, cpd_rank, ntf_cfg)

    freq_sig = tucker.factors[0] @ cpd.factors[0]
    time_sig = tucker.factors[1] @ cpd.factors[1]
    chan_sig = tucker.factors[2] @ cpd.factors[2]
    weights = freq_sig.max(axis=0) * chan_sig.max(axis=0)
    traces = (time_sig * weights).T
    report = score_activations(traces, cfg.threshold_sigma, cfg.min_run,
                               step_time=cfg.hop, step_span=cfg.window, time_unit="frame")
    for ev in report.events:
        ev.end_time -= 1  # last frame of the window, inclusive
    report.sources = [
        {"source": s,
         "peak_frequency_bin": int(np.argmax(freq_sig[:, s])),
         "cycles_per_frame": float(np.argmax(freq_sig[:, s]) / cfg.window),
         "peak_channel": int(np.argmax(chan_sig[:, s]))}
        for s in range(cpd.rank)
    ]
    report.config = _video_config_echo(cfg)
    report.config["tucker_ranks"] = list(ranks)
    report.config["cpd_rank"] = int(cpd_rank)
    report.config["rank_selection"] = [r.to_dict() for r in rank_reports]
    return tucker, cpd, report


def _video_config_echo(cfg):
    d = asdict(cfg)
    d["ranks"] = None if cfg.ranks is None else list(cfg.ranks)
    return d
