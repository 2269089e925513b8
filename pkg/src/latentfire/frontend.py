"""
Signal transforms feeding the pipelines: short-time spectra, mel
spectrograms and per-channel temporal DFT magnitudes of video tensors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .salient import SpatioTemporalTensor

DEFAULT_WINDOW_S = 0.025
DEFAULT_HOP_S = 0.010
DEFAULT_BANDS = 64


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise DomainError("an audio clip needs a non-empty 1-D sample array")
        if not self.sample_rate > 0:
            raise ParameterError("sample_rate must be positive")
        if np.any(np.abs(samples) > 1):
            raise DomainError("samples must lie in [-1, 1]")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self):
        return self.samples.size / self.sample_rate


@dataclass
class Spectrogram:
    """Non-negative ``(bands, frames)`` magnitudes.

    Frame ``i`` covers ``[i * hop, i * hop + window]`` seconds.
    """

    magnitude: np.ndarray
    band_centers: np.ndarray
    hop: float
    window: float

    @property
    def n_frames(self):
        return self.magnitude.shape[1]

    def frame_start(self, i):
        return i * self.hop

    def frame_end(self, i):
        return i * self.hop + self.window


def hann(n):
    """Periodic Hann window (exact for bin-aligned sinusoids)."""
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


def _frames(samples, window_len, hop):
    if window_len > samples.size:
        raise ParameterError(f"window of {window_len} samples exceeds clip of {samples.size}")
    if hop < 1 or window_len < 1:
        raise ParameterError("window and hop must be at least one sample")
    view = np.lib.stride_tricks.sliding_window_view(samples, window_len)
    return view[::hop]


def _samples(seconds, rate):
    return max(1, int(round(seconds * rate)))


def stft_magnitude(clip, window_len=None, hop=None):
    """Magnitude of Hann-windowed DFT frames.

    Returns a ``(window_len // 2 + 1, n_frames)`` spectrogram with
    ``n_frames = (len - window_len) // hop + 1``.
    """
    sr = clip.sample_rate
    window_len = window_len or _samples(DEFAULT_WINDOW_S, sr)
    hop = hop or _samples(DEFAULT_HOP_S, sr)
    frames = _frames(clip.samples, int(window_len), int(hop))
    sgram = np.abs(np.fft.rfft(frames * hann(window_len), axis=1)).T
    freqs = np.fft.rfftfreq(window_len, 1.0 / sr)
    return Spectrogram(np.ascontiguousarray(sgram), freqs, hop / sr, window_len / sr)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(bands, n_fft, sample_rate, fmin=0.0, fmax=None):
    """Triangular HTK-mel filters, ``(bands, n_fft // 2 + 1)``.

    Returns the filter matrix and the ``bands + 2`` edge frequencies (Hz).
    Adjacent triangles share edges, so between the first and last centre
    the filters sum to one at every frequency.
    """
    if bands < 2:
        raise ParameterError("need at least 2 mel bands")
    fmax = sample_rate / 2 if fmax is None else fmax
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), bands + 2))
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lo) / (mid - lo)
    falling = (hi - freqs[None, :]) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling)), edges


def mel_spectrogram(clip, bands=DEFAULT_BANDS, window_len=None, hop=None):
    """Mel-band energies: the filterbank applied to STFT power."""
    stft = stft_magnitude(clip, window_len, hop)
    n_fft = int(round(stft.window * clip.sample_rate))
    fb, edges = mel_filterbank(bands, n_fft, clip.sample_rate)
    mel = fb @ (stft.magnitude ** 2)
    return Spectrogram(mel, edges[1:-1], stft.hop, stft.window)


def band_of(freq, centers):
    """Index of the band whose centre is closest to ``freq`` on the mel scale."""
    return int(np.argmin(np.abs(hz_to_mel(centers) - hz_to_mel(freq))))


CHANNEL_MODES = ("block", "full", "pixel")


def channelize(video, mode="block", grid=4):
    """Reduce the spatial extents of a ``(t, x, y, z)`` tensor to channels.

    ``"block"`` averages each cell of a ``grid x grid`` partition of the
    ``(x, y)`` plane (and all of ``z``), ``"full"`` averages the whole frame,
    ``"pixel"`` keeps every voxel. Returns a ``(t, channels)`` array.
    """
    if not isinstance(video, SpatioTemporalTensor):
        video = SpatioTemporalTensor.from_array(video)
    data = video.data
    t, nx, ny, _ = data.shape
    if mode == "full":
        return data.reshape(t, -1).mean(axis=1, keepdims=True)
    if mode == "pixel":
        return data.reshape(t, -1).copy()
    if mode != "block":
        raise ParameterError(f"channel mode must be one of {CHANNEL_MODES}")
    if grid < 1 or grid > min(nx, ny):
        raise ParameterError(f"grid {grid} does not fit a {nx}x{ny} frame")
    xs = np.array_split(np.arange(nx), grid)
    ys = np.array_split(np.arange(ny), grid)
    cols = [data[:, bx[0]:bx[-1] + 1, by[0]:by[-1] + 1, :].reshape(t, -1).mean(axis=1)
            for bx in xs for by in ys]
    return np.stack(cols, axis=1)


def temporal_dft_tensor(video, window=32, hop=16, channels="block", grid=4):
    """Sliding-window DFT magnitudes along time for every channel.

    Returns a non-negative ``(window // 2 + 1, n_windows, n_channels)``
    tensor indexed by (frequency bin, window index, channel). Bin ``f``
    corresponds to ``f / window`` cycles per frame.
    """
    series = channelize(video, channels, grid)
    t = series.shape[0]
    if window < 2 or hop < 1:
        raise ParameterError("window must be >= 2 frames and hop >= 1")
    if t < window:
        raise ParameterError(f"{t} frames is fewer than one {window}-frame window")
    view = np.lib.stride_tricks.sliding_window_view(series, window, axis=0)[::hop]
    # view: (n_windows, channels, window)
    mags = np.abs(np.fft.rfft(view, axis=2))
    return np.ascontiguousarray(np.transpose(mags, (2, 0, 1)))
