import numpy as np
import pytest

from latentfire import oracles
from latentfire.errors import DomainError, ParameterError
from latentfire.frontend import (AudioClip, band_of, channelize, hann, mel_filterbank,
                                 mel_spectrogram, stft_magnitude, temporal_dft_tensor)

SR = 16000


def test_audio_clip_validation():
    with pytest.raises(DomainError):
        AudioClip(np.array([0.0, 1.5]), SR)
    with pytest.raises(DomainError):
        AudioClip(np.array([]), SR)
    with pytest.raises(ParameterError):
        AudioClip(np.zeros(4), 0)
    assert AudioClip(np.zeros(SR), SR).duration == 1.0


def test_stft_zero_and_shape():
    sgram = stft_magnitude(AudioClip(np.zeros(1000), SR), window_len=400, hop=160)
    assert sgram.magnitude.shape == (201, (1000 - 400) // 160 + 1)
    assert not sgram.magnitude.any()
    with pytest.raises(ParameterError):
        stft_magnitude(AudioClip(np.zeros(100), SR), window_len=400)


def test_bin_aligned_sine():
    n, k = 400, 25
    t = np.arange(4000) / SR
    clip = AudioClip(0.5 * np.sin(2 * np.pi * k * SR / n * t), SR)
    mag = stft_magnitude(clip, window_len=n, hop=160).magnitude
    assert (mag.argmax(axis=0) == k).all()
    peak = mag[k]
    # a Hann window spreads a bin-aligned tone onto k +- 1 at exactly half height
    np.testing.assert_allclose(mag[k - 1], peak / 2, rtol=1e-9)
    np.testing.assert_allclose(mag[k + 1], peak / 2, rtol=1e-9)
    rest = np.delete(mag, [k - 1, k, k + 1], axis=0)
    assert (rest * 10 <= peak).all()


def test_parseval_per_frame():
    rng = np.random.default_rng(0)
    n = 400
    x = rng.uniform(-1, 1, 2000)
    sgram = stft_magnitude(AudioClip(x, SR), window_len=n, hop=160).magnitude
    frame = x[:n] * hann(n)
    col = sgram[:, 0] ** 2
    spectral = (col[0] + col[-1] + 2 * col[1:-1].sum()) / n
    assert spectral == pytest.approx(np.sum(frame ** 2), rel=1e-6)


def test_stft_linearity():
    x = np.random.default_rng(1).uniform(-0.4, 0.4, 3000)
    a = stft_magnitude(AudioClip(x, SR)).magnitude
    b = stft_magnitude(AudioClip(2 * x, SR)).magnitude
    np.testing.assert_allclose(b, 2 * a, rtol=1e-9)


def test_dft_kernel_against_oracle():
    rng = np.random.default_rng(2)
    for n in (2, 7, 16, 33, 64):
        x = rng.uniform(size=n)
        np.testing.assert_allclose(np.abs(np.fft.rfft(x)), oracles.dft_magnitude(x),
                                   atol=1e-10)


def test_hann_periodic():
    w = hann(8)
    assert w[0] == 0 and w[4] == pytest.approx(1.0)
    np.testing.assert_allclose(w[1:4], w[7:4:-1])


def test_mel_filterbank_partition():
    fb, edges = mel_filterbank(40, 512, SR)
    assert fb.shape == (40, 257) and (fb >= 0).all()
    freqs = np.fft.rfftfreq(512, 1 / SR)
    inside = (freqs >= edges[1]) & (freqs <= edges[-2])
    np.testing.assert_allclose(fb[:, inside].sum(axis=0), 1.0, atol=1e-12)
    assert np.all(np.diff(edges) > 0)
    with pytest.raises(ParameterError):
        mel_filterbank(1, 512, SR)


def test_mel_tone_lands_in_its_band():
    t = np.arange(SR) / SR
    sgram = mel_spectrogram(AudioClip(0.5 * np.sin(2 * np.pi * 440 * t), SR))
    assert sgram.magnitude.shape[0] == 64
    assert int(sgram.magnitude.mean(axis=1).argmax()) == band_of(440, sgram.band_centers)
    zero = mel_spectrogram(AudioClip(np.zeros(SR), SR))
    assert not zero.magnitude.any()


def test_channelize_modes():
    v = np.random.default_rng(3).uniform(size=(5, 8, 8, 2))
    assert channelize(v, "full").shape == (5, 1)
    assert channelize(v, "pixel").shape == (5, 128)
    blocks = channelize(v, "block", grid=4)
    assert blocks.shape == (5, 16)
    np.testing.assert_allclose(blocks[:, 0], v[:, :2, :2, :].reshape(5, -1).mean(axis=1))
    with pytest.raises(ParameterError):
        channelize(v, "color")
    with pytest.raises(ParameterError):
        channelize(v, "block", grid=9)


def test_temporal_dft_constant_and_flicker():
    const = np.full((64, 4, 4), 0.5)
    sgram = temporal_dft_tensor(const, window=32, hop=16, channels="full")
    assert sgram.shape == (17, 3, 1)
    assert sgram[1:].max() < 1e-12 and sgram[0].min() > 0
    flick = np.zeros((64, 4, 4))
    flick[::4] = 1.0
    sgram = temporal_dft_tensor(flick, window=32, hop=16, channels="full")
    assert (sgram[1:].argmax(axis=0) + 1 == 32 // 4).all()
    assert (sgram >= 0).all()


def test_temporal_dft_matches_oracle():
    v = np.random.default_rng(4).uniform(size=(40, 4, 4))
    sgram = temporal_dft_tensor(v, window=16, hop=8, channels="block", grid=2)
    series = channelize(v, "block", 2)
    for w in range(sgram.shape[1]):
        for c in range(sgram.shape[2]):
            np.testing.assert_allclose(sgram[:, w, c],
                                       oracles.dft_magnitude(series[w * 8:w * 8 + 16, c]),
                                       atol=1e-10)


def test_temporal_dft_errors():
    with pytest.raises(ParameterError):
        temporal_dft_tensor(np.ones((10, 4, 4)), window=32)
    with pytest.raises(ParameterError):
        temporal_dft_tensor(np.ones((40, 4, 4)), window=1)
