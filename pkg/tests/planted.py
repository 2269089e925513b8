"""Synthetic planted-model generators shared by the test modules."""

import numpy as np

from latentfire.tensor import multi_mode_product, unfold


def sparse_factor(rng, rows, cols, density=0.5):
    """Uniform entries on a random support; every column keeps a nonzero entry."""
    f = rng.uniform(size=(rows, cols)) * (rng.uniform(size=(rows, cols)) < density)
    for j in range(cols):
        if not f[:, j].any():
            f[rng.integers(rows), j] = rng.uniform(0.5, 1.0)
    return f


def planted_nmf(seed, k, shape=(100, 200), density=0.5):
    rng = np.random.default_rng(seed)
    w = sparse_factor(rng, shape[0], k, density)
    h = sparse_factor(rng, k, shape[1], density)
    return w @ h, w, h


def separable(m):
    """True when every row of ``m`` owns a column where it is the only nonzero."""
    nz = np.asarray(m) > 0
    pure = nz & (nz.sum(axis=0) == 1)[None, :]
    return bool(pure.any(axis=1).all())


def planted_tucker(seed, ranks=(2, 3, 2), shape=(20, 24, 20), density=0.5):
    """Non-negative Tucker tensor whose mode-n unfoldings all have unique NMFs.

    Core and factors are sparse and redrawn until every factor and every
    core unfolding is separable (each component has an anchor entry), which
    makes the NMF of every unfolding essentially unique.
    """
    rng = np.random.default_rng(seed)
    while True:
        core = rng.uniform(0.5, 1.0, size=ranks) * (rng.uniform(size=ranks) < density)
        if all(separable(unfold(core, n)) for n in range(len(ranks))):
            break
    factors = []
    for n, r in zip(shape, ranks):
        f = sparse_factor(rng, n, r, density)
        while not separable(f.T):
            f = sparse_factor(rng, n, r, density)
        factors.append(f)
    return multi_mode_product(core, factors), core, factors


def spike_tensor(seed, t=100, space=(8, 8, 4), snr_db=20.0, width=2.0):
    """A single time feature (low baseline plus a Gaussian bump) times a
    random spatial map, with additive noise at ``snr_db``. Returns the
    non-negative tensor and the planted peak frame."""
    rng = np.random.default_rng(seed)
    peak = int(rng.integers(5, t - 5))
    time = 0.1 + np.exp(-0.5 * ((np.arange(t) - peak) / width) ** 2)
    space_map = rng.uniform(0.2, 1.0, size=space)
    signal = time[:, None, None, None] * space_map[None]
    sigma = np.sqrt(np.mean(signal ** 2) / 10 ** (snr_db / 10))
    noisy = np.abs(signal + rng.normal(0.0, sigma, size=signal.shape))
    return noisy, peak


def tone_burst(seed, sr=16000, duration=10.0, freq=1000.0, span=(2.0, 3.0), noise=0.05,
               amp=0.3):
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * sr)) / sr
    x = noise * rng.uniform(-1, 1, t.size)
    x += amp * np.sin(2 * np.pi * freq * t) * ((t >= span[0]) & (t < span[1]))
    return np.clip(x, -1, 1), sr
