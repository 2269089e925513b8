"""
Brute-force reference implementations written as explicit index loops.

They share no code with the vectorized routines and exist to cross-check
them (tests and the ``oracle`` CLI subcommand). Only use them on small
inputs.
"""

import itertools
import math

import numpy as np


def _index_rest(idx, mode):
    return idx[:mode] + idx[mode + 1:]


def _linear(idx, shape):
    # row-major position of idx within shape
    pos = 0
    for i, n in zip(idx, shape):
        pos = pos * n + i
    return pos


def unfold(x, mode):
    x = np.asarray(x, dtype=np.float64)
    rest = _index_rest(x.shape, mode)
    out = np.zeros((x.shape[mode], math.prod(rest)))
    for idx in itertools.product(*(range(n) for n in x.shape)):
        out[idx[mode], _linear(_index_rest(idx, mode), rest)] = x[idx]
    return out


def fold(m, mode, shape):
    shape = tuple(shape)
    rest = _index_rest(shape, mode)
    out = np.zeros(shape)
    for idx in itertools.product(*(range(n) for n in shape)):
        out[idx] = m[idx[mode], _linear(_index_rest(idx, mode), rest)]
    return out


def mode_n_product(x, m, mode):
    x = np.asarray(x, dtype=np.float64)
    shape = list(x.shape)
    shape[mode] = m.shape[0]
    out = np.zeros(shape)
    for idx in itertools.product(*(range(n) for n in shape)):
        s = 0.0
        for j in range(x.shape[mode]):
            src = idx[:mode] + (j,) + idx[mode + 1:]
            s += m[idx[mode], j] * x[src]
        out[idx] = s
    return out


def khatri_rao(a, b):
    out = np.zeros((a.shape[0] * b.shape[0], a.shape[1]))
    for p in range(a.shape[1]):
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                out[i * b.shape[0] + j, p] = a[i, p] * b[j, p]
    return out


def kl_divergence(x, y):
    total = 0.0
    for xv, yv in zip(np.ravel(x), np.ravel(y)):
        xv, yv = float(xv), float(yv)
        if xv > 0:
            if yv <= 0:
                return math.inf
            total += xv * math.log(xv / yv)
        total += yv - xv
    return total


def relative_error(x, y):
    num = sum((float(a) - float(b)) ** 2 for a, b in zip(np.ravel(x), np.ravel(y)))
    den = sum(float(a) ** 2 for a in np.ravel(x))
    return math.sqrt(num / den)


def cpd_reconstruct(factors):
    shape = tuple(f.shape[0] for f in factors)
    rank = factors[0].shape[1]
    out = np.zeros(shape)
    for idx in itertools.product(*(range(n) for n in shape)):
        s = 0.0
        for r in range(rank):
            term = 1.0
            for f, i in zip(factors, idx):
                term *= f[i, r]
            s += term
        out[idx] = s
    return out


def tucker_reconstruct(core, factors):
    shape = tuple(f.shape[0] for f in factors)
    out = np.zeros(shape)
    for idx in itertools.product(*(range(n) for n in shape)):
        s = 0.0
        for c in itertools.product(*(range(r) for r in core.shape)):
            term = core[c]
            for f, i, j in zip(factors, idx, c):
                term *= f[i, j]
            s += term
        out[idx] = s
    return out


def tt_reconstruct(cores):
    shape = tuple(c.shape[1] for c in cores)
    out = np.zeros(shape)
    for idx in itertools.product(*(range(n) for n in shape)):
        v = np.ones((1, 1))
        for core, i in zip(cores, idx):
            slab = core[:, i, :]
            nxt = np.zeros((1, slab.shape[1]))
            for b in range(slab.shape[1]):
                for a in range(slab.shape[0]):
                    nxt[0, b] += v[0, a] * slab[a, b]
            v = nxt
        out[idx] = v[0, 0]
    return out


def dft_magnitude(x):
    """``|sum_t x[t] exp(-2 pi i f t / n)|`` for ``f = 0..n//2``."""
    x = np.ravel(x)
    n = x.size
    out = np.zeros(n // 2 + 1)
    for f in range(n // 2 + 1):
        re = im = 0.0
        for t in range(n):
            ang = 2 * math.pi * f * t / n
            re += x[t] * math.cos(ang)
            im -= x[t] * math.sin(ang)
        out[f] = math.hypot(re, im)
    return out
