"""
Dense tensor algebra used by every solver.

Tensors and matrices are plain ``numpy.ndarray`` objects of dtype float64.
Mode-n unfolding places mode ``n`` on the rows and enumerates the remaining
indices, in their original order, row-major (last index fastest), so that
``unfold`` and ``fold`` are pure ``moveaxis``/``reshape`` compositions.
"""

import math

import numpy as np

from .errors import DimensionError, DomainError, UndefinedInputError

MAX_NDIM = 8


def as_tensor(x, nonneg=True, name="x"):
    """Return ``x`` as a C-contiguous float64 array, validating it.

    Parameters
    ----------
    x : array_like
    nonneg : bool
        Reject negative entries with :class:`DomainError`. Signed input is
        only needed for spectrogram intermediates.
    name : str
        Used in error messages.
    """
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 0 or arr.ndim > MAX_NDIM:
        raise DimensionError(f"{name} must have 1..{MAX_NDIM} dimensions, got {arr.ndim}")
    if arr.size == 0:
        raise DimensionError(f"{name} has a zero extent: shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    if nonneg and np.any(arr < 0):
        raise DomainError(f"{name} has negative entries")
    return arr


def _check_mode(x, mode):
    if not (0 <= mode < x.ndim):
        raise DimensionError(f"mode {mode} out of range for a {x.ndim}-way tensor")


def unfold(x, mode):
    """Mode-``mode`` matricization of ``x``.

    Returns a ``(shape[mode], prod(other extents))`` matrix.

    >>> x = np.arange(8.0).reshape(2, 2, 2)
    >>> unfold(x, 1)
    array([[0., 1., 4., 5.],
           [2., 3., 6., 7.]])
    """
    x = np.asarray(x)
    _check_mode(x, mode)
    return np.moveaxis(x, mode, 0).reshape(x.shape[mode], -1)


def fold(m, mode, shape):
    """Inverse of :func:`unfold` for a target ``shape``."""
    m = np.asarray(m)
    shape = tuple(int(s) for s in shape)
    if not (0 <= mode < len(shape)):
        raise DimensionError(f"mode {mode} out of range for shape {shape}")
    rest = shape[:mode] + shape[mode + 1:]
    if m.ndim != 2 or m.shape != (shape[mode], math.prod(rest)):
        raise DimensionError(f"matrix of shape {m.shape} cannot fold to {shape} along mode {mode}")
    return np.moveaxis(m.reshape((shape[mode],) + rest), 0, mode)


def mode_n_product(x, m, mode):
    """Multiply tensor ``x`` by matrix ``m`` along ``mode``.

    The extent at ``mode`` becomes ``m.shape[0]``.
    """
    x = np.asarray(x)
    m = np.asarray(m)
    _check_mode(x, mode)
    if m.ndim != 2 or m.shape[1] != x.shape[mode]:
        raise DimensionError(
            f"matrix {m.shape} incompatible with extent {x.shape[mode]} at mode {mode}")
    return np.moveaxis(np.tensordot(m, x, axes=(1, mode)), 0, mode)


def multi_mode_product(x, matrices, skip=None, transpose=False):
    """Apply :func:`mode_n_product` for every mode, optionally skipping one."""
    out = x
    for n, m in enumerate(matrices):
        if n == skip:
            continue
        out = mode_n_product(out, m.T if transpose else m, n)
    return out


def khatri_rao(a, b):
    """Column-wise Kronecker product; column ``p`` is ``kron(a[:, p], b[:, p])``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DimensionError(f"khatri_rao needs equal column counts, got {a.shape} and {b.shape}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def kl_divergence(x, y):
    """Generalized Kullback-Leibler divergence ``sum(x log(x/y) - x + y)``.

    Uses ``0 log 0 = 0``. Returns ``math.inf`` when some ``y`` entry is zero
    where ``x`` is positive.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {y.shape}")
    pos = x > 0
    if np.any(pos & (y <= 0)):
        return math.inf
    return float(_kl_sum(x, y, pos))


def _kl_sum(x, y, pos=None):
    # log x - log y rather than log(x / y): the ratio underflows for tiny x
    # numpy reductions are pairwise, which keeps long sums stable
    if pos is None or pos.all():
        t = x * (np.log(x) - np.log(y))
    else:
        t = np.zeros_like(x)
        lx = np.log(x, where=pos, out=np.zeros_like(x))
        ly = np.log(y, where=pos, out=np.zeros_like(y))
        np.multiply(x, lx - ly, out=t, where=pos)
    return np.sum(t - x + y)


def squared_error(x, y):
    """``||x - y||_F^2``."""
    d = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.sum(d * d))


def relative_error(x, x_hat):
    """``||x - x_hat||_F / ||x||_F``."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.broadcast_to(np.asarray(x_hat, dtype=np.float64), x.shape)
    nx = np.linalg.norm(x.ravel())
    if nx == 0:
        raise UndefinedInputError("relative error undefined for a zero-norm reference")
    return float(np.linalg.norm((x - x_hat).ravel()) / nx)
