"""
Salient timestep extraction from spatiotemporal tensors.

A ``(t, x, y, z)`` tensor is unfolded along time into a ``(t, x*y*z)``
matrix and factorized with KL-NMF. Columns of ``W`` are latent time
features, rows of ``H`` reshape into 3-D space features, and each time
feature is tagged with the time index where it peaks.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateFactorError, DimensionError, DomainError, RankSelectionError
from .nmf import NmfConfig, nmf_solve
from .selection import select_k
from .tensor import as_tensor, relative_error, unfold

FLATNESS_RATIO = 1.5


@dataclass(frozen=True)
class SpatioTemporalTensor:
    """A non-negative 4-D ``(t, x, y, z)`` tensor with time on axis 0."""

    data: np.ndarray

    @classmethod
    def from_array(cls, arr, time_mode=0):
        """Move ``time_mode`` to the front and promote ``(t, x, y)`` to ``z = 1``."""
        arr = as_tensor(arr, nonneg=True)
        if arr.ndim not in (3, 4):
            raise DimensionError(f"expected (t, x, y) or (t, x, y, z), got {arr.ndim} dimensions")
        if not (0 <= time_mode < arr.ndim):
            raise DimensionError(f"time mode {time_mode} out of range")
        arr = np.moveaxis(arr, time_mode, 0)
        if arr.ndim == 3:
            arr = arr[..., None]
        if arr.shape[0] < 2:
            raise DimensionError("need at least 2 time steps")
        return cls(np.ascontiguousarray(arr))

    @property
    def n_time(self):
        return self.data.shape[0]

    @property
    def spatial_shape(self):
        return self.data.shape[1:]


@dataclass
class SalientReport:
    k: int
    time_features: np.ndarray
    space_features: np.ndarray
    salient_timesteps: list
    residual_norm: float
    flat_features: list = field(default_factory=list)
    model: object = None
    selection: object = None


def select_salient(w):
    """Row index of the maximum of every column of ``w`` (lowest index on ties)."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise DimensionError("expected a (t, K) matrix")
    if np.any(w < 0):
        raise DomainError("time features must be non-negative")
    if np.any(w.max(axis=0) <= 0):
        raise DegenerateFactorError("a time feature is identically zero")
    return [int(i) for i in np.argmax(w, axis=0)]


def flat_columns(w, ratio=FLATNESS_RATIO):
    """Columns whose peak is less than ``ratio`` times their mean."""
    w = np.asarray(w, dtype=np.float64)
    return [s for s in range(w.shape[1]) if w[:, s].max() < ratio * w[:, s].mean()]


def ntd1_decompose(x, k="auto", cfg=None, k_range=None, perturb_cfg=None, rule=None,
                   n_jobs=None):
    """Time-unfold ``x``, factorize with KL-NMF and pick salient timesteps.

    Parameters
    ----------
    x : SpatioTemporalTensor or array_like
        Arrays are promoted with ``time_mode=0``.
    k : int or "auto"
        ``"auto"`` runs :func:`select_k` over ``k_range``.
    cfg : NmfConfig, optional
        The loss is forced to KL.
    """
    if not isinstance(x, SpatioTemporalTensor):
        x = SpatioTemporalTensor.from_array(x)
    a = unfold(x.data, 0)
    base = replace(cfg or NmfConfig(k=1), loss="kl")
    selection = None
    if k == "auto":
        if k_range is None:
            k_range = (1, min(8, *a.shape))
        selection = select_k(a, k_range, base, perturb_cfg, rule, n_jobs)
        if not selection.admissible:
            raise RankSelectionError("no admissible latent dimension for the time unfolding")
        k = selection.selected_k
    model = nmf_solve(a, replace(base, k=int(k)))
    w, h = model.w, model.h
    flats = flat_columns(w)
    if flats:
        warnings.warn(f"time features {flats} are nearly flat; salient steps are not well defined",
                      stacklevel=2)
    return SalientReport(
        k=int(k),
        time_features=w,
        space_features=h.reshape((int(k),) + x.spatial_shape),
        salient_timesteps=select_salient(w),
        residual_norm=relative_error(a, w @ h),
        flat_features=flats,
        model=model,
        selection=selection,
    )
