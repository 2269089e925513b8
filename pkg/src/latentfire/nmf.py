"""
Non-negative matrix factorization ``X ~ W H`` by multiplicative updates.

Two objectives are supported: the generalized Kullback-Leibler divergence
(default) and the squared Frobenius error. Both use the Lee-Seung update
rules, which keep the factors non-negative and never increase the objective.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, DomainError, ParameterError
from .tensor import _kl_sum, as_tensor

EPS = 1e-12
LOSSES = ("kl", "frobenius")
INITS = ("uniform-scaled", "nndsvdar")


@dataclass(frozen=True)
class NmfConfig:
    """Solver settings.

    ``obj_stride`` evaluates the objective (and the stopping rule) every
    ``obj_stride`` iterations; the default of 1 tracks every step.

    ``init`` is ``"uniform-scaled"`` (seeded uniform draws) or
    ``"nndsvdar"`` (non-negative double SVD with zeros filled by small
    seeded random values), which avoids many poor local minima of the
    multiplicative updates.
    """

    k: int
    loss: str = "kl"
    max_iters: int = 1000
    tol: float = 1e-6
    seed: int = 0
    init: str = "uniform-scaled"
    obj_stride: int = 1

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k}")
        if self.loss not in LOSSES:
            raise ParameterError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ParameterError("tol must be > 0")
        if self.init not in INITS:
            raise ParameterError(f"init must be one of {INITS}, got {self.init!r}")
        if self.obj_stride < 1:
            raise ParameterError("obj_stride must be >= 1")


@dataclass
class NmfModel:
    """Factor pair with its optimisation history.

    ``objective_trace[0]`` is the objective at initialization; later entries
    follow each evaluated iteration.
    """

    w: np.ndarray
    h: np.ndarray
    objective_trace: list = field(default_factory=list)
    iters_run: int = 0
    converged: bool = False

    @property
    def k(self):
        return self.w.shape[1]

    def reconstruct(self):
        return self.w @ self.h


def _check_input(x, k):
    x = as_tensor(x, nonneg=True)
    if x.ndim != 2:
        raise DimensionError(f"NMF needs a matrix, got {x.ndim} dimensions")
    if k > min(x.shape):
        raise DimensionError(f"k={k} exceeds min{x.shape}")
    return x


def _nndsvd(x, k):
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    w = np.zeros((x.shape[0], k))
    h = np.zeros((k, x.shape[1]))
    w[:, 0] = np.sqrt(s[0]) * np.abs(u[:, 0])
    h[0] = np.sqrt(s[0]) * np.abs(vt[0])
    for j in range(1, k):
        a, b = u[:, j], vt[j]
        ap, bp = np.maximum(a, 0), np.maximum(b, 0)
        an, bn = np.maximum(-a, 0), np.maximum(-b, 0)
        npos = np.linalg.norm(ap) * np.linalg.norm(bp)
        nneg = np.linalg.norm(an) * np.linalg.norm(bn)
        # keep the sign pattern carrying more mass
        a, b, sigma = (ap, bp, npos) if npos >= nneg else (an, bn, nneg)
        if sigma == 0:
            continue
        scale = np.sqrt(s[j] * sigma)
        w[:, j] = scale * a / np.linalg.norm(a)
        h[j] = scale * b / np.linalg.norm(b)
    return w, h


def nmf_init(x, cfg):
    """Seeded initial factors.

    ``"uniform-scaled"`` draws entries from U(0, 1) scaled by
    ``sqrt(mean(x)/k)``. ``"nndsvdar"`` starts from the non-negative parts
    of the leading singular triplets and fills zeros with
    ``|N(0, 1)| * mean(x) / 100``.
    """
    x = _check_input(x, cfg.k)
    mean = x.mean()
    if mean <= 0:
        raise DomainError("cannot factorize an all-zero matrix")
    rng = np.random.default_rng(cfg.seed)
    if cfg.init == "nndsvdar":
        w, h = _nndsvd(x, cfg.k)
        w[w < EPS] = np.abs(rng.standard_normal(np.count_nonzero(w < EPS))) * mean / 100
        h[h < EPS] = np.abs(rng.standard_normal(np.count_nonzero(h < EPS))) * mean / 100
    else:
        scale = np.sqrt(mean / cfg.k)
        w = rng.uniform(size=(x.shape[0], cfg.k)) * scale
        h = rng.uniform(size=(cfg.k, x.shape[1])) * scale
    np.maximum(w, EPS, out=w)
    np.maximum(h, EPS, out=h)
    return NmfModel(w, h)


def objective(x, w, h, loss="kl"):
    """Objective value of a factor pair under ``loss``."""
    y = w @ h
    if loss == "kl":
        return float(_kl_sum(x, y, x > 0))
    d = x - y
    return float(np.sum(d * d))


def _kl_update(x, w, h):
    r = x / (w @ h + EPS)
    h *= (w.T @ r) / (w.sum(axis=0)[:, None] + EPS)
    np.maximum(h, EPS, out=h)
    r = x / (w @ h + EPS)
    w *= (r @ h.T) / (h.sum(axis=1)[None, :] + EPS)
    np.maximum(w, EPS, out=w)


def _frobenius_update(x, w, h):
    h *= (w.T @ x) / ((w.T @ w) @ h + EPS)
    np.maximum(h, EPS, out=h)
    w *= (x @ h.T) / (w @ (h @ h.T) + EPS)
    np.maximum(w, EPS, out=w)


_UPDATES = {"kl": _kl_update, "frobenius": _frobenius_update}


def _step(update, x, model):
    x = as_tensor(x, nonneg=True)
    w, h = model.w.copy(), model.h.copy()
    if x.shape != (w.shape[0], h.shape[1]) or w.shape[1] != h.shape[0]:
        raise DimensionError(f"factors {w.shape}, {h.shape} do not match x {x.shape}")
    update(x, w, h)
    return NmfModel(w, h, list(model.objective_trace), model.iters_run + 1, model.converged)


def mu_step_kl(x, model):
    """One KL multiplicative update (H first, then W). Returns a new model."""
    return _step(_kl_update, x, model)


def mu_step_frobenius(x, model):
    """One Frobenius multiplicative update (H first, then W). Returns a new model."""
    return _step(_frobenius_update, x, model)


def nmf_solve(x, cfg, model=None):
    """Factorize ``x`` until the relative objective change drops below ``cfg.tol``.

    Parameters
    ----------
    x : array_like, shape (M, N)
        Non-negative data.
    cfg : NmfConfig
    model : NmfModel, optional
        Warm start; by default :func:`nmf_init` is used.

    Returns
    -------
    NmfModel
        ``converged`` is True only when the tolerance test fired before
        ``cfg.max_iters`` ran out.
    """
    x = _check_input(x, cfg.k)
    if model is None:
        model = nmf_init(x, cfg)
    w, h = model.w.copy(), model.h.copy()
    update = _UPDATES[cfg.loss]
    prev = objective(x, w, h, cfg.loss)
    trace = [prev]
    converged = False
    it = 0
    while it < cfg.max_iters:
        update(x, w, h)
        it += 1
        if it % cfg.obj_stride and it != cfg.max_iters:
            continue
        cur = objective(x, w, h, cfg.loss)
        trace.append(cur)
        if abs(prev - cur) / max(prev, EPS) < cfg.tol:
            converged = True
            break
        prev = cur
    return NmfModel(w, h, trace, it, converged)


def with_k(cfg, k, seed=None):
    """Copy of ``cfg`` with a new latent dimension (and optionally seed)."""
    return replace(cfg, k=k, seed=cfg.seed if seed is None else seed)
