"""
Non-negative tensor decompositions: CPD, Tucker and tensor-train.

CPD and Tucker are fitted by multiplicative updates on the squared
Frobenius error, one factor at a time (and the core, for Tucker). The
tensor train is built left to right from successive NMFs of reshaped
remainders, so every core inherits the NMF engine's non-negativity.
"""

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionError, ParameterError
from .nmf import EPS, NmfConfig, nmf_solve
from .tensor import as_tensor, khatri_rao, mode_n_product, multi_mode_product, unfold


@dataclass(frozen=True)
class NtfConfig:
    """Settings shared by the tensor solvers.

    ``inner_iters`` repeats the multiplicative update of one block (factor or
    core) while the other blocks are frozen; the block's Gram terms are
    computed once per sweep, so repeats are cheap and speed up convergence.

    ``polish_iters`` bounds a final L-BFGS-B refinement over all blocks
    jointly (non-negativity as bounds). MU stalls near the boundary of the
    feasible set on degenerate problems; the polish is accepted only when it
    lowers the objective. Set it to 0 for pure multiplicative updates.
    """

    max_iters: int = 1000
    tol: float = 1e-6
    seed: int = 0
    obj_stride: int = 1
    inner_iters: int = 10
    polish_iters: int = 2000
    loss: str = "frobenius"  # used by the tensor-train NMF stages only

    def __post_init__(self):
        if (self.max_iters < 1 or not self.tol > 0 or self.obj_stride < 1
                or self.inner_iters < 1 or self.polish_iters < 0):
            raise ParameterError("invalid solver settings")


@dataclass
class CpdModel:
    factors: list
    objective_trace: list = field(default_factory=list)
    iters_run: int = 0
    converged: bool = False

    @property
    def rank(self):
        return self.factors[0].shape[1]

    @property
    def shape(self):
        return tuple(f.shape[0] for f in self.factors)


@dataclass
class TuckerModel:
    core: np.ndarray
    factors: list
    objective_trace: list = field(default_factory=list)
    iters_run: int = 0
    converged: bool = False

    @property
    def ranks(self):
        return self.core.shape

    @property
    def shape(self):
        return tuple(f.shape[0] for f in self.factors)


@dataclass
class TtModel:
    """Cores ``G[i]`` of shape ``(r[i-1], n[i], r[i])`` with ``r[0] = r[d] = 1``.

    ``stages`` holds the NMF model fitted for each core.
    """

    cores: list
    stages: list = field(default_factory=list)

    @property
    def ranks(self):
        return tuple(c.shape[2] for c in self.cores[:-1])

    @property
    def shape(self):
        return tuple(c.shape[1] for c in self.cores)


def _check_ntf_input(x):
    x = as_tensor(x, nonneg=True)
    if x.ndim not in (3, 4):
        raise DimensionError(f"expected a 3-way or 4-way tensor, got {x.ndim} dimensions")
    return x


def _kr_except(factors, skip):
    return reduce(khatri_rao, [f for n, f in enumerate(factors) if n != skip])


def _polish(fg, blocks, maxiter, trace):
    """Joint bound-constrained refinement of ``blocks`` (modified in place).

    ``fg(blocks) -> (objective, list of gradients)``. Accepted iterates are
    appended to ``trace``; the result is kept only if it improves on
    ``trace[-1]``.
    """
    shapes = [b.shape for b in blocks]
    cuts = np.cumsum([b.size for b in blocks])[:-1]

    def unpack(v):
        return [part.reshape(shape) for part, shape in zip(np.split(v, cuts), shapes)]

    def fun(v):
        f, grads = fg(unpack(v))
        return f, np.concatenate([g.ravel() for g in grads])

    start = trace[-1]
    seen = []
    v0 = np.concatenate([b.ravel() for b in blocks])
    res = minimize(fun, v0, jac=True, method="L-BFGS-B", bounds=[(0, None)] * v0.size,
                   callback=lambda v: seen.append(fun(v)[0]),
                   options={"maxiter": maxiter, "ftol": 0.0, "gtol": 1e-14})
    final, _ = fun(res.x)
    if not final < start:
        return False
    best = start
    for f in seen:
        if f <= best:
            trace.append(float(f))
            best = f
    if final < best:
        trace.append(float(final))
    for b, new in zip(blocks, unpack(res.x)):
        b[...] = new
    return True


def cpd_reconstruct(model):
    """Dense sum of the model's rank-one terms."""
    factors = model.factors
    full = factors[0] @ _kr_except(factors, 0).T
    return full.reshape(model.shape)


def _cpd_objective(x, factors):
    d = x - cpd_reconstruct(CpdModel(factors))
    return float(np.sum(d * d))


def ncpd_solve(x, rank, cfg=None):
    """Non-negative CPD of rank ``rank`` by multiplicative updates.

    Each factor update solves the mode-n problem
    ``unfold(x, n) ~ A_n @ KR(other factors).T`` with the Frobenius MU rule;
    the Gram of the Khatri-Rao product is the Hadamard product of the other
    factors' Grams.
    """
    cfg = cfg or NtfConfig()
    x = _check_ntf_input(x)
    if int(rank) != rank or rank < 1:
        raise ParameterError(f"rank must be a positive integer, got {rank}")
    rng = np.random.default_rng(cfg.seed)
    scale = (x.mean() / rank) ** (1.0 / x.ndim) if x.mean() > 0 else 1.0
    factors = [np.maximum(rng.uniform(size=(n, rank)) * scale, EPS) for n in x.shape]
    unfoldings = [unfold(x, n) for n in range(x.ndim)]

    prev = _cpd_objective(x, factors)
    trace = [prev]
    converged = False
    it = 0
    while it < cfg.max_iters:
        for n in range(x.ndim):
            gram = reduce(np.multiply, [f.T @ f for m, f in enumerate(factors) if m != n])
            num = unfoldings[n] @ _kr_except(factors, n)
            a = factors[n]
            for _ in range(cfg.inner_iters):
                a *= num / (a @ gram + EPS)
                np.maximum(a, EPS, out=a)
        it += 1
        if it % cfg.obj_stride and it != cfg.max_iters:
            continue
        cur = _cpd_objective(x, factors)
        trace.append(cur)
        if abs(prev - cur) / max(prev, EPS) < cfg.tol:
            converged = True
            break
        prev = cur
    if cfg.polish_iters:
        def fg(blocks):
            resid = cpd_reconstruct(CpdModel(blocks)) - x
            grads = [2 * unfold(resid, n) @ _kr_except(blocks, n) for n in range(x.ndim)]
            return float(np.sum(resid * resid)), grads
        _polish(fg, factors, cfg.polish_iters, trace)
    return CpdModel(factors, trace, it, converged)


def tucker_reconstruct(model):
    """Core multiplied by each factor along its mode."""
    return multi_mode_product(model.core, model.factors)


def _tucker_objective(x, core, factors):
    d = x - multi_mode_product(core, factors)
    return float(np.sum(d * d))


def ntucker_solve(x, ranks, cfg=None, init="random"):
    """Non-negative Tucker decomposition with multilinear ranks ``ranks``.

    Parameters
    ----------
    x : array_like
        Non-negative 3-way or 4-way tensor.
    ranks : sequence of int
        Core extents, one per mode, each no larger than the matching extent.
    cfg : NtfConfig, optional
    init : {"random", "identity"}
        ``"identity"`` requires ``ranks == x.shape`` and starts from identity
        factors with the core equal to ``x``.
    """
    cfg = cfg or NtfConfig()
    x = _check_ntf_input(x)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != x.ndim:
        raise DimensionError(f"need {x.ndim} ranks, got {len(ranks)}")
    if any(r < 1 or r > n for r, n in zip(ranks, x.shape)):
        raise DimensionError(f"ranks {ranks} incompatible with shape {x.shape}")
    if init == "identity":
        if ranks != x.shape:
            raise DimensionError("identity init needs ranks equal to the tensor shape")
        factors = [np.eye(n) for n in x.shape]
        core = x.copy()
    elif init == "random":
        rng = np.random.default_rng(cfg.seed)
        mean = x.mean() if x.mean() > 0 else 1.0
        factors = [rng.uniform(size=(n, r)) for n, r in zip(x.shape, ranks)]
        core = rng.uniform(size=ranks)
        # match the mean of the initial reconstruction to the data
        core *= mean / multi_mode_product(core, factors).mean()
    else:
        raise ParameterError(f"unknown init {init!r}")
    for f in factors:
        np.maximum(f, EPS, out=f)
    np.maximum(core, EPS, out=core)
    unfoldings = [unfold(x, n) for n in range(x.ndim)]

    prev = _tucker_objective(x, core, factors)
    trace = [prev]
    converged = False
    it = 0
    while it < cfg.max_iters:
        for n in range(x.ndim):
            s = unfold(multi_mode_product(core, factors, skip=n), n)
            num, gram = unfoldings[n] @ s.T, s @ s.T
            a = factors[n]
            for _ in range(cfg.inner_iters):
                a *= num / (a @ gram + EPS)
                np.maximum(a, EPS, out=a)
            # unit columns; the scale moves into the core, reconstruction unchanged
            norms = np.linalg.norm(a, axis=0)
            a /= norms
            core = mode_n_product(core, np.diag(norms), n)
        num = multi_mode_product(x, factors, transpose=True)
        grams = [f.T @ f for f in factors]
        for _ in range(cfg.inner_iters):
            core *= num / (multi_mode_product(core, grams) + EPS)
            np.maximum(core, EPS, out=core)
        it += 1
        if it % cfg.obj_stride and it != cfg.max_iters:
            continue
        cur = _tucker_objective(x, core, factors)
        trace.append(cur)
        if abs(prev - cur) / max(prev, EPS) < cfg.tol:
            converged = True
            break
        prev = cur
    if cfg.polish_iters:
        def fg(blocks):
            g, fs = blocks[0], blocks[1:]
            resid = multi_mode_product(g, fs) - x
            grads = [2 * multi_mode_product(resid, fs, transpose=True)]
            for n in range(x.ndim):
                s = unfold(multi_mode_product(g, fs, skip=n), n)
                grads.append(2 * unfold(resid, n) @ s.T)
            return float(np.sum(resid * resid)), grads
        _polish(fg, [core] + factors, cfg.polish_iters, trace)
    return TuckerModel(core, factors, trace, it, converged)


def tt_reconstruct(model):
    """Contract the cores over their shared rank indices."""
    cores = model.cores
    out = cores[0].reshape(cores[0].shape[1], cores[0].shape[2])
    for core in cores[1:]:
        r_prev, n, r_next = core.shape
        out = (out @ core.reshape(r_prev, n * r_next)).reshape(-1, r_next)
    return out.reshape(model.shape)


def ntt_solve(x, ranks, cfg=None):
    """Non-negative tensor train with internal ranks ``ranks`` via sequential NMF.

    Stage ``i`` factorizes the ``(r[i-1] * n[i], prod(n[i+1:]))`` remainder at
    rank ``r[i]``; ``W`` becomes core ``i`` and ``H`` the next remainder.
    """
    cfg = cfg or NtfConfig()
    x = _check_ntf_input(x)
    ranks = tuple(int(r) for r in ranks)
    d = x.ndim
    if len(ranks) != d - 1:
        raise DimensionError(f"a {d}-way train needs {d - 1} ranks, got {len(ranks)}")
    chain = (1,) + ranks + (1,)
    for i in range(d - 1):
        rows = chain[i] * x.shape[i]
        cols = math.prod(x.shape[i + 1:])
        if not (1 <= chain[i + 1] <= min(rows, cols)):
            raise DimensionError(
                f"rank r{i + 1}={chain[i + 1]} infeasible for a {rows}x{cols} unfolding")

    cores, stages = [], []
    rest = x
    for i in range(d - 1):
        mat = rest.reshape(chain[i] * x.shape[i], -1)
        ncfg = NmfConfig(k=chain[i + 1], loss=cfg.loss, max_iters=cfg.max_iters,
                         tol=cfg.tol, seed=cfg.seed + i, obj_stride=cfg.obj_stride)
        model = nmf_solve(mat, ncfg)
        stages.append(model)
        cores.append(model.w.reshape(chain[i], x.shape[i], chain[i + 1]))
        rest = model.h
    cores.append(rest.reshape(chain[d - 1], x.shape[d - 1], 1))
    return TtModel(cores, stages)


def cpd_from_factors(factors):
    return CpdModel([np.asarray(f, dtype=np.float64) for f in factors])


def tucker_from(core, factors):
    return TuckerModel(np.asarray(core, dtype=np.float64),
                       [np.asarray(f, dtype=np.float64) for f in factors])


def tt_from_cores(cores):
    return TtModel([np.asarray(c, dtype=np.float64) for c in cores])

