"""
Latent-dimension selection for NMF (NMFk).

For every candidate ``k`` the data are perturbed ``P`` times with
multiplicative uniform noise, each replica is factorized, the ``W`` columns
of all replicas are clustered so that every cluster takes exactly one column
per replica, and the stability of the clusters is measured with silhouette
statistics. The selected ``k`` is the largest one whose clusters are stable
and whose reconstruction error does not break the decreasing trend.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from ._workers import run_ordered
from .errors import (DegenerateFactorError, DimensionError, LatentFireError,
                     ParameterError, RankSelectionError)
from .nmf import NmfConfig, nmf_solve, with_k
from .tensor import as_tensor, relative_error, unfold


# per-replica solver used when none is given
REPLICA_NMF = NmfConfig(k=1, max_iters=300, obj_stride=10)


@dataclass(frozen=True)
class PerturbConfig:
    """Resampling ensemble settings.

    ``restarts`` random starts are run per replica and the one with the
    lowest objective is kept, which screens out poor local minima without
    making the replicas share a starting point.
    """

    epsilon: float = 0.02
    replicas: int = 10
    master_seed: int = 0
    restarts: int = 1

    def __post_init__(self):
        if not (0 <= self.epsilon < 1):
            raise ParameterError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.replicas < 2:
            raise ParameterError("at least 2 replicas are needed")
        if self.master_seed < 0:
            raise ParameterError("master_seed must be non-negative")
        if self.restarts < 1:
            raise ParameterError("restarts must be >= 1")


@dataclass(frozen=True)
class SelectionRule:
    """Admissibility rule for a candidate ``k``.

    ``error_slack`` is the relative amount by which the mean relative error
    may exceed the lowest error seen at smaller ``k`` before the candidate
    is considered off the decreasing envelope.
    """

    threshold: float = 0.75
    error_slack: float = 0.01
    max_failed_fraction: float = 0.2


@dataclass
class ClusterAssignment:
    """``perms[p, j]`` is the cluster of column ``j`` of replica ``p``."""

    perms: np.ndarray
    centroids: np.ndarray
    rounds: int
    stable: bool

    @property
    def labels(self):
        return self.perms.ravel()


@dataclass
class SilhouetteResult:
    scores: np.ndarray
    min: float
    mean: float
    single_cluster: bool = False


@dataclass
class KRecord:
    k: int
    min_silhouette: float
    mean_silhouette: float
    mean_relative_error: float
    failed_replicas: int = 0
    valid: bool = True
    single_cluster: bool = False


@dataclass
class KSelectionReport:
    records: list
    selected_k: int = None
    rule: SelectionRule = field(default_factory=SelectionRule)
    replicas: int = 0
    epsilon: float = 0.0
    master_seed: int = 0

    @property
    def admissible(self):
        return self.selected_k is not None

    @property
    def status(self):
        return "selected" if self.admissible else "none admissible"

    def record(self, k):
        for r in self.records:
            if r.k == k:
                return r
        raise KeyError(k)

    def to_dict(self):
        return {
            "selected_k": self.selected_k,
            "status": self.status,
            "rule": asdict(self.rule),
            "replicas": self.replicas,
            "epsilon": self.epsilon,
            "master_seed": self.master_seed,
            "records": [asdict(r) for r in self.records],
        }


def _seed_sequence(master_seed, *key):
    return np.random.SeedSequence(master_seed, spawn_key=key)


def replica_seed(master_seed, replica, k, restart=0):
    """64-bit NMF initialization seed for ``(replica, k, restart)``."""
    key = (1, replica, k) if restart == 0 else (1, replica, k, restart)
    return int(_seed_sequence(master_seed, *key).generate_state(1, np.uint64)[0])


def resample(x, cfg, replica):
    """Perturbed copy of ``x``: every entry times an independent U(1-eps, 1+eps) draw."""
    x = as_tensor(x, nonneg=True)
    if not (0 <= replica < cfg.replicas):
        raise ParameterError(f"replica {replica} out of range [0, {cfg.replicas})")
    if cfg.epsilon == 0:
        return x.copy()
    rng = np.random.default_rng(_seed_sequence(cfg.master_seed, 0, replica))
    return x * rng.uniform(1 - cfg.epsilon, 1 + cfg.epsilon, size=x.shape)


def _unit_columns(w):
    w = np.asarray(w, dtype=np.float64)
    norms = np.linalg.norm(w, axis=0)
    if np.any(norms == 0):
        raise DegenerateFactorError("a factor column is identically zero")
    return w / norms


def _greedy_match(sim):
    """One-to-one column->cluster assignment by descending similarity."""
    k = sim.shape[0]
    perm = np.full(k, -1)
    taken = np.zeros(k, dtype=bool)
    for flat in np.argsort(-sim, axis=None, kind="stable"):
        c, j = divmod(int(flat), k)
        if perm[j] < 0 and not taken[c]:
            perm[j] = c
            taken[c] = True
    return perm


def cluster_factors(ws, max_rounds=100):
    """Cluster the columns of several ``W`` matrices, one column per replica per cluster.

    Centroids start from the first replica's columns. Every round each
    replica's columns are matched greedily to the centroids by cosine
    similarity; centroids are then recomputed as normalized cluster means.
    """
    units = [_unit_columns(w) for w in ws]
    k = units[0].shape[1]
    if any(u.shape != units[0].shape for u in units):
        raise DimensionError("all W matrices must share one shape")
    centroids = units[0].copy()
    perms = None
    stable = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        new = np.array([_greedy_match(centroids.T @ u) for u in units])
        sums = np.zeros_like(centroids)
        for u, perm in zip(units, new):
            sums[:, perm] += u
        centroids = sums / np.linalg.norm(sums, axis=0)
        if perms is not None and np.array_equal(new, perms):
            stable = True
            perms = new
            break
        perms = new
    return ClusterAssignment(perms, centroids, rounds, stable)


def cosine_distances(points):
    """Pairwise ``1 - cos`` between rows, clipped at 0."""
    u = points / np.linalg.norm(points, axis=1, keepdims=True)
    return np.clip(1.0 - u @ u.T, 0.0, 2.0)


def silhouette_scores(points, labels, metric=cosine_distances):
    """Per-point silhouette ``(b - a) / max(a, b)`` under an arbitrary metric.

    ``metric`` maps an ``(n, d)`` array to an ``(n, n)`` distance matrix.
    Points alone in their cluster score 0; with a single cluster every
    point scores 1 and ``single_cluster`` is set.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    n = len(labels)
    if len(clusters) < 2:
        return SilhouetteResult(np.ones(n), 1.0, 1.0, single_cluster=True)
    dist = metric(points)
    member = labels[None, :] == clusters[:, None]  # (C, n)
    counts = member.sum(axis=1)
    sums = dist @ member.T  # (n, C) distance totals per cluster
    own = np.searchsorted(clusters, labels)
    own_count = counts[own] - 1
    scores = np.zeros(n)
    for j in range(n):
        if own_count[j] == 0:
            continue
        a = sums[j, own[j]] / own_count[j]
        b = min(sums[j, c] / counts[c] for c in range(len(clusters)) if c != own[j])
        denom = max(a, b)
        scores[j] = 0.0 if denom == 0 else (b - a) / denom
    return SilhouetteResult(scores, float(scores.min()), float(scores.mean()))


def cluster_silhouette(assignment, ws):
    """Silhouette statistics of clustered ``W`` columns under cosine distance."""
    points = np.concatenate([_unit_columns(w).T for w in ws])
    return silhouette_scores(points, assignment.labels)


def _solve_replica(x, k, replica, nmf_cfg, perturb_cfg):
    xp = resample(x, perturb_cfg, replica)
    best = None
    try:
        for r in range(perturb_cfg.restarts):
            seed = replica_seed(perturb_cfg.master_seed, replica, k, r)
            model = nmf_solve(xp, with_k(nmf_cfg, k, seed=seed))
            if best is None or model.objective_trace[-1] < best.objective_trace[-1]:
                best = model
    except LatentFireError as exc:
        return None, str(exc)
    return best.w, relative_error(xp, best.w @ best.h)


def _apply_rule(records, rule):
    best = None
    envelope = np.inf
    for rec in records:
        if not rec.valid:
            continue
        on_envelope = rec.mean_relative_error <= envelope * (1 + rule.error_slack)
        if on_envelope and rec.min_silhouette >= rule.threshold:
            best = rec.k
        envelope = min(envelope, rec.mean_relative_error)
    return best


def select_k(x, k_range, nmf_cfg=None, perturb_cfg=None, rule=None, n_jobs=None):
    """Estimate the latent dimension of ``x``.

    Parameters
    ----------
    x : array_like, shape (M, N)
    k_range : (int, int)
        Inclusive sweep bounds within ``[1, min(M, N)]``.
    nmf_cfg : NmfConfig, optional
        Solver settings; ``k`` and ``seed`` are overridden per replica.
        Defaults to :data:`REPLICA_NMF`.
    perturb_cfg : PerturbConfig, optional
    rule : SelectionRule, optional
    n_jobs : int, optional
        Worker processes. Results do not depend on it.

    Returns
    -------
    KSelectionReport
        ``selected_k`` is None when no candidate is admissible.
    """
    x = as_tensor(x, nonneg=True)
    if x.ndim != 2:
        raise DimensionError("select_k needs a matrix")
    k_lo, k_hi = (int(v) for v in k_range)
    if not (1 <= k_lo <= k_hi <= min(x.shape)):
        raise DimensionError(f"k range {k_range} not within [1, {min(x.shape)}]")
    nmf_cfg = nmf_cfg or REPLICA_NMF
    perturb_cfg = perturb_cfg or PerturbConfig()
    rule = rule or SelectionRule()
    ks = list(range(k_lo, k_hi + 1))
    tasks = [(x, k, p, nmf_cfg, perturb_cfg) for k in ks for p in range(perturb_cfg.replicas)]
    results = run_ordered(_solve_replica, tasks, n_jobs)

    records = []
    P = perturb_cfg.replicas
    for i, k in enumerate(ks):
        chunk = results[i * P:(i + 1) * P]
        ws = [w for w, _ in chunk if w is not None]
        errs = [e for w, e in chunk if w is not None]
        failed = P - len(ws)
        if failed > rule.max_failed_fraction * P or len(ws) < 2:
            records.append(KRecord(k, float("nan"), float("nan"), float("nan"),
                                   failed, valid=False))
            continue
        try:
            assignment = cluster_factors(ws)
            sil = cluster_silhouette(assignment, ws)
        except DegenerateFactorError:
            records.append(KRecord(k, float("nan"), float("nan"), float(np.mean(errs)),
                                   failed, valid=False))
            continue
        records.append(KRecord(k, sil.min, sil.mean, float(np.mean(errs)), failed,
                               single_cluster=sil.single_cluster))
    report = KSelectionReport(records, _apply_rule(records, rule), rule,
                              P, perturb_cfg.epsilon, perturb_cfg.master_seed)
    return report


@dataclass
class TensorRankSelection:
    ranks: tuple
    reports: list


def select_tensor_ranks(x, k_ranges, nmf_cfg=None, perturb_cfg=None, rule=None, n_jobs=None):
    """Run :func:`select_k` on every mode unfolding of a 3-way or 4-way tensor.

    Raises
    ------
    RankSelectionError
        If some mode has no admissible rank; ``exc.mode`` names it.
    """
    x = as_tensor(x, nonneg=True)
    if x.ndim not in (3, 4):
        raise DimensionError(f"expected a 3-way or 4-way tensor, got {x.ndim} dimensions")
    if len(k_ranges) != x.ndim:
        raise DimensionError(f"need one k range per mode ({x.ndim}), got {len(k_ranges)}")
    ranks, reports = [], []
    for mode, kr in enumerate(k_ranges):
        report = select_k(unfold(x, mode), kr, nmf_cfg, perturb_cfg, rule, n_jobs)
        if not report.admissible:
            raise RankSelectionError(f"no admissible rank along mode {mode}", mode=mode)
        ranks.append(report.selected_k)
        reports.append(report)
    return TensorRankSelection(tuple(ranks), reports)

