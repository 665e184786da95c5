"""Dirichlet process mixture chains over top-t ranking data.

Two collapsed-assignment Gibbs sweeps share the same skeleton: pull a
point out, score it against every live cluster plus a fresh one, drop it
where the categorical lands, then refresh every cluster's center and
rates.  The slice variant scores points under the current (center, rates)
pair; the beta variant marginalizes the rates through the infinite-items
Beta approximation and never uses them for assignment.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, logsumexp

from . import _kernels as kern
from .model import (
    PriorParams,
    log_marginal_single,
    log_psi_vec,
)
from .rankings import Permutation, SuffStats, TopTRanking
from .samplers import (
    SliceConfig,
    _log_categorical,
    sample_sigma_n1,
    sample_sigma_stagewise,
    sample_theta_beta,
    sample_theta_slice,
)

__all__ = [
    "ChainConfig",
    "DpmState",
    "Snapshot",
    "SampleTrace",
    "HeldoutScore",
    "init_state",
    "slice_gibbs_sweep",
    "beta_gibbs_sweep",
    "run_chain",
    "test_log_likelihood",
]


@dataclass(frozen=True)
class ChainConfig:
    """Everything one chain needs besides the data and its stream."""

    sampler_kind: str = "beta"
    T: int = 100
    prior: PriorParams = field(default_factory=PriorParams)
    T_Gibbs: int = 10
    T_Slices: int = 3
    K_init: int = 20
    seed: int = 0
    slice_width: float = 1.0
    max_theta: float = 50.0
    burn_in: int | None = None
    stride: int | None = None
    randomize_scan: bool = False

    def __post_init__(self):
        if self.sampler_kind not in ("slice", "beta"):
            raise ValueError("sampler_kind must be 'slice' or 'beta'")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if self.T_Gibbs < 1 or self.T_Slices < 1 or self.K_init < 1:
            raise ValueError("iteration counts and K_init must be positive")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.stride is not None and self.stride < 1:
            raise ValueError("stride must be positive")

    def slice_cfg(self) -> SliceConfig:
        return SliceConfig(self.slice_width, self.max_theta, self.T_Slices)

    def effective_burn_in(self) -> int:
        return self.T // 2 if self.burn_in is None else self.burn_in

    def effective_stride(self) -> int:
        return max(1, self.T // 100) if self.stride is None else self.stride


class _Cluster:
    """One mixture component: statistics, parameters, and weight caches."""

    __slots__ = ("stats", "sigma", "theta", "S", "_lpsi_cum")

    def __init__(self, stats: SuffStats, sigma: Permutation, theta: np.ndarray):
        self.stats = stats
        self.sigma = sigma
        self.theta = np.asarray(theta, dtype=np.float64)
        self.S = stats.s_vector(sigma)
        self._lpsi_cum = None

    @property
    def size(self) -> int:
        return self.stats.N

    def set_params(self, sigma: Permutation, theta: np.ndarray) -> None:
        self.sigma = sigma
        self.theta = np.asarray(theta, dtype=np.float64)
        self.S = self.stats.s_vector(sigma)
        self._lpsi_cum = None

    def add_member(self, pi: TopTRanking, code_row: np.ndarray) -> None:
        self.stats.add(pi)
        self.S[: pi.t] += code_row[: pi.t]

    def remove_member(self, pi: TopTRanking, code_row: np.ndarray) -> None:
        self.stats.remove(pi)
        self.S[: pi.t] -= code_row[: pi.t]

    def lpsi_cum(self) -> np.ndarray:
        # cum[k] = sum over the first k ranks of ln psi; valid until params move
        if self._lpsi_cum is None:
            t = self.stats.t_max
            m = self.stats.n - 1 - np.arange(t)
            self._lpsi_cum = np.concatenate(
                ([0.0], np.cumsum(log_psi_vec(self.theta, m))))
        return self._lpsi_cum


class DpmState:
    """Mutable chain state: labels, live clusters, and the dataset."""

    def __init__(self, data: list[TopTRanking], assignments: np.ndarray,
                 clusters: dict[int, _Cluster]):
        self.data = data
        self.assignments = assignments
        self.clusters = clusters
        self.n = data[0].n
        self.t_max = max(pi.t for pi in data)
        self._next_label = max(clusters) + 1 if clusters else 0

    def fresh_label(self) -> int:
        lab = self._next_label
        self._next_label += 1
        return lab

    def labels_sorted(self) -> list[int]:
        return sorted(self.clusters)

    def check_consistency(self) -> None:
        """Rebuild every cluster's statistics from scratch and compare."""
        n_points = len(self.data)
        if self.assignments.shape != (n_points,):
            raise AssertionError("one label per point is required")
        for lab, cl in self.clusters.items():
            members = [self.data[i] for i in np.flatnonzero(self.assignments == lab)]
            if not members:
                raise AssertionError(f"cluster {lab} is empty")
            rebuilt = SuffStats.from_rankings(members, self.n, cl.stats.t_max)
            if rebuilt.N != cl.stats.N or not np.array_equal(rebuilt.N_j, cl.stats.N_j):
                raise AssertionError(f"cluster {lab} counts drifted")
            if not np.array_equal(rebuilt.to_dense(), cl.stats.to_dense()):
                raise AssertionError(f"cluster {lab} statistics drifted")
            if not np.array_equal(rebuilt.s_vector(cl.sigma), cl.S):
                raise AssertionError(f"cluster {lab} code-sum cache drifted")
        if set(np.unique(self.assignments)) != set(self.clusters):
            raise AssertionError("labels and clusters disagree")


def _draw_cluster_params_slice(stats: SuffStats, prior: PriorParams,
                               cfg: ChainConfig, rng: np.random.Generator,
                               theta0: np.ndarray | None = None) -> tuple:
    theta = np.ones(stats.t_max) if theta0 is None else theta0
    scfg = cfg.slice_cfg()
    sigma = sample_sigma_stagewise(theta, stats, prior, rng=rng)
    for _ in range(cfg.T_Gibbs):
        theta = sample_theta_slice(sigma, stats, prior, scfg, rng, theta)
        sigma = sample_sigma_stagewise(theta, stats, prior, rng=rng)
    return sigma, theta


def init_state(data: list[TopTRanking], cfg: ChainConfig,
               rng: np.random.Generator) -> DpmState:
    """Uniform random labels among K_init, then per-cluster parameter draws."""
    if not data:
        raise ValueError("cannot initialize a chain on an empty dataset")
    n = data[0].n
    if any(pi.n != n for pi in data):
        raise ValueError("all rankings must share one item count")
    t_max = max(pi.t for pi in data)
    labels = rng.integers(0, cfg.K_init, size=len(data))
    clusters: dict[int, _Cluster] = {}
    assignments = np.empty(len(data), dtype=np.int64)
    remap: dict[int, int] = {}
    for i, raw in enumerate(labels):
        lab = remap.setdefault(int(raw), len(remap))
        assignments[i] = lab
    for lab in range(len(remap)):
        members = [data[i] for i in np.flatnonzero(assignments == lab)]
        stats = SuffStats.from_rankings(members, n, t_max)
        sigma = sample_sigma_stagewise(np.ones(t_max), stats, cfg.prior, rng=rng)
        if cfg.sampler_kind == "slice":
            theta = sample_theta_slice(sigma, stats, cfg.prior, cfg.slice_cfg(),
                                       rng, np.ones(t_max))
        else:
            theta = sample_theta_beta(sigma, stats, cfg.prior, rng)
        clusters[lab] = _Cluster(stats, sigma, theta)
    return DpmState(list(data), assignments, clusters)


def _reassign_point(state: DpmState, i: int, cfg: ChainConfig,
                    rng: np.random.Generator, beta_weights: bool) -> None:
    pi = state.data[i]
    old = int(state.assignments[i])
    old_cl = state.clusters[old]
    old_code = kern.s_code(pi.items, old_cl.sigma.rank)
    old_cl.remove_member(pi, old_code)
    if old_cl.size == 0:
        del state.clusters[old]

    labels = state.labels_sorted()
    t = pi.t
    prior = cfg.prior
    if labels:
        ranks = np.stack([state.clusters[lab].sigma.rank for lab in labels])
        codes = kern.s_codes(pi.items, ranks)
        sizes = np.array([state.clusters[lab].size for lab in labels],
                         dtype=np.float64)
        if beta_weights:
            r = prior.nu * prior.r_vec(state.t_max)
            a2 = np.stack([r + state.clusters[lab].S for lab in labels])[:, :t]
            b2 = prior.nu + np.stack(
                [state.clusters[lab].stats.N_j for lab in labels])[:, :t] + 1.0
            ratio = betaln(a2 + codes, b2 + 1.0) - betaln(a2, b2)
            logw = np.log(sizes) + ratio.sum(axis=1)
        else:
            thetas = np.stack([state.clusters[lab].theta for lab in labels])[:, :t]
            cums = np.array([state.clusters[lab].lpsi_cum()[t] for lab in labels])
            logw = np.log(sizes) - np.einsum("cj,cj->c", codes, thetas) - cums
    else:
        codes = None
        logw = np.empty(0)

    new_w = math.log(prior.alpha) + log_marginal_single(state.n, t)
    k = _log_categorical(np.append(logw, new_w), rng)

    if k < len(labels):
        lab = labels[k]
        state.assignments[i] = lab
        state.clusters[lab].add_member(pi, codes[k])
        return
    lab = state.fresh_label()
    state.assignments[i] = lab
    stats = SuffStats(state.n, state.t_max)
    stats.add(pi)
    if beta_weights:
        sigma = sample_sigma_n1(pi, prior, rng)
        cl = _Cluster(stats, sigma, np.ones(state.t_max))
        cl.set_params(sigma, sample_theta_beta(sigma, stats, prior, rng))
    else:
        sigma, theta = _draw_cluster_params_slice(stats, prior, cfg, rng)
        cl = _Cluster(stats, sigma, theta)
    state.clusters[lab] = cl


def _scan_order(state: DpmState, cfg: ChainConfig,
                rng: np.random.Generator) -> np.ndarray:
    if cfg.randomize_scan:
        return rng.permutation(len(state.data))
    return np.arange(len(state.data))


def slice_gibbs_sweep(state: DpmState, cfg: ChainConfig,
                      rng: np.random.Generator) -> DpmState:
    """One sweep scoring points under current parameters, rates by slice."""
    for i in _scan_order(state, cfg, rng):
        _reassign_point(state, int(i), cfg, rng, beta_weights=False)
    scfg = cfg.slice_cfg()
    for lab in state.labels_sorted():
        cl = state.clusters[lab]
        sigma, theta = cl.sigma, cl.theta
        for _ in range(cfg.T_Gibbs):
            sigma = sample_sigma_stagewise(theta, cl.stats, cfg.prior, rng=rng)
            theta = sample_theta_slice(sigma, cl.stats, cfg.prior, scfg, rng, theta)
        cl.set_params(sigma, theta)
    return state


def beta_gibbs_sweep(state: DpmState, cfg: ChainConfig,
                     rng: np.random.Generator) -> DpmState:
    """One sweep with rate-marginalized assignment scores, rates by Beta."""
    for i in _scan_order(state, cfg, rng):
        _reassign_point(state, int(i), cfg, rng, beta_weights=True)
    for lab in state.labels_sorted():
        cl = state.clusters[lab]
        if cl.size == 1:
            member = state.data[int(np.flatnonzero(state.assignments == lab)[0])]
            sigma = sample_sigma_n1(member, cfg.prior, rng)
        else:
            sigma, theta = cl.sigma, None
            for _ in range(cfg.T_Gibbs):
                sigma = sample_sigma_stagewise(
                    cl.theta if theta is None else theta,
                    cl.stats, cfg.prior, rng=rng)
                theta = sample_theta_beta(sigma, cl.stats, cfg.prior, rng)
            cl.set_params(sigma, theta)
            continue
        cl.set_params(sigma, sample_theta_beta(sigma, cl.stats, cfg.prior, rng))
    return state


@dataclass(frozen=True)
class Snapshot:
    """Recorded chain state after one sweep."""

    sweep: int
    assignments: np.ndarray
    clusters: list[tuple[int, np.ndarray, np.ndarray, int]]  # label, order, theta, size
    elapsed: float


@dataclass
class SampleTrace:
    """Append-only record of a single chain run."""

    sampler_kind: str
    n: int
    t_max: int
    n_points: int
    seed: int
    snapshots: list[Snapshot] = field(default_factory=list)

    def record(self, state: DpmState, sweep: int, elapsed: float) -> None:
        clusters = [
            (lab,
             state.clusters[lab].sigma.order.copy(),
             state.clusters[lab].theta.copy(),
             state.clusters[lab].size)
            for lab in state.labels_sorted()
        ]
        self.snapshots.append(
            Snapshot(sweep, state.assignments.copy(), clusters, elapsed))


def run_chain(data: list[TopTRanking], cfg: ChainConfig,
              rng: np.random.Generator | None = None) -> SampleTrace:
    """Run one chain for cfg.T sweeps, recording past burn-in at the stride."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    sweep_fn = slice_gibbs_sweep if cfg.sampler_kind == "slice" else beta_gibbs_sweep
    started = time.perf_counter()
    state = init_state(data, cfg, rng)
    trace = SampleTrace(cfg.sampler_kind, state.n, state.t_max, len(data), cfg.seed)
    burn_in, stride = cfg.effective_burn_in(), cfg.effective_stride()
    if cfg.T == 0:
        trace.record(state, 0, time.perf_counter() - started)
        return trace
    for sweep in range(1, cfg.T + 1):
        state = sweep_fn(state, cfg, rng)
        if sweep > burn_in and (sweep - burn_in - 1) % stride == 0:
            trace.record(state, sweep, time.perf_counter() - started)
    return trace


@dataclass(frozen=True)
class HeldoutScore:
    """Predictive log-likelihood of held-out rankings under a trace."""

    total: float
    per_point: float
    n_points: int
    n_samples: int


def test_log_likelihood(trace: SampleTrace, heldout: list[TopTRanking],
                        prior: PriorParams) -> HeldoutScore:
    """Score held-out points under the posterior predictive mixture.

    Each recorded snapshot defines a mixture: every cluster with weight
    N_c/(N+alpha) scored by its (center, rates) pair, plus the
    alpha-weighted chance of a brand-new cluster, under which a top-t
    ranking is uniform with probability (n-t)!/n!.  Likelihoods are
    averaged across snapshots before the log.
    """
    if not trace.snapshots:
        raise ValueError("trace holds no recorded samples")
    if not heldout:
        raise ValueError("no held-out points to score")
    n = trace.n
    for pi in heldout:
        if pi.n != n:
            raise ValueError("held-out item count differs from the trace")
    n_train = trace.n_points
    denom = math.log(n_train + prior.alpha)
    per_snap = np.empty((len(trace.snapshots), len(heldout)))
    for si, snap in enumerate(trace.snapshots):
        parts = np.empty((len(snap.clusters) + 1, len(heldout)))
        for ci, (_, order, theta, size) in enumerate(snap.clusters):
            sigma = Permutation(order)
            m = n - 1 - np.arange(len(theta))
            lpsi = np.cumsum(log_psi_vec(theta, m))
            for pj, pi in enumerate(heldout):
                s = kern.s_code(pi.items, sigma.rank)
                parts[ci, pj] = (math.log(size) - denom
                                 - float(s @ theta[: pi.t]) - lpsi[pi.t - 1])
        for pj, pi in enumerate(heldout):
            parts[-1, pj] = (math.log(prior.alpha) - denom
                             + log_marginal_single(n, pi.t))
        per_snap[si] = logsumexp(parts, axis=0)
    per_point_values = logsumexp(per_snap, axis=0) - math.log(len(trace.snapshots))
    total = float(per_point_values.sum())
    return HeldoutScore(total, total / len(heldout), len(heldout),
                        len(trace.snapshots))
