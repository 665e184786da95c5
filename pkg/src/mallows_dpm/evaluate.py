"""Scoring, oracles, and synthetic benchmarks for the mixture chains.

Holds the partition-distance metric used to judge clusterings, exhaustive
and quadrature oracles small enough to trust by inspection, the accuracy
study for the infinite-items Beta shortcut, and the planted-mixture
generator behind the desk-scale experiments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .model import GmParams, PriorParams, approx_error, log_psi, sample_gm
from .rankings import Permutation, SuffStats, TopTRanking
from .samplers import _perm_energy_table, sample_sigma_stagewise

__all__ = [
    "vi_distance",
    "enumerate_sigma_posterior",
    "theta_posterior_moments",
    "PlantedMixtureSpec",
    "gen_planted_mixture",
    "preset_spec",
    "PRESET_NAMES",
    "approx_error_study",
]

_ENUM_N_MAX = 7


def vi_distance(labels1, labels2) -> float:
    """Variation of information between two clusterings, in nats.

    H(C1|C2) + H(C2|C1) from the joint label contingency table; zero iff
    the partitions coincide, symmetric, and a metric on partitions.
    """
    a = np.asarray(labels1).ravel()
    b = np.asarray(labels2).ravel()
    if a.shape != b.shape or a.size == 0:
        raise ValueError("clusterings must be nonempty and equally long")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    joint /= a.size

    def entropy(p):
        p = p[p > 0]
        return float(-(p * np.log(p)).sum())

    h_joint = entropy(joint.ravel())
    return 2.0 * h_joint - entropy(joint.sum(1)) - entropy(joint.sum(0))


def enumerate_sigma_posterior(
    theta: np.ndarray,
    stats: SuffStats,
    prior: PriorParams,
) -> dict[tuple, float]:
    """Exhaustive center posterior at fixed rates, as {order: probability}.

    The brute-force oracle for the stagewise center sampler; refuses item
    counts whose factorial table would not fit on a desk.
    """
    if stats.n > _ENUM_N_MAX:
        raise ValueError(f"enumeration supports n <= {_ENUM_N_MAX}")
    theta = np.asarray(theta, dtype=np.float64)
    R = stats.weighted_r(theta)
    perms, gt = _perm_energy_table(stats.n)
    logw = -(gt @ R.ravel())
    w = np.exp(logw - logw.max())
    w /= w.sum()
    return {tuple(int(x) for x in perms[k]): float(w[k]) for k in range(len(w))}


def theta_posterior_moments(
    j: int,
    S_j: float,
    N_j: float,
    prior: PriorParams,
    n: int,
    hi: float = 50.0,
) -> tuple[float, float]:
    """Mean and variance of one rate coordinate's posterior by quadrature.

    Rank ``j`` is counted from zero; the density on [0, hi] is
    proportional to exp(-(nu r_j + S_j) theta - (nu + N_j) ln psi_m)
    with m = n - 1 - j.  The support cap matches the slice sampler's, so
    this is the oracle both rate samplers are judged against.
    """
    if not 0 <= j < n - 1:
        raise ValueError("rank index out of range")
    a = prior.nu * prior.r_vec(j + 1)[j] + S_j
    b = prior.nu + N_j
    m = n - 1 - j
    grid = np.linspace(0.0, hi, 4001)
    logf = np.array([-(a * t + b * log_psi(t, m)) for t in grid])
    shift = float(logf.max())
    mode = float(grid[int(np.argmax(logf))])

    def f(t, p):
        return t ** p * math.exp(-(a * t + b * log_psi(t, m)) - shift)

    z = quad(f, 0.0, hi, args=(0,), points=[mode], limit=200)[0]
    if not (np.isfinite(z) and z > 0):
        raise ValueError("posterior normalizer is not positive and finite")
    m1 = quad(f, 0.0, hi, args=(1,), points=[mode], limit=200)[0] / z
    m2 = quad(f, 0.0, hi, args=(2,), points=[mode], limit=200)[0] / z
    return m1, m2 - m1 * m1


@dataclass(frozen=True)
class PlantedMixtureSpec:
    """Recipe for a synthetic mixture with known ground truth."""

    K: int
    n: int
    t: int
    theta_star: float | tuple
    points_per_cluster: int = 500
    center_gen: str = "conditioned"
    conditioning_rate: float = 0.7
    conditioning_size: int = 100

    def __post_init__(self):
        if self.K < 1 or self.points_per_cluster < 1:
            raise ValueError("counts must be positive")
        if not 1 <= self.t <= self.n - 1:
            raise ValueError("need 1 <= t <= n-1")
        if self.center_gen not in ("conditioned", "uniform"):
            raise ValueError("center_gen must be 'conditioned' or 'uniform'")
        th = self.theta_rows()
        if (th < 0).any() or not np.isfinite(th).all():
            raise ValueError("theta_star must be finite and nonnegative")

    def theta_rows(self) -> np.ndarray:
        """Per-cluster rate vectors, shape (K, t)."""
        th = np.asarray(self.theta_star, dtype=np.float64)
        if th.ndim == 0:
            return np.full((self.K, self.t), float(th))
        if th.ndim == 1:
            if th.shape != (self.K,):
                raise ValueError("per-cluster theta_star needs K entries")
            return np.repeat(th[:, None], self.t, axis=1)
        if th.shape != (self.K, self.t):
            raise ValueError("theta_star matrix must be K x t")
        return th.copy()


def _planted_center(spec: PlantedMixtureSpec, rng: np.random.Generator) -> Permutation:
    base = Permutation.random(spec.n, rng)
    if spec.center_gen == "uniform":
        return base
    full = spec.n - 1
    rate = np.full(full, spec.conditioning_rate)
    conditioning = [sample_gm(GmParams(base, rate), full, rng)
                    for _ in range(spec.conditioning_size)]
    stats = SuffStats.from_rankings(conditioning, spec.n, full)
    return sample_sigma_stagewise(rate, stats, PriorParams(), rng=rng)


def gen_planted_mixture(
    spec: PlantedMixtureSpec,
    rng: np.random.Generator,
) -> tuple[list[TopTRanking], np.ndarray, list[GmParams]]:
    """Draw a labeled mixture dataset with dispersed but related centers.

    Each cluster center is either uniform or, by default, one posterior
    draw conditioned on ``conditioning_size`` complete rankings from a
    moderate-rate model around a uniform base, which spreads the centers
    without making clusters trivially separable.  Points are then drawn
    from each cluster's model truncated to length t, and the dataset is
    shuffled (with the same stream, so runs reproduce bit-exactly).
    """
    theta = spec.theta_rows()
    data: list[TopTRanking] = []
    labels = np.repeat(np.arange(spec.K), spec.points_per_cluster)
    params: list[GmParams] = []
    for c in range(spec.K):
        center = _planted_center(spec, rng)
        gm = GmParams(center, theta[c])
        params.append(gm)
        data.extend(sample_gm(gm, spec.t, rng)
                    for _ in range(spec.points_per_cluster))
    order = rng.permutation(len(data))
    return [data[i] for i in order], labels[order], params


_PRESETS = {
    "short-even": dict(K=10, n=20, t=10, theta_star=1.0),
    "long-even": dict(K=10, n=20, t=19, theta_star=1.0),
    "short-taper": dict(
        K=10, n=20, t=10,
        theta_star=tuple(1.5 - 0.1 * i for i in range(10))),
    "long-taper": dict(
        K=10, n=20, t=19,
        theta_star=tuple(1.5 - 0.05 * i for i in range(10))),
    "three-cluster": dict(K=3, n=12, t=5, theta_star=1.0),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset_spec(name: str, points_per_cluster: int | None = None) -> PlantedMixtureSpec:
    """One of the named benchmark recipes, optionally resized."""
    if name not in _PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    kw = dict(_PRESETS[name])
    if points_per_cluster is not None:
        kw["points_per_cluster"] = points_per_cluster
    return PlantedMixtureSpec(**kw)


def approx_error_study(n_values, a_grid, b_grid) -> list[tuple]:
    """Relative error of the Beta shortcut across a parameter grid.

    Rows are (n, a, b, error); error is 1 - Beta(a,b)/IntegralB(a,b,n),
    nonnegative and vanishing as n grows.
    """
    rows = []
    for n in n_values:
        for a in a_grid:
            for b in b_grid:
                rows.append((float(n), float(a), float(b),
                             approx_error(float(a), float(b), int(n))))
    return rows
