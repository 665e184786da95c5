"""Parameter samplers for mixture-of-rankings inference.

Four conditional draws: a center draw from the pairwise-energy posterior
(exact by enumeration when the permutation space is small, sequential
approximation otherwise), slice updates for the per-rank rates, the
infinite-items Beta shortcut for the rates, and the single-observation
center draw used when a cluster holds one point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy.special import betaln

from .errors import NumericalError
from .model import PriorParams, log_psi
from .rankings import Permutation, SuffStats, TopTRanking

__all__ = [
    "SliceConfig",
    "sample_sigma_stagewise",
    "sample_theta_slice",
    "sample_theta_beta",
    "sample_sigma_n1",
]

# largest n whose n! energy table we are willing to enumerate per draw
_EXACT_N_MAX = 7


@dataclass(frozen=True)
class SliceConfig:
    """Knobs for the slice updates of the rate vector."""

    initial_width: float = 1.0
    max_theta: float = 50.0
    t_slices: int = 3

    def __post_init__(self):
        if not (self.initial_width > 0 and self.max_theta > 0):
            raise ValueError("width and max_theta must be positive")
        if self.t_slices < 1:
            raise ValueError("t_slices must be a positive integer")


def _log_categorical(logw: np.ndarray, rng: np.random.Generator) -> int:
    """One draw from an unnormalized log-weight vector, one uniform consumed."""
    w = np.exp(logw - logw.max())
    c = np.cumsum(w)
    u = rng.random() * c[-1]
    k = int(np.searchsorted(c, u, side="right"))
    return min(k, len(c) - 1)


@lru_cache(maxsize=8)
def _perm_energy_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All permutations of n items plus their pairwise-order indicators.

    gt[k] flattens the matrix [rank_k(i) > rank_k(i')], so gt @ R.ravel()
    is the energy of every permutation at once.
    """
    perms = np.array(list(permutations(range(n))), dtype=np.int64)
    ranks = np.argsort(perms, axis=1)
    gt = (ranks[:, :, None] > ranks[:, None, :]).reshape(len(perms), n * n)
    return perms, np.ascontiguousarray(gt, dtype=np.float64)


def _total_r(
    theta: np.ndarray,
    stats: SuffStats,
    prior: PriorParams,
    prior_R0: np.ndarray | None,
) -> np.ndarray:
    R = stats.weighted_r(theta)
    if prior_R0 is not None:
        R0 = np.asarray(prior_R0, dtype=np.float64)
        if R0.shape != (len(theta), stats.n, stats.n):
            raise ValueError("prior_R0 must be one matrix per rank")
        R = R + prior.nu * np.tensordot(theta, R0, axes=1)
    return R


def sample_sigma_stagewise(
    theta: np.ndarray,
    stats: SuffStats,
    prior: PriorParams,
    prior_R0: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> Permutation:
    """Draw a center from the posterior with energy L_sigma(R).

    R is the theta-weighted sum of the per-rank count matrices plus, when
    ``prior_R0`` is given, nu times the matching prior matrices.  For
    n <= 7 the draw is exact: the energy of every permutation is evaluated
    through a cached pair-indicator table.  For larger n the draw is the
    stagewise approximation: ranks are filled top-down, each stage picking
    an item with probability proportional to exp(-column sum) of the
    remaining submatrix, and once R is exhausted the leftover items are a
    uniform shuffle.  The stage energies telescope to L_sigma(R), but the
    stage normalizers make the large-n path approximate rather than exact.
    """
    if rng is None:
        rng = np.random.default_rng()
    theta = np.asarray(theta, dtype=np.float64)
    R = _total_r(theta, stats, prior, prior_R0)
    if stats.n <= _EXACT_N_MAX:
        perms, gt = _perm_energy_table(stats.n)
        k = _log_categorical(-(gt @ R.ravel()), rng)
        return Permutation(perms[k])
    return _sigma_stagewise_approx(R, rng)


def _sigma_stagewise_approx(R: np.ndarray, rng: np.random.Generator) -> Permutation:
    n = R.shape[0]
    R = R.copy()
    live = int(np.count_nonzero(R))
    order = np.empty(n, dtype=np.int64)
    remaining = list(range(n))
    pos = 0
    while live > 0 and remaining:
        idx = np.array(remaining)
        rho = R[:, idx].sum(axis=0)
        k = _log_categorical(-rho, rng)
        i = remaining.pop(k)
        live -= int(np.count_nonzero(R[i, :])) + int(np.count_nonzero(R[:, i]))
        if R[i, i] != 0.0:
            live += 1
        R[i, :] = 0.0
        R[:, i] = 0.0
        order[pos] = i
        pos += 1
    if remaining:
        tail = np.array(remaining, dtype=np.int64)
        order[pos:] = tail[rng.permutation(len(tail))]
    return Permutation(order)


def _slice_update(
    x0: float,
    log_f,
    width: float,
    hi: float,
    rng: np.random.Generator,
) -> float:
    """One slice-sampling update on [0, hi] via doubling step-out + shrinkage.

    The targets here are log-concave, so the doubling acceptance back-test
    is vacuous and omitted.
    """
    logy = log_f(x0) + math.log(rng.random())
    left = x0 - width * rng.random()
    right = left + width
    left = max(0.0, left)
    right = min(hi, right)
    guard = 200
    while guard and ((left > 0.0 and log_f(left) > logy)
                     or (right < hi and log_f(right) > logy)):
        span = right - left
        if rng.random() < 0.5:
            left = max(0.0, left - span)
        else:
            right = min(hi, right + span)
        guard -= 1
    for _ in range(1000):
        x = left + rng.random() * (right - left)
        if log_f(x) > logy:
            return x
        if x < x0:
            left = x
        else:
            right = x
    raise NumericalError("slice shrinkage failed to accept")


def _theta_slice_raw(
    a: np.ndarray,
    b: np.ndarray,
    m: np.ndarray,
    cfg: SliceConfig,
    rng: np.random.Generator,
    current: np.ndarray,
) -> np.ndarray:
    out = np.array(current, dtype=np.float64)
    for j in range(len(out)):
        aj, bj, mj = float(a[j]), float(b[j]), int(m[j])

        def log_f(th: float) -> float:
            return -(aj * th + bj * log_psi(th, mj))

        x = min(max(float(out[j]), 0.0), cfg.max_theta)
        for _ in range(cfg.t_slices):
            x = _slice_update(x, log_f, cfg.initial_width, cfg.max_theta, rng)
        out[j] = x
    return out


def sample_theta_slice(
    sigma: Permutation,
    stats: SuffStats,
    prior: PriorParams,
    cfg: SliceConfig,
    rng: np.random.Generator,
    current: np.ndarray,
) -> np.ndarray:
    """Slice-update every rate coordinate given the center.

    Coordinate j targets the density proportional to
    exp(-(nu r_j + S_j) theta - (nu + N_j) ln psi_{n-1-j}(theta)) on
    [0, max_theta]; the coordinates are independent, so each gets
    ``cfg.t_slices`` updates starting from ``current``.
    """
    t = stats.t_max
    a = prior.nu * prior.r_vec(t) + stats.s_vector(sigma)
    b = prior.nu + stats.N_j.astype(np.float64)
    m = stats.n - 1 - np.arange(t)
    current = np.asarray(current, dtype=np.float64)
    if current.shape != (t,):
        raise ValueError("current theta length must equal t_max")
    return _theta_slice_raw(a, b, m, cfg, rng, current)


def sample_theta_beta(
    sigma: Permutation,
    stats: SuffStats,
    prior: PriorParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw rates through the infinite-items Beta posterior.

    x_j ~ Beta(nu r_j + S_j, nu + N_j + 1) and theta_j = -ln x_j, which is
    exact in the n -> infinity limit and an approximation at finite n.
    """
    t = stats.t_max
    a = prior.nu * prior.r_vec(t) + stats.s_vector(sigma)
    b = prior.nu + stats.N_j + 1.0
    if np.any(a <= 0):
        raise ValueError("need nu r_j + S_j > 0 for every rank")
    x = rng.beta(a, b)
    # beta() can underflow to 0 for extreme shapes; -ln x must stay finite
    x = np.maximum(x, 1e-300)
    return -np.log(x)


@lru_cache(maxsize=65536)
def _n1_log_weights(nu: float, r_j: float, m: int) -> np.ndarray:
    """Log Beta(nu r_j + k, nu + 2) for k = 0..m, cached per rank geometry."""
    k = np.arange(m + 1, dtype=np.float64)
    w = betaln(nu * r_j + k, nu + 2.0)
    w.flags.writeable = False
    return w


def sample_sigma_n1(
    pi: TopTRanking,
    prior: PriorParams,
    rng: np.random.Generator,
) -> Permutation:
    """Approximate center draw for a cluster holding the single point ``pi``.

    Rank by rank, code value V_j = k is drawn with weight Beta(nu r_j + k,
    nu + 2) over k = 0..n-j, the j-th listed item of ``pi`` is placed at
    the (V_j+1)-th free center position, and the unlisted items fill the
    leftover positions uniformly.
    """
    n, t = pi.n, pi.t
    r = prior.r_vec(t)
    order = np.full(n, -1, dtype=np.int64)
    free = list(range(n))
    for j in range(t):
        logw = _n1_log_weights(float(prior.nu), float(r[j]), n - 1 - j)
        v = _log_categorical(logw, rng)
        order[free.pop(v)] = pi.items[j]
    listed = np.zeros(n, dtype=bool)
    listed[pi.items] = True
    rest = np.flatnonzero(~listed)  # ascending, like setdiff1d, minus its sort machinery
    order[np.array(free, dtype=np.int64)] = rest[rng.permutation(len(rest))]
    return Permutation(order)
