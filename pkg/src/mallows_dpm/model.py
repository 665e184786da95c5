"""Generalized Mallows likelihoods over top-t rankings, their conjugate
posterior energy, and the finite-support Beta integrals behind the
collapsed predictive weights.

Everything works in log space.  The per-rank normalizer is the geometric
sum 1 + e^{-theta} + ... + e^{-m theta}; the finite-support Beta value is
its Laplace-transform analogue

    integral_0^inf e^{-a theta} (sum_{k<=m} e^{-k theta})^{-(b-1)} dtheta,

evaluated after the substitution x = e^{-theta} by adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import betaln, gammaln

from . import _kernels as kern
from .errors import NumericalError
from .rankings import Permutation, SuffStats, TopTRanking


@dataclass(frozen=True)
class GmParams:
    """A center permutation plus one dispersion per rank position."""

    sigma: Permutation
    theta: np.ndarray

    def __post_init__(self):
        th = np.ascontiguousarray(self.theta, dtype=np.float64)
        if th.ndim != 1 or th.size == 0:
            raise ValueError("theta must be a nonempty vector")
        if not np.isfinite(th).all() or (th < 0).any():
            raise ValueError("dispersions must be finite and nonnegative")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)


@dataclass(frozen=True)
class PriorParams:
    """Conjugate pseudo-observation prior plus the DP concentration.

    nu weighs one pseudo-ranking whose per-rank discrepancy is r; alpha
    is the Dirichlet process concentration.
    """

    nu: float = 1.0
    r: float | tuple = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.nu) and self.nu > 0):
            raise ValueError("nu must be positive")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError("alpha must be positive")
        r = self.r
        if np.ndim(r) == 0:
            r = float(r)
            if not (np.isfinite(r) and r > 0):
                raise ValueError("r must be positive")
        else:
            r = tuple(float(x) for x in r)
            if not all(np.isfinite(x) and x > 0 for x in r):
                raise ValueError("r entries must be positive")
        object.__setattr__(self, "r", r)

    def r_vec(self, t: int) -> np.ndarray:
        """Pseudo-discrepancy per rank, broadcast to length t."""
        if np.ndim(self.r) == 0:
            return np.full(t, float(self.r))
        arr = np.asarray(self.r, dtype=np.float64)
        if arr.size < t:
            raise ValueError(f"r has {arr.size} entries but {t} ranks are needed")
        return arr[:t].copy()


def log_psi(theta: float, m: int) -> float:
    """Log of the truncated geometric sum sum_{k=0}^{m} e^{-k theta}."""
    theta = float(theta)
    if theta < 0 or not math.isfinite(theta):
        raise ValueError("dispersion must be finite and nonnegative")
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return 0.0
    if theta == 0.0:
        return math.log(m + 1)
    return math.log(-math.expm1(-(m + 1) * theta)) - math.log(-math.expm1(-theta))


def log_psi_vec(theta: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Vectorized :func:`log_psi` with broadcasting."""
    th = np.asarray(theta, dtype=np.float64)
    mm = np.asarray(m, dtype=np.float64)
    if (th < 0).any() or not np.isfinite(th).all():
        raise ValueError("dispersions must be finite and nonnegative")
    th, mm = np.broadcast_arrays(th, mm)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.log(-np.expm1(-(mm + 1.0) * th)) - np.log(-np.expm1(-th))
    out = np.where(th == 0.0, np.log(mm + 1.0), val)
    return np.where(mm == 0, 0.0, out)


def _log_prob_from_code(s: np.ndarray, theta: np.ndarray, n: int) -> float:
    t = s.shape[0]
    th = theta[:t]
    m = n - 1 - np.arange(t)
    return float(-(th * s).sum() - log_psi_vec(th, m).sum())


def gm_log_prob(pi: TopTRanking, params: GmParams) -> float:
    """Log probability of a top-t ranking under one mixture component."""
    if pi.n != params.sigma.n:
        raise ValueError("ranking and center sizes differ")
    if params.theta.size < pi.t:
        raise ValueError("dispersion vector shorter than the ranking")
    s = kern.s_code(pi.items, params.sigma.rank)
    return _log_prob_from_code(s, params.theta, pi.n)


def sample_gm(params: GmParams, t: int, rng: np.random.Generator) -> TopTRanking:
    """Draw a top-t ranking; one inverse-CDF uniform per rank position."""
    n = params.sigma.n
    if not 1 <= t <= n - 1:
        raise ValueError("need 1 <= t <= n-1")
    if params.theta.size < t:
        raise ValueError("dispersion vector shorter than requested length")
    th = params.theta[:t]
    m = (n - 1 - np.arange(t)).astype(np.float64)
    u = rng.random(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        span = -np.expm1(-th * (m + 1.0))
        k = np.ceil(np.log1p(-u * span) / (-th)) - 1.0
    uniform = np.floor(u * (m + 1.0))
    s = np.where(th == 0.0, uniform, k)
    s = np.clip(s, 0.0, m).astype(np.int64)
    return TopTRanking(kern.build_from_code(s, params.sigma.order), n)


def posterior_log_energy(
    sigma: Permutation, theta: np.ndarray, stats: SuffStats, prior: PriorParams
) -> float:
    """Unnormalized log posterior of (sigma, theta) given summed statistics."""
    if sigma.n != stats.n:
        raise ValueError("center size differs from statistics")
    th = np.asarray(theta, dtype=np.float64)
    if th.size < stats.t_max:
        raise ValueError("dispersion vector shorter than statistics")
    th = th[: stats.t_max]
    t = stats.t_max
    S = stats.s_vector(sigma)
    r = prior.r_vec(t)
    m = stats.n - 1 - np.arange(t)
    a = prior.nu * r + S
    b = prior.nu + stats.N_j
    return float(-(a * th).sum() - (b * log_psi_vec(th, m)).sum())


def log_marginal_single(n: int, t: int) -> float:
    """Log marginal of one top-t ranking with the center integrated out
    uniformly: (n-t)!/n!."""
    if not 1 <= t <= n - 1:
        raise ValueError("need 1 <= t <= n-1")
    return float(gammaln(n - t + 1) - gammaln(n + 1))


def _lpsi_ratio(x: float, n: int) -> float:
    """log((1 - x^{n+1}) / (1 - x)) for x in [0, 1], stably."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return math.log(n + 1.0)
    v = (n + 1.0) * math.log(x)
    return math.log(-math.expm1(v)) - math.log1p(-x)


_QUAD_OPTS = {"epsabs": 1e-300, "epsrel": 1e-11, "limit": 300}


def _log_beta_finite_impl(a: float, b: float, n: int) -> float:
    if b == 1.0:
        return -math.log(a)
    omb = 1.0 - b

    def g(x: float) -> float:
        if x <= 0.0:
            return -math.inf
        if x >= 1.0:
            return omb * math.log(n + 1.0)
        return (a - 1.0) * math.log(x) + omb * _lpsi_ratio(x, n)

    if a > 1.0:
        res = minimize_scalar(
            lambda x: -g(x),
            bounds=(1e-12, 1.0 - 1e-12),
            method="bounded",
            options={"xatol": 1e-12},
        )
        xhat = float(res.x)
        gmax = g(xhat)
        if not math.isfinite(gmax):
            raise NumericalError(f"peak location failed for ({a}, {b}, {n})")
        out = quad(
            lambda x: math.exp(g(x) - gmax), 0.0, 1.0,
            points=[xhat], full_output=1, **_QUAD_OPTS,
        )
        val = out[0]
        if not val > 0.0:
            raise NumericalError(f"quadrature failed for ({a}, {b}, {n})")
        return gmax + math.log(val)

    # a <= 1: substitute u = x^a, removing the endpoint singularity
    inv_a = 1.0 / a

    def f(u: float) -> float:
        if u <= 0.0:
            return 1.0
        x = 1.0 if u >= 1.0 else u**inv_a
        return math.exp(omb * _lpsi_ratio(x, n))

    out = quad(f, 0.0, 1.0, full_output=1, **_QUAD_OPTS)
    val = out[0]
    if not val > 0.0:
        raise NumericalError(f"quadrature failed for ({a}, {b}, {n})")
    return math.log(val) - math.log(a)


@lru_cache(maxsize=500_000)
def _log_beta_finite_cached(a: float, b: float, n: int) -> float:
    return _log_beta_finite_impl(a, b, n)


def log_beta_finite(a: float, b: float, n: int) -> float:
    """Log of the finite-support analogue of the Beta function.

    Equals log Beta(a, b) in the n -> infinity limit; the support size
    enters through the geometric normalizer with maximum code value n.
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and a > 0):
        raise ValueError("a must be positive")
    if not (math.isfinite(b) and b >= 0):
        raise ValueError("b must be nonnegative")
    n = int(n)
    if n < 1:
        raise ValueError("support size must be at least 1")
    return _log_beta_finite_cached(round(a, 12), round(b, 12), n)


def approx_error(a: float, b: float, n: int) -> float:
    """Relative mass the infinite-support Beta value misses: 1 - B/B_n."""
    if not b > 0:
        raise ValueError("b must be positive")
    if b == 1.0:
        return 0.0
    err = -math.expm1(float(betaln(a, b)) - log_beta_finite(a, b, n))
    return max(err, 0.0)


def _predictive_from_code(
    s: np.ndarray,
    S: np.ndarray,
    N_j: np.ndarray,
    n: int,
    prior: PriorParams,
    approximate: bool,
) -> float:
    t = s.shape[0]
    r = prior.r_vec(t)
    a2 = prior.nu * r + S[:t]
    b2 = prior.nu + N_j[:t] + 1.0
    a1 = a2 + s
    if approximate:
        return float((betaln(a1, b2 + 1.0) - betaln(a2, b2)).sum())
    total = 0.0
    for j in range(t):
        m = n - 1 - j
        total += log_beta_finite(a1[j], b2[j] + 1.0, m)
        total -= log_beta_finite(a2[j], b2[j], m)
    return total


def log_predictive_ratio(
    pi: TopTRanking,
    sigma: Permutation,
    stats: SuffStats,
    prior: PriorParams,
    approximate: bool = False,
) -> float:
    """Log predictive mass of ``pi`` joining the cluster whose statistics
    (excluding ``pi``) are given, conditioned on the cluster center with
    dispersions integrated out.

    approximate=True swaps each finite-support Beta value for the plain
    Beta function, which is the fast variant the Beta-ratio chain uses.
    """
    if pi.n != sigma.n or pi.n != stats.n:
        raise ValueError("sizes differ")
    if pi.t > stats.t_max:
        raise ValueError("ranking longer than the statistics allow")
    s = kern.s_code(pi.items, sigma.rank)
    S = stats.s_vector(sigma)
    return _predictive_from_code(s, S, stats.N_j, stats.n, prior, approximate)
