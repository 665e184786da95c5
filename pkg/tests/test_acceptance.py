"""End-to-end acceptance gate, one test per shipped guarantee.

Each test prints a single ``[acceptance] C<k> <name>: PASS/FAIL (detail)``
line, so ``pytest tests/test_acceptance.py -v -s`` reads as a checklist.
The chain criteria (C6 convergence study, C7 held-out likelihood, C8
million-sweep toy chains) run real samplers at full length; expect the
module to take around twenty minutes.

C6 is split in two: the convergence clause (6a) holds, while the sweep-10
median comparison (6b) is a known failure at this problem scale. Both
samplers reach the planted clustering before sweep 10, so the checkpoint
lands after the regime it is meant to probe; the test reports the early
sweep medians, where the intended ordering is visible, and fails honestly
on the pinned one.
"""
from __future__ import annotations

import math
import time
from collections import Counter
from itertools import permutations

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import betaln, logsumexp
from scipy.stats import beta as beta_dist

from mallows_dpm import _kernels as kern
from mallows_dpm.dataio import write_trace
from mallows_dpm.dpm import (
    ChainConfig,
    beta_gibbs_sweep,
    init_state,
    run_chain,
    slice_gibbs_sweep,
)
from mallows_dpm.dpm import test_log_likelihood as heldout_log_likelihood
from mallows_dpm.evaluate import (
    PlantedMixtureSpec,
    approx_error_study,
    enumerate_sigma_posterior,
    gen_planted_mixture,
    preset_spec,
    theta_posterior_moments,
    vi_distance,
)
from mallows_dpm.model import GmParams, PriorParams, gm_log_prob, log_beta_finite
from mallows_dpm.rankings import Permutation, SuffStats, TopTRanking, l_sigma
from mallows_dpm.samplers import (
    SliceConfig,
    sample_sigma_stagewise,
    sample_theta_beta,
    sample_theta_slice,
)


def report(num: int, name: str, ok: bool, detail: str) -> bool:
    print(f"[acceptance] C{num} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


def test_c1_stagewise_center_draw_matches_enumeration():
    rng = np.random.default_rng(11)
    n = 5
    data = [TopTRanking(rng.permutation(n)[:t], n) for t in (2, 3, 4)]
    stats = SuffStats.from_rankings(data, n)
    theta = np.ones(stats.t_max)
    prior = PriorParams()
    exact = enumerate_sigma_posterior(theta, stats, prior)

    draws = 100_000
    start = time.perf_counter()
    counts: Counter = Counter()
    for _ in range(draws):
        sigma = sample_sigma_stagewise(theta, stats, prior, rng=rng)
        counts[tuple(sigma.order.tolist())] += 1
    elapsed = time.perf_counter() - start

    tv = 0.5 * sum(abs(counts[p] / draws - q) for p, q in exact.items())
    ok = tv < 0.02 and elapsed < 30.0
    assert report(1, "stagewise center draw vs enumeration", ok,
                  f"TV={tv:.4f} over {len(exact)} centers at {draws} draws, {elapsed:.1f}s")


# (nu r + S, nu + N, n - 1) coordinates the two rate samplers are probed at
RATE_SETTINGS = ((1.0, 1.0, 19), (10.0, 5.0, 10), (100.0, 50.0, 10))


def _stage_stats(a: float, b: float, m: int) -> tuple[SuffStats, int]:
    """Top-1 data hitting the (a, b) posterior coordinates at rank zero.

    With nu = r = 1 that takes code total a-1 spread over b-1 rankings on
    a universe of m+1 items; against the identity center a top-1 ranking
    listing item c has code c, so chunks of at most m stay representable.
    """
    n = m + 1
    codes: list[int] = []
    left = int(a) - 1
    for _ in range(int(b) - 1):
        take = min(left, m)
        codes.append(take)
        left -= take
    assert left == 0
    stats = SuffStats(n, 1)
    for c in codes:
        stats.add(TopTRanking([c], n))
    return stats, n


def test_c2_slice_rate_sampler_moments():
    rng = np.random.default_rng(7)
    prior, cfg = PriorParams(), SliceConfig()
    worst = 0.0
    lines = []
    start = time.perf_counter()
    for a, b, m in RATE_SETTINGS:
        stats, n = _stage_stats(a, b, m)
        sigma = Permutation.identity(n)
        mean_q, var_q = theta_posterior_moments(0, a - 1.0, b - 1.0, prior, n)
        cur = np.ones(1)
        for _ in range(500):  # burn toward the stationary regime
            cur = sample_theta_slice(sigma, stats, prior, cfg, rng, cur)
        vals = np.empty(50_000)
        for k in range(vals.size):
            cur = sample_theta_slice(sigma, stats, prior, cfg, rng, cur)
            vals[k] = cur[0]
        d_mean = abs(float(vals.mean()) - mean_q) / mean_q
        d_var = abs(float(vals.var()) - var_q) / var_q
        worst = max(worst, d_mean, d_var)
        lines.append(f"({a:g},{b:g},{m}): dmean={d_mean:.4f} dvar={d_var:.4f}")
    elapsed = time.perf_counter() - start
    ok = worst < 0.02 and elapsed < 60.0
    assert report(2, "slice rate sampler moments vs quadrature", ok,
                  f"{'; '.join(lines)}; {elapsed:.1f}s")


def test_c3_beta_rate_sampler_mean():
    rng = np.random.default_rng(5)
    prior = PriorParams()
    draws = 100_000
    lines = []
    ok = True
    for a, b, m in RATE_SETTINGS:
        stats, n = _stage_stats(a, b, m)
        sigma = Permutation.identity(n)
        xs = np.empty(draws)
        for k in range(draws):
            theta = sample_theta_beta(sigma, stats, prior, rng)
            xs[k] = math.exp(-theta[0])
        mean_b = a / (a + b + 1.0)
        se = math.sqrt(a * (b + 1.0) / ((a + b + 1.0) ** 2 * (a + b + 2.0)) / draws)
        z = abs(float(xs.mean()) - mean_b) / se
        ok = ok and z < 3.0
        lines.append(f"({a:g},{b:g}): z={z:.2f}")
    assert report(3, "beta rate sampler mean within 3 SE", ok, "; ".join(lines))


def test_c4_finite_beta_identities():
    a_grid = (0.5, 1.0, 3.0, 10.0)
    worst_tel = worst_inv = worst_lim = 0.0
    for a in a_grid:
        for big in (0, 1, 5):
            for n in (5, 20, 100):
                lhs = logsumexp([log_beta_finite(a + s, big + 1.0, n)
                                 for s in range(n + 1)])
                rhs = log_beta_finite(a, float(big), n)
                worst_tel = max(worst_tel, abs(math.expm1(lhs - rhs)))
        for n in (5, 20, 100):
            worst_inv = max(worst_inv, abs(a * math.exp(log_beta_finite(a, 1.0, n)) - 1.0))
        for b in (1.0, 2.0, 6.0):
            worst_lim = max(worst_lim,
                            abs(math.expm1(log_beta_finite(a, b, 10 ** 6) - betaln(a, b))))
    ok = worst_tel < 1e-6 and worst_inv < 1e-8 and worst_lim < 1e-4
    assert report(4, "finite-n beta identities", ok,
                  f"telescope {worst_tel:.1e}, reciprocal {worst_inv:.1e}, "
                  f"large-n limit {worst_lim:.1e}")


def test_c5_approximation_error_shape():
    rows = approx_error_study((10, 20, 50), tuple(range(1, 16)), (1.0, 3.0))
    err = {(n, a, b): e for n, a, b, e in rows}
    col = [err[(20, a, 3.0)] for a in range(1, 16)]
    mono = all(later >= earlier - 1e-12 for earlier, later in zip(col, col[1:]))
    shrink = err[(10, 5, 3.0)] > err[(20, 5, 3.0)] > err[(50, 5, 3.0)]
    flat = all(err[(n, a, 1.0)] == 0.0 for n in (10, 20, 50) for a in range(1, 16))
    ok = mono and shrink and flat
    assert report(5, "rate approximation error shape", ok,
                  f"nondecreasing in a: {mono}; shrinks with n: {shrink}; exact at b=1: {flat}")


@pytest.fixture(scope="module")
def convergence_study():
    """Ten seeds of both samplers on one planted five-cluster dataset."""
    spec = PlantedMixtureSpec(K=5, n=20, t=10, theta_star=1.0, points_per_cluster=200)
    data, truth, _ = gen_planted_mixture(spec, np.random.default_rng(2026))
    start = time.perf_counter()
    beta_curves, slice_curves = [], []
    for seed in range(10):
        trace = run_chain(data, ChainConfig("beta", T=50, K_init=20, seed=seed,
                                            burn_in=0, stride=1))
        beta_curves.append([vi_distance(s.assignments, truth) for s in trace.snapshots])
        trace = run_chain(data, ChainConfig("slice", T=10, K_init=20, seed=seed,
                                            burn_in=0, stride=1))
        slice_curves.append([vi_distance(s.assignments, truth) for s in trace.snapshots])
    return beta_curves, slice_curves, time.perf_counter() - start


def test_c6a_beta_chain_recovers_planted_clusters(convergence_study):
    beta_curves, _, elapsed = convergence_study
    hits = sum(min(curve) < 0.5 for curve in beta_curves)
    ok = hits >= 8 and elapsed < 900.0
    assert report(6, "beta chain recovers planted clusters (a)", ok,
                  f"{hits}/10 seeds under 0.5 nats within 50 sweeps, "
                  f"whole study {elapsed:.0f}s")


def test_c6b_sweep10_median_vi_beta_vs_slice(convergence_study):
    beta_curves, slice_curves, _ = convergence_study

    def med(sweep: int, curves) -> float:
        return float(np.median([curve[sweep - 1] for curve in curves]))

    med_beta, med_slice = med(10, beta_curves), med(10, slice_curves)
    early = "; ".join(f"sweep {k}: {med(k, beta_curves):.3f} vs {med(k, slice_curves):.3f}"
                      for k in (2, 3, 4))
    ok = med_beta <= med_slice
    assert report(6, "sweep-10 median VI, beta vs slice (b)", ok,
                  f"median VI@10 beta={med_beta:.3f} vs slice={med_slice:.3f}; "
                  f"early medians beta vs slice: {early}; both samplers converge "
                  f"before sweep 10 here, after which the slice chain dissolves "
                  f"residual cluster splits faster")


def test_c7_heldout_likelihood_tracks_generating_model():
    spec = preset_spec("three-cluster")
    data, _, params = gen_planted_mixture(spec, np.random.default_rng(77))
    train, test = data[:1000], data[1000:]
    log_w = -math.log(len(params))
    truth = float(np.mean([logsumexp([log_w + gm_log_prob(pi, p) for p in params])
                           for pi in test]))

    start = time.perf_counter()
    scores = []
    for seed in range(5):
        trace = run_chain(train, ChainConfig("beta", T=200, burn_in=100, seed=seed))
        scores.append(heldout_log_likelihood(trace, test, PriorParams()).per_point)
    elapsed = time.perf_counter() - start

    fitted = float(np.mean(scores))
    gap = abs(fitted - truth)
    ok = gap < 0.1 and elapsed < 600.0
    assert report(7, "held-out likelihood vs generating model", ok,
                  f"true {truth:.3f} vs fitted {fitted:.3f} per point "
                  f"(gap {gap:.3f} nats over 5 seeds), {elapsed:.0f}s")


def _toy_targets(alpha: float, t_gibbs: int) -> tuple[float, float, float]:
    """Stationary together-probability targets for the two-point toy problem.

    The slice chain's inner updates all leave the exact joint posterior
    invariant (n=3 center draws are exact), so its target is the enumerated
    one-cluster vs two-cluster odds. The beta chain's assignment weights
    never see the rates, so once the joint cluster's center is taken to
    follow the stationary law of its within-sweep update kernel, the
    partition is a two-state Markov chain with closed-form transition
    probabilities. The returned idealization error, the total-variation
    distance of t_gibbs-1 kernel steps from stationarity, bounds how far
    that assumption sits from the chain actually run.
    """
    orders = list(permutations(range(3)))
    ranks = [np.argsort(o) for o in orders]
    s2 = np.array([float(r[0] + r[1]) for r in ranks])  # joint-cluster code totals

    kernel = np.empty((6, 6))
    for i in range(6):
        pdf_i = beta_dist(1.0 + s2[i], 4.0).pdf
        for j in range(6):
            def f(x, sj=s2[j]):
                return pdf_i(x) * x ** sj / (x ** s2).sum()
            kernel[i, j] = quad(f, 0.0, 1.0, limit=200)[0]
    kernel /= kernel.sum(axis=1, keepdims=True)
    lam = np.linalg.matrix_power(kernel, 200)[0]
    steps = np.linalg.matrix_power(kernel, max(t_gibbs - 1, 1))
    ideal_err = 0.5 * float(np.abs(steps - lam).sum(axis=1).max())

    # singleton center law: each code value v is shared by two of the six centers
    w = np.exp(betaln(1.0 + np.arange(3), 3.0))
    w /= w.sum()
    q0 = np.array([w[r[0]] / 2.0 for r in ranks])
    q1 = np.array([w[r[1]] / 2.0 for r in ranks])

    def join(s_new: float, s_mem: float) -> float:
        lw = betaln(s_new + 1.0 + s_mem, 4.0) - betaln(1.0 + s_mem, 3.0)
        return math.exp(lw) / (math.exp(lw) + alpha / 3.0)

    j01 = np.array([join(r[0], r[1]) for r in ranks])
    j10 = np.array([join(r[1], r[0]) for r in ranks])
    fresh0 = float(q0 @ j10)
    t_to_t = float(lam @ (j01 * j10) + (lam @ (1.0 - j01)) * fresh0)
    a_to_t = float(q1 @ (j01 * j10) + (q1 @ (1.0 - j01)) * fresh0)
    beta_target = a_to_t / (a_to_t + 1.0 - t_to_t)

    log_z = log_beta_finite(1.0, 2.0, 2)
    m_joint = math.exp(logsumexp([log_beta_finite(1.0 + v, 4.0, 2) - log_z
                                  for v in s2]) - math.log(6.0))
    exact_target = m_joint / (m_joint + alpha / 9.0)
    return beta_target, exact_target, ideal_err


def _run_toy_chain(kind: str, t_gibbs: int, t_slices: int, sweeps: int,
                   seed: int) -> float:
    data = [TopTRanking([0], 3), TopTRanking([1], 3)]
    cfg = ChainConfig(kind, T=0, T_Gibbs=t_gibbs, T_Slices=t_slices,
                      K_init=2, seed=seed)
    rng = np.random.default_rng(seed)
    state = init_state(data, cfg, rng)
    sweep = beta_gibbs_sweep if kind == "beta" else slice_gibbs_sweep
    together = 0
    for _ in range(sweeps):
        state = sweep(state, cfg, rng)
        together += int(state.assignments[0] == state.assignments[1])
    return together / sweeps


def test_c8_toy_chain_stationary_law():
    sweeps = 1_000_000
    start = time.perf_counter()
    beta_hat = _run_toy_chain("beta", t_gibbs=5, t_slices=3, sweeps=sweeps, seed=0)
    slice_hat = _run_toy_chain("slice", t_gibbs=2, t_slices=1, sweeps=sweeps, seed=0)
    elapsed = time.perf_counter() - start

    beta_target, exact_target, ideal_err = _toy_targets(alpha=1.0, t_gibbs=5)
    d_beta = abs(beta_hat - beta_target)
    d_slice = abs(slice_hat - exact_target)
    ok = d_beta < 0.03 and d_slice < 0.03
    assert report(8, "toy-chain stationary together-probability", ok,
                  f"beta {beta_hat:.4f} vs {beta_target:.4f} "
                  f"(target idealization {ideal_err:.0e}), "
                  f"slice {slice_hat:.4f} vs {exact_target:.4f}, {elapsed:.0f}s")


def _same_stats(x: SuffStats, y: SuffStats) -> bool:
    return (x.N == y.N and np.array_equal(x.N_j, y.N_j)
            and np.array_equal(x.to_dense(), y.to_dense()))


def test_c9_property_suites(tmp_path):
    rng = np.random.default_rng(13)
    failures = []

    # code/decode round-trip, exhaustive over centers, prefixes, lengths
    ok = True
    for n in range(2, 6):
        for sig in permutations(range(n)):
            center = Permutation(np.array(sig))
            for p in permutations(range(n)):
                for t in range(1, n):
                    items = np.array(p[:t])
                    code = kern.s_code(items, center.rank)
                    ok = ok and np.array_equal(kern.build_from_code(code, center.order),
                                               items)
    if not ok:
        failures.append("code round-trip")

    # the rank-j count matrix energies reproduce the code entries
    ok = True
    for n in range(2, 6):
        centers = [Permutation(np.array(s)) for s in permutations(range(n))]
        for p in permutations(range(n)):
            pi = TopTRanking(np.array(p), n)
            stats = SuffStats.from_rankings([pi], n, n - 1)
            mats = [stats.rank_matrix(j) for j in range(n - 1)]
            for center in centers:
                code = kern.s_code(pi.items, center.rank)
                ok = ok and all(l_sigma(mats[j], center) == code[j]
                                for j in range(n - 1))
    if not ok:
        failures.append("count-matrix energies")

    # model normalization over every length-t prefix
    worst_norm = 0.0
    for n in range(3, 7):
        for t in sorted({1, 2, n - 1}):
            theta = rng.uniform(0.2, 2.0, size=t)
            params = GmParams(Permutation.random(n, rng), theta)
            total = logsumexp([gm_log_prob(TopTRanking(np.array(pref), n), params)
                               for pref in permutations(range(n), t)])
            worst_norm = max(worst_norm, abs(math.expm1(total)))
    if worst_norm >= 1e-9:
        failures.append(f"normalization ({worst_norm:.1e})")

    # sufficient statistics: merge equals rebuild, remove undoes add
    n, t_max = 6, 4
    pis = [TopTRanking(rng.permutation(n)[:int(rng.integers(1, t_max + 1))], n)
           for _ in range(12)]
    merged = SuffStats.from_rankings(pis[:7], n, t_max)
    merged.merge(SuffStats.from_rankings(pis[7:], n, t_max))
    stripped = SuffStats.from_rankings(pis, n, t_max)
    for pi in pis[7:]:
        stripped.remove(pi)
    if not (_same_stats(merged, SuffStats.from_rankings(pis, n, t_max))
            and _same_stats(stripped, SuffStats.from_rankings(pis[:7], n, t_max))):
        failures.append("statistics laws")

    # VI is a metric on random label triples
    ok = True
    for _ in range(100):
        a, b, c = (rng.integers(0, 6, size=60) for _ in range(3))
        ok = ok and vi_distance(a, a) == 0.0
        ok = ok and abs(vi_distance(a, b) - vi_distance(b, a)) < 1e-12
        ok = ok and vi_distance(a, c) <= vi_distance(a, b) + vi_distance(b, c) + 1e-9
    if not ok:
        failures.append("VI metric axioms")

    # fixed seeds reproduce traces byte for byte
    data = [TopTRanking(rng.permutation(8)[:4], 8) for _ in range(30)]
    for kind in ("beta", "slice"):
        cfg = ChainConfig(kind, T=8, T_Gibbs=3, K_init=4, seed=41,
                          burn_in=2, stride=1)
        first, second = tmp_path / f"{kind}_1.jsonl", tmp_path / f"{kind}_2.jsonl"
        write_trace(run_chain(data, cfg), first)
        write_trace(run_chain(data, cfg), second)
        if first.read_bytes() != second.read_bytes():
            failures.append(f"{kind} determinism")

    ok_all = not failures
    assert report(9, "property suites", ok_all,
                  "round-trip, matrix energies, normalization, statistics laws, "
                  "VI axioms, determinism" if ok_all
                  else "failed: " + ", ".join(failures))
