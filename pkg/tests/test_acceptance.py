"""Acceptance suite: ten primary criteria, one pass/fail line each.

Each test prints its verdict directly to the terminal (bypassing capture)
so the full checklist is visible in any run, then asserts.
"""

import math
import time

import numpy as np
import pytest

from mlbn.bench import (
    ExperimentConfig,
    gmm_stability_probe,
    run_inactivation_sweep,
    smoothed_means,
)
from mlbn.gmm import (
    em_fit,
    estimate_gmm,
    estimator_variance_check,
    min_estimator,
    smallest_peak,
)
from mlbn.network import dag_kleene_star, make_dag
from mlbn.presets import four_node_chain_example, star_example, ten_node_preset, triangle
from mlbn.qp import kkt_report, solve_pair_1d, solve_pair_generic
from mlbn.simulate import (
    InnovationSpec,
    NoiseSpec,
    differences,
    sample_frechet,
    simulate,
)
from mlbn.tropical import (
    MASKED,
    TropicalMatrix,
    classify_edges,
    kleene_star,
    membership,
    polytrope_facets,
    trop_matmul,
)


@pytest.fixture
def verdict(capfd):
    """One pass/fail line per criterion, printed outside pytest's capture."""

    def _report(name: str, ok: bool, detail: str) -> None:
        line = f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
        with capfd.disabled():
            print(line, flush=True)
        assert ok, line

    return _report


def brute_force_closure(n, arcs):
    from test_tropical import brute_force_closure as oracle

    return oracle(n, arcs)


def test_kleene_star_golden(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(100)
    topology = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]
    ok = True
    for _ in range(100):
        # dyadic weights keep path sums exact
        arcs = {e: float(rng.integers(-2048, 2048)) / 256.0 for e in topology}
        dag = make_dag(4, [(i, j, w) for (i, j), w in arcs.items()])
        ks = dag_kleene_star(dag)
        if not np.array_equal(ks.closure.entries, brute_force_closure(4, arcs)):
            ok = False
        if trop_matmul(ks.closure, ks.closure) != ks.closure:
            ok = False
    elapsed = time.perf_counter() - t0
    verdict(
        "kleene-star golden",
        ok and elapsed < 1.0,
        f"100 randomized 4-vertex trials, exact closure + idempotence, {elapsed:.2f}s",
    )


def test_noise_free_exact_recovery(verdict):
    t0 = time.perf_counter()
    dag = star_example()  # weights 3, 1.5, 2
    s = simulate(dag, InnovationSpec(), NoiseSpec.constant(0.0, 4), 2000, seed=0)
    estimates = {
        (e.i, e.j): min_estimator(differences(s, e.i, e.j)).estimate
        for e in dag.edges
    }
    ok = (
        estimates[(1, 4)] == 3.0
        and estimates[(2, 4)] == 1.5
        and estimates[(3, 4)] == 2.0
    )
    elapsed = time.perf_counter() - t0
    verdict(
        "noise-free exact recovery",
        ok and elapsed < 1.0,
        f"minimum estimator returned {sorted(estimates.values())} exactly, {elapsed:.2f}s",
    )


def test_polytrope_membership(verdict):
    t0 = time.perf_counter()
    dag = ten_node_preset()
    facets = polytrope_facets(dag_kleene_star(dag))
    s = simulate(dag, InnovationSpec(), NoiseSpec.constant(0.0, 10), 10_000, seed=1)
    ok = all(membership(row, facets, tol=1e-9) for row in s.log_x)
    elapsed = time.perf_counter() - t0
    verdict(
        "polytrope membership",
        ok and elapsed < 5.0,
        f"10000 noise-free samples vs {facets.n_constraints} facets at 1e-9, {elapsed:.2f}s",
    )


def test_masked_triangle_identifiability(verdict):
    t0 = time.perf_counter()
    dag = triangle(w12=1.0, w23=1.0, w13=0.2)
    flags = classify_edges(dag)
    worst = 0.0
    hit_direct = False
    for seed in range(20):
        s = simulate(dag, InnovationSpec(), NoiseSpec.constant(0.0, 3), 2000, seed=seed)
        est = min_estimator(differences(s, 1, 3)).estimate
        worst = max(worst, abs(est - 2.0))
        hit_direct = hit_direct or abs(est - 0.2) < 1e-6
    ok = worst <= 1e-12 and not hit_direct and flags[(1, 3)] == MASKED
    elapsed = time.perf_counter() - t0
    verdict(
        "masked-triangle identifiability",
        ok and elapsed < 5.0,
        f"20 seeds, |est - (w12+w23)| <= {worst:.2e}, edge 1->3 {flags[(1, 3)]}, {elapsed:.2f}s",
    )


def test_smallest_peak_accuracy(verdict):
    t0 = time.perf_counter()
    dag = star_example()
    noise = NoiseSpec.constant(0.1, 4)
    errors = []
    for seed in range(50):
        s = simulate(dag, InnovationSpec(), noise, 2000, seed=seed)
        est = estimate_gmm(differences(s, 2, 4), k_max=2, restarts=4, seed=seed)
        errors.append(abs(est.estimate - 1.5))
    med = float(np.median(errors))
    # sampling-law clause: the re-noised minimum of Cor. 3.3 has variance
    # sigma_2^2 + sigma_4^2 = 0.02
    check = estimator_variance_check(
        dag, InnovationSpec(), noise, 2, 4, trials=50, N=2000, seed=0
    )
    var_ok = 0.5 * 0.02 <= check.empirical_variance <= 1.5 * 0.02
    elapsed = time.perf_counter() - t0
    verdict(
        "smallest-peak accuracy",
        med <= 0.05 and var_ok and elapsed < 120.0,
        f"median |err|={med:.3f} <= 0.05, variance {check.empirical_variance:.4f} in "
        f"[0.01, 0.03], {elapsed:.1f}s",
    )


def test_qp_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(200)
    worst_pair = 0.0
    kkt_ok = True
    for _ in range(50):
        n = int(rng.integers(2, 41))
        y = rng.normal(0.0, 1.0, n)
        k1 = float(rng.uniform(0.1, 0.9))
        fast = solve_pair_1d(y, k1, 1.0 - k1)
        slow = solve_pair_generic(y, k1, 1.0 - k1)
        worst_pair = max(worst_pair, abs(fast.omega_prime - slow.omega_prime))
        kkt_ok = kkt_ok and kkt_report(fast, y).passed and kkt_report(slow, y).passed
    worst_grid = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 60))
        y = rng.normal(0.0, 1.0, n)
        k1 = float(rng.uniform(0.05, 0.95))
        sol = solve_pair_1d(y, k1, 1.0 - k1)
        yp = y - y.min()
        grid = np.linspace(-0.5, yp.max() + 0.5, 100_001)
        objs = k1 * np.maximum(0.0, yp[None, :] - grid[:, None]).sum(axis=1) + (
            1.0 - k1
        ) * grid**2
        worst_grid = max(worst_grid, abs(sol.omega_prime - grid[int(np.argmin(objs))]))
    elapsed = time.perf_counter() - t0
    verdict(
        "qp oracle equivalence",
        worst_pair <= 1e-8 and kkt_ok and worst_grid <= 2e-4 and elapsed < 30.0,
        f"1-D vs active-set {worst_pair:.1e} <= 1e-8, KKT clean, grid {worst_grid:.1e} "
        f"<= 2e-4, {elapsed:.1f}s",
    )


def test_table1_desk_scale(verdict):
    t0 = time.perf_counter()
    # the reference threshold at N=1000 is 23 path observations
    med_hi, iqr_hi, _ = gmm_stability_probe(1000, 46, 0.1, seeds=range(20), restarts=4)
    med_lo, _, _ = gmm_stability_probe(1000, 11, 0.1, seeds=range(20), restarts=4)
    ok = med_hi <= 0.1 and med_lo >= 0.5
    elapsed = time.perf_counter() - t0
    verdict(
        "table-1 desk scale",
        ok,
        f"2x threshold: median |est|={med_hi:.3f} <= 0.1; "
        f"half threshold: median |est|={med_lo:.2f} >= 0.5, {elapsed:.1f}s",
    )


@pytest.mark.slow
def test_table1_paper_scale(verdict):
    t0 = time.perf_counter()
    # bracket the minimal stable path count at N=50000 inside +/-25% of the
    # reference 578 (1.16%): unstable at the lower band edge, stable at the
    # upper one.  Stability is monotone in the observation count, so the two
    # probes pin the threshold to the accepted band; a full bisection at the
    # estimator's default settings does not fit the time budget on one core.
    seeds = range(10)
    reference = 578
    lo = math.floor(reference * 0.75)  # 433
    hi = math.ceil(reference * 1.25)  # 723

    def stable(count):
        med, iqr, _ = gmm_stability_probe(
            50_000, count, 0.1, seeds=seeds, restarts=4
        )
        return med <= 0.1 and iqr <= 0.1

    below = stable(lo)
    above = stable(hi)
    elapsed = time.perf_counter() - t0
    ok = (not below) and above and elapsed < 900
    verdict(
        "table-1 paper scale",
        ok,
        f"threshold bracketed in ({lo}, {hi}] obs around reference 578 "
        f"(+/-25%), {elapsed:.0f}s",
    )


def test_inactivation_sweep_shape(verdict):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        scenario="inactivation",
        N=1000,
        sigma=0.1,
        seeds=tuple(range(8)),
        grid=(0.011, 0.023, 0.046, 0.092, 0.2),
    )
    result = run_inactivation_sweep(cfg)
    cols = result.columns
    gmm_by_point: dict = {}
    qp_by_point: dict = {}
    for row in result.rows:
        if row[cols.index("gmm_abs_error")] is not None:
            gmm_by_point.setdefault(row[0], []).append(row[cols.index("gmm_abs_error")])
        qp_by_point.setdefault(row[0], []).append(row[cols.index("qp_abs_error")])
    gmm_means = [float(np.mean(v)) for _, v in sorted(gmm_by_point.items())]
    smoothed = smoothed_means(gmm_means)
    monotone = all(a >= b - 1e-12 for a, b in zip(smoothed, smoothed[1:]))
    qp_medians = {p: float(np.median(v)) for p, v in qp_by_point.items()}
    qp_ok = all(m <= 0.15 for m in qp_medians.values())
    elapsed = time.perf_counter() - t0
    verdict(
        "inactivation sweep shape",
        monotone and qp_ok and elapsed < 300.0,
        f"smoothed GMM mean |err| non-increasing {['%.2f' % m for m in smoothed]}, "
        f"QP medians max {max(qp_medians.values()):.3f} <= 0.15, {elapsed:.0f}s",
    )


def test_em_invariants(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(300)
    monotone = True
    resp_ok = True
    for _ in range(1000):
        n = int(rng.integers(20, 120))
        k = int(rng.integers(1, 4))
        centers = rng.normal(0.0, 2.0, k)
        x = rng.normal(centers[rng.integers(0, k, n)], 0.3)
        fit = em_fit(x, k, seed=0, max_iter=150, keep_responsibilities=True)
        trace = np.array(fit.loglik_trace)
        if not (np.diff(trace) >= -1e-7 * n).all():
            monotone = False
        if np.abs(fit.responsibilities.sum(axis=1) - 1.0).max() > 1e-10:
            resp_ok = False
    # shift equivariance of the end-to-end smallest peak
    x = np.concatenate([rng.normal(0.0, 0.1, 300), rng.normal(2.0, 0.1, 700)])
    a = smallest_peak(em_fit(x, 2, seed=1)).estimate
    b = smallest_peak(em_fit(x + 5.0, 2, seed=1)).estimate
    shift_ok = abs((b - a) - 5.0) <= 1e-9
    elapsed = time.perf_counter() - t0
    verdict(
        "em invariants",
        monotone and resp_ok and shift_ok,
        f"1000 fits: loglik monotone, responsibilities sum to 1, shift "
        f"equivariance {abs((b - a) - 5.0):.1e} <= 1e-9, {elapsed:.0f}s",
    )


def test_frechet_sampler(verdict):
    t0 = time.perf_counter()
    spec = InnovationSpec()
    z = np.sort(sample_frechet(spec, np.random.default_rng(400), 100_000))
    n = len(z)
    F = spec.cdf(z)
    ks = max(
        np.abs(F - np.arange(1, n + 1) / n).max(),
        np.abs(F - np.arange(0, n) / n).max(),
    )
    med_err = abs(np.median(z) - 1.0 / math.log(2.0)) * math.log(2.0)
    elapsed = time.perf_counter() - t0
    verdict(
        "frechet sampler",
        ks <= 0.01 and med_err <= 0.02,
        f"KS={ks:.4f} <= 0.01, median within {100 * med_err:.2f}% of 1/ln2, {elapsed:.1f}s",
    )
