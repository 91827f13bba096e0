"""Acceptance suite: one test per release criterion, each printing a status line."""

import io
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from corpus import circle_corpus, halfline_corpus, line_corpus
from scipy import stats

from freeineq import functionals as fn
from freeineq.cli import run
from freeineq.equilibrium import closed_form_equilibrium, euler_lagrange_residual, solve_equilibrium
from freeineq.harness import nu_lambda_entropy
from freeineq.matrix_calculus import (
    BranchError,
    hessian_lower_bound,
    random_su,
    trace_derivative,
    trace_hessian,
)
from freeineq.measures import (
    make_nu_lambda,
    make_power_density,
    make_semicircle,
    make_spike_measure,
    make_uniform_circle,
)
from freeineq.potentials import (
    cosine,
    kinked_quadratic,
    linear_halfline,
    mollified_potential,
    quadratic,
    squared_argument,
    zero_circle,
)
from freeineq.quadrature import hilbert_R, hilbert_T
from freeineq.sampler import EnsembleSpec, gue_direct, mean_eigenvalue_distribution, sample
from freeineq.transport import (
    check_matrix_contraction,
    check_su_matching_bound,
    matching_brute_force,
    optimal_matching_distance,
    wasserstein_R,
    wasserstein_T_geodesic,
)

# absolute floor for targets that vanish (alpha = rho), where relative error is undefined
ZERO_FLOOR = 1e-3


def close_rel(value, target, rtol):
    return abs(value - target) <= rtol * max(abs(target), ZERO_FLOOR)


# ----------------------------------------------------------------- 1


def test_c01_line_closed_forms(criterion):
    criterion("1")
    start = time.perf_counter()
    worst = 0.0
    for rho in (1.0, 2.0, 4.0):
        pot = quadratic(rho)
        B = closed_form_equilibrium(pot, 2000).B
        for alpha in (1.0, 2.0, 4.0):
            mu = make_semicircle(2 / math.sqrt(alpha), 2000)
            ent = 0.5 * math.log(alpha) + rho / (2 * alpha) - 0.5 * math.log(rho) - 0.5
            fis = (alpha - rho) ** 2 / alpha
            got_ent = fn.relative_free_entropy(mu, pot, B)
            got_fis = fn.fisher_rel_R(mu, pot)
            assert close_rel(got_ent, ent, 1e-3), (rho, alpha, got_ent, ent)
            assert close_rel(got_fis, fis, 1e-3), (rho, alpha, got_fis, fis)
            worst = max(worst, abs(got_ent - ent), abs(got_fis - fis))
    elapsed = time.perf_counter() - start
    assert elapsed < 10
    criterion("1", f"max abs error {worst:.2e}, {elapsed:.1f}s")


# ----------------------------------------------------------------- 2


def test_c02_circle_closed_forms(criterion):
    criterion("2")
    start = time.perf_counter()
    worst = 0.0
    measures = {a: make_nu_lambda(a, 2048) for a in (4.0, 8.0, 16.0)}
    for lam in (4.0, 8.0, 16.0):
        worst = max(worst, abs(fn.sigma(measures[lam]) + 1 / lam**2))
        pot = cosine(lam)
        for alpha, mu in measures.items():
            gap = (1 / alpha - 1 / lam) ** 2
            worst = max(
                worst,
                abs(fn.relative_free_entropy(mu, pot, 1 / lam**2) - gap),
                abs(fn.fisher_rel_T(mu, pot) - 2 * gap),
            )
    elapsed = time.perf_counter() - start
    assert worst <= 1e-4 and elapsed < 5
    criterion("2", f"max abs error {worst:.2e}, {elapsed:.1f}s")


# ----------------------------------------------------------------- 3


def test_c03_classical_entropy(criterion):
    criterion("3")
    for lam in (4.0, 8.0):
        mu = make_nu_lambda(lam, 8192)
        value = fn.relative_entropy(mu, make_uniform_circle(8192))
        assert abs(value - nu_lambda_entropy(lam)) <= 1e-6
    ratios = []
    for n in (8, 16, 32):
        mu = make_spike_measure(2, n, 2048)
        s = fn.relative_entropy(mu, make_uniform_circle(2048))
        assert abs(s - math.log(n)) <= 1e-10
        ratios.append(-fn.sigma(mu) / s)
    errors = np.abs(np.array(ratios) - 0.5)
    assert errors[-1] <= 0.15 and np.all(np.diff(errors) <= 0)
    criterion("3", f"-Sigma/S at n=8,16,32: {', '.join(f'{r:.4f}' for r in ratios)}")


# ----------------------------------------------------------------- 4


def test_c04_hilbert_identities(criterion):
    criterion("4")
    corpus = line_corpus(2000)
    assert len(corpus) == 10
    worst = 0.0
    for mu in corpus.values():
        hp = hilbert_R(mu).values
        cubic = np.dot(mu.masses, hp**2) / (np.pi**2 / 3 * np.sum(mu.density**3) * mu.width)
        moment = 2 * np.dot(mu.masses, hp * mu.midpoints)
        worst = max(worst, abs(cubic - 1), abs(moment - 1))
    mean = max(abs(np.dot(mu.masses, hilbert_T(mu).values)) for mu in circle_corpus().values())
    assert worst <= 1e-6 and mean <= 1e-8
    criterion("4", f"line rel error {worst:.1e}, circle mean {mean:.1e}")


# ----------------------------------------------------------------- 5


@pytest.mark.xfail(
    strict=True,
    reason="the stated Fisher values omit the pi^2 factor of (4 pi^2/3) int p^3; "
    "the pi^2-scaled values are checked in test_c05_halfline",
)
def test_c05_literal_fisher_values(criterion):
    criterion("5-lit")
    for alpha in (0.0, 1.0, 2.0):
        mu = make_power_density(alpha, 4000)
        assert abs(fn.fisher_R(mu) - 4 * (alpha + 1) ** 3 / (3 * (3 * alpha + 1))) <= 1e-3
        assert abs(fn.fisher_halfline(mu) - 4 * (alpha + 1) ** 3 / (3 * (3 * alpha + 2))) <= 1e-3


def test_c05_halfline(criterion):
    criterion("5")
    c = 4 * np.pi**2 / 3
    for alpha in (0.0, 1.0, 2.0):
        mu = make_power_density(alpha, 4000)
        assert abs(fn.fisher_R(mu) - c * (alpha + 1) ** 3 / (3 * alpha + 1)) <= 1e-3
        assert abs(fn.fisher_halfline(mu) - c * (alpha + 1) ** 3 / (3 * alpha + 2)) <= 1e-3
    q = linear_halfline(1.0)
    sym_err = 0.0
    for name, cells in (("bump", 4000), ("beta-like", 8000)):
        mu = halfline_corpus(cells)[name]
        sym_err = max(
            sym_err,
            abs(fn.fisher_rel_halfline_symmetrized(mu, q) - fn.fisher_rel_halfline(mu, q)),
        )
    for mu in halfline_corpus(4000).values():
        direct = fn.relative_free_entropy(mu, q, -1.5)
        sym_err = max(sym_err, abs(fn.relative_free_entropy_halfline_symmetrized(mu, q, -1.5) - direct))
    assert sym_err <= 1e-5
    B = solve_equilibrium(q, 2000).B
    assert abs(B + 1.5) <= 1e-3
    criterion("5", f"pi^2-scaled Fisher values ok, symmetrization {sym_err:.1e}, B+ = {B:.5f}")


# ----------------------------------------------------------------- 6


def test_c06_equilibrium_solver(criterion):
    criterion("6")
    worst_w, worst_b, worst_res = 0.0, 0.0, 0.0
    for pot in (quadratic(1.0), cosine(8.0), linear_halfline(1.0)):
        sol = solve_equilibrium(pot, 2000)
        exact = closed_form_equilibrium(pot, 2000)
        dist = wasserstein_T_geodesic if pot.domain == "circle" else wasserstein_R
        worst_w = max(worst_w, dist(sol.measure, exact.measure) / sol.measure.width)
        worst_b = max(worst_b, abs(sol.B - exact.B))
        worst_res = max(worst_res, sol.residual)
    assert worst_w <= 3 and worst_b <= 1e-3 and worst_res <= 5e-3
    assert euler_lagrange_residual(make_semicircle(2.0, 2000), quadratic(1.0)) <= 5e-3
    for base in (quadratic(1.0), kinked_quadratic(1.0, 1.0)):
        B = solve_equilibrium(base, 2000).B
        gaps = [abs(solve_equilibrium(mollified_potential(base, e), 2000).B - B) for e in (0.2, 0.1, 0.05)]
        assert gaps[0] > gaps[1] > gaps[2]
    criterion("6", f"W {worst_w:.1e} cells, |dB| {worst_b:.1e}, residual {worst_res:.1e}")


# ----------------------------------------------------------------- 7


def su2_abs_angle_cdf(theta):
    return (theta - np.sin(theta) * np.cos(theta)) / np.pi


def test_c07_samplers(criterion):
    criterion("7")
    start = time.perf_counter()
    target = make_semicircle(2.0, 2000)
    gue = np.mean([wasserstein_R(gue_direct(500, 1.0, seed=k), target) for k in range(20)])
    assert gue <= 0.04
    res = sample(EnsembleSpec("self-adjoint", quadratic(1.0), 100), 400, 100, seed=0, chains=2, thin=10)
    metro = mean_eigenvalue_distribution(res.samples, 200, -2.5, 2.5)
    direct = mean_eigenvalue_distribution([gue_direct(100, seed=k) for k in range(200)], 200, -2.5, 2.5)
    w = wasserstein_R(metro, direct)
    assert w <= 0.03
    run_su2 = sample(EnsembleSpec("special-unitary", zero_circle(), 2), 100_000, 1000, seed=3)
    angles = np.abs([s.atoms[0] for s in run_su2.samples])
    assert len(angles) >= 100_000
    ks = stats.kstest(angles, su2_abs_angle_cdf).statistic
    assert ks <= 0.02
    elapsed = time.perf_counter() - start
    assert elapsed < 120
    criterion("7", f"GUE W {gue:.4f}, Metropolis W {w:.4f}, SU(2) KS {ks:.4f}, {elapsed:.0f}s")


# ------------------------------------------------------------ 8, 9, 11


@pytest.fixture(scope="module")
def verify_all(tmp_path_factory):
    base = tmp_path_factory.mktemp("verify")
    runs = []
    for name in ("first", "second"):
        out, err = io.StringIO(), io.StringIO()
        start = time.perf_counter()
        code = run(["verify", "--suite", "all", "--seed", "7", "--out", str(base / name)], out, err)
        runs.append({"code": code, "dir": base / name, "seconds": time.perf_counter() - start})
    return runs


def load_reports(directory):
    reports = []
    for path in sorted(Path(directory).glob("*.jsonl")):
        reports.extend(json.loads(line) for line in path.read_text().splitlines())
    return reports


VERIFIERS = {
    "verify_lsi_R": ("lsi-R",),
    "verify_lsi_T": ("lsi-T",),
    "verify_voiculescu": ("voiculescu",),
    "verify_tci_R": ("tci-R",),
    "verify_tci_T": ("tci-T",),
    "verify_halfline": ("lsi-plus", "tci-plus", "chi-plus"),
}


def test_c08_property_suites(criterion, verify_all):
    criterion("8")
    assert verify_all[0]["code"] == 0
    reports = load_reports(verify_all[0]["dir"])
    counts = []
    for inequalities in VERIFIERS.values():
        for ineq in inequalities:
            mine = [r for r in reports if r["inequality"] == ineq]
            closed = [r for r in mine if r["case"].startswith("closed:")]
            random = [r for r in mine if r["case"].startswith("random-")]
            assert len(closed) >= 3 and len(random) >= 50, ineq
            failures = [r["id"] for r in mine if not r["vacuous"] and not r["pass"]]
            assert not failures, failures
            counts.append(len(mine))
    criterion("8", f"{sum(counts)} reports over {len(counts)} inequalities, 0 failures")


def test_c09_scaling_limits(criterion, verify_all):
    criterion("9")
    reports = load_reports(verify_all[0]["dir"])
    entropy = [r for r in reports if r["inequality"] == "scaling-entropy"]
    fisher = [r for r in reports if r["inequality"] == "scaling-fisher"]
    assert len(entropy) >= 2 and len(fisher) >= 1
    for r in entropy:
        assert r["checks"]["converged"] and r["checks"]["monotone"], r["id"]
        assert r["extras"]["n"] == [2, 3]
    for r in fisher:
        assert r["extras"]["n"][-1] == 32
        assert r["lhs"] <= r["rhs"], r["id"]
    detail = "; ".join(f"{r['case']} err {r['lhs']:.2e} <= 3SE {r['rhs']:.2e}" for r in fisher)
    criterion("9", f"entropy errors shrink on {len(entropy)} pairs; {detail}")


def test_c11_reproducibility(criterion, verify_all):
    criterion("11")
    first, second = (run["dir"] for run in verify_all)
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    assert any(n.endswith(".jsonl") for n in names)
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
    total = sum(run["seconds"] for run in verify_all)
    assert all(run["code"] == 0 for run in verify_all) and total < 900
    criterion("11", f"{len(names)} files byte-identical, {total:.0f}s for two runs")


# ---------------------------------------------------------------- 10


def random_hermitian(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (z + z.conj().T) / 4


def trace_of(f, a):
    return float(np.sum(f(np.linalg.eigvalsh(a))))


def test_c10_lemma_checks(criterion):
    criterion("10")
    rng = np.random.default_rng(10)
    worst = 0.0
    for n in (2, 3, 4):
        for _ in range(10):
            a, h1, h2 = (random_hermitian(n, rng) for _ in range(3))
            e = 1e-5
            fd1 = (trace_of(np.exp, a + e * h1) - trace_of(np.exp, a - e * h1)) / (2 * e)
            e = 1e-3
            fd2 = (
                trace_of(np.exp, a + e * h1 + e * h2) - trace_of(np.exp, a + e * h1 - e * h2)
                - trace_of(np.exp, a - e * h1 + e * h2) + trace_of(np.exp, a - e * h1 - e * h2)
            ) / (4 * e * e)
            d1 = trace_derivative(np.exp, a, h1)
            d2 = trace_hessian(np.exp, np.exp, a, h1, h2)
            worst = max(worst, abs(d1 - fd1) / max(abs(fd1), 1e-4), abs(d2 - fd2) / max(abs(fd2), 1e-4))
    assert worst <= 1e-5

    potentials = [(lambda t: 0 * t, 0.0), (lambda t: -0.5 * np.cos(t), -0.5),
                  (lambda t: -0.25 * np.cos(t), -0.25)]
    for q, rho in potentials:
        done = 0
        while done < 20:
            try:
                res = hessian_lower_bound(q, rho, random_su(3, rng))
            except BranchError:
                continue
            assert res["eigmin"] >= rho - 1e-4
            done += 1

    contraction = []
    for _ in range(100):
        mu = [random_hermitian(3, rng).real for _ in range(2)]
        nu = [random_hermitian(3, rng).real for _ in range(2)]
        mu = [(m + m.T) / 2 for m in mu]
        nu = [(m + m.T) / 2 for m in nu]
        contraction.append(check_matrix_contraction(mu, rng.dirichlet(np.ones(2)), nu, [0.5, 0.5])["slack"])
    assert min(contraction) >= -1e-9

    matching = []
    for n in (2, 3):
        for _ in range(50):
            u = random_su(n, rng)
            res = check_su_matching_bound(u, u @ random_su(n, rng, scale=0.5))
            if not res["flag"]:
                matching.append(res["slack"])
    assert len(matching) >= 90 and min(matching) >= -1e-7

    for n in range(2, 9):
        for _ in range(5 if n > 6 else 20):
            z, w = rng.uniform(0, 2 * np.pi, (2, n))
            assert abs(optimal_matching_distance(z, w) - matching_brute_force(z, w)) <= 1e-12
    criterion(
        "10",
        f"trace FD rel {worst:.1e}, contraction min slack {min(contraction):.1e}, "
        f"matching min slack {min(matching):.1e} over {len(matching)} pairs",
    )


def test_c05_symmetrized_halfline_minimizer():
    # the folded half-line minimizer has an inverse square-root edge; the
    # symmetrized problem carries the vanishing-entropy check
    q = linear_halfline(1.0)
    sol = solve_equilibrium(q, 2000)
    assert -1e-10 <= 2 * fn.relative_free_entropy(sol.symmetrized, squared_argument(q), sol.B / 2) <= 1e-4
