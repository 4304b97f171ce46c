"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run ``pytest tests/test_acceptance.py -s`` to see the lines inline; they are
also collected into an "acceptance criteria" section of the terminal summary.
"""

from functools import lru_cache
from itertools import product
import math
import sys
import time

import numpy as np
import pytest

from iterlearn.conditional import ConditionalModel, cond_root_sine, transition_matrix_cond
from iterlearn.discrete import (
    DiscreteModel,
    a_set_bound,
    chain_product,
    find_A_set,
    lemma1_bound,
    model_schedule,
    set_mass,
    sustain_mass,
    transition_bound_violation,
    transition_matrix_exact,
)
from iterlearn.gaussian import (
    GaussianConfig,
    chained_moments,
    config_schedule,
    hopped_moments,
    hopped_variance_terms,
    posterior_update,
    simulate_gaussian_mc,
)
from iterlearn.linreg import RegressionConfig, regression_update, simulate_linreg, singular_tail_check
from iterlearn.metrics import bhattacharyya_dist, euclidean, hellinger, root_sine, total_variation
from iterlearn.rafferty import rafferty_language, rafferty_model
from iterlearn.schedules import SampleSchedule

SLACK = 1e-12


# -- shared discrete runs (criteria 1-4) ------------------------------------


@lru_cache(maxsize=None)
def washout_run():
    rng = np.random.default_rng(1)
    L = rng.uniform(0.05, 1.0, size=(4, 4))
    model = DiscreteModel(L / L.sum(axis=0), rng.dirichlet(np.ones(4)))
    start = time.perf_counter()
    chain = chain_product(model, SampleSchedule.constant(2), 500)
    return model, chain, time.perf_counter() - start


@lru_cache(maxsize=None)
def theorem1_run():
    rng = np.random.default_rng(2024)
    while True:
        model = DiscreteModel(rng.dirichlet(np.ones(4), size=4).T, rng.dirichlet(2 * np.ones(4)))
        if model.min_distance(0) ** 2 >= 0.3:
            break
    sch = model_schedule(model, 0, {"kind": "theorem1", "eps": 0.1})
    start = time.perf_counter()
    chain = chain_product(model, sch, 200)
    return model, sch, chain, time.perf_counter() - start


@lru_cache(maxsize=None)
def theorem2_run():
    # h1, h2 form a tight cluster; h3, h4 are far away
    L = np.array([[0.5, 0.5], [0.51, 0.49], [0.05, 0.95], [0.95, 0.05]]).T
    model = DiscreteModel(L, [0.25, 0.25, 0.25, 0.25])
    sch = model_schedule(model, 0, {"kind": "theorem2", "delta": 0.2, "eps": 0.1})
    start = time.perf_counter()
    chain = chain_product(model, sch, 100)
    return model, sch, chain, time.perf_counter() - start


def test_criterion_01_prior_washout(report):
    model, chain, elapsed = washout_run()
    tv = max(total_variation(chain[-1][i], model.prior) for i in range(model.n))
    ok = tv <= 1e-6 and elapsed < 10
    report(1, ok, f"max_i TV(row_i of P^<=500, prior) = {tv:.2e} (<= 1e-6), {elapsed:.2f}s (< 10s)")
    assert ok


def test_criterion_02_theorem1(report):
    model, sch, chain, elapsed = theorem1_run()
    d1_sq = model.min_distance(0) ** 2
    mass = sustain_mass(chain, 0)
    ok = d1_sq >= 0.3 and mass.min() >= 0.9 and elapsed < 300
    report(2, ok, f"d1^2 = {d1_sq:.3f}, m_t in [{chain.m.min()}, {chain.m.max()}], "
                  f"min_t sustain_mass = {mass.min():.6f} (>= 0.9), {elapsed:.1f}s (< 300s)")
    assert ok


def test_criterion_03_theorem2(report):
    model, sch, chain, elapsed = theorem2_run()
    delta, rho = sch.params["delta"], sch.params["rho"]
    A = find_A_set(model, 0, rho)
    mass = set_mass(chain, 0, A)
    tv = max(total_variation(model.likelihood[:, j], model.likelihood[:, 0]) for j in A)
    ok = mass.min() >= 0.9 and tv <= delta and elapsed < 300 and A != {0}
    report(3, ok, f"A = {sorted(int(i) + 1 for i in A)}, p_A = {sch.params['p_A']}, rho = {rho}, "
                  f"min_t mass on A = {mass.min():.6f} (>= 0.9), max TV in A = {tv:.3f} (<= {delta}), "
                  f"{elapsed:.1f}s (< 300s)")
    assert ok


def test_criterion_04_bounds_on_all_chains(report):
    worst_eq5 = -math.inf
    worst_lemma = -math.inf
    runs = [washout_run()[:2], theorem1_run()[::2][:2], theorem2_run()[::2][:2]]
    for model, chain in runs:
        for m, P in chain.transitions.items():
            worst_eq5 = max(worst_eq5, transition_bound_violation(model, P, m))
        for target in range(model.n):
            bound = lemma1_bound(model, target, chain.m)
            off = 1.0 - chain.products[:, target, target]
            worst_lemma = max(worst_lemma, float(np.max(off - bound)))
    model, sch, chain, _ = theorem2_run()
    A = find_A_set(model, 0, sch.params["rho"])
    a_excess = float(np.max(1 - set_mass(chain, 0, A) - a_set_bound(model, A, sch.params["rho"], chain.m)))
    ok = worst_eq5 <= SLACK and worst_lemma <= SLACK and a_excess <= SLACK
    report(4, ok, f"max excess over transition bound = {worst_eq5:.2e}, over cumulative bound = "
                  f"{worst_lemma:.2e}, over A-set bound = {a_excess:.2e} (all <= 1e-12)")
    assert ok


# -- metrics ---------------------------------------------------------------


def test_criterion_05_metric_suite(report):
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    failures = {"axioms": 0, "identities": 0, "tv": 0, "sandwich": 0}
    eps = 0.01
    for _ in range(1000):
        s = int(rng.integers(1, 9))
        a, b, c = rng.dirichlet(np.ones(s), size=3)
        dab, dbc, dac = root_sine(a, b), root_sine(b, c), root_sine(a, c)
        if dab != root_sine(b, a) or dab + dbc < dac - 1e-10 or root_sine(a, a) > 1e-7:
            failures["axioms"] += 1
        C = float(np.sum(np.sqrt(a * b)))
        if abs(hellinger(a, b) - math.sqrt(max(0.0, 1 - C))) > 1e-12 or abs(bhattacharyya_dist(a, b) + math.log(C)) > 1e-12:
            failures["identities"] += 1
        if total_variation(a, b) > math.sqrt(2 * s) * dab + 1e-12:
            failures["tv"] += 1
        s2 = int(rng.integers(2, 9))
        x, y = (eps + (1 - s2 * eps) * rng.dirichlet(np.ones(s2)) for _ in range(2))
        dE, d = euclidean(x, y), root_sine(x, y)
        if not (dE / (2 * math.sqrt(2)) <= d + 1e-12 and d <= dE / (2 * math.sqrt(eps)) + 1e-12):
            failures["sandwich"] += 1
    elapsed = time.perf_counter() - start
    ok = not any(failures.values()) and elapsed < 5
    report(5, ok, f"1000 cases per family, failures {failures}, {elapsed:.2f}s (< 5s)")
    assert ok


# -- language model --------------------------------------------------------


def test_criterion_06_rafferty(report):
    model = rafferty_model(4, 2)
    lang_ok = rafferty_language(4, 2, 3) == {"00??", "0?1?", "?01?", "0??0", "?0?0", "??10"}
    d1_sq = min(model.min_distance(i) for i in range(model.n)) ** 2
    sch = SampleSchedule.theorem1(n=model.n, eps=0.1, p1=1 / model.n, d1_sq=d1_sq)
    cap = math.ceil(4 / d1_sq * math.log(2)) + 1
    worst = max(sch(2 * t) - sch(t) for t in range(1, 101))
    ok = lang_ok and d1_sq > 0.5 and worst <= cap
    report(6, ok, f"h3 language exact: {lang_ok}, d1^2 = {d1_sq:.4f} (> 0.5), "
                  f"max m_2t - m_t = {worst} (<= {cap})")
    assert ok


# -- gaussian --------------------------------------------------------------

DEFAULT = GaussianConfig()


def test_criterion_07_gaussian_decay(report):
    start = time.perf_counter()
    sch = SampleSchedule.constant(1)
    track = chained_moments(DEFAULT, sch, 20)
    b1 = track.beta[1]
    t = np.arange(1, 21)
    err = float(np.max(np.abs((track.mean[1:] - DEFAULT.mu_bar) - b1**t * (DEFAULT.mu0 - DEFAULT.mu_bar))))
    mc = simulate_gaussian_mc(DEFAULT, sch, 20, "chained", replicates=10_000, seed=7)
    z = float(np.max(np.abs(mc.mean - track.mean[1:]) / mc.stderr))
    elapsed = time.perf_counter() - start
    ok = err <= 1e-10 and z <= 3 and elapsed < 30
    report(7, ok, f"recursion vs closed form max err = {err:.1e} (<= 1e-10), "
                  f"MC max |z| = {z:.2f} (<= 3), {elapsed:.2f}s (< 30s)")
    assert ok


def test_criterion_08_theorem3(report):
    start = time.perf_counter()
    sch = config_schedule(DEFAULT, {"kind": "theorem3", "eps": 0.1, "c": 0.5, "max_m": None})
    track = chained_moments(DEFAULT, sch, 10**4)
    dev = float(np.max(np.abs(track.mean[1:] - DEFAULT.mu0)))
    spread = float(track.sigma2[-1] + track.var[-1])
    session = chained_moments(DEFAULT, sch, 10**4, coupling="session")
    elapsed = time.perf_counter() - start
    ok = dev <= 0.1 and spread <= 1e-3 and elapsed < 5
    report(8, ok, f"max |E mu_t - mu0| = {dev:.4f} (<= 0.1), sigma2 + Var at 1e4 = {spread:.2e} (<= 1e-3), "
                  f"{elapsed:.2f}s (< 5s); single-draw-per-session variance at 1e4 = "
                  f"{session.sigma2[-1] + session.var[-1]:.3f} (informational)")
    assert ok


def test_criterion_09_theorem4(report):
    start = time.perf_counter()
    eps = 0.1 * DEFAULT.gap
    sch = config_schedule(DEFAULT, {"kind": "theorem4", "eps": eps, "c": 0.5, "max_m": None})
    ceiling = 10 * (DEFAULT.var0 + DEFAULT.var_noise + DEFAULT.var_bar)
    iid = hopped_moments(DEFAULT, sch, 10**4)
    session = hopped_moments(DEFAULT, sch, 10**4, coupling="session")
    dev = float(np.max(np.abs(iid.mean[1:] - DEFAULT.mu0)))
    gmin = float(np.min(iid.gamma[1:]))
    vmax = max(float(iid.var.max()), float(session.var.max()))
    elapsed = time.perf_counter() - start
    ok = dev <= eps and gmin >= 1 - eps / DEFAULT.gap and vmax <= ceiling and elapsed < 30
    report(9, ok, f"max |E mu_t - mu0| = {dev:.4f} (<= {eps}), min gamma_t = {gmin:.4f} (>= 0.9), "
                  f"max Var mu_t = {vmax:.3f} (<= {ceiling}), {elapsed:.2f}s (< 30s)")
    assert ok


def test_criterion_10_hopped_variance_vs_mc(report):
    start = time.perf_counter()
    sch = SampleSchedule.constant(2)
    track = hopped_moments(DEFAULT, sch, 3, coupling="session")
    decomposed = []
    for t in range(1, 4):
        terms, cov = hopped_variance_terms(DEFAULT, track, t)
        decomposed.append((track.beta[t] / track.m[t]) ** 2 * (terms.sum() + cov.sum()))
    decomposed = np.array(decomposed)
    mc = simulate_gaussian_mc(DEFAULT, sch, 3, "hopped", replicates=10**5, seed=10)
    z_var = float(np.max(np.abs(mc.var - decomposed) / mc.var_stderr))
    z_mean = float(np.max(np.abs(mc.mean - track.mean[1:]) / mc.stderr))
    agree = float(np.max(np.abs(decomposed - track.var[1:])))
    iid = hopped_moments(DEFAULT, sch, 3)
    elapsed = time.perf_counter() - start
    ok = z_var <= 3 and z_mean <= 3 and agree <= 1e-12 and elapsed < 120
    report(10, ok, f"Var mu_t = {np.round(decomposed, 4).tolist()}, MC {np.round(mc.var, 4).tolist()}, "
                   f"max |z| var {z_var:.2f} mean {z_mean:.2f} (<= 3), {elapsed:.1f}s (< 120s); "
                   f"per-datum-independent variant {np.round(iid.var[1:], 4).tolist()} (informational)")
    assert ok


# -- regression ------------------------------------------------------------


def test_criterion_11_theorem5(report):
    start = time.perf_counter()
    cfg = RegressionConfig(d=2, delta=0.2, eps=0.1, c=0.5)
    R = 200
    run = simulate_linreg(cfg, cfg.schedule(max_m=None), 30, R, seed=11)
    floor = 1 - cfg.eps - 3 * math.sqrt(cfg.eps * (1 - cfg.eps) / R)
    worst = max(float(led.dist_to_mu0.max()) for led in run.ledgers)
    elapsed = time.perf_counter() - start
    # qt_ledger raises if the Q_t identity or either spectral bound fails
    ok = run.fraction >= floor and elapsed < 300
    report(11, ok, f"fraction sustained = {run.fraction:.3f} (>= {floor:.3f}), max ||E mu_t - mu0|| = "
                   f"{worst:.4f}, per-replicate identities and bounds held, {elapsed:.1f}s (< 300s)")
    assert ok


def test_criterion_12_singular_tail(report):
    start = time.perf_counter()
    chk = singular_tail_check(100, 5, 3.0, 10**4, seed=12)
    limit = math.exp(-4.5) + 3 * math.sqrt(math.exp(-4.5) / 1e4) + 1e-3
    elapsed = time.perf_counter() - start
    ok = chk.frequency <= limit and elapsed < 60
    report(12, ok, f"P[sigma_1 < {chk.threshold:.3f}] = {chk.frequency:.4f} (<= {limit:.4f}), {elapsed:.2f}s (< 60s)")
    assert ok


# -- oracle equivalences ---------------------------------------------------


def _naive(model, m):
    L, p = model.likelihood, model.prior
    P = np.zeros((model.n, model.n))
    for data in product(range(model.s), repeat=m):
        lik = np.prod(L[list(data), :], axis=0)
        P += np.outer(lik, lik * p / (lik @ p))
    return P


def test_criterion_13_oracles(report):
    rng = np.random.default_rng(13)
    model = DiscreteModel(rng.dirichlet(np.ones(3), size=3).T, rng.dirichlet(np.ones(3)))
    e_multiset = max(float(np.max(np.abs(transition_matrix_exact(model, m) - _naive(model, m)))) for m in range(1, 7))

    L = rng.dirichlet(np.ones(4), size=3).T
    prior = rng.dirichlet(np.ones(3))
    cm = ConditionalModel(mu=[1.0], cond_likelihood=L[None], prior=prior)
    dm = DiscreteModel(L, prior)
    e_cond = max(float(np.max(np.abs(transition_matrix_cond(cm, m) - transition_matrix_exact(dm, m)))) for m in (1, 3, 5))
    e_cond = max(e_cond, max(abs(cond_root_sine(cm, i, j) - dm.dist[i, j]) for i in range(3) for j in range(3)))

    e_reg = 0.0
    for m in (1, 2, 10, 100):
        y = rng.normal(size=m)
        post = regression_update(RegressionConfig(d=1, mu0=(1.0,), mu_bar=(0.2,), var_bar=1.5, var_noise=0.5),
                                 np.ones((m, 1)), y)
        g = posterior_update(GaussianConfig(mu_bar=0.2, var_bar=1.5, var_noise=0.5), y)
        e_reg = max(e_reg, abs(post.mean[0] - g.mu), abs(post.cov[0, 0] - g.var))
    ok = e_multiset <= 1e-12 and e_cond <= 1e-12 and e_reg <= 1e-12
    report(13, ok, f"multiset vs s^m: {e_multiset:.1e}, one-meaning conditional: {e_cond:.1e}, "
                   f"d=1 regression vs 1-D update: {e_reg:.1e} (all <= 1e-12)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
