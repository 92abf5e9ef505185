"""Release gate: the eight guarantees this package commits to.

Each test prints as a single pass/fail line under ``pytest -v``:

  1. integration-by-parts identity, analytic and projected
  2. F statistic matches classical restricted refit at lambda 0
  3. noncentral-F p-values against a Monte Carlo oracle
  4. stage-1 level at the null
  5. power-threshold ordering between test kinds (see note in the test)
  6. leave-one-out identity of the OCV score
  7. bundled spectroscopy dataset: direction checks for all three analyses
  8. byte-level determinism of the command-line interface

Gate 5 also has a companion test asserting the ordering that actually
holds (stage-2 threshold of the 0v2 test against stage-1 of 0v1).
"""

import time

import numpy as np
import pytest
import scipy.stats

from fundrv.basis import gram, make_bspline, make_fourier_plus_linear
from fundrv.cli import ingest, main
from fundrv import tecator_like_path
from fundrv.dtest import (
    ContrastMatrix,
    TestKind as Kind,
    f_statistic,
    noncentral_f_pvalue,
    run_test,
)
from fundrv.fdata import evaluate, project
from fundrv.jtest import LinearSpec, NWSpec, j_test
from fundrv.penreg import AugmentedDesign, FixedLambda, OCVLambda, fit, ocv
from fundrv.sim import SimConfig, power_study

RNG = lambda s: np.random.Generator(np.random.Philox(np.random.SeedSequence(s)))


def test_gate_1_integration_by_parts_identity():
    t0 = time.time()
    fb = make_fourier_plus_linear(12)
    bsp = make_bspline(6, 21)
    g01 = gram(fb, bsp, 0, 1)
    g10 = gram(fb, bsp, 1, 0)
    ends = np.array([0.0, 1.0])
    fb_ends = fb.eval(ends)
    bsp_ends = bsp.eval(ends)

    rng = RNG(42)
    worst = 0.0
    for _ in range(100):
        a = rng.standard_normal(fb.K)
        c = rng.standard_normal(bsp.K)
        lhs = a @ g01 @ c + a @ g10 @ c
        alpha0, alpha1 = fb_ends @ a
        x0, x1 = bsp_ends @ c
        worst = max(worst, abs(lhs - (alpha1 * x1 - alpha0 * x0)))
    assert worst < 1e-8

    # projected-derivative version: the defect is the projection error of
    # X', not something amplified beyond it
    grid = np.linspace(0.0, 1.0, 200)
    for _ in range(20):
        a = rng.standard_normal(fb.K)
        w = rng.standard_normal(3)
        xv = (w[0] * np.exp(grid - 0.5) + w[1] * np.sin(5 * np.pi * grid)
              + w[2] * grid ** 7)
        xdv = (w[0] * np.exp(grid - 0.5)
               + w[1] * 5 * np.pi * np.cos(5 * np.pi * grid)
               + w[2] * 7 * grid ** 6)
        xp = project(grid, xv[None, :], bsp)
        xtilde_d = evaluate(xp, grid, deriv=1)[0]
        alpha = fb.eval(grid) @ a
        defect = abs(np.trapezoid(alpha * xtilde_d, grid)
                     - np.trapezoid(alpha * xdv, grid))
        proj_err = np.sqrt(np.trapezoid(alpha ** 2, grid)
                           * np.trapezoid((xtilde_d - xdv) ** 2, grid))
        assert defect <= 10.0 * proj_err
    assert time.time() - t0 < 5.0


def _random_small_design(rng):
    n = int(rng.integers(15, 41))
    p = int(rng.integers(4, 11))
    Z = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
    P = np.zeros((p, p))
    d = AugmentedDesign(
        Zt=Z, Pt=P, labels=tuple(f"c{j}" for j in range(p)),
        n_scalars=0, n_impacts=0, K=p - 1,
    )
    y = rng.standard_normal(n)
    q = int(rng.integers(1, min(4, p - 1)))
    C = rng.standard_normal((q, p))
    return d, y, ContrastMatrix(C, q, "random contrast")


def test_gate_2_f_statistic_matches_classical_refit():
    t0 = time.time()
    rng = RNG(7)
    for _ in range(50):
        d, y, C = _random_small_design(rng)
        fitted = fit(d, y, 0.0)
        F, q = f_statistic(fitted, C)

        # classical F: refit under the constraint via a nullspace basis
        _, _, vt = np.linalg.svd(C.C)
        N = vt[q:].T
        ZN = d.Zt @ N
        rss_r = np.sum((y - ZN @ np.linalg.lstsq(ZN, y, rcond=None)[0]) ** 2)
        rss_f = fitted.rss
        F_classical = ((rss_r - rss_f) / q) / (rss_f / (d.n - d.p))
        assert F == pytest.approx(F_classical, rel=1e-8)
    assert time.time() - t0 < 10.0


MC_TUPLES = [
    (1.0, 1, 10.5, 0.0), (2.5, 1, 30.0, 0.0), (1.3, 2, 40.0, 0.5),
    (0.7, 3, 25.0, 1.2), (2.0, 2, 200.0, 2.0), (1.5, 1, 120.7, 3.0),
    (3.2, 4, 60.0, 5.0), (2.8, 2, 150.0, 8.0), (4.0, 1, 80.0, 10.0),
    (6.0, 2, 100.0, 15.0), (5.5, 3, 210.0, 20.0), (18.6, 2, 205.1, 26.2),
    (1.1, 5, 45.0, 0.8), (0.9, 2, 12.0, 4.0), (7.7, 1, 200.0, 12.0),
    (3.3, 6, 90.0, 9.0), (2.2, 4, 33.3, 2.5), (10.0, 2, 64.0, 30.0),
    (1.8, 3, 500.0, 1.0), (4.4, 5, 250.0, 18.0),
]


def _mc_ncf_sf(F, df1, df2, eta, n_draws, rng, chunk=2_000_000):
    """Monte Carlo P(F' > F) for the noncentral F by direct simulation."""
    hits = 0
    left = n_draws
    while left > 0:
        size = min(chunk, left)
        num = (rng.standard_normal(size) + np.sqrt(eta)) ** 2
        if df1 > 1:
            num += rng.chisquare(df1 - 1, size)
        den = rng.chisquare(df2, size)
        hits += int(np.sum(num / df1 > F * den / df2))
        left -= size
    return hits / n_draws


def test_gate_3_noncentral_f_pvalues_against_monte_carlo():
    t0 = time.time()
    n_draws = 10_000_000
    rng = RNG(202)
    for F, df1, df2, eta in MC_TUPLES:
        p = noncentral_f_pvalue(F, df1, df2, eta)
        p_mc = _mc_ncf_sf(F, df1, df2, eta, n_draws, rng)
        se = np.sqrt(max(p_mc * (1 - p_mc), 1e-14) / n_draws)
        assert abs(p - p_mc) <= 3 * se + 1e-8, (F, df1, df2, eta, p, p_mc)
    for F, df1, df2, _ in MC_TUPLES[:6]:
        assert noncentral_f_pvalue(F, df1, df2, 0.0) == pytest.approx(
            scipy.stats.f.sf(F, df1, df2), abs=1e-12
        )
    assert time.time() - t0 < 120.0


def test_gate_4_stage1_level_at_the_null():
    cfg = SimConfig(
        n=100, reps=500, beta0_grid=(0.0,), noise_sd=0.1,
        seed=29, lambda_policy=FixedLambda(1e-11), level=0.05,
    )
    table = power_study(cfg, Kind.ZERO_VS_FIRST, n_jobs=8)
    rate = table.rows[0].reject1
    lo, hi = scipy.stats.binom.ppf([0.005, 0.995], 500, 0.05) / 500
    assert lo <= rate <= hi, f"level {rate} outside [{lo}, {hi}]"


BETA_GRID = tuple(0.02 * 2 ** k for k in range(9))


def _threshold(rates):
    """Smallest grid beta0 with >= 80% rejection."""
    for b in BETA_GRID:
        if rates[b] >= 0.8:
            return b
    return np.inf


@pytest.fixture(scope="module")
def power_tables():
    tables = {}
    for kind in (Kind.ZERO_VS_FIRST, Kind.ZERO_VS_SECOND):
        cfg = SimConfig(
            n=100, reps=500, beta0_grid=BETA_GRID, noise_sd=0.1,
            seed=11, lambda_policy=FixedLambda(1e-11), level=0.05,
        )
        tables[kind] = power_study(cfg, kind, n_jobs=8)
    return tables


def test_gate_5_power_threshold_ordering_stage1(power_tables):
    """Known defect, kept red on purpose.

    The claimed ordering (stage-1 threshold of 0v2 at least 10x smaller
    than stage-1 of 0v1) does not hold: both stage-1 statistics test the
    same impact columns against the same alternative fit, so their power
    curves nearly coincide.  The large ordering gap exists between 0v1
    stage 1 and 0v2 stage 2, which the companion test below locks in.
    """
    t0 = time.time()
    r1 = {r.beta0: r.reject1 for r in power_tables[Kind.ZERO_VS_FIRST].rows}
    r2 = {r.beta0: r.reject1 for r in power_tables[Kind.ZERO_VS_SECOND].rows}
    th_0v1, th_0v2 = _threshold(r1), _threshold(r2)
    assert time.time() - t0 < 1800.0
    assert th_0v2 <= th_0v1 / 10.0, (
        f"0v2 stage-1 threshold {th_0v2} vs 0v1 stage-1 threshold {th_0v1}"
    )


def test_gate_5_companion_stage2_ordering_holds(power_tables):
    r1 = {r.beta0: r.reject1 for r in power_tables[Kind.ZERO_VS_FIRST].rows}
    r2 = {r.beta0: r.reject2 for r in power_tables[Kind.ZERO_VS_SECOND].rows}
    th_0v1_s1, th_0v2_s2 = _threshold(r1), _threshold(r2)
    assert np.isfinite(th_0v1_s1)
    assert th_0v2_s2 <= th_0v1_s1 / 10.0, (
        f"0v2 stage-2 threshold {th_0v2_s2} vs 0v1 stage-1 threshold {th_0v1_s1}"
    )


def test_gate_6_ocv_equals_literal_leave_one_out():
    t0 = time.time()
    rng = RNG(64)
    lam_grid = (1e-6, 1e-3, 1.0)
    for _ in range(20):
        n = int(rng.integers(12, 31))
        p = int(rng.integers(3, 8))
        Z = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
        B = rng.standard_normal((p, p))
        P = B @ B.T
        labels = tuple(f"c{j}" for j in range(p))
        d = AugmentedDesign(Zt=Z, Pt=P, labels=labels,
                            n_scalars=0, n_impacts=0, K=p - 1)
        y = rng.standard_normal(n)
        _, scores = ocv(d, y, lam_grid)
        for lam, score in zip(lam_grid, scores):
            literal = 0.0
            for i in range(n):
                mask = np.arange(n) != i
                di = AugmentedDesign(Zt=Z[mask], Pt=P, labels=labels,
                                     n_scalars=0, n_impacts=0, K=p - 1)
                fi = fit(di, y[mask], lam)
                literal += (y[i] - Z[i] @ fi.gt) ** 2
            assert score == pytest.approx(literal, rel=1e-8)
    assert time.time() - t0 < 10.0


def test_gate_7_bundled_dataset_direction_checks():
    t0 = time.time()
    ds = ingest(tecator_like_path())
    x = project(ds.grid, ds.curves, make_bspline(6, 21))
    fb = make_fourier_plus_linear(12)

    # (a) zeroth-order model rejected against the first-derivative design
    rep = run_test(ds.response, x, Kind.ZERO_VS_FIRST, fb,
                   lambda_policy=OCVLambda())
    assert rep.stage1.p_value < 1e-6, f"stage-1 p {rep.stage1.p_value}"

    # (b) kernel regression on X' beats kernel regression on X
    rb = j_test(ds.response, x, NWSpec(0), NWSpec(1), seed=0)
    assert rb.t_stat > 0 and rb.p_value < 1e-3, (rb.t_stat, rb.p_value)

    # (c) kernel regression on X'' adds signal beyond the scalar-augmented
    # linear model on X''
    null = LinearSpec(coef_basis=fb, deriv=2, include_scalars=True)
    rc = j_test(ds.response, x, null, NWSpec(2), seed=0,
                scalars=ds.scalars, free_null_coef=True)
    assert rc.t_stat > 0 and rc.p_value < 1e-2, (rc.t_stat, rc.p_value)
    assert time.time() - t0 < 300.0


def test_gate_8_cli_byte_determinism(tmp_path):
    data = tecator_like_path()
    cases = [
        ["ingest-check", "--data", data, "--json"],
        ["test", "--data", data, "--test", "0v1", "--lambda", "1e-9", "--json"],
        ["pcurve", "--data", data, "--test", "0v1", "--lambda", "1e-7"],
        ["jtest", "--data", data, "--null", "nw:0", "--alt", "nw:1",
         "--seed", "0", "--json"],
        ["power", "--test", "0v1", "--n", "30", "--reps", "16",
         "--beta0", "0,0.8", "--seed", "5"],
    ]
    for i, case in enumerate(cases):
        f1 = str(tmp_path / f"{i}_a.out")
        f2 = str(tmp_path / f"{i}_b.out")
        assert main(case + ["--out", f1]) == 0
        assert main(case + ["--out", f2]) == 0
        assert open(f1, "rb").read() == open(f2, "rb").read(), case[0]

    # parallelism degree must not change the bytes either
    base = ["power", "--test", "0v1", "--n", "30", "--reps", "16",
            "--beta0", "0,0.8", "--seed", "5"]
    j1 = str(tmp_path / "jobs1.csv")
    j8 = str(tmp_path / "jobs8.csv")
    assert main(base + ["--jobs", "1", "--out", j1]) == 0
    assert main(base + ["--jobs", "8", "--out", j8]) == 0
    assert open(j1, "rb").read() == open(j8, "rb").read()
