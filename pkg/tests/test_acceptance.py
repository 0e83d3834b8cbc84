"""End-to-end acceptance criteria.

Each test prints one PASS/FAIL line.  Criterion 11's winding target is
asserted exactly as stated (convergence of theta_T / sqrt(T) to N(0, 2k));
the implemented group Brownian motion demonstrably winds at rate 3k instead
(see the diagnostic test below and notes/decisions.md), so that single
assertion fails by design rather than being weakened.
"""

import time

import numpy as np
import pytest

from hgbm import grassmann as gr
from hgbm import group as gp
from hgbm.kernels import (
    JacobiHeatKernel,
    KernelParams,
    hyperbolic_heat_kernel,
    hyperbolic_volume_weight,
    panel_gauss,
)
from hgbm.laplace import intertwining_defect, km_laplace_transform, rank_one_laplace
from hgbm.montecarlo import RunConfig, run_paths, _matrix_engine
from hgbm.scenarios import random_contraction, scenario_verify_laplace
from hgbm.stats import ks_normal_test, ks_two_sample, mean_se

pytestmark = pytest.mark.acceptance


def _line(name, passed, detail):
    print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return passed


# ---------------------------------------------------------------------------
# shared heavy runs
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def clt_table_4_2():
    cfg = RunConfig(n=4, k=2, horizon=100.0, dt=2e-3, paths=2000, seed=51,
                    chart="matrix", engine="reduced")
    start = time.perf_counter()
    table = run_paths(cfg)
    return table, time.perf_counter() - start


@pytest.fixture(scope="module")
def clt_table_3_1():
    cfg = RunConfig(n=3, k=1, horizon=100.0, dt=2e-3, paths=2000, seed=52,
                    chart="matrix", engine="reduced")
    start = time.perf_counter()
    table = run_paths(cfg)
    return table, time.perf_counter() - start


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_01_exact_algebraic_identities():
    start = time.perf_counter()
    worst_gram = 0.0
    for n, k in [(3, 1), (4, 2), (5, 2)]:
        shape = gp.GroupShape(n, k)
        mats = [b.matrix() for b in gp.build_basis(shape)]
        gram = np.array([[gp.algebra_inner(a, b, shape) for b in mats] for a in mats])
        worst_gram = max(worst_gram, float(np.max(np.abs(gram - np.eye(n * n)))))
    worst_ident = 0.0
    rng = np.random.default_rng(101)
    for n, k in [(3, 1), (4, 2), (5, 2)]:
        p = n - k
        for _ in range(1000):
            w = random_contraction(rng, p, k)
            d = gr.contraction_identity_defects(w, rng=rng)
            worst_ident = max(worst_ident, max(d))
    elapsed = time.perf_counter() - start
    ok = worst_gram <= 1e-12 and worst_ident <= 1e-12 and elapsed < 10.0
    assert _line("C1 exact-algebraic-identities", ok,
                 f"gram {worst_gram:.2e}, identities {worst_ident:.2e}, {elapsed:.1f}s")


def test_criterion_02_constraint_fidelity():
    start = time.perf_counter()
    cfg = RunConfig(n=4, k=2, horizon=1.0, dt=1e-3, paths=50, seed=102,
                    chart="matrix", engine="raw", scheme="heun")
    shape = cfg.shape
    signs = shape.eta_signs()
    worst = {"defect": 0.0}

    def watch(step, st):
        g = np.swapaxes(st.u, -1, -2).conj() @ (signs[:, None] * st.u)
        g[:, np.arange(4), np.arange(4)] -= signs
        worst["defect"] = max(worst["defect"],
                              float(np.linalg.norm(g, axis=(-2, -1)).max()))

    st = _matrix_engine(cfg, keep_raw=True, collect=watch)
    worst_rel = 0.0
    for i in range(cfg.paths):
        u = gp.BlockGroupElement.from_matrix(st.u[i], shape)
        worst_rel = max(worst_rel, max(gp.block_relation_defects(u).values()))
    elapsed = time.perf_counter() - start
    ok = worst["defect"] <= 1e-8 and worst_rel <= 1e-8 and elapsed < 30.0
    assert _line("C2 constraint-fidelity", ok,
                 f"max defect {worst['defect']:.2e}, block relations {worst_rel:.2e}, "
                 f"{elapsed:.1f}s")


def test_criterion_03_covariation_consistency():
    start = time.perf_counter()
    rng = np.random.default_rng(103)
    n_draws, dt = 100000, 1e-3
    worst_sigmas = 0.0
    p, k = 2, 2
    points = [np.zeros((p, k), dtype=complex),
              random_contraction(rng, p, k),
              random_contraction(rng, p, k)]
    for w in points:
        left = np.eye(p) - w @ w.conj().T
        right = np.eye(k) - w.conj().T @ w
        rl = gr.sqrtm_psd(left)
        rr = gr.sqrtm_psd(right)
        db = (rng.standard_normal((n_draws, p, k))
              + 1j * rng.standard_normal((n_draws, p, k))) * np.sqrt(dt)
        dw = rl @ db @ rr
        emp = np.einsum('pij,pxy->ijxy', dw, dw.conj()) / (n_draws * dt)
        expect = 2.0 * np.einsum('ix,yj->ijxy', left, right)
        scale = np.abs(expect).max()
        se = 2.0 * scale / np.sqrt(n_draws)
        worst_sigmas = max(worst_sigmas, float(np.max(np.abs(emp - expect)) / se))
    elapsed = time.perf_counter() - start
    ok = worst_sigmas <= 5.0 and elapsed < 60.0
    assert _line("C3 covariation-consistency", ok,
                 f"worst deviation {worst_sigmas:.2f} standard errors, {elapsed:.1f}s")


def test_criterion_04_spectral_route_equivalence():
    start = time.perf_counter()
    tm = run_paths(RunConfig(n=4, k=2, horizon=1.0, dt=1e-3, paths=5000, seed=21,
                             chart="matrix", engine="reduced"))
    tl = run_paths(RunConfig(n=4, k=2, horizon=1.0, dt=1e-3, paths=5000, seed=22,
                             chart="lambda"))
    res = ks_two_sample(tm.lambdas.sum(axis=1), tl.lambdas.sum(axis=1), level=0.01)
    elapsed = time.perf_counter() - start
    ok = res.passed and elapsed < 300.0
    assert _line("C4 spectral-route-equivalence", ok,
                 f"KS {res.statistic:.4f} < {res.critical:.4f}, {elapsed:.0f}s")


def test_criterion_05_non_collision():
    start = time.perf_counter()
    tab = run_paths(RunConfig(n=6, k=2, horizon=10.0, dt=1e-3, paths=100, seed=41,
                              chart="zeta", zeta0=(2.0, 1.0)))
    min_gap = float(tab.diagnostics["min_gap"].min())
    elapsed = time.perf_counter() - start
    ok = min_gap > 0.0 and tab.status.all() and elapsed < 120.0
    assert _line("C5 non-collision", ok,
                 f"min gap {min_gap:.4f} over 100 paths, {elapsed:.0f}s")


def test_criterion_06_ergodic_trace_limit():
    start = time.perf_counter()
    t50 = run_paths(RunConfig(n=4, k=2, horizon=50.0, dt=1e-3, paths=200, seed=31,
                              chart="zeta"))
    rate50 = float(np.nanmean(t50.trace_integral)) / 50.0
    t100 = run_paths(RunConfig(n=4, k=2, horizon=100.0, dt=1e-3, paths=200, seed=32,
                               chart="zeta"))
    rate100 = float(np.nanmean(t100.trace_integral)) / 100.0
    escape = float(np.nanmin(t50.lambdas))
    elapsed = time.perf_counter() - start
    ok = (0.85 * 2 <= rate50 <= 2.0 and rate100 > rate50 and escape > 0.9
          and elapsed < 600.0)
    assert _line("C6 ergodic-trace-limit", ok,
                 f"rate(50) {rate50:.4f}, rate(100) {rate100:.4f}, "
                 f"min lambda {escape:.3f}, {elapsed:.0f}s")


@pytest.mark.parametrize("n,k", [(3, 1), (5, 2)])
def test_criterion_07_girsanov_martingale(n, k):
    start = time.perf_counter()
    tab = run_paths(RunConfig(n=n, k=k, horizon=1.0, dt=1e-3, paths=20000,
                              seed=110 + n, chart="matrix", engine="reduced",
                              alpha=0.25))
    mean, se = mean_se(tab.girsanov[tab.ok()])
    elapsed = time.perf_counter() - start
    ok = abs(mean - 1.0) <= 3.0 * se and elapsed < 600.0
    assert _line(f"C7 girsanov-martingale ({n},{k})", ok,
                 f"mean {mean:.5f} (3se {3 * se:.5f}), {elapsed:.0f}s")


def test_criterion_08_laplace_cross_check():
    start = time.perf_counter()
    cfg = RunConfig(n=3, k=1, horizon=1.0, dt=1e-3, paths=20000, seed=11,
                    chart="matrix", engine="reduced", alpha=0.25,
                    scenario="verify-laplace")
    _, report = scenario_verify_laplace(cfg)
    by_name = {c.name: c for c in report.criteria}
    mc_rel = by_name["mc_vs_rank_one_rel"].estimate
    km_rel = by_name["rank_one_vs_km_rel"].estimate
    elapsed = time.perf_counter() - start
    ok = mc_rel <= 0.02 and km_rel <= 1e-3 and elapsed < 900.0
    assert _line("C8 laplace-cross-check", ok,
                 f"MC vs series {mc_rel:.2e} (<=2e-2), series vs determinantal "
                 f"{km_rel:.2e} (<=1e-3), {elapsed:.0f}s")


def test_criterion_09_kernel_normalizations():
    start = time.perf_counter()
    worst_q = 0.0
    for n, k in [(3, 1), (4, 1), (5, 2)]:
        for t in (0.25, 1.0):
            kern = JacobiHeatKernel(KernelParams(n, k, 0.0), t)
            for u1 in (1.0, 2.0, 5.0):
                worst_q = max(worst_q, abs(kern.integrate(u1) - 1.0))
    worst_s = 0.0
    for m in (1, 2, 3):
        for t in (0.5, 1.0):
            xs, ws = panel_gauss(1e-12, 8.0 * np.sqrt(t) + 10.0, 40, 16)
            total = np.dot(ws, hyperbolic_heat_kernel(xs, t, m)
                           * hyperbolic_volume_weight(xs, m))
            worst_s = max(worst_s, abs(total - 1.0))
    t = 0.7
    xs = np.linspace(1e-4, 8.0, 200)
    closed = (np.exp(-t / 2.0) * xs * np.exp(-xs ** 2 / (2 * t))
              / ((2 * np.pi) * np.sqrt(2 * np.pi * t) * t * np.sinh(xs)))
    worst_m1 = float(np.max(np.abs(hyperbolic_heat_kernel(xs, t, 1) / closed - 1.0)))
    elapsed = time.perf_counter() - start
    ok = worst_q <= 1e-6 and worst_s <= 1e-8 and worst_m1 <= 1e-12 and elapsed < 120.0
    assert _line("C9 kernel-normalizations", ok,
                 f"q defect {worst_q:.2e}, s defect {worst_s:.2e}, "
                 f"m=1 closed form {worst_m1:.2e}, {elapsed:.0f}s")


def test_criterion_10_intertwining_identity():
    start = time.perf_counter()

    def bump(r):
        return np.exp(-(r - 1.0) ** 2)

    worst = max(intertwining_defect(bump, r, 0.3, 2, h=1e-4)
                for r in np.linspace(0.5, 2.0, 16))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 60.0
    assert _line("C10 intertwining-identity", ok,
                 f"max defect {worst:.2e}, {elapsed:.1f}s")


def test_criterion_11_area_clt(clt_table_4_2, clt_table_3_1):
    table, el1 = clt_table_4_2
    ok_mask = table.ok()
    area = table.area_im[ok_mask] / np.sqrt(table.horizon)
    res = ks_normal_test(area, 2.0, level=0.01)
    t31, el2 = clt_table_3_1
    area1 = t31.area_im[t31.ok()] / np.sqrt(t31.horizon)
    res1 = ks_normal_test(area1, 1.0, level=0.01)
    ok = res.passed and res1.passed and (el1 + el2) < 1200.0
    assert _line("C11a area-clt", ok,
                 f"(4,2): KS {res.statistic:.4f} < {res.critical:.4f} vs N(0,2); "
                 f"(3,1): KS {res1.statistic:.4f} vs N(0,1); "
                 f"runs {el1:.0f}s+{el2:.0f}s")


def test_criterion_11_winding_clt(clt_table_4_2, clt_table_3_1):
    # asserted exactly as specified: theta_T / sqrt(T) against N(0, 2k).
    # The simulated group Brownian motion (whose increment law fixes
    # d<theta> = (2k + tr J) dt, hence a long-run rate of 3k) fails this
    # target; see notes/decisions.md and the diagnostic test below.
    table, _ = clt_table_4_2
    theta = table.theta[table.ok()] / np.sqrt(table.horizon)
    res = ks_normal_test(theta, 2.0 * 2, level=0.01)
    t31, _ = clt_table_3_1
    theta1 = t31.theta[t31.ok()] / np.sqrt(t31.horizon)
    res1 = ks_normal_test(theta1, 2.0, level=0.01)
    ok = res.passed and res1.passed
    assert _line("C11b winding-clt (target N(0,2k) as specified)", ok,
                 f"(4,2): KS {res.statistic:.4f} vs crit {res.critical:.4f} "
                 f"(sample var {theta.var():.3f}, target 4); "
                 f"(3,1): KS {res1.statistic:.4f} (sample var {theta1.var():.3f}, "
                 f"target 2)")


def test_winding_rate_diagnostic(clt_table_4_2, clt_table_3_1):
    # supplementary (not an acceptance criterion): the same samples match
    # N(0, 3k), the rate implied by the increment quadratic variation
    table, _ = clt_table_4_2
    theta = table.theta[table.ok()] / np.sqrt(table.horizon)
    res = ks_normal_test(theta, 3.0 * 2, level=0.01)
    t31, _ = clt_table_3_1
    theta1 = t31.theta[t31.ok()] / np.sqrt(t31.horizon)
    res1 = ks_normal_test(theta1, 3.0, level=0.01)
    ok = res.passed and res1.passed
    assert _line("supplementary winding-rate-3k", ok,
                 f"(4,2): KS {res.statistic:.4f} < {res.critical:.4f} vs N(0,6); "
                 f"(3,1): KS {res1.statistic:.4f} vs N(0,3)")


def test_criterion_12_determinism():
    start = time.perf_counter()
    cfg_kwargs = dict(n=3, k=1, horizon=0.25, dt=1e-3, paths=500, seed=7,
                      chart="matrix", alpha=0.25, scenario="verify-laplace")
    t1, r1 = scenario_verify_laplace(RunConfig(**cfg_kwargs))
    t2, r2 = scenario_verify_laplace(RunConfig(**cfg_kwargs))
    same_table = t1.to_csv() == t2.to_csv()
    # wall-clock time is metadata and necessarily varies; every other byte
    # of the report must be identical
    same_report = (r1.to_json(include_runtime=False)
                   == r2.to_json(include_runtime=False))
    elapsed = time.perf_counter() - start
    ok = same_table and same_report
    assert _line("C12 determinism", ok,
                 f"tables identical: {same_table}, reports identical: "
                 f"{same_report}, {elapsed:.0f}s")
