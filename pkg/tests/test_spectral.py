import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgbm.kernels import JacobiHeatKernel, KernelParams
from hgbm.spectral import (
    ChartError,
    CollisionError,
    SpectralState,
    StepRejectedError,
    chart_convert,
    collision_diagnostics,
    doob_constant,
    km_transition_density,
    lambda_diffusion,
    lambda_drift,
    spread_degenerate,
    step_lambda,
    step_zeta,
    vandermonde,
    vandermonde_log,
    zeta_drift,
)


def test_chart_basic_points():
    s = SpectralState(np.array([0.0]), "lambda", 1.0)
    r = chart_convert(s, "rho")
    assert r.values[0] == pytest.approx(1.0)
    z = chart_convert(s, "zeta")
    assert z.values[0] == pytest.approx(0.0)
    assert z.time == pytest.approx(4.0)  # zeta clock runs four times faster


def test_chart_one_third():
    s = SpectralState(np.array([1.0 / 3.0]), "lambda", 0.5)
    r = chart_convert(s, "rho")
    assert r.values[0] == pytest.approx(2.0, rel=1e-14)
    z = chart_convert(r, "zeta")
    assert z.values[0] == pytest.approx(np.arccosh(2.0), rel=1e-14)
    assert z.time == pytest.approx(2.0)


def test_chart_boundary_error():
    with pytest.raises(ChartError):
        SpectralState(np.array([1.0]), "lambda", 0.0)
    # representable values just below 1 stay convertible
    s = SpectralState(np.array([1.0 - 1e-10]), "lambda", 0.0)
    assert chart_convert(s, "rho").values[0] > 1e9


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-6, 0.999), min_size=1, max_size=4), st.floats(0, 10))
def test_chart_round_trips(vals, t):
    lam = np.sort(np.unique(np.asarray(vals)))[::-1]
    s = SpectralState(lam, "lambda", t)
    z = chart_convert(s, "zeta")
    back = chart_convert(z, "lambda")
    assert np.max(np.abs(back.values - lam)) <= 1e-12
    assert back.time == pytest.approx(t, abs=1e-12)
    r = chart_convert(z, "rho")
    back2 = chart_convert(r, "lambda")
    assert np.max(np.abs(back2.values - lam)) <= 1e-12


def test_lambda_drift_origin_value():
    # k=1, n=3 at lambda=0: drift = 2(n-1) = 4
    assert lambda_drift(np.array([0.0]), 3, 1)[0] == pytest.approx(4.0)


def test_lambda_boundary_degenerates():
    lam = np.array([1.0 - 1e-14])
    assert abs(lambda_drift(lam, 3, 1)[0]) < 1e-10
    assert lambda_diffusion(lam)[0] < 1e-10


def test_lambda_interaction_repulsive():
    lam = np.array([0.6, 0.5])
    full = lambda_drift(lam, 4, 2)
    bare = 2.0 * ((4 - 1) - lam) * (1.0 - lam)
    inter = full - bare
    assert inter[0] > 0.0  # top particle pushed up
    assert inter[1] < 0.0  # bottom particle pushed down


def test_zeta_drift_large_separation():
    # k=1, n=3, zeta=20: 0.5 coth(20) + 0.5 coth(10) -> 1
    assert zeta_drift(np.array([20.0]), 3, 1)[0] == pytest.approx(1.0, abs=1e-8)


def test_zeta_interaction_repulsive():
    z = np.array([2.0, 1.0])
    full = zeta_drift(z, 6, 2)
    bare = 0.5 / np.tanh(z) + 0.5 * (6 - 4) / np.tanh(z / 2.0)
    inter = full - bare
    assert inter[0] > 0.0
    assert inter[1] < 0.0


def test_steps_zero_dt_unchanged():
    s = SpectralState(np.array([0.5, 0.2]), "lambda", 0.0)
    assert step_lambda(s, 4, 2, 0.0, np.random.default_rng(0)) is s
    z = SpectralState(np.array([2.0, 1.0]), "zeta", 0.0)
    assert step_zeta(z, 4, 2, 0.0, np.random.default_rng(0)) is z


def test_step_rejects_tiny_gap():
    s = SpectralState(np.array([0.5, 0.5 - 1e-9]), "lambda", 0.0)
    with pytest.raises(StepRejectedError):
        step_lambda(s, 4, 2, 1e-3, np.random.default_rng(0))


def test_step_requires_matching_chart():
    s = SpectralState(np.array([0.5]), "lambda", 0.0)
    with pytest.raises(ChartError):
        step_zeta(s, 3, 1, 1e-3, np.random.default_rng(0))


def test_vandermonde_values():
    assert vandermonde([2.5]) == 1.0
    assert vandermonde([3.0, 2.0, 1.0]) == pytest.approx(2.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=5))
def test_vandermonde_zero_on_collision(vals):
    vals = list(vals) + [vals[0]]
    assert vandermonde(vals) == 0.0


def test_vandermonde_log_matches_direct():
    vals = [7.0, 3.5, 1.25, 1.0]
    sign, logmag = vandermonde_log(vals)
    direct = np.prod([vals[l] - vals[j] for l in range(4) for j in range(l + 1, 4)])
    assert sign * np.exp(logmag) == pytest.approx(direct, rel=1e-12)


def test_doob_constant_values():
    assert doob_constant(7, 1) == 0.0
    assert doob_constant(4, 2) == pytest.approx(4.0)
    assert doob_constant(6, 2) == pytest.approx(8.0)


def test_spread_degenerate():
    out = spread_degenerate(np.zeros(3), eps=1e-6)
    assert np.all(np.diff(out) < 0)
    assert out[-1] == 0.0


def test_collision_diagnostics_single_particle():
    rep = collision_diagnostics(np.array([0.0, 1.0]), np.array([[0.5], [0.6]]))
    assert rep.min_gap == np.inf


def test_collision_diagnostics_reports_crossing():
    times = np.linspace(0.0, 1.0, 11)
    top = np.linspace(1.0, 0.0, 11)
    bottom = np.linspace(0.0, 1.0, 11)
    values = np.stack([np.maximum(top, bottom), np.minimum(top, bottom)], axis=1)
    rep = collision_diagnostics(times, values)
    assert rep.min_gap == pytest.approx(0.0)
    assert rep.time_at_min == pytest.approx(0.5)


def test_km_density_rank_one_reduces_to_kernel():
    kern = JacobiHeatKernel(KernelParams(3, 1, 0.0), 0.5)
    val = km_transition_density([2.0], [3.0], 0.5, 3, 1, kernel=kern)
    assert val == pytest.approx(kern(2.0, 3.0), rel=1e-12)


def test_km_density_collision_error():
    with pytest.raises(CollisionError):
        km_transition_density([2.0, 2.0], [3.0, 1.5], 0.5, 6, 2)


def test_km_density_rank_one_normalizes():
    kern = JacobiHeatKernel(KernelParams(3, 1, 0.0), 1.0)
    total = kern.integrate(2.0)
    assert abs(total - 1.0) <= 1e-6


@pytest.mark.slow
def test_km_density_rank_two_normalizes():
    # k=2, n=6, t=0.5 from (3,2): the ordered-density integral is 1 (1e-3)
    n, k, t = 6, 2, 0.5
    rho0 = np.array([3.0, 2.0])
    kern = JacobiHeatKernel(KernelParams(n, k, 0.0), t)
    from hgbm.kernels import panel_gauss
    r_max = kern.default_r_max(3.0)
    rs, ws = panel_gauss(0.0, r_max, 40, 12)
    us = np.cosh(2.0 * rs)
    jac = 2.0 * np.sinh(2.0 * rs)
    rows = np.stack([kern.row(rho0[j], us) for j in range(k)])  # (k, nodes)
    from hgbm.spectral import doob_constant as dc, vandermonde_log as vl
    _, logv0 = vl(rho0)
    pref = np.exp(-dc(n, k) * t - logv0)
    # integrand (x-y)[q1(x)q2(y) - q1(y)q2(x)] is symmetric, so the ordered
    # integral is half of the square, which collapses to moment products:
    # int_Delta = M1(q1) M0(q2) - M0(q1) M1(q2)
    qx = rows * (jac * ws)[None, :]
    m0 = qx.sum(axis=1)
    m1 = qx @ us
    total = pref * (m1[0] * m0[1] - m0[0] * m1[1])
    assert total == pytest.approx(1.0, abs=1e-3)
