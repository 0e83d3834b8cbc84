import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgbm.grassmann import (
    ContractionError,
    GrassmannPoint,
    ProjectionError,
    ScalarField,
    StepRejectedError,
    apply_generator,
    carre_du_champ,
    contraction_identity_defects,
    invariant_density,
    kahler_metric_defect,
    project_to_grassmann,
    step_grassmann,
)
from hgbm.group import BlockGroupElement, GroupShape, sample_increment, step_group
from hgbm.scenarios import random_contraction


def _simulated_group_element(shape, steps=200, seed=0):
    rng = np.random.default_rng(seed)
    u = BlockGroupElement.identity(shape)
    for _ in range(steps):
        u = step_group(u, sample_increment(shape, 1e-3, rng))
    return u


def test_project_identity_is_origin():
    u = BlockGroupElement.identity(GroupShape(4, 2))
    assert np.allclose(project_to_grassmann(u).w, 0.0)


def test_projection_right_unitary_invariance():
    shape = GroupShape(4, 2)
    u = _simulated_group_element(shape, seed=1)
    rng = np.random.default_rng(2)
    g, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    rot = np.eye(4, dtype=complex)
    rot[2:, 2:] = g
    u_rot = BlockGroupElement.from_matrix(u.matrix() @ rot, shape)
    w1 = project_to_grassmann(u).w
    w2 = project_to_grassmann(u_rot).w
    assert np.max(np.abs(w1 - w2)) <= 1e-12


def test_projected_point_is_contraction():
    for seed in range(3):
        u = _simulated_group_element(GroupShape(5, 2), seed=seed)
        pt = project_to_grassmann(u)
        assert pt.contraction_margin() > 0.0


def test_projection_error_on_singular_block():
    shape = GroupShape(3, 1)
    mat = np.eye(3, dtype=complex)
    mat[2, 2] = 0.0
    with pytest.raises(ProjectionError):
        project_to_grassmann(BlockGroupElement.from_matrix(mat, shape))


def test_step_quadratic_covariation_origin():
    # at w = 0 the increments satisfy E[dw d(conj w)] / dt = 2 delta delta
    p, k, n_draws, dt = 2, 2, 100000, 1e-3
    rng = np.random.default_rng(3)
    origin = GrassmannPoint(np.zeros((p, k), dtype=complex))
    draws = np.stack([step_grassmann(origin, dt, rng).w for _ in range(n_draws)])
    flat = draws.reshape(n_draws, -1)
    cov = (flat[:, :, None] * flat.conj()[:, None, :]).mean(axis=0) / dt
    assert np.max(np.abs(cov - 2.0 * np.eye(p * k))) < 5 * 2.0 / np.sqrt(n_draws) * 2


def test_step_quadratic_covariation_generic_point():
    rng = np.random.default_rng(4)
    w = random_contraction(rng, 2, 2)
    pt = GrassmannPoint(w)
    n_draws, dt = 100000, 1e-3
    draws = np.stack([step_grassmann(pt, dt, rng).w - w for _ in range(n_draws)])
    left = np.eye(2) - w @ w.conj().T
    right = np.eye(2) - w.conj().T @ w
    expect = 2.0 * np.einsum('ix,yj->ijxy', left, right)  # dw_ij d(conj w)_xy
    emp = np.einsum('pij,pxy->ijxy', draws, draws.conj()) / n_draws / dt
    se = 2.0 / np.sqrt(n_draws) * 2
    assert np.max(np.abs(emp - expect)) < 5 * se


def test_step_zero_dt():
    pt = GrassmannPoint(np.full((2, 1), 0.3 + 0.1j))
    out = step_grassmann(pt, 0.0, np.random.default_rng(0))
    assert np.array_equal(out.w, pt.w)


def test_step_rejection_near_boundary():
    w = np.zeros((2, 1), dtype=complex)
    w[0, 0] = np.sqrt(1.0 - 1e-12)
    with pytest.raises(StepRejectedError):
        step_grassmann(GrassmannPoint(w), 1e-3, np.random.default_rng(0))


def test_invariant_density_values():
    assert invariant_density(np.zeros((2, 1)), 3) == pytest.approx(1.0)
    w = np.array([[np.sqrt(0.5)]], dtype=complex)
    assert invariant_density(w, 2) == pytest.approx(4.0, rel=1e-12)
    with pytest.raises(ContractionError):
        invariant_density(np.array([[1.2]], dtype=complex), 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_invariant_density_at_least_one(seed):
    rng = np.random.default_rng(seed)
    w = random_contraction(rng, 3, 2)
    assert invariant_density(w, 5) >= 1.0


def test_carre_du_champ_constant_field():
    f = ScalarField(lambda w: 1.0 + 0.0j)
    w = random_contraction(np.random.default_rng(5), 1, 1)
    assert abs(carre_du_champ(f, f, w)) < 1e-8


def test_carre_du_champ_origin_oracle():
    # analytic coefficients at the origin: Gamma(2 Re w, 2 Re w) = 4,
    # Gamma(w, conj w) = 2, Gamma(w, w) = 0
    w0 = np.zeros((1, 1), dtype=complex)
    f_re = ScalarField(lambda w: 2.0 * w[0, 0].real)
    f_id = ScalarField(lambda w: w[0, 0])
    f_conj = ScalarField(lambda w: np.conj(w[0, 0]))
    assert carre_du_champ(f_re, f_re, w0) == pytest.approx(4.0, abs=1e-6)
    assert carre_du_champ(f_id, f_conj, w0) == pytest.approx(2.0, abs=1e-6)
    assert abs(carre_du_champ(f_id, f_id, w0)) < 1e-6


def test_carre_du_champ_symmetric():
    rng = np.random.default_rng(6)
    w = random_contraction(rng, 2, 1)
    f = ScalarField(lambda x: np.sin(x[0, 0].real) + 1j * x[1, 0].imag ** 2)
    g = ScalarField(lambda x: np.exp(-abs(x[0, 0]) ** 2) * x[1, 0])
    a = carre_du_champ(f, g, w)
    b = carre_du_champ(g, f, w)
    assert abs(a - b) < 1e-7


def test_generator_kills_linear_fields():
    w = random_contraction(np.random.default_rng(7), 2, 2)
    f = ScalarField(lambda x: x[0, 1] + 2.0 * x[1, 0] - 0.3 * x[0, 0])
    assert abs(apply_generator(f, w)) < 1e-6


def test_generator_rank_one_radial_form():
    # for k = 1 the operator equals 4(1-|w|^2)[sum dd_bar - R R_bar] with
    # R = sum w_j d/dw_j; assemble the right side independently
    rng = np.random.default_rng(8)
    w = random_contraction(rng, 2, 1) * 0.7

    def f_fn(x):
        return np.exp(-np.sum(np.abs(x) ** 2)) * (1.0 + x[0, 0].real + 0.5 * (x[1, 0] * np.conj(x[0, 0])).real)

    f = ScalarField(f_fn)
    h = 1e-4
    from hgbm.grassmann import _mixed_second
    p = 2
    mixed = np.array([[_mixed_second(f_fn, w, i, 0, i2, 0, h) for i2 in range(p)]
                      for i in range(p)])
    s2 = float(1.0 - np.sum(np.abs(w) ** 2))
    lap = sum(mixed[i, i] for i in range(p))
    rr = sum(w[i, 0] * np.conj(w[i2, 0]) * mixed[i, i2]
             for i in range(p) for i2 in range(p))
    expect = 4.0 * s2 * (lap - rr)
    got = apply_generator(f, w, h)
    assert abs(got - expect) < 1e-6


@pytest.mark.slow
def test_generator_short_time_monte_carlo():
    rng = np.random.default_rng(9)
    w = random_contraction(rng, 2, 1) * 0.6
    pt = GrassmannPoint(w)

    def f_fn(x):
        return float(np.sum(np.abs(x) ** 2) + x[0, 0].real)

    f = ScalarField(f_fn)
    h = 1e-3
    n_draws = 400000
    vals = np.fromiter(
        (f_fn(step_grassmann(pt, h, rng).w) for _ in range(n_draws)),
        dtype=float, count=n_draws)
    mc = (vals.mean() - f_fn(w)) / h
    se = vals.std(ddof=1) / np.sqrt(n_draws) / h
    target = 0.5 * apply_generator(f, w).real
    assert abs(mc - target) < 5 * se + 0.05


def test_identities_zero_at_origin():
    d = contraction_identity_defects(np.zeros((3, 2), dtype=complex))
    assert max(d) <= 1e-14


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([(2, 1), (3, 2), (4, 2)]))
def test_identities_random_contraction(seed, pk):
    rng = np.random.default_rng(seed)
    w = random_contraction(rng, *pk)
    d = contraction_identity_defects(w, rng=rng)
    assert max(d) <= 1e-12


def test_identities_near_boundary():
    rng = np.random.default_rng(10)
    w = random_contraction(rng, 3, 2, smax=np.sqrt(1.0 - 1e-6))
    d = contraction_identity_defects(w, rng=rng)
    assert max(d) <= 1e-6


def test_identities_domain_error():
    w = np.array([[1.5]], dtype=complex)
    with pytest.raises(ContractionError):
        contraction_identity_defects(w)


def test_kahler_metric_identity():
    rng = np.random.default_rng(11)
    for pk in [(2, 1), (2, 2)]:
        w = random_contraction(rng, *pk)
        assert kahler_metric_defect(w) <= 1e-6
