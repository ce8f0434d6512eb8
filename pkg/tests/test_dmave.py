import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from cdsdr.dmave import (
    DmaveConfig,
    DmaveState,
    dmave_fit,
    dmave_inner_fits,
    dmave_objective,
    dmave_orthonormalize,
    dmave_outer_solve,
    dmave_step,
    reduced_weights,
    unvectorize,
    vectorize_basis,
)
from cdsdr.errors import DimensionError, RankCollapseError
from cdsdr.metrics import estimation_error
from cdsdr.preprocess import Dataset, projection, standardize
from cdsdr.smoothing import TrimConfig, response_kernel_table

from oracles import naive_outer_gram, normal_equations_fit

LOOSE = TrimConfig(omega0=1e-4, min_window=1.0)


def _setup(seed=0, n=20, p=3, q=2, h=1.6, b=0.9):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    y = x[:, 0] + 0.5 * x[:, 1] ** 2 + 0.2 * rng.normal(size=n)
    std = standardize(Dataset(x, y))
    b_mat = np.linalg.qr(rng.normal(size=(p, q)))[0]
    return std, b_mat, response_kernel_table(std.y_std, b), h


def test_outer_solve_matches_kronecker_oracle():
    std, b_mat, resp, h = _setup()
    fits = dmave_inner_fits(std.z, resp, b_mat, h, LOOSE)
    g, rhs = naive_outer_gram(std.z, b_mat, fits.a, fits.d, fits.weights, fits.rho, resp)
    assert np.abs(dmave_outer_solve(fits) - np.linalg.solve(g, rhs)).max() < 1e-9


def test_inner_fits_match_wls():
    std, b_mat, resp, h = _setup(seed=1)
    fits = dmave_inner_fits(std.z, resp, b_mat, h, LOOSE)
    v = std.z @ b_mat
    for j in (0, 5, 19):
        for k in (0, 11):
            ref = normal_equations_fit(v - v[j], resp[:, k], fits.weights[:, j])
            assert fits.a[j, k] == pytest.approx(ref[0], abs=1e-9)
            assert np.allclose(fits.d[j, :, k], ref[1:], atol=1e-9)


def test_polar_equals_svd(rng):
    m = rng.normal(size=(5, 2))
    u, _, vt = np.linalg.svd(m, full_matrices=False)
    b = dmave_orthonormalize(vectorize_basis(m), 5, 2)
    assert np.allclose(b, u @ vt, atol=1e-12)
    assert np.allclose(b.T @ b, np.eye(2), atol=1e-12)


def test_rank_collapse():
    m = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(RankCollapseError):
        dmave_orthonormalize(vectorize_basis(m), 3, 2)


@given(st.integers(2, 6), st.integers(1, 3), st.integers(0, 1000))
def test_vectorize_round_trip(p, q, seed):
    m = np.random.default_rng(seed).normal(size=(p, q))
    v = vectorize_basis(m)
    assert np.array_equal(v[:p], m[:, 0])
    assert np.array_equal(unvectorize(v, p, q), m)


def test_unvectorize_bad_size():
    with pytest.raises(DimensionError):
        unvectorize(np.ones(5), 2, 2)


def test_frozen_objective_non_increasing():
    std, b_mat, resp, h = _setup(seed=2, n=40, p=4, q=2, h=1.4)
    fits0 = dmave_inner_fits(std.z, resp, b_mat, h, LOOSE)
    frozen = dict(weights=fits0.weights, rho_x=fits0.rho_x, rho_y=fits0.rho_y)
    objs = []
    for t in range(6):
        new_b, fits, _ = dmave_step(std.z, resp, DmaveState(b_mat, t, h, 0.9), LOOSE, **frozen)
        objs.append(dmave_objective(std.z, resp, b_mat, fits))
        b_mat = new_b
    assert all(b <= a * (1 + 1e-10) for a, b in zip(objs, objs[1:]))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000))
def test_step_invariant_to_column_rotation(seed):
    std, b_mat, resp, h = _setup(seed=3)
    rot = ortho_group.rvs(2, random_state=seed)
    a, _, _ = dmave_step(std.z, resp, DmaveState(b_mat, 1, h, 0.9), LOOSE)
    b, _, _ = dmave_step(std.z, resp, DmaveState(b_mat @ rot, 1, h, 0.9), LOOSE)
    assert np.allclose(projection(a), projection(b), atol=1e-8)


def test_reduced_weights_symmetric(rng):
    z = rng.normal(size=(15, 3))
    w = reduced_weights(z, np.eye(3)[:, :1], 0.8)
    assert np.allclose(w, w.T)
    assert np.all(np.diag(w) == pytest.approx(15 / 16 / 0.8))


def test_fit_recovers_direction_and_is_deterministic(model1_small):
    ds, b_true, _ = model1_small
    cfg = DmaveConfig(max_iter=8)
    q = b_true.shape[1]
    a, b = dmave_fit(ds, q, cfg), dmave_fit(ds, q, cfg)
    assert np.array_equal(a.basis, b.basis)
    assert estimation_error(b_true, a.basis) < 0.5


def test_fit_accepts_truth_init(model1_small):
    ds, b_true, std = model1_small
    from cdsdr.preprocess import orthonormalize

    init = orthonormalize(np.linalg.inv(std.s_inv_sqrt) @ b_true)
    res = dmave_fit(ds, b_true.shape[1], DmaveConfig(max_iter=5), init=init)
    assert estimation_error(b_true, res.basis) < 0.5
