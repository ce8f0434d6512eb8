import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdsdr.errors import EmptyWindowError
from cdsdr.smoothing import (
    TrimConfig,
    density_x_reduced,
    density_y,
    pairwise_sq_dists,
    response_kernel_table,
    trim_rho,
    window_guard,
    wls_linear_fit,
)

from oracles import normal_equations_fit, quad_kernel


def test_wls_matches_normal_equations():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n, d = rng.integers(8, 30), rng.integers(1, 5)
        x = rng.normal(size=(n, d))
        r = rng.normal(size=n)
        w = rng.uniform(0.1, 2.0, size=n)
        fit = wls_linear_fit(x, r, w)
        ref = normal_equations_fit(x, r, w)
        worst = max(worst, abs(fit.a - ref[0]), np.abs(fit.grad - ref[1:]).max())
    assert worst < 1e-8


def test_wls_exact_linear():
    fit = wls_linear_fit(np.array([[0.0], [1.0], [2.0]]), np.array([1.0, 3.0, 5.0]), np.ones(3))
    assert fit.a == pytest.approx(1.0, abs=1e-12)
    assert fit.grad[0] == pytest.approx(2.0, abs=1e-12)


def test_wls_zero_weights():
    with pytest.raises(EmptyWindowError):
        wls_linear_fit(np.ones((3, 1)), np.ones(3), np.zeros(3))


def test_wls_singular_design_uses_ridge():
    x = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    fit = wls_linear_fit(x, np.array([1.0, 2.0, 3.0, 4.0]), np.ones(4))
    assert np.all(np.isfinite(fit.grad))
    assert fit.gram_condition > 1e10
    assert fit.grad.sum() == pytest.approx(1.0, abs=1e-5)


def test_trim_rho_shape():
    cfg = TrimConfig(omega0=0.01)
    assert trim_rho(0.0, cfg) == 0.0
    assert trim_rho(0.01, cfg) == 0.0
    assert trim_rho(0.02, cfg) == 1.0
    assert trim_rho(1.0, cfg) == 1.0
    assert trim_rho(0.015, cfg) == pytest.approx(0.5)


@given(st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False))
def test_trim_rho_monotone_bounded(a, b):
    lo, hi = sorted((a, b))
    cfg = TrimConfig(omega0=0.1, ramp_width=0.3)
    assert 0.0 <= trim_rho(lo, cfg) <= trim_rho(hi, cfg) <= 1.0


def test_trim_rho_smooth_at_edges():
    cfg = TrimConfig(omega0=0.5, ramp_width=1.0)
    eps = 1e-4
    for edge in (0.5, 1.5):
        left = (trim_rho(edge, cfg) - trim_rho(edge - eps, cfg)) / eps
        right = (trim_rho(edge + eps, cfg) - trim_rho(edge, cfg)) / eps
        assert abs(left) < 1e-6 and abs(right) < 1e-6


def test_trim_config_validation():
    with pytest.raises(ValueError):
        TrimConfig(omega0=0.0)
    with pytest.raises(ValueError):
        TrimConfig(ramp_width=-1.0)


def test_window_guard():
    w = np.zeros((10, 3))
    w[:, 0] = 1.0
    w[:3, 1] = 1.0
    w[:6, 2] = 1.0
    cfg = TrimConfig(min_window=2.0)
    assert window_guard(w, 2, cfg).tolist() == [1.0, 0.0, 1.0]
    assert window_guard(w, 2, TrimConfig(min_window=0.0)).tolist() == [1.0, 1.0, 1.0]
    assert window_guard(w, 2, TrimConfig(min_window=2.0, window_mode="count")).tolist() == [1.0, 0.0, 1.0]


def test_response_table_and_density(rng):
    y = rng.normal(size=12)
    b = 0.7
    t = response_kernel_table(y, b)
    for i in range(12):
        for k in range(12):
            assert t[i, k] == pytest.approx(quad_kernel(np.array([(y[i] - y[k]) / b])) / b, abs=1e-14)
    assert np.allclose(t, t.T)
    assert density_y(y, y[3], b) == pytest.approx(t[:, 3].mean())


def test_pairwise_sq_dists(rng):
    u = rng.normal(size=(9, 4))
    ref = ((u[:, None, :] - u[None, :, :]) ** 2).sum(-1)
    assert np.allclose(pairwise_sq_dists(u), ref, atol=1e-12)


def test_density_x_reduced_bruteforce(rng):
    z = rng.normal(size=(40, 3))
    basis = np.linalg.qr(rng.normal(size=(3, 2)))[0]
    h = 0.9
    x0 = rng.normal(size=3)
    ref = np.mean([quad_kernel(basis.T @ (zi - x0) / h) / h**2 for zi in z])
    assert density_x_reduced(z, basis, x0, h) == pytest.approx(ref, abs=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_density_x_reduced_integrates_to_one_1d(seed):
    from scipy import integrate

    rng = np.random.default_rng(seed)
    z = rng.normal(size=(15, 2))
    basis = np.array([[1.0], [0.0]])
    val, _ = integrate.quad(
        lambda t: density_x_reduced(z, basis, np.array([t, 0.0]), 0.5),
        -10, 10, points=sorted(set(np.concatenate([z[:, 0] - 0.5, z[:, 0] + 0.5]))), limit=1000, epsabs=1e-10,
    )
    assert abs(val - 1) < 1e-6
