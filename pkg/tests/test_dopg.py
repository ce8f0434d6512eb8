import numpy as np
import pytest
from scipy.stats import special_ortho_group

from cdsdr.bandwidth import BandwidthSchedule
from cdsdr.dopg import DopgConfig, dopg_first_sigma, dopg_fit, local_gradients, weight_metric
from cdsdr.errors import DimensionError
from cdsdr.kernels import ball_kernel_mass
from cdsdr.metrics import estimation_error
from cdsdr.preprocess import Dataset, standardize
from cdsdr.smoothing import TrimConfig

from oracles import naive_dopg_sigma, normal_equations_fit, quad_kernel


def _small_problem(seed=0, n=25, p=3):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    y = x[:, 0] + 0.3 * rng.normal(size=n)
    return standardize(Dataset(x, y))


def test_first_iteration_matches_triple_loop():
    std = _small_problem()
    n, p = std.z.shape
    trim = TrimConfig(omega0=1e-4, min_window=1.0)
    cfg = DopgConfig(trim=trim)
    sched = BandwidthSchedule(n, p, 1)
    h, b = sched.initial()
    # Sigma_(0) = I rescaled to trace 2 inside the weights
    metric = np.sqrt(2.0 / p) * np.eye(p)
    lam = np.full(p, np.sqrt(2.0 / p))
    keep = lam[lam > h]
    mu = ball_kernel_mass(keep.size) if keep.size else 15 / 16
    rho_x = np.zeros(n)
    for j in range(n):
        w = np.array([quad_kernel(metric @ (std.z[i] - std.z[j]) / h) for i in range(n)])
        fx = np.prod(keep / h) / mu * w.sum() / n
        ess = w.sum() ** 2 / (w**2).sum()
        s = np.clip((fx - 1e-4) / 1e-4, 0, 1)
        rho_x[j] = (6 * s**5 - 15 * s**4 + 10 * s**3) * (fx > 1e-4) * (ess >= p + 1)
    rho_y = np.zeros(n)
    for k in range(n):
        fy = np.mean([quad_kernel(np.array([(std.y_std[i] - std.y_std[k]) / b])) / b for i in range(n)])
        s = np.clip((fy - 1e-4) / 1e-4, 0, 1)
        rho_y[k] = (6 * s**5 - 15 * s**4 + 10 * s**3) * (fy > 1e-4)
    ref = naive_dopg_sigma(std.z, std.y_std, metric, h, b, rho_x, rho_y)
    got = dopg_first_sigma(std, 1, cfg).sigma
    assert np.abs(got - ref).max() < 1e-10


def test_local_gradients_match_wls(rng):
    z = rng.normal(size=(30, 2))
    resp = rng.normal(size=(30, 4))
    _, slopes, w = local_gradients(z, resp, np.eye(2), 1.5)
    for j in (0, 7, 29):
        for k in range(4):
            ref = normal_equations_fit(z - z[j], resp[:, k], w[:, j])
            assert np.allclose(slopes[j, :, k], ref[1:], atol=1e-9)


def test_sigma_is_psd(model1_small):
    _, _, std = model1_small
    s = dopg_first_sigma(std, 1).sigma
    assert np.allclose(s, s.T)
    assert np.linalg.eigvalsh(s).min() > -1e-12


def test_rotation_equivariance():
    std = _small_problem(seed=4, n=60, p=4)
    rot = special_ortho_group.rvs(4, random_state=3)
    a = dopg_first_sigma(std, 1).sigma
    std_r = standardize(Dataset(std.z @ rot, std.y_std))
    b = dopg_first_sigma(std_r, 1).sigma
    assert np.allclose(rot.T @ a @ rot, b, atol=1e-10)


def test_fit_deterministic(model1_small):
    ds, _, _ = model1_small
    cfg = DopgConfig(max_iter=3)
    a, b = dopg_fit(ds, 1, cfg), dopg_fit(ds, 1, cfg)
    assert np.array_equal(a.basis, b.basis)
    assert a.iterations == 3 and len(a.history) == 3


def test_fit_recovers_direction(model1_small):
    ds, b_true, _ = model1_small
    res = dopg_fit(ds, b_true.shape[1])
    assert estimation_error(b_true, res.basis) < 0.5
    assert res.basis.shape == b_true.shape
    assert np.all(np.diff(res.eigenvalues) <= 1e-12)


def test_bad_q(model1_small):
    ds, _, _ = model1_small
    with pytest.raises(DimensionError):
        dopg_fit(ds, 10)


def test_weight_metric_scales(rng):
    a = rng.normal(size=(5, 5))
    sigma = a @ a.T
    m = weight_metric(sigma, "truncated", 2.0, q=2)
    vals = np.linalg.eigvalsh(m @ m)
    assert np.sum(vals > 1e-10) == 2
    assert np.trace(m @ m) == pytest.approx(2.0)
    top = np.linalg.eigh(sigma)[1][:, -2:]
    assert np.allclose(m @ m @ top, top @ np.diag(np.linalg.eigh(m @ m)[0][-2:]), atol=1e-10)
    m = weight_metric(sigma, "trace", 3.0)
    assert np.trace(m @ m) == pytest.approx(3.0)
    assert np.allclose(weight_metric(sigma, "none") @ weight_metric(sigma, "none"), sigma)
    with pytest.raises(ValueError):
        weight_metric(sigma, "truncated")
    with pytest.raises(ValueError):
        weight_metric(sigma, "bogus")
