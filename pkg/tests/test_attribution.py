import numpy as np
import pytest

from voxdis.attribution import (
    attribute_set,
    delta_analysis,
    kernel_shap,
    shapley_exact,
)
from voxdis.errors import ConfigError


def linear_model(w):
    w = np.asarray(w, dtype=np.float64)

    def score(X):
        return np.asarray(X) @ w

    return score


def test_exact_linear_closed_form():
    rng = np.random.default_rng(0)
    w = rng.normal(0, 1, 54)
    x = rng.normal(0, 1, 54)
    b = rng.normal(0, 1, 54)
    active = [3, 10, 17, 30, 53]
    phi = shapley_exact(linear_model(w), x, b, active)
    expected = w[active] * (x[active] - b[active])
    assert np.max(np.abs(phi - expected)) < 1e-9


def test_exact_symmetry_axiom():
    def f(X):
        return X[:, 0] + X[:, 1]

    x = np.zeros(54)
    x[0] = x[1] = 2.0
    b = np.zeros(54)
    phi = shapley_exact(f, x, b, [0, 1])
    assert abs(phi[0] - phi[1]) < 1e-12


def test_exact_null_player():
    def f(X):
        return X[:, 0] * 2.0

    rng = np.random.default_rng(1)
    x = rng.normal(0, 1, 54)
    b = rng.normal(0, 1, 54)
    phi = shapley_exact(f, x, b, [0, 5, 9])
    assert abs(phi[1]) < 1e-12 and abs(phi[2]) < 1e-12


def test_exact_additivity_nonlinear():
    def f(X):
        return np.tanh(X[:, 2]) * X[:, 7] + 0.5 * X[:, 11] ** 2

    rng = np.random.default_rng(2)
    x = rng.normal(0, 1, 54)
    b = rng.normal(0, 1, 54)
    active = [2, 7, 11]
    phi = shapley_exact(f, x, b, active)
    masked = x.copy()
    masked[active] = b[active]
    assert abs(f(x[None, :])[0] - f(masked[None, :])[0] - phi.sum()) < 1e-9


def test_exact_rejects_large_sets():
    with pytest.raises(ConfigError):
        shapley_exact(linear_model(np.ones(54)), np.ones(54), np.zeros(54), range(13))


def test_kernel_matches_exact_with_full_enumeration():
    rng = np.random.default_rng(3)

    def f(X):
        X = np.asarray(X)
        return np.sin(X[:, 1]) + X[:, 4] * X[:, 20] + 0.3 * X[:, 33] - np.abs(X[:, 40])

    b = rng.normal(0, 1, 54)
    x = b.copy()
    active = [1, 4, 20, 33, 40, 48, 51, 6, 12, 29]      # 10 differing features
    x[active] = rng.normal(0, 1, len(active))
    result = kernel_shap(f, x, b, n_samples=2048, seed=0)
    phi_exact = shapley_exact(f, x, b, sorted(active))
    expected = np.zeros(54)
    expected[sorted(active)] = phi_exact
    assert np.max(np.abs(result.values - expected)) < 1e-6
    assert result.additivity_residual < 1e-6
    assert not result.ridge_fallback


def test_kernel_linear_closed_form():
    rng = np.random.default_rng(4)
    w = rng.normal(0, 1, 54)
    x = rng.normal(0, 1, 54)
    b = rng.normal(0, 1, 54)
    result = kernel_shap(linear_model(w), x, b, n_samples=256, seed=1)
    assert np.max(np.abs(result.values - w * (x - b))) < 1e-6
    assert result.additivity_residual < 1e-6


def test_kernel_deterministic_given_seed():
    rng = np.random.default_rng(5)

    def f(X):
        X = np.asarray(X)
        return np.tanh(X @ rng_w)

    rng_w = rng.normal(0, 0.3, 54)
    x = rng.normal(0, 1, 54)
    b = rng.normal(0, 1, 54)
    a = kernel_shap(f, x, b, n_samples=200, seed=9)
    c = kernel_shap(f, x, b, n_samples=200, seed=9)
    assert np.array_equal(a.values, c.values)


def test_kernel_budget_validation():
    with pytest.raises(ConfigError):
        kernel_shap(linear_model(np.ones(54)), np.ones(54), np.zeros(54), n_samples=10)


def test_delta_identity_model_zero():
    rng = np.random.default_rng(6)
    w = rng.normal(0, 1, 54)
    f = linear_model(w)
    X = rng.normal(0, 1, (4, 54))
    b = rng.normal(0, 1, 54)
    report = delta_analysis(f, f, X, b, n_samples=128, seed=2)
    assert np.max(np.abs(report.delta)) < 1e-9
    assert report.suppressed == [] and report.enhanced == []


def test_delta_antisymmetry_and_disjoint_lists():
    rng = np.random.default_rng(7)
    f = linear_model(rng.normal(0, 1, 54))
    g = linear_model(rng.normal(0, 1, 54))
    X = rng.normal(0, 1, (5, 54))
    b = rng.normal(0, 1, 54)
    ab = delta_analysis(f, g, X, b, n_samples=128, seed=3)
    ba = delta_analysis(g, f, X, b, n_samples=128, seed=3)
    assert np.array_equal(ab.delta, -ba.delta)
    assert len(ab.suppressed) == 5 and len(ab.enhanced) == 5
    assert not ({n for n, _ in ab.suppressed} & {n for n, _ in ab.enhanced})


def test_attribute_set_shapes():
    rng = np.random.default_rng(8)
    f = linear_model(rng.normal(0, 1, 54))
    X = rng.normal(0, 1, (3, 54))
    b = rng.normal(0, 1, 54)
    res = attribute_set(f, X, b, n_samples=128, seed=4)
    assert res.per_recording.shape == (3, 54)
    assert res.mean_abs.shape == (54,)
    assert res.max_residual < 1e-6
