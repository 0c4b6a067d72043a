import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import factor_data
from factorcov.errors import (
    DataError,
    DimensionMismatch,
    SingularFactorCov,
    SingularFactorGram,
    SingularMatrix,
    TooFewObservations,
    ZeroResidualVariance,
)
from factorcov.estimators import (
    CovarianceEstimate,
    FactorModelFit,
    FactorPanel,
    ReturnPanel,
    covariance_factor,
    covariance_sample,
    fit_factor_model,
    hat_matrix,
    inverse_factor,
    inverse_generic,
    sample_mean,
    woodbury_inverse,
)


def test_panels_copy_and_freeze():
    a = np.ones((2, 3))
    panel = FactorPanel(a)
    assert panel.K == 2 and panel.n == 3
    assert a.flags.writeable
    with pytest.raises(ValueError):
        panel.data[0, 0] = 5.0


def test_panel_rejects_nonfinite():
    with pytest.raises(DataError):
        ReturnPanel(np.array([[1.0, np.nan]]))


def test_noiseless_fit_recovers_loadings(rng):
    X = rng.standard_normal((3, 40))
    B = rng.standard_normal((7, 3))
    fit = fit_factor_model(X, B @ X)
    np.testing.assert_allclose(fit.loadings, B, atol=1e-10)
    np.testing.assert_allclose(fit.resid_diag, 0.0, atol=1e-20)


def test_single_factor_normal_equations():
    # by hand: sum(x y) = 2.1 + 7.8 + 18.6 + 31.2 = 59.7, sum(x^2) = 30
    X = np.array([[1.0, 2.0, 3.0, 4.0]])
    Y = np.array([[2.1, 3.9, 6.2, 7.8]])
    fit = fit_factor_model(X, Y)
    b = 59.7 / 30.0
    assert b == pytest.approx(1.99)
    assert fit.loadings[0, 0] == pytest.approx(b, rel=1e-14)
    resid = Y[0] - b * X[0]
    assert fit.resid_diag[0] == pytest.approx(np.sum(resid**2) / 4, rel=1e-12)
    assert fit.factor_cov[0, 0] == pytest.approx(5.0 / 3.0, rel=1e-14)
    assert fit.mean[0] == pytest.approx(b * 2.5, rel=1e-14)
    S = covariance_factor(fit)
    assert S.matrix[0, 0] == pytest.approx(b**2 * 5.0 / 3.0 + np.sum(resid**2) / 4, rel=1e-12)


def test_zero_returns():
    X = np.array([[1.0, 2.0, 3.0]])
    fit = fit_factor_model(X, np.zeros((4, 3)))
    assert not fit.loadings.any() and not fit.resid_diag.any() and not fit.mean.any()


def test_fit_field_relations(rng):
    X, _, Y = factor_data(rng, 12, 30)
    fit = fit_factor_model(X, Y)
    np.testing.assert_allclose(fit.residuals, Y - fit.loadings @ X, atol=1e-12)
    np.testing.assert_allclose(fit.mean, fit.loadings @ X.mean(axis=1), atol=1e-12)
    # uncentred form of the factor covariance
    n = X.shape[1]
    one = np.ones((n, 1))
    alt = X @ X.T / (n - 1) - X @ one @ one.T @ X.T / (n * (n - 1))
    np.testing.assert_allclose(fit.factor_cov, alt, atol=1e-12)
    assert np.all(fit.resid_diag >= 0)
    assert fit.p == 12 and fit.K == 3


def test_resid_ddof(rng):
    X, _, Y = factor_data(rng, 5, 20)
    a = fit_factor_model(X, Y)
    b = fit_factor_model(X, Y, resid_ddof=3)
    np.testing.assert_allclose(b.resid_diag, a.resid_diag * 20 / 17, rtol=1e-13)


def test_fit_errors():
    with pytest.raises(DimensionMismatch):
        fit_factor_model(np.ones((1, 4)), np.ones((2, 5)))
    with pytest.raises(TooFewObservations):
        fit_factor_model(np.eye(3)[:, :2], np.ones((2, 2)))
    with pytest.raises(SingularFactorGram):
        fit_factor_model(np.array([[1.0, 2, 3], [2.0, 4, 6]]), np.ones((2, 3)))


def test_factor_covariance_identity_case():
    fit = FactorModelFit(np.zeros((3, 1)), np.eye(1), np.ones(3), np.zeros((3, 2)), np.zeros(3), 2, np.zeros(1))
    np.testing.assert_array_equal(covariance_factor(fit).matrix, np.eye(3))


def test_sample_covariance_fixtures():
    Y = np.array([[1.0, 2.0, 3.0], [1.0, 0.0, -1.0]])
    S = covariance_sample(Y)
    np.testing.assert_allclose(S.matrix, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-15)
    assert S.method == "sample"
    np.testing.assert_array_equal(sample_mean(Y), [2.0, 0.0])
    np.testing.assert_array_equal(covariance_sample(np.tile([[1.0], [2.0]], 5)).matrix, 0.0)
    with pytest.raises(TooFewObservations):
        covariance_sample(np.ones((3, 1)))


def test_sample_mean_cases():
    np.testing.assert_array_equal(sample_mean(np.full((3, 4), 2.5)), 2.5)
    np.testing.assert_array_equal(sample_mean(np.array([[1.0], [7.0]])), [1.0, 7.0])


def test_sample_covariance_rank(rng):
    S = covariance_sample(rng.standard_normal((100, 50))).matrix
    w = np.linalg.eigvalsh(S)
    assert np.sum(w < 1e-10 * w[-1]) >= 51


def test_sample_covariance_against_numpy(rng):
    Y = rng.standard_normal((6, 25))
    np.testing.assert_allclose(covariance_sample(Y).matrix, np.cov(Y), atol=1e-13)


def test_woodbury_diagonal_and_rank_one():
    d = np.array([1.0, 2.0, 4.0])
    fit = FactorModelFit(np.zeros((3, 2)), np.eye(2), d, np.zeros((3, 4)), np.zeros(3), 4, np.zeros(2))
    np.testing.assert_allclose(inverse_factor(fit), np.diag(1 / d), atol=1e-15)
    p, s = 6, 2.5
    P = woodbury_inverse(np.ones((p, 1)), [[s]], np.ones(p))
    np.testing.assert_allclose(P, np.eye(p) - s / (1 + s * p) * np.ones((p, p)), atol=1e-14)


@pytest.mark.parametrize("p,n", [(50, 100), (200, 50)])
def test_woodbury_matches_factor_estimate(rng, p, n):
    X, _, Y = factor_data(rng, p, n)
    fit = fit_factor_model(X, Y)
    S = covariance_factor(fit).matrix
    assert np.abs(S @ inverse_factor(fit) - np.eye(p)).max() < 1e-8


def test_woodbury_errors():
    with pytest.raises(ZeroResidualVariance):
        woodbury_inverse(np.ones((2, 1)), [[1.0]], [1.0, 0.0])
    with pytest.raises(SingularFactorCov):
        woodbury_inverse(np.ones((2, 2)), np.ones((2, 2)), [1.0, 1.0])


def test_inverse_generic(rng):
    np.testing.assert_array_equal(inverse_generic(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(inverse_generic(CovarianceEstimate(np.diag([2.0, 4.0]))), np.diag([0.5, 0.25]))
    A = rng.standard_normal((20, 20))
    S = A @ A.T + np.eye(20)
    assert np.abs(S @ inverse_generic(S) - np.eye(20)).max() < 1e-9
    with pytest.raises(SingularMatrix) as exc:
        inverse_generic(np.ones((3, 3)))
    assert exc.value.condition_number > 1e12


def test_factor_estimate_invertible_when_p_exceeds_n(rng):
    X, _, Y = factor_data(rng, 40, 20)
    fit = fit_factor_model(X, Y)
    assert np.linalg.eigvalsh(covariance_factor(fit).matrix)[0] > 0
    inverse_factor(fit)
    with pytest.raises(SingularMatrix):
        inverse_generic(covariance_sample(Y))


def test_hat_matrix_square_case(rng):
    X = rng.standard_normal((4, 4))
    np.testing.assert_allclose(hat_matrix(X), np.eye(4), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(K=st.integers(1, 6), extra=st.integers(0, 40), seed=st.integers(0, 2**31))
def test_hat_matrix_identities(K, extra, seed):
    n = K + extra
    X = np.random.default_rng(seed).standard_normal((K, n))
    H = hat_matrix(X)
    assert abs(np.trace(H) - K) < 1e-8
    assert np.abs(H @ H - H).max() < 1e-8
    s = H.sum()
    assert -1e-8 <= s <= np.sqrt(K) * n + 1e-8


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), p=st.integers(1, 30), n=st.integers(4, 40), c=st.floats(0.1, 10.0))
def test_estimator_properties(seed, p, n, c):
    rng = np.random.default_rng(seed)
    X, _, Y = factor_data(rng, p, n)
    fit = fit_factor_model(X, Y)
    S = covariance_factor(fit).matrix
    B = fit.loadings
    alt = np.diag(fit.resid_diag) + B @ (fit.factor_cov @ B.T)
    np.testing.assert_allclose(S, alt, rtol=1e-12, atol=1e-12 * np.abs(S).max())
    # positive definite whenever residual variances are positive
    assert np.linalg.eigvalsh(S)[0] > 0
    # rank bound of the sample covariance
    Ss = covariance_sample(Y).matrix
    w = np.linalg.eigvalsh(Ss)
    assert np.sum(w > 1e-9 * max(w[-1], 1e-300)) <= min(p, n - 1)
    # permutation invariance
    perm = rng.permutation(n)
    S2 = covariance_factor(fit_factor_model(X[:, perm], Y[:, perm])).matrix
    np.testing.assert_allclose(S2, S, rtol=1e-10, atol=1e-12 * np.abs(S).max())
    # scale equivariance
    Sc = covariance_factor(fit_factor_model(X, c * Y)).matrix
    np.testing.assert_allclose(Sc, c**2 * S, rtol=1e-12, atol=1e-12 * c**2 * np.abs(S).max())
    np.testing.assert_allclose(covariance_sample(c * Y).matrix, c**2 * Ss, rtol=1e-12, atol=1e-12 * c**2 * np.abs(Ss).max())
