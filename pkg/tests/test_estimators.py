import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from maip.estimators import MAIPReconstructor, TikhonovReconstructor
from maip.geometry import SensitivityMatrix, build_circular_mask, forward
from maip.recon import ReconConfig, run_maip


@pytest.fixture(scope="module")
def problem():
    grid = build_circular_mask(8, 8)
    rng = np.random.default_rng(1)
    J = SensitivityMatrix(rng.standard_normal((20, grid.n_pixels)), grid)
    return J, forward(J, rng.uniform(size=(grid.n_pixels, 2)))


def small(J, **kw):
    return MAIPReconstructor(J, iterations=3, base_channels=2, fu_channels=3, se_reduction=2,
                             aspp_dilations=(1, 2), **kw)


def test_params_round_trip(problem):
    J, _ = problem
    est = small(J, seed=4)
    params = est.get_params()
    assert params["seed"] == 4 and params["learning_rate"] == 0.00012
    again = clone(est)
    assert again.get_params()["iterations"] == 3
    est.set_params(loss="frobenius")
    assert est.recon_config().loss == "frobenius"


def test_fit_matches_run_maip(problem):
    J, V = problem
    est = small(J).fit(V)
    res = run_maip(J, V, est.network_config(2), ReconConfig(iterations=3))
    assert np.array_equal(est.transform(V), res.stack.vectors)
    assert est.loss_trace_ == res.loss_trace
    assert est.frames_.shape == (2, 8, 8)


def test_transductive(problem):
    J, V = problem
    est = small(J)
    with pytest.raises(NotFittedError):
        est.transform(V)
    est.fit(V)
    with pytest.raises(ValueError):
        est.transform(V + 1.0)


def test_input_validation(problem):
    J, V = problem
    with pytest.raises(TypeError):
        small(J.J).fit(V)
    with pytest.raises(ValueError):
        small(J).fit(V[:5])
    with pytest.raises(ValueError):
        small(J).fit(np.full_like(V, np.nan))


def test_tikhonov_estimator(problem):
    J, V = problem
    est = TikhonovReconstructor(J, alpha=1e-2).fit()
    Jm = J.J
    expected = np.linalg.solve(Jm.T @ Jm + 1e-2 * np.eye(Jm.shape[1]), Jm.T @ V)
    assert np.allclose(est.transform(V), expected)
    with pytest.raises(ValueError):
        TikhonovReconstructor(J, alpha=-1.0).fit()
