import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import disc_image
from msseg.bregman import run_bregman, run_forward_sweep, solve_cv
from msseg.estimators import BregmanCVSegmenter, ConvexCVSegmenter, ForwardSweepSegmenter


@pytest.fixture(scope="module")
def image():
    f = disc_image(40, 12)
    f[2:8, 2:8] = 1.0
    return f


def test_params_and_clone():
    est = BregmanCVSegmenter(alpha=50.0, n_iter=4, gamma="l1")
    params = est.get_params()
    assert params["alpha"] == 50.0 and params["n_iter"] == 4 and params["gamma"] == "l1"
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(alpha=10.0)
    assert est.alpha == 10.0
    assert set(ForwardSweepSegmenter().get_params()) >= {"alphas", "gamma", "c1", "c2", "tol"}
    assert ConvexCVSegmenter().get_params()["mu"] == 0.5


def test_not_fitted(image):
    with pytest.raises(NotFittedError):
        ConvexCVSegmenter().predict(image)
    with pytest.raises(NotFittedError):
        BregmanCVSegmenter().transform()
    with pytest.raises(NotFittedError):
        BregmanCVSegmenter().filter({1})


def test_convex_segmenter_matches_solve(image):
    est = ConvexCVSegmenter(alpha=3.0).fit(image)
    mask, state = solve_cv(image, 3.0)
    np.testing.assert_array_equal(est.mask_, mask)
    np.testing.assert_array_equal(est.transform(image), state.u)
    np.testing.assert_array_equal(est.predict(image), mask)
    assert (est.c1_, est.c2_) == (1.0, 0.0)
    assert est.n_iter_ == state.n_iter


def test_bregman_segmenter(image):
    est = BregmanCVSegmenter(alpha=30.0, n_iter=5)
    phis = est.fit_transform(image)
    seq = run_bregman(image, 30.0, 5)
    assert phis.shape == (5, 40, 40)
    np.testing.assert_array_equal(est.inverse_transform(phis), seq.final_mask)
    np.testing.assert_array_equal(est.response_, seq.responses)
    np.testing.assert_array_equal(est.predict(), est.scale_map_.appearance_index)
    np.testing.assert_array_equal(est.predict(image), est.predict())
    np.testing.assert_array_equal(est.transform(image), phis)
    np.testing.assert_array_equal(est.filter(range(1, 6), signed=True), seq.final_mask)
    assert est.peaks_ == [k for k in est.peaks_ if 1 <= k <= 5]
    with pytest.raises(ValueError):
        est.inverse_transform(phis[0])


def test_forward_segmenter(image):
    alphas = [8.0, 4.0, 2.0]
    est = ForwardSweepSegmenter(alphas=alphas).fit(image)
    seq = run_forward_sweep(image, alphas)
    assert len(est.components_) == 2
    np.testing.assert_array_equal(est.transform(), np.stack(seq.phis))


def test_fixed_constants(image):
    est = BregmanCVSegmenter(alpha=30.0, n_iter=2, c1=0.9, c2=0.1).fit(image)
    assert (est.c1_, est.c2_) == (0.9, 0.1)


def test_validation_errors(image):
    with pytest.raises(ValueError, match="c1 and c2"):
        ConvexCVSegmenter(c1=1.0).fit(image)
    with pytest.raises(ValueError):
        ConvexCVSegmenter(alpha=-1.0).fit(image)
    with pytest.raises(ValueError):
        BregmanCVSegmenter(n_iter=0).fit(image)
    with pytest.raises(ValueError):
        ConvexCVSegmenter(gamma="l3").fit(image)
    with pytest.raises(ValueError):
        ConvexCVSegmenter().fit(np.zeros(5))


def test_convex_fit_transform(image):
    est = ConvexCVSegmenter(alpha=3.0)
    np.testing.assert_array_equal(est.fit_transform(image), est.relaxed_)
