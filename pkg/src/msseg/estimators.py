"""Estimator wrappers with the scikit-learn fit/transform/predict protocol.

``X`` is a single 2-D grayscale image. ``get_params``/``set_params`` and
``clone`` come from :class:`sklearn.base.BaseEstimator`; hyper-parameters are
stored unmodified in ``__init__`` and validated in ``fit``.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .bregman import default_alphas, resolve_constants, run_bregman, run_forward_sweep, solve_cv
from .gamma import GammaNorm
from .solver import SolverConfig
from .spectral import detect_peaks, filter_scales, scale_map
from .validation import check_image, check_positive


class _SegmenterBase(BaseEstimator):
    # no TransformerMixin: its output wrapping requires a positional X in
    # transform, while the Bregman estimators allow transform() after fit

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)

    def _config(self):
        return SolverConfig(tau=self.tau, sigma=self.sigma, theta=self.theta,
                            max_inner_its=self.max_inner_its, tol=self.tol, mu=self.mu)

    def _constants(self, X):
        if (self.c1 is None) != (self.c2 is None):
            raise ValueError("set both c1 and c2, or neither")
        given = None if self.c1 is None else (self.c1, self.c2)
        return resolve_constants(X, given)

    def _check_fitted(self, attr):
        if not hasattr(self, attr):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def _check_same_shape(self, X):
        X = check_image(X, "X")
        if X.shape != self.shape_:
            raise ValueError(f"X has shape {X.shape}, estimator was fitted on {self.shape_}")
        return X


_CFG = SolverConfig()


class ConvexCVSegmenter(_SegmenterBase):
    """Single convex Chan-Vese segmentation at weight ``alpha``.

    ``c1`` is the object intensity and ``c2`` the background; both default to
    the half-maximum estimate.
    """

    def __init__(self, alpha=10.0, gamma="l2", c1=None, c2=None, tau=_CFG.tau, sigma=_CFG.sigma,
                 theta=_CFG.theta, max_inner_its=_CFG.max_inner_its, tol=_CFG.tol, mu=_CFG.mu):
        self.alpha = alpha
        self.gamma = gamma
        self.c1 = c1
        self.c2 = c2
        self.tau = tau
        self.sigma = sigma
        self.theta = theta
        self.max_inner_its = max_inner_its
        self.tol = tol
        self.mu = mu

    def fit(self, X, y=None):
        X = check_image(X, "X")
        check_positive(self.alpha, "alpha")
        cfg = self._config()
        self.c1_, self.c2_ = self._constants(X)
        mask, state = solve_cv(X, self.alpha, GammaNorm.parse(self.gamma), cfg, (self.c1_, self.c2_))
        self.shape_ = X.shape
        self.mask_ = mask
        self.relaxed_ = state.u
        self.n_iter_ = state.n_iter
        self.converged_ = state.converged
        return self

    def _solve(self, X):
        self._check_fitted("mask_")
        X = check_image(X, "X")
        return solve_cv(X, self.alpha, GammaNorm.parse(self.gamma), self._config(), (self.c1_, self.c2_))

    def transform(self, X):
        """Relaxed solution ``v`` in [0, 1], using the fitted constants."""
        return self._solve(X)[1].u

    def predict(self, X):
        """Binary mask ``v >= mu``."""
        return self._solve(X)[0]


class BregmanCVSegmenter(_SegmenterBase):
    """Inverse-scale-space segmentation by ``n_iter`` Bregman steps.

    After ``fit``: ``sequence_`` (:class:`~msseg.spectral.ScaleSequence`),
    ``components_``, ``response_``, ``peaks_``, ``scale_map_`` and the
    constants ``c1_``, ``c2_``.
    """

    def __init__(self, alpha=200.0, n_iter=30, gamma="l2", c1=None, c2=None, min_mass_fraction=0.02,
                 tau=_CFG.tau, sigma=_CFG.sigma, theta=_CFG.theta, max_inner_its=_CFG.max_inner_its,
                 tol=_CFG.tol, mu=_CFG.mu):
        self.alpha = alpha
        self.n_iter = n_iter
        self.gamma = gamma
        self.c1 = c1
        self.c2 = c2
        self.min_mass_fraction = min_mass_fraction
        self.tau = tau
        self.sigma = sigma
        self.theta = theta
        self.max_inner_its = max_inner_its
        self.tol = tol
        self.mu = mu

    def _run(self, X):
        return run_bregman(X, self.alpha, self.n_iter, GammaNorm.parse(self.gamma), self._config(),
                           self._constants(X))

    def fit(self, X, y=None):
        X = check_image(X, "X")
        if int(self.n_iter) < 1:
            raise ValueError("n_iter must be >= 1")
        seq = self._run(X)
        self._store(X, seq)
        return self

    def _store(self, X, seq):
        self.shape_ = X.shape
        self.sequence_ = seq
        self.components_ = seq.components()
        self.response_ = np.asarray(seq.responses)
        self.peaks_ = detect_peaks(seq.responses, self.min_mass_fraction)
        self.scale_map_ = scale_map(self.components_)
        self.c1_, self.c2_ = seq.c1, seq.c2

    def transform(self, X=None):
        """Stack of spectral components ``phi_k``, shape ``(n_iter, H, W)``.

        With ``X`` given the run is repeated on ``X`` with the fitted constants.
        """
        self._check_fitted("sequence_")
        seq = self.sequence_ if X is None else self._rerun(X)
        return np.stack(seq.phis)

    def _rerun(self, X):
        X = check_image(X, "X")
        return run_bregman(X, self.alpha, self.n_iter, GammaNorm.parse(self.gamma), self._config(),
                           (self.c1_, self.c2_))

    def fit_transform(self, X, y=None):
        return self.fit(X).transform()

    def predict(self, X=None):
        """Scale map: first Bregman step at which each pixel enters (0 = never)."""
        self._check_fitted("sequence_")
        if X is None:
            return self.scale_map_.appearance_index
        return scale_map(self._rerun(X).components()).appearance_index

    def inverse_transform(self, phis):
        """Sum a component stack back into a mask; the full stack gives the last mask."""
        phis = np.asarray(phis, dtype=np.float64)
        if phis.ndim != 3:
            raise ValueError("expected a (K, H, W) component stack")
        return phis.sum(axis=0)

    def filter(self, band, signed=False):
        """Back-transform only the components whose index passes ``band``."""
        self._check_fitted("sequence_")
        return filter_scales(self.components_, band, signed=signed)


class ForwardSweepSegmenter(BregmanCVSegmenter):
    """Forward scale space: independent convex CV solves along ``alphas``."""

    def __init__(self, alphas=None, gamma="l2", c1=None, c2=None, min_mass_fraction=0.02,
                 tau=_CFG.tau, sigma=_CFG.sigma, theta=_CFG.theta, max_inner_its=_CFG.max_inner_its,
                 tol=_CFG.tol, mu=_CFG.mu):
        self.alphas = alphas
        self.gamma = gamma
        self.c1 = c1
        self.c2 = c2
        self.min_mass_fraction = min_mass_fraction
        self.tau = tau
        self.sigma = sigma
        self.theta = theta
        self.max_inner_its = max_inner_its
        self.tol = tol
        self.mu = mu

    def _sweep(self, X, constants):
        alphas = default_alphas() if self.alphas is None else self.alphas
        return run_forward_sweep(X, alphas, GammaNorm.parse(self.gamma), self._config(), constants)

    def fit(self, X, y=None):
        X = check_image(X, "X")
        constants = None
        if self.c1 is not None or self.c2 is not None or X.max() > X.min():
            constants = self._constants(X)
        self._store(X, self._sweep(X, constants))
        return self

    def _rerun(self, X):
        return self._sweep(check_image(X, "X"), (self.c1_, self.c2_))
