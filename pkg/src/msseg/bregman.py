"""Inverse scale space (Bregman iteration) and forward alpha sweep.

The Bregman multiplier selected by the optimality condition does not
depend on the iterate: after ``k`` steps it equals ``-(k/alpha) * data``.
Step ``k`` (0-based) is therefore the convex Chan-Vese problem at the
effective weight ``alpha / (k + 1)``; the loop below still applies the
update literally and warm-starts each step from the previous one.
"""

from dataclasses import dataclass

import numpy as np

from .gamma import GammaNorm
from .solver import InnerState, NumericalDivergenceError, SolverConfig, data_term, solve_inner, threshold
from .spectral import FORWARD, INVERSE, ScaleSequence
from .validation import check_image, check_positive


def estimate_constants(f):
    """Means below and at-or-above half the image maximum.

    Returns ``(low, high)`` with ``low < high``. The pipeline uses ``high`` as
    the object constant and ``low`` as the background constant.
    """
    f = check_image(f, "f")
    if f.max() == f.min():
        raise ValueError("cannot estimate constants of a constant image")
    cut = 0.5 * f.max()
    below = f < cut
    if not below.any() or below.all():
        raise ValueError("half-maximum split leaves one class empty")
    low, high = float(f[below].mean()), float(f[~below].mean())
    if not low < high:
        raise ValueError(f"degenerate constants ({low}, {high})")
    return low, high


def resolve_constants(f, constants=None):
    """Solver constants ``(c1, c2)``: object level first, background second."""
    if constants is not None:
        c1, c2 = constants
        return float(c1), float(c2)
    low, high = estimate_constants(f)
    return high, low


def effective_alpha(alpha, k):
    """Regularization weight seen by Bregman step ``k`` (0-based)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return alpha / (k + 1)


@dataclass
class BregmanState:
    k: int
    p_breg: np.ndarray
    u_k: np.ndarray
    v_k: np.ndarray
    alpha: float
    c1: float
    c2: float


def run_bregman(f, alpha, K, g=GammaNorm.L2, cfg=None, constants=None, callback=None,
                keep_relaxed=False):
    """Run ``K`` Bregman steps and return the resulting :class:`ScaleSequence`.

    ``constants`` is ``(c1, c2)`` with ``c1`` the object intensity; when
    omitted it is estimated with :func:`estimate_constants`. ``callback``
    receives a :class:`BregmanState` after each step, with ``k`` the number
    of completed steps.
    """
    f = check_image(f, "f")
    alpha = check_positive(alpha, "alpha")
    if int(K) < 1:
        raise ValueError("K must be >= 1")
    cfg = cfg or SolverConfig()
    g = GammaNorm.parse(g)
    c1, c2 = resolve_constants(f, constants)
    data = data_term(f, c1, c2)

    p_breg = np.zeros_like(f)
    state = InnerState.zeros(f.shape)
    masks, relaxed, iters, alphas = [], [], [], []
    for k in range(int(K)):
        try:
            state = solve_inner(f, c1, c2, alpha, p_breg, state, g, cfg, data=data)
        except NumericalDivergenceError as exc:
            exc.outer = k
            raise NumericalDivergenceError(f"{exc} (Bregman step {k + 1})", exc.iteration, k) from exc
        mask = threshold(state.u, cfg.mu)
        masks.append(mask)
        iters.append(state.n_iter)
        alphas.append(effective_alpha(alpha, k))
        if keep_relaxed:
            relaxed.append(state.u.copy())
        p_breg = p_breg + (-1.0 / alpha) * data
        if callback is not None:
            callback(BregmanState(k + 1, p_breg, mask, state.u, alpha, c1, c2))
    return ScaleSequence(masks, alphas_effective=alphas, direction=INVERSE, c1=c1, c2=c2,
                         relaxed=relaxed, inner_iterations=iters)


def solve_cv(f, alpha, g=GammaNorm.L2, cfg=None, constants=None, warm=None):
    """Single convex Chan-Vese solve; returns ``(mask, state)``."""
    f = check_image(f, "f")
    cfg = cfg or SolverConfig()
    c1, c2 = resolve_constants(f, constants)
    state = solve_inner(f, c1, c2, check_positive(alpha, "alpha"), None, warm, g, cfg)
    return threshold(state.u, cfg.mu), state


def default_alphas(alpha_max=200.0, alpha_min=2.0, n=30):
    """Log-spaced descending alpha list."""
    return list(np.geomspace(alpha_max, alpha_min, int(n)))


def run_forward_sweep(f, alphas=None, g=GammaNorm.L2, cfg=None, constants=None, keep_relaxed=False):
    """Independent convex CV solves along a strictly descending alpha list.

    Each solve is warm-started from the previous one. ``masks`` keep the
    order of ``alphas``; the spectral components run along increasing alpha.
    """
    f = check_image(f, "f")
    alphas = default_alphas() if alphas is None else [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alphas must not be empty")
    if any(a <= 0 for a in alphas):
        raise ValueError("alphas must be positive")
    if any(b >= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly descending")
    if len(alphas) < 2:
        raise ValueError("a forward sweep needs at least two alphas")
    cfg = cfg or SolverConfig()
    g = GammaNorm.parse(g)
    c1, c2 = _sweep_constants(f, constants)
    data = data_term(f, c1, c2)
    state = InnerState.zeros(f.shape)
    masks, relaxed, iters = [], [], []
    for i, a in enumerate(alphas):
        try:
            state = solve_inner(f, c1, c2, a, None, state, g, cfg, data=data)
        except NumericalDivergenceError as exc:
            raise NumericalDivergenceError(f"{exc} (sweep position {i + 1})", exc.iteration, i) from exc
        masks.append(threshold(state.u, cfg.mu))
        iters.append(state.n_iter)
        if keep_relaxed:
            relaxed.append(state.u.copy())
    return ScaleSequence(masks, alphas_effective=alphas, direction=FORWARD, c1=c1, c2=c2,
                         relaxed=relaxed, inner_iterations=iters)


def _sweep_constants(f, constants):
    # a constant image has no two classes; any constants give a flat data term
    if constants is None and f.max() == f.min():
        return float(f.flat[0]), float(f.flat[0])
    return resolve_constants(f, constants)


def critical_alpha(f, region, g=GammaNorm.L2, cfg=None, constants=None, lo=1e-3, hi=1e3,
                   rel_tol=1e-3, fraction=0.5):
    """Largest alpha at which ``region`` enters the convex CV segmentation.

    Bisection (in log alpha) on single solves; the region counts as present
    once at least ``fraction`` of its pixels are in the thresholded mask.
    ``alpha / critical_alpha`` is the continuous Bregman appearance time: with
    converged inner solves the region enters at the first 1-based step ``j``
    with ``j >= alpha / alpha_c``. A tight ``cfg`` is advisable near threshold.
    """
    f = check_image(f, "f")
    region = np.asarray(region, dtype=bool)
    if region.shape != f.shape or not region.any():
        raise ValueError("region must be a non-empty boolean mask of the image extent")
    cfg = cfg or SolverConfig()
    constants = resolve_constants(f, constants)

    def present(a):
        mask, _ = solve_cv(f, a, g, cfg, constants)
        return mask[region].mean() >= fraction

    if not present(lo):
        raise ValueError(f"region absent even at alpha={lo}")
    if present(hi):
        return float(hi)
    while hi / lo > 1.0 + rel_tol:
        mid = float(np.sqrt(lo * hi))
        if present(mid):
            lo = mid
        else:
            hi = mid
    return float(np.sqrt(lo * hi))
