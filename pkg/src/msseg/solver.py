"""Chambolle-Pock primal-dual solver for the convexified Chan-Vese subproblem.

Each call minimizes, over ``u`` in ``[0, 1]``,

    TV_gamma(u) + (1/alpha) * sum(u * (data - alpha * p_breg))

with ``data = (f - c1)**2 - (f - c2)**2``. The dual variable lives in the
unit dual ball of ``gamma`` and the data term is scaled by ``1/alpha``, so
the projection never depends on ``alpha``. With ``p_breg = 0`` this is the
plain convex Chan-Vese model at regularization ``alpha``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .gamma import GammaNorm, project_dual_ball, tv_value
from .grid import divergence, gradient, operator_norm_bound
from .validation import check_image


class NumericalDivergenceError(ArithmeticError):
    """Raised when an iterate stops being finite."""

    def __init__(self, message, iteration=None, outer=None):
        super().__init__(message)
        self.iteration = iteration
        self.outer = outer


_DEFAULT_STEP = 1.0 / math.sqrt(8.0)


@dataclass(frozen=True)
class SolverConfig:
    tau: float = _DEFAULT_STEP
    sigma: float = _DEFAULT_STEP
    theta: float = 1.0
    max_inner_its: int = 1000
    tol: float = 1e-6
    mu: float = 0.5

    def __post_init__(self):
        if not (self.tau > 0 and self.sigma > 0):
            raise ValueError("tau and sigma must be positive")
        if self.tau * self.sigma * operator_norm_bound() > 1.0 + 1e-12:
            raise ValueError(
                f"step sizes violate tau*sigma*8 <= 1 (tau={self.tau}, sigma={self.sigma})")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if int(self.max_inner_its) < 1:
            raise ValueError("max_inner_its must be >= 1")
        if not self.tol >= 0:
            raise ValueError("tol must be non-negative")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass
class InnerState:
    """Primal iterate ``u``, its extrapolation ``u_bar`` and dual field ``p``."""

    u: np.ndarray
    u_bar: np.ndarray
    p: np.ndarray
    n_iter: int = 0
    converged: bool = False
    history: list = field(default_factory=list, repr=False)

    @classmethod
    def zeros(cls, shape):
        u = np.zeros(shape)
        return cls(u=u, u_bar=u.copy(), p=np.zeros((2,) + tuple(shape)))

    def copy(self):
        return InnerState(self.u.copy(), self.u_bar.copy(), self.p.copy(), self.n_iter, self.converged)


def data_term(f, c1, c2):
    """Pixelwise ``(f - c1)**2 - (f - c2)**2``; negative where ``f`` is nearer ``c1``."""
    f = np.asarray(f, dtype=np.float64)
    return (f - c1) ** 2 - (f - c2) ** 2


def prox_primal(u_tilde, step, data, alpha, p_breg, out=None):
    """Resolvent of the box-constrained linear term: clamp(u~ - step/alpha*(data - alpha*p_breg))."""
    force = np.asarray(data, dtype=np.float64) - alpha * np.asarray(p_breg, dtype=np.float64)
    out = np.subtract(u_tilde, (step / alpha) * force, out=out)
    return np.clip(out, 0.0, 1.0, out=out)


def threshold(v, mu=0.5):
    """Binary mask (float 0/1) of ``v >= mu``."""
    return (np.asarray(v) >= mu).astype(np.float64)


def primal_energy(u, data, alpha, p_breg, g):
    """``sum(u*data) + alpha*TV(u) - alpha*<u, p_breg>``."""
    return float(np.sum(u * data) + alpha * tv_value(g, u) - alpha * np.sum(u * p_breg))


def solve_inner(f, c1, c2, alpha, p_breg=None, warm=None, g=GammaNorm.L2, cfg=None,
                data=None, energy_every=0, backend="numba"):
    """Run primal-dual iterations from ``warm`` and return the final state.

    Stops after ``cfg.max_inner_its`` iterations or once the mean absolute
    change of ``u`` drops below ``cfg.tol``. ``data`` may be passed to reuse a
    precomputed data term. With ``energy_every > 0`` the primal energy is
    appended to ``state.history`` every that many iterations. ``backend``
    selects the fused numba kernel (default) or the plain numpy operators.
    """
    cfg = cfg or SolverConfig()
    g = GammaNorm.parse(g)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    f = check_image(f, "f")
    if data is None:
        data = data_term(f, c1, c2)
    p_breg = np.zeros_like(f) if p_breg is None else np.asarray(p_breg, dtype=np.float64)
    state = InnerState.zeros(f.shape) if warm is None else warm.copy()
    if state.u.shape != f.shape:
        raise ValueError(f"warm state extent {state.u.shape} does not match image {f.shape}")
    state.n_iter = 0
    state.converged = False

    # constant part of the primal step: (tau/alpha) * (data - alpha*p_breg)
    shift = (cfg.tau / alpha) * (data - alpha * p_breg)
    if backend == "numba":
        _run_numba(state, shift, g, cfg, data, alpha, p_breg, energy_every)
    elif backend == "numpy":
        _run_numpy(state, shift, g, cfg, data, alpha, p_breg, energy_every)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return state


def _run_numba(state, shift, g, cfg, data, alpha, p_breg, energy_every):
    from ._kernels import GAMMA_CODES, cp_iterate

    code = GAMMA_CODES[g.value]
    total = int(cfg.max_inner_its)
    chunk = int(energy_every) if energy_every else total
    done = 0
    while done < total:
        n, converged, diverged = cp_iterate(
            state.u, state.u_bar, state.p, shift, float(cfg.tau), float(cfg.sigma),
            float(cfg.theta), min(chunk, total - done), float(cfg.tol), code)
        if diverged:
            raise NumericalDivergenceError(
                f"non-finite iterate at inner iteration {done + n}", iteration=done + n)
        done += n
        state.n_iter = done
        if energy_every and done % energy_every == 0:
            state.history.append(primal_energy(state.u, data, alpha, p_breg, g))
        if converged:
            state.converged = True
            break


def _run_numpy(state, shift, g, cfg, data, alpha, p_breg, energy_every):
    tau, sigma, theta = cfg.tau, cfg.sigma, cfg.theta
    u, u_bar, p = state.u.copy(), state.u_bar, state.p
    grad = np.empty_like(p)
    div = np.empty_like(u)
    u_new = np.empty_like(u)
    n_pix = u.size

    for n in range(1, int(cfg.max_inner_its) + 1):
        gradient(u_bar, out=grad)
        grad *= sigma
        grad += p
        project_dual_ball(g, grad, out=p)

        divergence(p, out=div)
        div *= tau
        div += u
        div -= shift
        np.clip(div, 0.0, 1.0, out=u_new)

        # u_bar = u_new + theta*(u_new - u); div reused as the difference buffer
        np.subtract(u_new, u, out=div)
        change = float(np.abs(div).sum()) / n_pix
        if not math.isfinite(change):
            raise NumericalDivergenceError(f"non-finite iterate at inner iteration {n}", iteration=n)
        div *= theta
        np.add(u_new, div, out=u_bar)
        u, u_new = u_new, u
        state.n_iter = n
        if energy_every and n % energy_every == 0:
            state.history.append(primal_energy(u, data, alpha, p_breg, g))
        if change < cfg.tol:
            state.converged = True
            break

    # copy back in case the buffer swap left u in the scratch array
    state.u[...] = u
