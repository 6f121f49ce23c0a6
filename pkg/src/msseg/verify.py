"""Numerical invariant suite behind ``msseg verify``.

Each check returns a :class:`CheckResult`; :func:`run_suite` runs them all.
The checks use fixed seeds and the size-discs phantom, so their values are
reproducible.
"""

import time
from dataclasses import dataclass

import numpy as np

from .bregman import effective_alpha, run_bregman, solve_cv
from .gamma import GammaNorm, dual_norm, project_dual_ball
from .grid import divergence, gradient
from .phantoms import preset, render
from .solver import data_term
from .spectral import filter_scales


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: {self.value:.3g} (limit {self.limit:g}){extra}"


def check_adjointness(shapes=((1, 1), (1, 7), (9, 1), (17, 23), (64, 64)), seed=0, limit=1e-10):
    """``<grad u, p> + <u, div p>`` relative to the product of norms."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for shape in shapes:
        u = rng.standard_normal(shape)
        p = rng.standard_normal((2,) + shape)
        lhs = float(np.sum(gradient(u) * p))
        rhs = -float(np.sum(u * divergence(p)))
        scale = np.linalg.norm(u) * np.linalg.norm(p) or 1.0
        worst = max(worst, abs(lhs - rhs) / scale)
    return CheckResult("adjointness <grad u, p> = -<u, div p>", worst <= limit, worst, limit)


def check_projections(n=4096, seed=1, limit=1e-12):
    """Feasibility, idempotence and non-expansiveness of the dual-ball projections."""
    rng = np.random.default_rng(seed)
    results = []
    for g in GammaNorm:
        a = 3.0 * rng.standard_normal((2, n))
        b = 3.0 * rng.standard_normal((2, n))
        pa, pb = project_dual_ball(g, a), project_dual_ball(g, b)
        feas = float(np.max(dual_norm(g, pa)) - 1.0)
        idem = float(np.max(np.abs(project_dual_ball(g, pa) - pa)))
        expand = float(np.max(np.linalg.norm(pa - pb, axis=0) - np.linalg.norm(a - b, axis=0)))
        worst = max(feas, idem, expand, 0.0)
        results.append(CheckResult(
            f"dual-ball projection gamma={g.value}", worst <= limit, worst, limit,
            f"feasibility {max(feas, 0):.1e}, idempotence {idem:.1e}, expansion {max(expand, 0):.1e}"))
    return results


def _small_phantom():
    f = render(preset("size-discs"))
    return f[::2, ::2].copy()


def check_multiplier(alpha=50.0, K=6, limit=1e-12):
    """Accumulated Bregman multiplier against the closed form ``-(k/alpha) * data``."""
    f = _small_phantom()
    worst = [0.0]

    def cb(state):
        d = data_term(f, state.c1, state.c2)
        worst[0] = max(worst[0], float(np.max(np.abs(state.p_breg + (state.k / alpha) * d))))

    run_bregman(f, alpha, K, callback=cb)
    return CheckResult("closed-form Bregman multiplier", worst[0] <= limit, worst[0], limit)


def check_telescoping(alpha=50.0, K=8):
    """Sum of all components equals the last mask exactly."""
    seq = run_bregman(_small_phantom(), alpha, K)
    total = filter_scales(seq.components(), range(1, K + 1), signed=True)
    diff = float(np.max(np.abs(total - seq.final_mask)))
    return CheckResult("telescoping sum(phi_k) = u_K", diff == 0.0, diff, 0.0)


def check_mu_insensitivity(alpha=200.0, steps=(1, 5, 10, 20), mus=(0.3, 0.7), limit=0.01):
    """Fraction of pixels whose label changes when ``mu`` moves away from 0.5."""
    f = render(preset("size-discs"))
    worst = 0.0
    for j in steps:
        _, state = solve_cv(f, alpha / j)
        v = state.u
        base = v >= 0.5
        for mu in mus:
            worst = max(worst, float(np.mean((v >= mu) != base)))
    return CheckResult("mu-insensitivity (mu = 0.3, 0.5, 0.7)", worst <= limit, worst, limit,
                       "size-discs, single solves at alpha/j")


def check_equivalence(alpha=200.0, K=10, limit=0.01):
    """Bregman step ``k`` against a single solve at ``alpha / (k + 1)``."""
    f = render(preset("size-discs"))
    seq = run_bregman(f, alpha, K)
    worst = 0.0
    for k in range(K):
        mask, _ = solve_cv(f, effective_alpha(alpha, k), constants=(seq.c1, seq.c2))
        worst = max(worst, float(np.mean(mask != seq.masks[k])))
    return CheckResult("Bregman step k = single solve at alpha/(k+1)", worst <= limit, worst, limit,
                       f"size-discs, k = 1..{K}")


def run_suite(quick=False):
    """Run every check; returns ``(results, seconds)``."""
    t0 = time.perf_counter()
    results = [check_adjointness()]
    results += check_projections()
    results.append(check_multiplier())
    results.append(check_telescoping())
    if not quick:
        results.append(check_mu_insensitivity())
        results.append(check_equivalence())
    return results, time.perf_counter() - t0
