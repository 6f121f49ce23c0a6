"""Finite-difference gradient and divergence on a regular 2-D pixel grid.

Images are ``(H, W)`` float arrays; vector fields are ``(2, H, W)`` arrays
whose first component differentiates along axis 0 (rows) and whose second
component differentiates along axis 1 (columns). Grid spacing is 1 and
boundaries are Neumann, so the forward difference leaving the grid is zero.
"""

import numpy as np

#: ``||grad||^2 <= 8`` for the forward-difference stencil at unit spacing.
GRAD_NORM_SQ_BOUND = 8.0


def gradient(u, out=None):
    """Forward-difference gradient with Neumann boundary conditions."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {u.shape}")
    if out is None:
        out = np.empty((2,) + u.shape)
    np.subtract(u[1:, :], u[:-1, :], out=out[0, :-1, :])
    out[0, -1, :] = 0.0
    np.subtract(u[:, 1:], u[:, :-1], out=out[1, :, :-1])
    out[1, :, -1] = 0.0
    return out


def divergence(p, out=None):
    """Backward-difference divergence, the negative adjoint of :func:`gradient`.

    ``<gradient(u), p> == -<u, divergence(p)>`` holds to rounding for every
    ``u`` and ``p`` of matching extent.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 3 or p.shape[0] != 2:
        raise ValueError(f"expected a (2, H, W) field, got shape {p.shape}")
    px, py = p[0], p[1]
    h, w = px.shape
    if out is None:
        out = np.empty((h, w))
    if h > 1:
        out[0, :] = px[0, :]
        np.subtract(px[1:-1, :], px[:-2, :], out=out[1:-1, :])
        out[-1, :] = -px[-2, :]
    else:
        out[:] = 0.0
    if w > 1:
        out[:, 0] += py[:, 0]
        out[:, 1:-1] += py[:, 1:-1] - py[:, :-2]
        out[:, -1] -= py[:, -2]
    return out


def operator_norm_bound():
    """Upper bound on the squared operator norm of :func:`gradient`."""
    return GRAD_NORM_SQ_BOUND


def estimate_operator_norm(shape, n_iter=200, seed=0):
    """Power iteration estimate of ``||grad||^2`` (largest eigenvalue of -div grad)."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        return 0.0
    x /= nrm
    lam = 0.0
    for _ in range(n_iter):
        y = -divergence(gradient(x))
        lam = float(np.vdot(x, y))
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
    return lam

