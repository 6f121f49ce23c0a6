"""Spectral transform, response and filtering of a sequence of binary masks.

For the inverse (Bregman) direction the masks ``u_1 .. u_K`` are preceded by
``u_0 = 0`` and the component at index ``k`` is ``u_k - u_{k-1}``: ``+1``
where a pixel enters the segmentation, ``-1`` where it leaves. For the
forward (alpha sweep) direction the masks are ordered along increasing
regularization ``t`` and the component is ``-(u_{t_{k+1}} - u_{t_k})``, so an
object that vanishes as ``t`` grows also yields a positive component.
Indices are 1-based throughout; 0 in a scale map means "never".
"""

from dataclasses import dataclass, field

import numpy as np

INVERSE = "inverse"
FORWARD = "forward"


@dataclass
class SpectralComponent:
    k: int
    phi: np.ndarray
    response: float


@dataclass
class ScaleMap:
    """First-appearance index per pixel plus bookkeeping of unstable pixels."""

    appearance_index: np.ndarray
    vanished: np.ndarray
    rework: int

    @property
    def n_scales(self):
        return int(self.appearance_index.max())


@dataclass
class ScaleSequence:
    """Masks of a scale-space run and their spectral decomposition.

    ``alphas_effective[i]`` is the regularization weight that produced
    ``masks[i]``. For the forward direction ``masks`` follow the order of the
    (descending) alpha list, while ``phis`` follow increasing alpha.
    """

    masks: list
    phis: list = field(default_factory=list)
    responses: list = field(default_factory=list)
    alphas_effective: list = field(default_factory=list)
    direction: str = INVERSE
    c1: float = float("nan")
    c2: float = float("nan")
    relaxed: list = field(default_factory=list, repr=False)
    inner_iterations: list = field(default_factory=list)

    def __post_init__(self):
        if self.masks and not self.phis:
            comps = transform(self, self.direction)
            self.phis = [c.phi for c in comps]
            self.responses = [c.response for c in comps]
        n = len(self.masks)
        if self.alphas_effective and len(self.alphas_effective) != n:
            raise ValueError("alphas_effective and masks differ in length")
        expected = n if self.direction == INVERSE else n - 1
        if len(self.phis) != expected or len(self.responses) != expected:
            raise ValueError("phis/responses do not match the number of masks")

    @property
    def final_mask(self):
        return self.masks[-1]

    def __len__(self):
        return len(self.masks)

    def components(self):
        return [SpectralComponent(k + 1, phi, s) for k, (phi, s) in enumerate(zip(self.phis, self.responses))]


def _as_masks(seq):
    masks = seq.masks if isinstance(seq, ScaleSequence) else list(seq)
    return [np.asarray(m, dtype=np.float64) for m in masks]


def transform(seq, direction=INVERSE):
    """Spectral components of a mask sequence (list of :class:`SpectralComponent`).

    ``seq`` is a :class:`ScaleSequence` or a list of masks; for the forward
    direction the list must already be ordered by increasing alpha.
    """
    masks = _as_masks(seq)
    if direction == INVERSE:
        if not masks:
            raise ValueError("inverse transform needs at least one mask")
        prev = [np.zeros_like(masks[0])] + masks[:-1]
        diffs = [m - p for m, p in zip(masks, prev)]
    elif direction == FORWARD:
        if isinstance(seq, ScaleSequence):
            masks = masks[::-1]
        if len(masks) < 2:
            raise ValueError("forward transform needs at least two masks")
        diffs = [a - b for a, b in zip(masks[:-1], masks[1:])]
    else:
        raise ValueError(f"direction must be {INVERSE!r} or {FORWARD!r}, got {direction!r}")
    return [SpectralComponent(k + 1, d, float(np.abs(d).sum())) for k, d in enumerate(diffs)]


def response(components):
    """Spectral response ``S_k``: number of pixels changed at step ``k``."""
    return [float(np.abs(_phi(c)).sum()) for c in components]


def _phi(c):
    return c.phi if isinstance(c, SpectralComponent) else np.asarray(c)


def scale_map(components):
    """First index at which each pixel enters (``phi > 0``); 0 if it never does.

    Pixels that later leave again are flagged in ``vanished`` and counted in
    ``rework`` (pixel count with more than one sign change event).
    """
    phis = [_phi(c) for c in components]
    if not phis:
        raise ValueError("no components")
    idx = np.zeros(phis[0].shape, dtype=np.int64)
    n_events = np.zeros(phis[0].shape, dtype=np.int64)
    vanished = np.zeros(phis[0].shape, dtype=bool)
    for k, phi in enumerate(phis, start=1):
        entering = (phi > 0) & (idx == 0)
        idx[entering] = k
        n_events += phi != 0
        vanished |= phi < 0
    return ScaleMap(idx, vanished, int(np.count_nonzero(n_events > 1)))


def detect_peaks(S, min_mass_fraction=0.02):
    """1-based indices of the dominant peaks of a response sequence.

    An index qualifies when ``S_k >= min_mass_fraction * sum(S)``; each run of
    consecutive qualifying indices collapses to its largest entry (the first
    on ties), which is necessarily a local maximum.
    """
    if not 0.0 < min_mass_fraction < 1.0:
        raise ValueError("min_mass_fraction must lie in (0, 1)")
    S = np.asarray(S, dtype=np.float64)
    total = S.sum()
    if total <= 0:
        return []
    ok = (S >= min_mass_fraction * total) & (S > 0)
    peaks = []
    k = 0
    while k < len(S):
        if not ok[k]:
            k += 1
            continue
        start = k
        while k < len(S) and ok[k]:
            k += 1
        peaks.append(start + int(np.argmax(S[start:k])) + 1)
    return peaks


def filter_scales(components, band, signed=False):
    """Sum the components whose 1-based index passes ``band``.

    ``band`` is a predicate on ``k``, or a collection of indices. The result
    is clamped to a 0/1 mask unless ``signed`` is true.
    """
    comps = list(components)
    if not comps:
        raise ValueError("no components")
    if not callable(band):
        chosen = set(int(k) for k in band)
        band = chosen.__contains__
    out = np.zeros_like(_phi(comps[0]), dtype=np.float64)
    for k, c in enumerate(comps, start=1):
        if band(k):
            out += _phi(c)
    if signed:
        return out
    return np.clip(out, 0.0, 1.0)


def parse_band(text, n):
    """Parse ``"k1..k2"``, ``"k"`` or comma-separated mixes into a set of indices in 1..n."""
    chosen = set()
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo = int(lo) if lo.strip() else 1
            hi = int(hi) if hi.strip() else n
            chosen.update(range(lo, hi + 1))
        else:
            chosen.add(int(part))
    bad = [k for k in chosen if not 1 <= k <= n]
    if bad:
        raise ValueError(f"band indices {sorted(bad)} outside 1..{n}")
    return chosen
