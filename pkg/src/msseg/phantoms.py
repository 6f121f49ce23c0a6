"""Deterministic synthetic scenes and reproducible Gaussian noise.

Coordinates are ``(row, col)`` in pixel units; pixel ``(i, j)`` is inside a
shape when its centre ``(i, j)`` passes the shape's membership test (no
anti-aliasing). Shapes are painted over the background in list order and
noise is added last, without clamping.

Noise generator
---------------
Pixel ``n`` (row-major) uses two draws of a SplitMix64 counter stream::

    x_i = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)      (mod 2**64)
    mix64(z): z = (z ^ z >> 30) * 0xBF58476D1CE4E5B9
              z = (z ^ z >> 27) * 0x94D049BB133111EB
              return z ^ z >> 31
    u1 = ((x_{2n} >> 11) + 1) * 2**-53          in (0, 1]
    u2 =  (x_{2n+1} >> 11)   * 2**-53           in [0, 1)
    noise_n = sigma * sqrt(-2 ln u1) * cos(2 pi u2)

which is simple to reproduce bit-for-bit in any language with 64-bit
unsigned integers.
"""

import math
from dataclasses import dataclass, field

import numpy as np

SHAPE_KINDS = ("disc", "square", "diamond", "rectangle", "triangle")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed, counters):
    """Counter-based SplitMix64 outputs for an array of stream positions."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed % (1 << 64)) + (np.asarray(counters, dtype=np.uint64) + np.uint64(1)) * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def gaussian_noise(shape, sigma, seed):
    """Box-Muller Gaussian field driven by :func:`splitmix64`."""
    n = int(np.prod(shape))
    idx = np.arange(n, dtype=np.uint64)
    x1 = splitmix64(seed, 2 * idx)
    x2 = splitmix64(seed, 2 * idx + np.uint64(1))
    scale = 2.0 ** -53
    u1 = ((x1 >> np.uint64(11)).astype(np.float64) + 1.0) * scale
    u2 = (x2 >> np.uint64(11)).astype(np.float64) * scale
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
    return sigma * z.reshape(shape)


@dataclass(frozen=True)
class Shape:
    """A filled shape. ``size`` depends on ``kind``:

    disc ``(radius,)``, square ``(side,)``, diamond ``(radius,)`` with
    ``|dr| + |dc| <= radius``, rectangle ``(height, width)``, triangle
    ``(side,)`` equilateral, apex up, centroid at the centre.
    """

    kind: str
    row: float
    col: float
    size: tuple
    intensity: float = 1.0

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")
        size = tuple(float(s) for s in np.atleast_1d(self.size))
        need = 2 if self.kind == "rectangle" else 1
        if len(size) != need or min(size) <= 0:
            raise ValueError(f"{self.kind} needs {need} positive size value(s), got {self.size!r}")
        object.__setattr__(self, "size", size)
        if not 0.0 < self.intensity <= 1.0:
            raise ValueError(f"intensity must lie in (0, 1], got {self.intensity}")

    def bbox(self):
        """``(row_min, row_max, col_min, col_max)`` of the continuous shape."""
        r, c = self.row, self.col
        if self.kind in ("disc", "diamond"):
            s = self.size[0]
            return r - s, r + s, c - s, c + s
        if self.kind == "square":
            h = self.size[0] / 2
            return r - h, r + h, c - h, c + h
        if self.kind == "rectangle":
            hh, hw = self.size[0] / 2, self.size[1] / 2
            return r - hh, r + hh, c - hw, c + hw
        s = self.size[0]
        height = s * math.sqrt(3) / 2
        return r - 2 * height / 3, r + height / 3, c - s / 2, c + s / 2

    def mask(self, shape):
        rows, cols = np.ogrid[: shape[0], : shape[1]]
        dr = rows - self.row
        dc = cols - self.col
        if self.kind == "disc":
            return dr ** 2 + dc ** 2 <= self.size[0] ** 2
        if self.kind == "diamond":
            return np.abs(dr) + np.abs(dc) <= self.size[0]
        if self.kind in ("square", "rectangle"):
            hh = self.size[0] / 2
            hw = self.size[-1] / 2
            return (dr >= -hh) & (dr < hh) & (dc >= -hw) & (dc < hw)
        s = self.size[0]
        height = s * math.sqrt(3) / 2
        top = -2 * height / 3
        bottom = height / 3
        # half width grows linearly from the apex to the base
        half = (dr - top) / height * (s / 2)
        return (dr >= top) & (dr <= bottom) & (np.abs(dc) <= half)


@dataclass(frozen=True)
class SceneSpec:
    height: int
    width: int
    shapes: tuple = ()
    background: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0
    name: str = ""
    notes: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if int(self.height) < 1 or int(self.width) < 1:
            raise ValueError("scene extent must be at least 1x1")
        if not 0.0 <= self.background < 1.0:
            raise ValueError(f"background must lie in [0, 1), got {self.background}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        for s in self.shapes:
            r0, r1, c0, c1 = s.bbox()
            if r0 < -0.5 or c0 < -0.5 or r1 > self.height - 0.5 or c1 > self.width - 0.5:
                raise ValueError(f"{s.kind} at ({s.row}, {s.col}) extends outside the {self.height}x{self.width} scene")

    @property
    def shape(self):
        return (int(self.height), int(self.width))

    def with_noise(self, sigma, seed=None):
        return SceneSpec(self.height, self.width, self.shapes, self.background, float(sigma),
                         self.seed if seed is None else int(seed), self.name, self.notes)

    def to_text(self):
        """Plain-text ``key = value`` scene file, one ``shape`` line per shape."""
        lines = [f"height = {int(self.height)}", f"width = {int(self.width)}",
                 f"background = {float(self.background)!r}", f"noise_sigma = {float(self.noise_sigma)!r}",
                 f"seed = {int(self.seed)}"]
        if self.name:
            lines.append(f"name = {self.name}")
        if self.notes:
            lines.append(f"notes = {self.notes}")
        for s in self.shapes:
            nums = " ".join(repr(float(v)) for v in (s.row, s.col, *s.size, s.intensity))
            lines.append(f"shape = {s.kind} {nums}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        """Inverse of :meth:`to_text`. Blank lines and ``#`` comments are ignored."""
        kw, shapes = {}, []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep:
                raise ValueError(f"scene line {lineno}: expected 'key = value', got {line!r}")
            if key == "shape":
                kind, *nums = value.split()
                try:
                    nums = [float(v) for v in nums]
                except ValueError:
                    raise ValueError(f"scene line {lineno}: non-numeric shape parameter") from None
                if len(nums) < 4:
                    raise ValueError(f"scene line {lineno}: need 'kind row col size... intensity'")
                shapes.append(Shape(kind, nums[0], nums[1], tuple(nums[2:-1]), nums[-1]))
            elif key in ("height", "width", "seed"):
                kw[key] = int(value)
            elif key in ("background", "noise_sigma"):
                kw[key] = float(value)
            elif key in ("name", "notes"):
                kw[key] = value
            else:
                raise ValueError(f"scene line {lineno}: unknown key {key!r}")
        missing = {"height", "width"} - set(kw)
        if missing:
            raise ValueError(f"scene file lacks {', '.join(sorted(missing))}")
        return cls(shapes=tuple(shapes), **kw)

    def object_masks(self):
        """Per-shape boolean masks of the visible (not overpainted) pixels."""
        masks = [s.mask(self.shape) for s in self.shapes]
        visible = []
        for i, m in enumerate(masks):
            m = m.copy()
            for later in masks[i + 1:]:
                m &= ~later
            visible.append(m)
        return visible


def save_scene(path, spec):
    with open(path, "w") as fh:
        fh.write(spec.to_text())


def load_scene(path):
    with open(path) as fh:
        return SceneSpec.from_text(fh.read())


def render(spec):
    """Render ``spec`` to a float64 image."""
    img = np.full(spec.shape, float(spec.background))
    for s in spec.shapes:
        img[s.mask(spec.shape)] = s.intensity
    if spec.noise_sigma > 0:
        img += gaussian_noise(spec.shape, spec.noise_sigma, spec.seed)
    return img


# ---------------------------------------------------------------------------
# Preset catalogue. Grid sizes, radii and positions are calibrated constants,
# chosen so the stated run parameters separate the objects (see
# ``PRESET_RUNS`` and the README).

# Calibrated by bisection on the critical alpha of each disc (alpha=200, K=40):
# continuous appearance times alpha/alpha_c are about (38.6, 37.7) at level 0.68,
# so both discs enter at adjacent steps, and (38.3, 35.5) at 0.70, where they
# are separated by an empty step. The half-pixel row offset of the small disc
# picks a 440-pixel digital disc.
AMBIGUITY_RADII = (11.85, 24.2)  # small bright disc, large dim disc
AMBIGUITY_SMALL_CENTRE = (64.5, 24.0)
AMBIGUITY_LARGE_CENTRE = (64.0, 84.0)
AMBIGUITY_EXTENT = 128


def _size_discs():
    radii = (50.0, 36.0, 26.0, 18.0)
    centres = ((64, 64), (64, 190), (190, 64), (190, 190))
    return SceneSpec(256, 256, tuple(Shape("disc", r, c, (rad,)) for (r, c), rad in zip(centres, radii)),
                     name="size-discs",
                     notes="4 discs, radii 50/36/26/18, intensity 1 on 0 (calibrated)")


def _intensity_discs():
    levels = (1.0, 0.85, 0.70, 0.55)
    centres = ((64, 64), (64, 190), (190, 64), (190, 190))
    return SceneSpec(256, 256, tuple(Shape("disc", r, c, (40.0,), lv) for (r, c), lv in zip(centres, levels)),
                     name="intensity-discs",
                     notes="4 discs of radius 40, intensities 1.00/0.85/0.70/0.55 (evenly spaced)")


def _ambiguity(level):
    rs, rl = AMBIGUITY_RADII
    n = AMBIGUITY_EXTENT
    shapes = (Shape("disc", *AMBIGUITY_SMALL_CENTRE, (rs,), 1.0), Shape("disc", *AMBIGUITY_LARGE_CENTRE, (rl,), level))
    return SceneSpec(n, n, shapes, name=f"ambiguity-{level:.2f}",
                     notes=f"small disc r={rs} at 1.0, large disc r={rl} at {level} (radii calibrated)")


def _noisy_squares(sigma):
    sides = (84.0, 54.0, 34.0, 22.0)
    centres = ((64, 64), (64, 190), (190, 64), (190, 190))
    return SceneSpec(256, 256, tuple(Shape("square", r, c, (s,)) for (r, c), s in zip(centres, sides)),
                     noise_sigma=float(sigma), seed=2016, name=f"noisy-squares-{sigma:g}",
                     notes="4 squares, sides 84/54/34/22, binary, additive Gaussian noise")


def _eigenshapes(kind):
    # three Wulff shapes of the chosen norm at three sizes
    sizes = (36.0, 24.0, 18.0)
    centres = ((60, 60), (60, 180), (180, 120))
    shape_kind = {"l1": "square", "l2": "disc", "linf": "diamond"}[kind]
    scale = {"l1": 2.0, "l2": 1.0, "linf": 1.3}[kind]
    shapes = tuple(Shape(shape_kind, r, c, (s * scale,)) for (r, c), s in zip(centres, sizes))
    return SceneSpec(240, 240, shapes, name=f"eigenshapes-{kind}",
                     notes=f"3 {shape_kind}s (Wulff shape of gamma={kind}) at 3 sizes")


def _non_wulff_rect():
    return SceneSpec(256, 256, (Shape("rectangle", 128, 128, (60.0, 150.0)),), name="non-wulff-rect",
                     notes="axis-aligned 60x150 rectangle, a TV eigenfunction for gamma=l1")


def _mixed_shapes():
    shapes = (
        Shape("triangle", 140, 128, (110.0,)),
        Shape("disc", 42, 42, (34.0,)),
        Shape("disc", 212, 212, (30.0,)),
        Shape("square", 212, 40, (56.0,)),
        Shape("square", 38, 214, (40.0,)),
    )
    return SceneSpec(256, 256, shapes, name="mixed-shapes",
                     notes="triangle (side 110), discs r=34/30, squares 56/40")


def _arms_network():
    core = Shape("disc", 128, 128, (30.0,))
    arms = (
        Shape("rectangle", 128, 64, (20.0, 100.0)),   # west, width 20
        Shape("rectangle", 128, 192, (20.0, 100.0)),  # east, width 20
        Shape("rectangle", 60, 128, (100.0, 10.0)),   # north, width 10
        Shape("rectangle", 196, 128, (100.0, 10.0)),  # south, width 10
    )
    return SceneSpec(256, 256, (core,) + arms, name="arms-network",
                     notes="disc core r=30 with two arms of width 20 and two of width 10")


_PRESETS = {
    "size-discs": _size_discs,
    "intensity-discs": _intensity_discs,
    "ambiguity-0.68": lambda: _ambiguity(0.68),
    "ambiguity-0.69": lambda: _ambiguity(0.69),
    "ambiguity-0.70": lambda: _ambiguity(0.70),
    "eigenshapes-l1": lambda: _eigenshapes("l1"),
    "eigenshapes-l2": lambda: _eigenshapes("l2"),
    "eigenshapes-linf": lambda: _eigenshapes("linf"),
    "non-wulff-rect": _non_wulff_rect,
    "mixed-shapes": _mixed_shapes,
    "arms-network": _arms_network,
}

#: Suggested run parameters (gamma, alpha, K) for each preset family.
PRESET_RUNS = {
    "size-discs": ("l2", 200.0, 30),
    "intensity-discs": ("l2", 150.0, 40),
    "ambiguity": ("l2", 200.0, 40),
    "noisy-squares": ("l1", 100.0, 30),
    "eigenshapes-l1": ("l1", 200.0, 30),
    "eigenshapes-l2": ("l2", 200.0, 30),
    "eigenshapes-linf": ("linf", 200.0, 30),
    "non-wulff-rect": ("l1", 200.0, 30),
    "mixed-shapes": ("l2", 200.0, 30),
    "arms-network": ("l2", 200.0, 30),
}


def preset_names():
    return sorted(_PRESETS) + ["noisy-squares-<sigma>"]


def preset(name):
    """Return the :class:`SceneSpec` registered under ``name``.

    ``noisy-squares-<sigma>`` accepts any non-negative noise level, e.g.
    ``noisy-squares-0.25``.
    """
    if name in _PRESETS:
        return _PRESETS[name]()
    prefix = "noisy-squares-"
    if name.startswith(prefix):
        try:
            sigma = float(name[len(prefix):])
        except ValueError:
            raise ValueError(f"bad noise level in preset name {name!r}") from None
        return _noisy_squares(sigma)
    raise ValueError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")


def preset_run(name):
    """Suggested ``(gamma, alpha, K)`` for a preset name."""
    if name in PRESET_RUNS:
        return PRESET_RUNS[name]
    for family in ("ambiguity", "noisy-squares"):
        if name.startswith(family):
            return PRESET_RUNS[family]
    raise ValueError(f"no run parameters for {name!r}")
