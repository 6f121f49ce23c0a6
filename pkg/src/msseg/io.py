"""Image input/output and the on-disk layout of a run directory.

A run directory holds ``mask_0001.pgm .. mask_####.pgm`` (0/255), the
spectral response ``response.csv``, the scale map as 16-bit
``scale_map.pgm`` (pixel value = appearance index), optionally
``scale_map.png`` and exactly one ``manifest.txt``.
"""

import csv
import os
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .spectral import FORWARD, INVERSE, ScaleSequence, scale_map
from .validation import check_image

MANIFEST_NAME = "manifest.txt"
RESPONSE_NAME = "response.csv"
SCALE_MAP_NAME = "scale_map.pgm"
SCALE_MAP_PNG = "scale_map.png"
MASK_PATTERN = "mask_{:04d}.pgm"
_MASK_RE = re.compile(r"^mask_(\d{4,})\.pgm$")


class ImageFormatError(ValueError):
    pass


def _fmt(x):
    # shortest string that reads back to the same float
    return repr(float(x))


# -- PGM ----------------------------------------------------------------------

def _pgm_tokens(data, count):
    """Read ``count`` whitespace separated header tokens, skipping comments."""
    tokens, pos, n = [], 2, len(data)
    while len(tokens) < count:
        while pos < n and (chr(data[pos]).isspace() or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < n and data[pos] not in (10, 13):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and not chr(data[pos]).isspace() and data[pos] != ord("#"):
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return [int(t) for t in tokens], pos + 1


def read_pgm(path):
    """Raw samples of a binary (P5) PGM as ``uint8`` or ``uint16`` plus maxval."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM (P5) file")
    try:
        (width, height, maxval), start = _pgm_tokens(data, 3)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: malformed PGM header ({exc})") from None
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: zero-dimension image ({width}x{height})")
    if not 0 < maxval < 65536:
        raise ImageFormatError(f"{path}: maxval {maxval} outside 1..65535")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    raster = data[start:start + need]
    if len(raster) < need:
        raise ImageFormatError(f"{path}: raster truncated ({len(raster)} of {need} bytes)")
    arr = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return arr.astype(np.uint16 if maxval > 255 else np.uint8), maxval


def write_pgm(path, samples, maxval=None):
    """Write integer samples as binary PGM; 16-bit when ``maxval > 255``."""
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.size == 0:
        raise ValueError(f"PGM needs a non-empty 2-D array, got shape {samples.shape}")
    if maxval is None:
        maxval = 65535 if samples.dtype == np.uint16 else 255
    if samples.min() < 0 or samples.max() > maxval:
        raise ValueError(f"samples outside 0..{maxval}")
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = samples.shape
    header = f"P5\n{w} {h}\n{int(maxval)}\n".encode("ascii")
    path = Path(path)
    try:
        path.write_bytes(header + samples.astype(dtype).tobytes())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# -- generic image IO ---------------------------------------------------------

_PNG_MAX = {"1": 1, "L": 255, "I;16": 65535, "I;16B": 65535, "I;16L": 65535, "I": 65535}


def load_image(path):
    """Grayscale image normalized by its format maximum, as float64 in ``[0, 1]``.

    Accepts binary PGM (8 or 16 bit), single-channel PNG and ``.npy`` arrays
    (taken as is). Colour or alpha images are rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"cannot read {path}: no such file")
    suffix = path.suffix.lower()
    if suffix == ".npy":
        arr = np.load(path, allow_pickle=False)
        if arr.ndim == 3:
            raise ImageFormatError(f"{path}: {arr.shape[-1]}-channel array; extract one channel first")
        return check_image(arr, str(path), copy=True)
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic[:2] == b"P5":
        raw, maxval = read_pgm(path)
        return raw.astype(np.float64) / maxval
    if magic[:2] in (b"P6", b"P3", b"P2"):
        raise ImageFormatError(f"{path}: only binary grayscale PGM (P5) is supported")
    if magic == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    raise ImageFormatError(f"{path}: unsupported format (expected PGM, PNG or .npy)")


def _load_png(path):
    from PIL import Image

    with Image.open(path) as im:
        bands = im.getbands()
        if len(bands) != 1 or im.mode == "P":
            raise ImageFormatError(
                f"{path}: image has mode {im.mode} with bands {bands}; "
                "convert it to a single grayscale channel first (for example process each channel separately)")
        if im.mode not in _PNG_MAX:
            raise ImageFormatError(f"{path}: unsupported PNG mode {im.mode}")
        maxval = _PNG_MAX[im.mode]
        arr = np.array(im, dtype=np.float64)
    if arr.size == 0:
        raise ImageFormatError(f"{path}: zero-dimension image")
    return arr / maxval


def save_image(path, image, bits=16):
    """Save a ``[0, 1]`` image; values outside are clipped except for ``.npy``."""
    path = Path(path)
    image = check_image(image, "image")
    if path.suffix.lower() == ".npy":
        np.save(path, image)
        return path
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    maxval = 255 if bits == 8 else 65535
    samples = np.rint(np.clip(image, 0.0, 1.0) * maxval).astype(np.uint8 if bits == 8 else np.uint16)
    if path.suffix.lower() == ".png":
        from PIL import Image

        Image.fromarray(samples).save(path)
    else:
        write_pgm(path, samples, maxval)
    return path


def save_mask(path, mask):
    write_pgm(path, (np.asarray(mask) > 0).astype(np.uint8) * 255, 255)


def load_mask(path):
    raw, _ = read_pgm(path)
    return (raw > 0).astype(np.float64)


# -- manifest -----------------------------------------------------------------

@dataclass
class RunManifest:
    """Everything needed to reproduce a run, written as ``key = value`` lines."""

    command: str
    input: str = ""
    preset: str = ""
    gamma: str = "l2"
    direction: str = INVERSE
    alpha: float = float("nan")
    iters: int = 0
    alphas: list = field(default_factory=list)
    tau: float = float("nan")
    sigma: float = float("nan")
    theta: float = float("nan")
    max_inner_its: int = 0
    tol: float = float("nan")
    mu: float = float("nan")
    c1: float = float("nan")
    c2: float = float("nan")
    constants: str = "estimated"
    threads: int = 1
    output: str = ""
    version: str = ""
    timings: dict = field(default_factory=dict)

    def to_text(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "alphas":
                value = ",".join(_fmt(a) for a in value)
            elif f.name == "timings":
                continue
            elif isinstance(value, float):
                value = _fmt(value)
            lines.append(f"{f.name} = {value}")
        for stage, seconds in self.timings.items():
            lines.append(f"time.{stage} = {seconds:.3f}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        raw, timings = {}, {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"malformed manifest line: {line!r}")
            key, value = key.strip(), value.strip()
            if key.startswith("time."):
                timings[key[5:]] = float(value)
            else:
                raw[key] = value
        kwargs = {}
        for f in fields(cls):
            if f.name not in raw:
                continue
            value = raw[f.name]
            if f.name == "alphas":
                kwargs[f.name] = [float(a) for a in value.split(",") if a.strip()]
            elif f.type is float or f.type == "float":
                kwargs[f.name] = float(value)
            elif f.type is int or f.type == "int":
                kwargs[f.name] = int(value)
            else:
                kwargs[f.name] = value
        if "command" not in kwargs:
            raise ValueError("manifest has no command entry")
        return cls(timings=timings, **kwargs)

    def as_dict(self):
        return asdict(self)


def write_manifest(directory, manifest):
    path = Path(directory) / MANIFEST_NAME
    try:
        path.write_text(manifest.to_text())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_manifest(directory):
    path = Path(directory) / MANIFEST_NAME
    if not path.is_file():
        raise FileNotFoundError(f"{directory}: no {MANIFEST_NAME}; not a run directory")
    return RunManifest.from_text(path.read_text())


# -- run directories ----------------------------------------------------------

def response_rows(seq):
    """``(k, S_k, alpha_effective)`` rows of a sequence.

    ``alpha_effective`` is the weight of the mask reached after the change:
    ``alpha / k`` for Bregman step ``k``, and the larger weight of each
    adjacent pair for a forward sweep.
    """
    if seq.direction == FORWARD:
        alphas = sorted(seq.alphas_effective)[1:]
    else:
        alphas = list(seq.alphas_effective)
    if len(alphas) != len(seq.responses):
        alphas = [float("nan")] * len(seq.responses)
    return [(k, float(s), float(a)) for k, (s, a) in enumerate(zip(seq.responses, alphas), start=1)]


def write_response_csv(path, seq):
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "S", "alpha_effective"])
            for k, s, a in response_rows(seq):
                w.writerow([k, _fmt(s), _fmt(a)])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_response_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and list(rows[0]) != ["k", "S", "alpha_effective"]:
        raise ValueError(f"{path}: unexpected header {list(rows[0])}")
    return [(int(r["k"]), float(r["S"]), float(r["alpha_effective"])) for r in rows]


def save_scale_map_png(path, index, n_scales):
    """Viridis rendering of a scale map; pixels that never appear are black."""
    from matplotlib import colormaps
    from PIL import Image

    index = np.asarray(index)
    lut = (colormaps["viridis"](np.linspace(0.0, 1.0, max(int(n_scales), 1)))[:, :3] * 255).round()
    rgb = np.zeros(index.shape + (3,), dtype=np.uint8)
    hit = index > 0
    rgb[hit] = lut[np.clip(index[hit] - 1, 0, len(lut) - 1)].astype(np.uint8)
    Image.fromarray(rgb, "RGB").save(path)


def save_outputs(seq, components, smap, manifest, directory, png=False):
    """Write masks, response, scale map and manifest of a run into ``directory``."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {directory}: {exc}") from exc
    for old in directory.iterdir():
        if _MASK_RE.match(old.name):
            old.unlink()
    for k, mask in enumerate(seq.masks, start=1):
        save_mask(directory / MASK_PATTERN.format(k), mask)
    write_response_csv(directory / RESPONSE_NAME, seq)
    index = smap.appearance_index
    if index.max() > 65535:
        raise ValueError("scale index exceeds the 16-bit range")
    write_pgm(directory / SCALE_MAP_NAME, index.astype(np.uint16), 65535)
    if png:
        save_scale_map_png(directory / SCALE_MAP_PNG, index, len(components))
    manifest.output = str(directory)
    write_manifest(directory, manifest)
    return directory


def list_masks(directory):
    found = sorted((int(m.group(1)), p) for p in Path(directory).iterdir() if (m := _MASK_RE.match(p.name)))
    if not found:
        raise FileNotFoundError(f"{directory}: no mask_####.pgm files")
    ks = [k for k, _ in found]
    if ks != list(range(1, len(ks) + 1)):
        raise ValueError(f"{directory}: mask numbering has gaps: {ks}")
    return [p for _, p in found]


def load_run(directory):
    """Rebuild the :class:`ScaleSequence` and manifest of a saved run."""
    manifest = read_manifest(directory)
    masks = [load_mask(p) for p in list_masks(directory)]
    if manifest.direction == FORWARD:
        alphas = list(manifest.alphas)
    else:
        alphas = [manifest.alpha / k for k in range(1, len(masks) + 1)] if np.isfinite(manifest.alpha) else []
    if alphas and len(alphas) != len(masks):
        alphas = []
    seq = ScaleSequence(masks, alphas_effective=alphas, direction=manifest.direction,
                        c1=manifest.c1, c2=manifest.c2)
    return seq, manifest


def run_scale_map(seq):
    return scale_map(seq.components())


def ensure_parent(path):
    parent = Path(path).parent
    if str(parent) and not parent.exists():
        os.makedirs(parent, exist_ok=True)
    return Path(path)
