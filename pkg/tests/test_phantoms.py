import math

import numpy as np
import pytest
from scipy import stats

from msseg.phantoms import (PRESET_RUNS, SceneSpec, Shape, gaussian_noise, load_scene, preset, preset_names,
                            preset_run, render, save_scene, splitmix64)

MASK64 = (1 << 64) - 1


def _splitmix_reference(seed, n):
    # plain-int sequential generator
    state = seed & MASK64
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def test_splitmix_known_outputs():
    got = [int(x) for x in splitmix64(0, np.arange(3))]
    assert got == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


@pytest.mark.parametrize("seed", [0, 1, 2016, 2 ** 63 + 12345])
def test_splitmix_matches_sequential_reference(seed):
    got = [int(x) for x in splitmix64(seed, np.arange(50))]
    assert got == _splitmix_reference(seed, 50)


def test_noise_deterministic_and_seeded():
    a = gaussian_noise((40, 50), 0.3, 7)
    np.testing.assert_array_equal(a, gaussian_noise((40, 50), 0.3, 7))
    assert not np.array_equal(a, gaussian_noise((40, 50), 0.3, 8))
    # noise at a pixel depends only on its linear index
    np.testing.assert_array_equal(gaussian_noise((2000,), 1.0, 7)[:50], gaussian_noise((50,), 1.0, 7))


def test_noise_statistics():
    z = gaussian_noise((200, 200), 1.0, 3).ravel()
    assert abs(z.mean()) < 0.02
    assert abs(z.std() - 1.0) < 0.02
    assert stats.kstest(z, "norm").pvalue > 1e-3
    assert np.all(np.isfinite(z))
    np.testing.assert_allclose(gaussian_noise((50, 50), 0.25, 3), 0.25 * gaussian_noise((50, 50), 1.0, 3))


def test_render_is_two_valued_without_noise():
    for name in ("size-discs", "eigenshapes-l1", "non-wulff-rect", "mixed-shapes", "arms-network"):
        img = render(preset(name))
        assert set(np.unique(img)) == {0.0, 1.0}, name


def test_intensity_levels():
    spec = preset("intensity-discs")
    img = render(spec)
    levels = sorted(set(np.unique(img)) - {0.0})
    np.testing.assert_allclose(levels, [0.55, 0.70, 0.85, 1.0])
    for m, s in zip(spec.object_masks(), spec.shapes):
        assert np.all(img[m] == s.intensity)


def test_size_discs_areas_close_to_continuous():
    spec = preset("size-discs")
    for m, s in zip(spec.object_masks(), spec.shapes):
        assert abs(m.sum() / (math.pi * s.size[0] ** 2) - 1) < 0.01


def test_noisy_presets_reproducible():
    a = render(preset("noisy-squares-0.25"))
    np.testing.assert_array_equal(a, render(preset("noisy-squares-0.25")))
    clean = render(preset("noisy-squares-0"))
    assert abs((a - clean).std() - 0.25) < 0.01


def test_ambiguity_presets():
    for lv in (0.68, 0.69, 0.70):
        spec = preset(f"ambiguity-{lv:.2f}")
        img = render(spec)
        assert set(np.unique(img)) == {0.0, lv, 1.0}
        small, large = spec.object_masks()
        assert small.sum() == 440
        assert large.sum() > 3 * small.sum()


def test_shape_masks():
    sq = Shape("square", 10, 10, (6,)).mask((20, 20))
    assert sq.sum() == 36
    rect = Shape("rectangle", 10, 10, (4, 8)).mask((20, 20))
    assert rect.sum() == 32 and rect[8:12, 6:14].all()
    dia = Shape("diamond", 10, 10, (3,)).mask((20, 20))
    assert dia.sum() == 25
    tri = Shape("triangle", 50, 50, (40,)).mask((100, 100))
    assert abs(tri.sum() / (math.sqrt(3) / 4 * 40 ** 2) - 1) < 0.05
    rows = np.flatnonzero(tri.any(axis=1))
    assert tri[rows[0]].sum() < tri[rows[-1]].sum()


def test_overpainting_in_object_masks():
    spec = SceneSpec(20, 20, (Shape("square", 10, 10, (10,)), Shape("square", 10, 10, (4,), 0.5)))
    outer, inner = spec.object_masks()
    assert outer.sum() == 100 - 16 and inner.sum() == 16
    assert render(spec)[10, 10] == 0.5


def test_errors():
    with pytest.raises(ValueError, match="unknown preset"):
        preset("nope")
    with pytest.raises(ValueError):
        preset("noisy-squares-abc")
    with pytest.raises(ValueError):
        preset_run("nope")
    with pytest.raises(ValueError):
        Shape("hexagon", 1, 1, (1,))
    with pytest.raises(ValueError):
        Shape("rectangle", 1, 1, (1,))
    with pytest.raises(ValueError):
        Shape("disc", 1, 1, (-1,))
    with pytest.raises(ValueError):
        Shape("disc", 1, 1, (1,), 1.5)
    with pytest.raises(ValueError, match="outside"):
        SceneSpec(10, 10, (Shape("disc", 5, 5, (8,)),))
    with pytest.raises(ValueError):
        SceneSpec(0, 10)
    with pytest.raises(ValueError):
        SceneSpec(10, 10, background=1.0)


def test_catalogue():
    names = preset_names()
    for n in names:
        if "<" not in n:
            spec = preset(n)
            assert spec.name == n
            assert preset_run(n)[0] in ("l1", "l2", "linf")
    assert preset_run("noisy-squares-0.5") == PRESET_RUNS["noisy-squares"]
    assert preset("noisy-squares-0.5").with_noise(0.1, 3).noise_sigma == 0.1


def test_empty_scene_is_zero():
    assert not render(SceneSpec(8, 9)).any()


@pytest.mark.parametrize("r", [3.0, 7.5, 20.0, 41.3])
def test_disc_count_within_perimeter_of_area(r):
    n = int(2 * r + 6)
    count = Shape("disc", n / 2, n / 2, (r,)).mask((n, n)).sum()
    assert abs(count - math.pi * r * r) <= 2 * math.pi * r


def test_noise_moments_on_256():
    f = render(SceneSpec(256, 256, noise_sigma=0.25, seed=11))
    assert abs(f.mean()) <= 0.01
    assert abs(f.std() - 0.25) <= 0.01


@pytest.mark.parametrize("name", ["size-discs", "mixed-shapes", "arms-network", "noisy-squares-0.5",
                                  "ambiguity-0.69"])
def test_scene_text_roundtrip(name, tmp_path):
    spec = preset(name)
    assert SceneSpec.from_text(spec.to_text()) == spec
    save_scene(tmp_path / "s.txt", spec)
    back = load_scene(tmp_path / "s.txt")
    np.testing.assert_array_equal(render(back), render(spec))


def test_scene_text_parsing():
    text = """# two shapes
height = 20
width = 30
background = 0.1
shape = rectangle 10 15 4 8 0.9
shape = disc 10 5 3 1
"""
    spec = SceneSpec.from_text(text)
    assert spec.shape == (20, 30) and spec.shapes[0].size == (4.0, 8.0) and spec.shapes[1].intensity == 1.0
    for bad in ("width = 3\n", "height = 3\nwidth = 3\ncolour = red\n", "height = 3\nwidth = 3\nshape = disc 1\n",
                "height 3\n", "height = 3\nwidth = 3\nshape = disc a b c d\n"):
        with pytest.raises(ValueError):
            SceneSpec.from_text(bad)
