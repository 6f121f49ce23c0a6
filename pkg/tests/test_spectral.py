import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from msseg.spectral import (FORWARD, INVERSE, ScaleSequence, SpectralComponent, detect_peaks, filter_scales,
                            parse_band, response, scale_map, transform)

mask_seqs = st.integers(1, 8).flatmap(
    lambda k: st.lists(arrays(np.float64, (5, 6), elements=st.sampled_from([0.0, 1.0])), min_size=k, max_size=k))


def _m(rows):
    return np.array(rows, dtype=np.float64)


def test_inverse_transform_hand_example():
    u1 = _m([[0, 1], [0, 0]])
    u2 = _m([[1, 1], [0, 0]])
    u3 = _m([[1, 0], [0, 1]])
    comps = transform([u1, u2, u3], INVERSE)
    assert [c.k for c in comps] == [1, 2, 3]
    np.testing.assert_array_equal(comps[0].phi, u1)
    np.testing.assert_array_equal(comps[1].phi, _m([[1, 0], [0, 0]]))
    np.testing.assert_array_equal(comps[2].phi, _m([[0, -1], [0, 1]]))
    assert [c.response for c in comps] == [1.0, 1.0, 2.0]


def test_forward_transform_sign_convention():
    # ordered by increasing alpha: the object vanishes, which counts positive
    small_alpha = _m([[1, 1], [0, 0]])
    large_alpha = _m([[1, 0], [0, 0]])
    (c,) = transform([small_alpha, large_alpha], FORWARD)
    np.testing.assert_array_equal(c.phi, _m([[0, 1], [0, 0]]))


def test_forward_sequence_is_reordered_by_alpha():
    m_hi, m_lo = _m([[0, 0]]), _m([[1, 1]])
    seq = ScaleSequence([m_hi, m_lo], alphas_effective=[10.0, 1.0], direction=FORWARD)
    np.testing.assert_array_equal(seq.phis[0], _m([[1, 1]]))


def test_constant_sequences_have_no_components():
    z = np.zeros((3, 3))
    assert all(not c.phi.any() for c in transform([z, z, z], INVERSE))
    o = np.ones((3, 3))
    assert all(c.response == 0 for c in transform([o, o, o], FORWARD))


def test_transform_errors():
    with pytest.raises(ValueError):
        transform([], INVERSE)
    with pytest.raises(ValueError):
        transform([np.zeros((2, 2))], FORWARD)
    with pytest.raises(ValueError, match="direction"):
        transform([np.zeros((2, 2))], "sideways")


@given(mask_seqs)
def test_component_values_and_response(masks):
    comps = transform(masks, INVERSE)
    for c in comps:
        assert set(np.unique(c.phi)) <= {-1.0, 0.0, 1.0}
        assert c.response == np.abs(c.phi).sum()
    assert response(comps) == [c.response for c in comps]


@given(mask_seqs, st.data())
def test_telescoping_and_partition(masks, data):
    comps = transform(masks, INVERSE)
    K = len(comps)
    np.testing.assert_array_equal(filter_scales(comps, range(1, K + 1), signed=True), masks[-1])
    np.testing.assert_array_equal(filter_scales(comps, lambda k: True), masks[-1])
    b1 = set(data.draw(st.lists(st.integers(1, K), unique=True)))
    b2 = set(range(1, K + 1)) - b1
    total = filter_scales(comps, b1, signed=True) + filter_scales(comps, b2, signed=True)
    np.testing.assert_array_equal(total, masks[-1])


@given(mask_seqs)
def test_response_conservation(masks):
    S = response(transform(masks, INVERSE))
    monotone = all(np.all(a <= b) for a, b in zip(masks, masks[1:]))
    assert sum(S) >= masks[-1].sum()
    assert (sum(S) == masks[-1].sum()) == monotone


@given(mask_seqs)
def test_scale_map_properties(masks):
    comps = transform(masks, INVERSE)
    sm = scale_map(comps)
    K = len(masks)
    assert sm.appearance_index.min() >= 0 and sm.appearance_index.max() <= K
    outside = masks[-1] == 0
    never_left = ~sm.vanished
    assert np.all(sm.appearance_index[outside & never_left] == 0)
    inside = masks[-1] == 1
    assert np.all(sm.appearance_index[inside] > 0)


def test_scale_map_rework_and_vanished():
    seq = [_m([[1, 0, 0]]), _m([[0, 1, 0]]), _m([[1, 1, 0]])]
    sm = scale_map(transform(seq, INVERSE))
    np.testing.assert_array_equal(sm.appearance_index, [[1, 2, 0]])
    np.testing.assert_array_equal(sm.vanished, [[True, False, False]])
    assert sm.rework == 1 and sm.n_scales == 2


def test_scale_map_accepts_raw_arrays():
    sm = scale_map([_m([[0, 1]]), _m([[1, 0]])])
    np.testing.assert_array_equal(sm.appearance_index, [[2, 1]])
    with pytest.raises(ValueError):
        scale_map([])


def test_detect_peaks_examples():
    S = (0, 100, 0, 50, 0)
    assert detect_peaks(S, 0.02) == [2, 4]
    # the same peaks as 0-based positions into S
    assert {k - 1 for k in detect_peaks(S, 0.02)} == {1, 3}
    assert detect_peaks([0, 0, 0]) == []
    assert detect_peaks([]) == []


def test_detect_peaks_merging_and_threshold():
    assert detect_peaks([0, 10, 40, 30, 0, 20]) == [3, 6]
    assert detect_peaks([5, 5, 0]) == [1]
    assert detect_peaks([100, 1, 0, 1], 0.02) == [1]
    assert detect_peaks([100, 3, 0, 3], 0.02) == [1, 4]
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            detect_peaks([1, 2], bad)


@given(st.lists(st.integers(0, 1000), max_size=40), st.floats(0.001, 0.5))
def test_detect_peaks_are_qualifying_local_maxima(S, frac):
    peaks = detect_peaks(S, frac)
    total = sum(S)
    for p in peaks:
        v = S[p - 1]
        assert v >= frac * total and v > 0
        if p > 1:
            assert S[p - 2] <= v
        if p < len(S):
            assert S[p] <= v
    assert all(b - a >= 2 for a, b in zip(peaks, peaks[1:]))


def test_filter_scales_empty_and_clamp():
    comps = transform([_m([[1, 0]]), _m([[0, 1]])], INVERSE)
    assert not filter_scales(comps, set()).any()
    np.testing.assert_array_equal(filter_scales(comps, {2}, signed=True), [[-1, 1]])
    np.testing.assert_array_equal(filter_scales(comps, {2}), [[0, 1]])
    with pytest.raises(ValueError):
        filter_scales([], {1})


def test_single_band_isolates_largest_disc(size_discs, size_discs_run):
    spec, _ = size_discs
    comps = size_discs_run.components()
    k1 = detect_peaks(size_discs_run.responses)[0]
    got = filter_scales(comps, {k1})
    np.testing.assert_array_equal(got, got * spec.object_masks()[0])
    truth = spec.object_masks()[0]
    assert got[truth].mean() >= 0.98


def test_parse_band():
    assert parse_band("3..5", 10) == {3, 4, 5}
    assert parse_band("..2, 9..", 10) == {1, 2, 9, 10}
    assert parse_band("4", 10) == {4}
    with pytest.raises(ValueError):
        parse_band("0..3", 10)
    with pytest.raises(ValueError):
        parse_band("x", 10)


def test_sequence_container():
    masks = [_m([[0, 1]]), _m([[1, 1]])]
    seq = ScaleSequence(masks, alphas_effective=[2.0, 1.0])
    assert len(seq) == 2 and seq.responses == [1.0, 1.0]
    assert isinstance(seq.components()[0], SpectralComponent)
    np.testing.assert_array_equal(seq.final_mask, masks[-1])
    with pytest.raises(ValueError):
        ScaleSequence(masks, alphas_effective=[1.0])
