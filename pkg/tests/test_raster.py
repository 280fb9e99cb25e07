import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gestaltbench.errors import DecodeError
from gestaltbench.raster import (
    components,
    connected_components,
    decode_png,
    dilate1,
    encode_png,
    fits,
    flip_horizontal,
    is_globally_symmetric,
    load_png,
    mirror_left_onto_right,
    mirror_onto,
    new_canvas,
    nn_scale,
    nn_scale_half,
    save_png,
)
from gestaltbench.rng import make_rng


def test_new_canvas_shape_and_dtype():
    c = new_canvas()
    assert c.shape == (200, 200)
    assert c.dtype == np.uint8
    assert not c.any()


def test_dilate1_single_pixel_becomes_3x3():
    m = np.zeros((5, 5), dtype=bool)
    m[2, 2] = True
    d = dilate1(m)
    expect = np.zeros((5, 5), dtype=bool)
    expect[1:4, 1:4] = True
    assert np.array_equal(d, expect)


def test_dilate1_clips_at_borders():
    m = np.zeros((3, 3), dtype=bool)
    m[0, 0] = True
    d = dilate1(m)
    assert d.sum() == 4 and d[:2, :2].all()


def test_fits_enforces_chebyshev_separation_of_two():
    # occupancy is the dilated footprint, so adjacency to the dilation
    # ring is exactly Chebyshev distance 1 from the original pixel
    occ = new_canvas().astype(bool)
    first = np.zeros((1, 1), dtype=bool) | True
    occ[9:12, 9:12] = True  # dilate1 of a pixel at (10, 10)
    assert not fits(occ, first, 10, 10)  # overlap
    assert not fits(occ, first, 11, 11)  # Chebyshev 1: touches
    assert fits(occ, first, 12, 12)  # Chebyshev 2: clear
    assert fits(occ, first, 10, 12)


def test_fits_rejects_out_of_bounds():
    occ = np.zeros((20, 20), dtype=bool)
    m = np.ones((4, 4), dtype=bool)
    assert not fits(occ, m, -1, 0)
    assert not fits(occ, m, 17, 0)
    assert fits(occ, m, 16, 16)


class TestComponents:
    def test_diagonal_pixels_are_one_component(self):
        img = np.zeros((6, 6), dtype=np.uint8)
        img[1, 1] = img[2, 2] = img[3, 3] = 100
        comps = components(img)
        assert len(comps) == 1
        assert comps[0].area == 3

    def test_separated_pixels_are_two_components(self):
        img = np.zeros((6, 6), dtype=np.uint8)
        img[1, 1] = img[1, 3] = 100
        assert len(components(img)) == 2

    def test_sorted_by_area_then_label(self):
        img = np.zeros((20, 20), dtype=np.uint8)
        img[1, 1] = 90  # 1 px, scanned first
        img[5:8, 5:8] = 90  # 9 px
        img[12:14, 12:14] = 90  # 4 px
        comps = components(img)
        assert [c.area for c in comps] == [9, 4, 1]

    def test_bbox_mask_centroid_agree(self):
        img = np.zeros((10, 12), dtype=np.uint8)
        img[2:5, 3:7] = 128
        (c,) = components(img)
        assert c.bbox == (2, 3, 3, 4)  # top, left, height, width
        assert c.mask.shape == (3, 4) and c.mask.all()
        assert c.centroid == (3.0, 4.5)

    def test_equal_areas_keep_scan_order(self):
        img = np.zeros((10, 10), dtype=np.uint8)
        img[1, 1] = 90
        img[5, 5] = 90
        comps = components(img)
        assert [c.label for c in comps] == [1, 2]
        assert comps[0].bbox[:2] == (1, 1)

    def test_count_matches_label_map(self):
        rng = make_rng(3)
        for _ in range(10):
            img = (rng.random((40, 40)) < 0.2).astype(np.uint8) * 100
            labels, n = connected_components(img)
            comps = components(img)
            assert len(comps) == n
            assert sum(c.area for c in comps) == int(np.count_nonzero(img))
            assert int(labels.max(initial=0)) == n

    def test_empty_image_yields_no_components(self):
        assert components(np.zeros((8, 8), dtype=np.uint8)) == []


def test_nn_scale_identity():
    rng = make_rng(1)
    img = (rng.random((21, 21)) < 0.3).astype(np.uint8) * 200
    assert np.array_equal(nn_scale(img, 1.0), img)


def test_nn_scale_doubles_a_centered_block():
    img = np.zeros((20, 20), dtype=np.uint8)
    img[8:12, 8:12] = 100  # 4x4 centered on the canvas center
    out = nn_scale(img, 2.0)
    assert int((out > 0).sum()) == 64
    ys, xs = np.nonzero(out)
    assert ys.min() == 6 and ys.max() == 13


def test_nn_scale_crops_overflow():
    img = np.zeros((10, 10), dtype=np.uint8)
    img[0, 0] = 100
    out = nn_scale(img, 3.0)
    assert out.shape == img.shape  # enlarged content just falls off


def test_nn_scale_half_touches_only_one_side():
    rng = make_rng(2)
    img = (rng.random((16, 16)) < 0.3).astype(np.uint8) * 150
    left = nn_scale_half(img, 1.4, "left")
    assert np.array_equal(left[:, 8:], img[:, 8:])
    right = nn_scale_half(img, 1.4, "right")
    assert np.array_equal(right[:, :8], img[:, :8])
    with pytest.raises(ValueError):
        nn_scale_half(img, 1.4, "top")


def test_mirror_left_onto_right_is_symmetric_and_idempotent():
    rng = make_rng(4)
    img = (rng.random((12, 18)) < 0.35).astype(np.uint8) * 99
    out = mirror_left_onto_right(img)
    assert is_globally_symmetric(out)
    assert np.array_equal(mirror_left_onto_right(out), out)
    assert np.array_equal(out[:, :9], img[:, :9])


def test_mirror_onto_right_keeps_right_half():
    rng = make_rng(6)
    img = (rng.random((12, 18)) < 0.35).astype(np.uint8) * 99
    out = mirror_onto(img, "right")
    assert is_globally_symmetric(out)
    assert np.array_equal(out[:, 9:], img[:, 9:])
    with pytest.raises(ValueError):
        mirror_onto(img, "down")


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_flip_horizontal_is_an_involution(seed):
    img = (make_rng(seed).random((9, 14)) < 0.4).astype(np.uint8) * 120
    assert np.array_equal(flip_horizontal(flip_horizontal(img)), img)
    assert is_globally_symmetric(img) == is_globally_symmetric(flip_horizontal(img))


def test_png_round_trip(tmp_path):
    rng = make_rng(9)
    img = rng.integers(0, 256, size=(50, 60), dtype=np.uint8)
    assert np.array_equal(decode_png(encode_png(img)), img)
    p = tmp_path / "x.png"
    save_png(img, p)
    assert np.array_equal(load_png(p), img)


def test_decode_png_rejects_junk():
    with pytest.raises(DecodeError):
        decode_png(b"not a png at all")
