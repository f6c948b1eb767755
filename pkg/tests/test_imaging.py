import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hazekit.imaging import (
    FilterParams,
    ImageIOError,
    as_rgb,
    box_mean_filter,
    channel_mean,
    guided_filter,
    load_image,
    min_channel,
    min_filter,
    save_image,
)
from oracles import naive_box_mean, naive_guided_filter, naive_min_filter


def test_min_channel_definition(rng):
    assert min_channel(np.full((2, 2, 3), 0.5)).tolist() == [[0.5, 0.5], [0.5, 0.5]]
    assert min_channel(np.array([[[0.9, 0.2, 0.7]]]))[0, 0] == 0.2
    img = rng.random((3, 3, 3))
    expected = [[min(img[y, x]) for x in range(3)] for y in range(3)]
    np.testing.assert_array_equal(min_channel(img), expected)


def test_channel_mean(rng):
    assert channel_mean(np.array([[[0.3, 0.6, 0.9]]]))[0, 0] == pytest.approx(0.6, abs=1e-15)
    gray = np.repeat(rng.random((5, 5, 1)), 3, axis=2)
    np.testing.assert_allclose(channel_mean(gray), gray[..., 0], atol=1e-15)
    img = rng.random((8, 8, 3))
    expected = [[(img[y, x, 0] + img[y, x, 1] + img[y, x, 2]) / 3 for x in range(8)] for y in range(8)]
    np.testing.assert_allclose(channel_mean(img), expected, atol=1e-15)


def test_min_filter_cases(rng):
    np.testing.assert_array_equal(min_filter(np.full((7, 9), 0.3), 2), 0.3)
    m = np.ones((7, 7))
    m[3, 3] = 0.0
    out = min_filter(m, 1)
    assert (out[2:5, 2:5] == 0).all()
    assert out.sum() == 49 - 9
    m = rng.random((16, 16))
    np.testing.assert_array_equal(min_filter(m, 4), naive_min_filter(m, 4))


def test_box_mean_cases(rng):
    np.testing.assert_allclose(box_mean_filter(np.full((6, 5), 0.7), 2), 0.7, atol=1e-15)
    m = np.zeros((9, 9))
    m[4, 4] = 1.0
    out = box_mean_filter(m, 1)
    np.testing.assert_allclose(out[3:6, 3:6], 1 / 9, atol=1e-15)
    assert out.sum() == pytest.approx(1.0)
    m = rng.random((32, 32))
    np.testing.assert_allclose(box_mean_filter(m, 5), naive_box_mean(m, 5), atol=1e-9, rtol=0)


def test_box_mean_border_uses_true_area():
    m = np.arange(12, dtype=float).reshape(3, 4)
    # corner window covers rows 0-1, cols 0-1
    assert box_mean_filter(m, 1)[0, 0] == pytest.approx(np.mean([0, 1, 4, 5]))


def test_guided_filter_constant_input(rng):
    guide = rng.random((20, 20))
    out = guided_filter(guide, np.full((20, 20), 0.42), FilterParams(radius=3, epsilon=1e-3))
    np.testing.assert_allclose(out, 0.42, atol=1e-12)


def test_guided_filter_self_guidance_limit(rng):
    m = rng.random((24, 24))
    out = guided_filter(m, m, FilterParams(radius=2, epsilon=1e-9))
    np.testing.assert_allclose(out, m, atol=1e-5)


def test_guided_filter_matches_least_squares_oracle(rng):
    guide, src = rng.random((24, 24)), rng.random((24, 24))
    out = guided_filter(guide, src, FilterParams(radius=3, epsilon=1e-3))
    np.testing.assert_allclose(out, naive_guided_filter(guide, src, 3, 1e-3), atol=1e-6, rtol=0)


def test_guided_filter_shape_mismatch():
    with pytest.raises(ValueError):
        guided_filter(np.zeros((4, 4)), np.zeros((4, 5)), FilterParams(radius=1))


@pytest.mark.parametrize("radius,eps", [(0, 1e-3), (2, 0.0), (1.5, 1e-3)])
def test_filter_params_validation(radius, eps):
    with pytest.raises(ValueError):
        FilterParams(radius=radius, epsilon=eps)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_filters_preserve_shape_and_are_deterministic(h, w, r, seed):
    m = np.random.default_rng(seed).random((h, w))
    for f in (min_filter, box_mean_filter):
        a, b = f(m, r), f(m, r)
        assert a.shape == m.shape
        assert a.tobytes() == b.tobytes()
    assert (min_filter(m, r) <= m).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_min_channel_below_mean(h, w, seed):
    img = np.random.default_rng(seed).random((h, w, 3))
    assert (min_channel(img) <= channel_mean(img) + 1e-15).all()


def test_as_rgb_rejects_bad_input():
    with pytest.raises(ValueError):
        as_rgb(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        as_rgb(np.full((2, 2, 3), 1.5))
    with pytest.raises(ValueError):
        as_rgb(np.full((2, 2, 3), np.nan))


def test_png_round_trip(tmp_path, rng):
    img = rng.random((17, 11, 3))
    path = save_image(img, tmp_path / "x.png")
    back = load_image(path)
    assert back.shape == img.shape
    assert np.abs(back - img).max() <= 0.5 / 255 + 1e-12


def test_byte_normalization(tmp_path):
    from PIL import Image

    Image.fromarray(np.array([[[255, 128, 0]]], dtype=np.uint8)).save(tmp_path / "p.png")
    px = load_image(tmp_path / "p.png")[0, 0]
    assert px[0] == 1.0
    assert px[1] == pytest.approx(128 / 255)
    assert px[1] == pytest.approx(0.50196, abs=1e-5)
    assert px[2] == 0.0


def test_gray_map_saved_as_single_channel(tmp_path):
    from PIL import Image

    save_image(np.linspace(0, 1, 12).reshape(3, 4), tmp_path / "g.png")
    with Image.open(tmp_path / "g.png") as im:
        assert im.mode == "L"


def test_io_errors_name_the_path(tmp_path):
    missing = tmp_path / "nope.png"
    with pytest.raises(ImageIOError, match="nope.png"):
        load_image(missing)
    bad = tmp_path / "corrupt.png"
    bad.write_bytes(b"not an image at all")
    with pytest.raises(ImageIOError, match="corrupt.png"):
        load_image(bad)
    with pytest.raises(ImageIOError):
        save_image(np.zeros((2, 2, 3)), tmp_path / "no_dir" / "x.png")
