import numpy as np
import pytest

from src.apps.dataset.domain.entities import Volume
from src.apps.dataset.domain.value_objects import SliceClass
from src.apps.dataset.exceptions import SliceGeometryError, SliceRangeError
from src.apps.dataset.services.slice_ops import (
    categorize_slice,
    clip_and_normalize,
    dilate_mask,
    extract_slices,
    merge_tumor_labels,
    pad_and_resize,
    scaled_tumor_area,
)


def _volume(depth: int = 16) -> Volume:
    voxels = np.arange(8 * 6 * depth, dtype=np.float32).reshape(8, 6, depth)
    return Volume(voxels=voxels, seg=np.zeros_like(voxels, dtype=np.int16), subject_id="S")


def test_merge_tumor_labels_unions_subregions() -> None:
    seg = np.array([[0, 1, 2], [4, 0, 0]])
    assert merge_tumor_labels(seg).tolist() == [[0, 1, 1], [1, 0, 0]]
    assert not merge_tumor_labels(np.zeros((4, 4), dtype=int)).any()

    single = np.zeros((5, 5), dtype=int)
    single[2, 3] = 4
    assert merge_tumor_labels(single).sum() == 1


def test_extract_slices_counts_are_inclusive() -> None:
    volume = Volume(
        voxels=np.zeros((4, 4, 155), dtype=np.float32),
        seg=np.zeros((4, 4, 155), dtype=np.int16),
        subject_id="S",
    )
    assert len(extract_slices(volume, 80, 130)) == 51
    assert len(extract_slices(volume, 80, 81)) == 2


def test_extract_slices_transposes_to_image_axes() -> None:
    volume = _volume()
    raw = extract_slices(volume, 2, 3)[0]
    assert raw.slice_index == 2
    assert raw.image.shape == (6, 8)
    np.testing.assert_array_equal(raw.image, volume.voxels[:, :, 2].T)


def test_extract_slices_accepts_last_slice_as_upper_bound() -> None:
    raws = extract_slices(_volume(16), 3, 15)
    assert len(raws) == 13
    assert raws[-1].slice_index == 15


def test_extract_slices_rejects_out_of_range() -> None:
    with pytest.raises(SliceRangeError):
        extract_slices(_volume(16), 3, 16)
    with pytest.raises(SliceRangeError):
        extract_slices(_volume(16), 5, 5)


def test_clip_and_normalize_constant_and_empty() -> None:
    assert np.all(clip_and_normalize(np.full((4, 4), 7.0)) == 1.0)
    assert np.all(clip_and_normalize(np.zeros((4, 4))) == -1.0)


def test_clip_and_normalize_matches_direct_formula() -> None:
    values = np.arange(1, 1001, dtype=np.float64).reshape(25, 40)
    out = clip_and_normalize(values, 99.5)

    threshold = np.percentile(values[values != 0], 99.5)
    expected = 2.0 * (np.minimum(values, threshold) / threshold) - 1.0
    np.testing.assert_allclose(out, expected, atol=1e-6)
    assert out.max() == pytest.approx(1.0)
    assert out.min() >= -1.0


def test_clip_ignores_zero_background_in_percentile() -> None:
    image = np.zeros((10, 10))
    image[4:6, 4:6] = 50.0
    out = clip_and_normalize(image)
    assert out[5, 5] == pytest.approx(1.0)
    assert out[0, 0] == pytest.approx(-1.0)


def test_pad_and_resize_shapes() -> None:
    assert pad_and_resize(np.ones((240, 240)), 256, 512).shape == (512, 512)
    square = np.random.default_rng(0).random((64, 64))
    np.testing.assert_array_equal(pad_and_resize(square, 64, 64), square)


def test_pad_and_resize_nearest_neighbour_blocks() -> None:
    image = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = pad_and_resize(image, pad_to=4, out=8)

    padded = np.zeros((4, 4))
    padded[1:3, 1:3] = image
    expected = np.zeros((8, 8))
    for r in range(8):
        for c in range(8):
            expected[r, c] = padded[r // 2, c // 2]
    np.testing.assert_array_equal(out, expected)
    assert np.all(out[2:4, 2:4] == 1.0)


def test_pad_and_resize_uses_fill_value() -> None:
    out = pad_and_resize(np.ones((2, 2)), pad_to=4, out=4, fill=-1.0)
    assert out[0, 0] == -1.0
    assert out[1, 1] == 1.0


def test_pad_and_resize_rejects_large_slice() -> None:
    with pytest.raises(SliceGeometryError):
        pad_and_resize(np.ones((300, 200)), 256, 512)


@pytest.mark.parametrize(
    "count,expected",
    [
        (0, SliceClass.non_tumorous),
        (1, SliceClass.excluded),
        (500, SliceClass.excluded),
        (999, SliceClass.excluded),
        (1000, SliceClass.tumorous),
        (1500, SliceClass.tumorous),
        (3000, SliceClass.tumorous),
        (3001, SliceClass.excluded),
        (3500, SliceClass.excluded),
    ],
)
def test_categorize_slice(count: int, expected: SliceClass) -> None:
    assert categorize_slice(count) is expected


def test_scaled_tumor_area() -> None:
    mask = np.zeros((64, 64), dtype=np.uint8)
    mask[10:20, 10:20] = 1
    assert scaled_tumor_area(mask) == 100
    assert scaled_tumor_area(mask, 14.0625) == 1406


def test_dilate_mask_single_pixel_is_city_block_diamond() -> None:
    mask = np.zeros((21, 21), dtype=np.uint8)
    mask[10, 10] = 1
    out = dilate_mask(mask, 5)

    rows, cols = np.mgrid[0:21, 0:21]
    expected = (np.abs(rows - 10) + np.abs(cols - 10) <= 5).astype(np.uint8)
    np.testing.assert_array_equal(out, expected)
    assert out.sum() == 61


def test_dilate_mask_degenerate_cases() -> None:
    assert not dilate_mask(np.zeros((8, 8), dtype=np.uint8), 5).any()
    assert dilate_mask(np.ones((8, 8), dtype=np.uint8), 5).all()


def test_dilate_mask_is_extensive_and_monotone() -> None:
    rng = np.random.default_rng(3)
    small = (rng.random((32, 32)) > 0.97).astype(np.uint8)
    large = small | (rng.random((32, 32)) > 0.97).astype(np.uint8)
    d_small, d_large = dilate_mask(small, 3), dilate_mask(large, 3)
    assert np.all(d_small >= small)
    assert np.all(d_large >= d_small)


def _l1_ball_union(mask: np.ndarray, radius: int) -> np.ndarray:
    rows, cols = np.mgrid[0 : mask.shape[0], 0 : mask.shape[1]]
    out = np.zeros(mask.shape, dtype=bool)
    for r, c in zip(*np.nonzero(mask)):
        out |= np.abs(rows - r) + np.abs(cols - c) <= radius
    return out.astype(np.uint8)


def test_dilate_mask_matches_l1_ball_union_on_random_masks() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(100):
        density = rng.uniform(0.0, 0.05)
        mask = (rng.random((32, 32)) < density).astype(np.uint8)
        radius = int(rng.integers(1, 7))
        np.testing.assert_array_equal(dilate_mask(mask, radius), _l1_ball_union(mask, radius))
