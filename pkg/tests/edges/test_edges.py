import numpy as np
import pytest

from src.apps.edges.domain.entities import EdgeMap
from src.apps.edges.domain.value_objects import EdgeSource
from src.apps.edges.exceptions import EdgeDimensionError, EdgeThresholdError, KernelSizeError
from src.apps.edges.services.canny import canny_edges, gaussian_kernel, gaussian_smooth
from src.apps.edges.services.mirror import mirror_composite


def _step_image(size: int = 32) -> np.ndarray:
    image = np.zeros((size, size))
    image[:, size // 2 :] = 1.0
    return image


def test_uniform_image_has_no_edges() -> None:
    edge_map = canny_edges(np.full((32, 32), 0.4))
    assert edge_map.edge_count() == 0
    assert edge_map.source is EdgeSource.native


def test_vertical_step_gives_single_pixel_line() -> None:
    edges = canny_edges(_step_image()).edges
    per_row = edges.sum(axis=1)
    assert np.all(per_row == 1)

    columns = np.flatnonzero(edges.any(axis=0))
    assert len(columns) == 1
    assert columns[0] in (15, 16)


def test_canny_is_deterministic() -> None:
    image = np.random.default_rng(1).random((48, 48))
    first = canny_edges(image)
    second = canny_edges(image.copy())
    np.testing.assert_array_equal(first.edges, second.edges)


def test_canny_ignores_intensity_offset_and_scale() -> None:
    image = np.random.default_rng(2).integers(0, 256, size=(40, 40)).astype(np.float64)
    base = canny_edges(image).edges
    np.testing.assert_array_equal(canny_edges(image + 50.0).edges, base)
    np.testing.assert_array_equal(canny_edges(image * 2.0).edges, base)


def test_canny_rejects_inverted_thresholds() -> None:
    with pytest.raises(EdgeThresholdError):
        canny_edges(_step_image(), low=80, high=30)


@pytest.mark.parametrize("kernel", [0, 4, -3])
def test_gaussian_kernel_requires_odd_positive_size(kernel: int) -> None:
    with pytest.raises(KernelSizeError):
        gaussian_kernel(kernel)


def test_gaussian_kernel_is_normalised() -> None:
    weights = gaussian_kernel(5, 1.0)
    assert weights.shape == (5, 5)
    assert weights.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(weights, weights[:, ::-1])


def test_gaussian_smoothing_composes_like_a_semigroup() -> None:
    axis = np.arange(64, dtype=np.float64)
    rows, cols = np.meshgrid(axis, axis, indexing="ij")
    image = np.sin(0.3 * rows) * np.cos(0.2 * cols) + 0.5 * np.sin(0.1 * (rows + cols))

    twice = gaussian_smooth(gaussian_smooth(image, kernel=15, sigma=1.0), kernel=15, sigma=1.0)
    once = gaussian_smooth(image, kernel=21, sigma=np.sqrt(2.0))
    interior = (slice(16, -16), slice(16, -16))
    np.testing.assert_allclose(twice[interior], once[interior], atol=1e-4)


def test_mirror_composite_fixed_point_for_symmetric_map() -> None:
    edges = np.zeros((16, 16), dtype=np.uint8)
    edges[3, 2] = edges[3, 13] = 1
    edges[9, 7] = edges[9, 8] = 1
    mask = np.zeros((16, 16), dtype=np.uint8)
    mask[2:12, 10:15] = 1

    out = mirror_composite(EdgeMap(edges), mask)
    np.testing.assert_array_equal(out.edges, edges)
    assert out.source is EdgeSource.mirrored_composite


def test_mirror_composite_moves_single_pixel() -> None:
    edges = np.zeros((10, 10), dtype=np.uint8)
    edges[4, 1] = 1
    mask = np.zeros((10, 10), dtype=np.uint8)
    mask[3:6, 7:10] = 1

    out = mirror_composite(EdgeMap(edges), mask).edges
    assert out[4, 8] == 1
    assert out[4, 1] == 1
    assert out.sum() == 2


def test_mirror_composite_keeps_outside_and_clears_inside() -> None:
    rng = np.random.default_rng(4)
    edges = (rng.random((12, 12)) > 0.7).astype(np.uint8)
    mask = np.zeros((12, 12), dtype=np.uint8)
    mask[:, :6] = 1

    out = mirror_composite(EdgeMap(edges), mask).edges
    np.testing.assert_array_equal(out[:, 6:], edges[:, 6:])
    np.testing.assert_array_equal(out[:, :6], edges[:, ::-1][:, :6])


def test_flip_is_an_involution() -> None:
    edges = (np.random.default_rng(5).random((8, 11)) > 0.5).astype(np.uint8)
    once = EdgeMap(edges).flipped()
    np.testing.assert_array_equal(EdgeMap(once).flipped(), edges)


def test_mirror_composite_shape_mismatch() -> None:
    with pytest.raises(EdgeDimensionError):
        mirror_composite(EdgeMap(np.zeros((8, 8), dtype=np.uint8)), np.zeros((8, 9)))
