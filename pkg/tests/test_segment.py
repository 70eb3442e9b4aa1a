import numpy as np
import pytest
from hypothesis import given, strategies as st

from rgbdsize.densify import MetricImage
from rgbdsize.segment import (
    DegenerateInput,
    DepthSample,
    DetectionBox,
    EmptyRegion,
    kmeans_depth,
    segment_bbox,
    segment_frame,
    select_foreground,
)

from oracles import kmeans_optimal


def metric_from_depth(z: np.ndarray) -> MetricImage:
    """Lift a depth map to a metric image with X = Y = depth/10 fillers."""
    h, w = z.shape
    data = np.zeros((h, w, 3))
    filled = z > 0
    data[..., 2] = z
    data[..., 0] = np.where(filled, z / 10.0, 0.0)
    data[..., 1] = np.where(filled, z / 10.0, 0.0)
    return MetricImage(data)


class TestKmeans:
    def test_three_cluster_fixture(self):
        depths = [0.0, 0.0, 0.0, 0.5, 0.5, 1.3, 1.3]
        model = kmeans_depth(depths, k=3)
        assert model.centers == pytest.approx((0.0, 0.5, 1.3), abs=1e-15)
        want_sse, _ = kmeans_optimal(depths, 3)
        assert model.sse == pytest.approx(want_sse, abs=1e-9)
        np.testing.assert_array_equal(model.assignment, [0, 0, 0, 1, 1, 2, 2])

    def test_two_cluster_fixture(self):
        # the desk scene depth levels: table ~0.5 m, floor ~1.3 m
        depths = [0.50, 0.52, 1.28, 1.30]
        model = kmeans_depth(depths, k=2)
        assert model.centers == pytest.approx((0.51, 1.29), rel=1e-12)
        want_sse, _ = kmeans_optimal(depths, 2)
        assert model.sse == pytest.approx(want_sse, rel=1e-9)

    def test_seeded_values_keep_their_centers(self):
        depths = [0.7] * 8 + [0.0, 1.5]
        model = kmeans_depth(depths, k=3)
        assert model.centers == pytest.approx((0.0, 0.7, 1.5), abs=1e-15)
        assert model.assignment[-2] == 0
        assert model.assignment[-1] == 2
        assert set(model.assignment[:8]) == {1}

    @pytest.mark.parametrize("depths,k", [
        ([0.0, 0.0, 0.4, 0.45, 1.2, 1.25, 1.3], 3),
        ([0.2, 0.3, 0.9, 1.0, 1.1], 2),
        ([0.0, 0.1, 0.8, 0.85, 0.9, 2.0, 2.1, 2.2, 2.3], 3),
        ([0.05, 0.5, 0.55, 0.6, 3.0], 2),
    ])
    def test_reaches_global_optimum_on_separated_fixtures(self, depths, k):
        model = kmeans_depth(depths, k=k)
        want_sse, want_centers = kmeans_optimal(depths, k)
        assert model.sse == pytest.approx(want_sse, abs=1e-9)
        assert model.centers == pytest.approx(tuple(want_centers), rel=1e-9)

    def test_accepts_depth_samples(self):
        samples = [DepthSample((x, 0), d) for x, d in enumerate([0.0, 0.5, 1.3])]
        model = kmeans_depth(samples, k=3)
        assert model.centers == pytest.approx((0.0, 0.5, 1.3))

    def test_degenerate_input(self):
        with pytest.raises(DegenerateInput):
            kmeans_depth([1.3] * 10, k=2)
        with pytest.raises(DegenerateInput):
            kmeans_depth([0.0, 0.5, 0.5], k=3)

    def test_sse_history_monotone_nonincreasing(self, rng):
        for _ in range(20):
            depths = np.abs(rng.normal(1.0, 0.6, size=rng.integers(10, 200)))
            if np.unique(depths).size < 3:
                continue
            model = kmeans_depth(depths, k=3 if rng.random() < 0.5 else 2)
            hist = np.asarray(model.sse_history)
            assert np.all(np.diff(hist) <= 1e-9 * max(1.0, hist[0]))

    def test_deterministic(self, rng):
        depths = np.abs(rng.normal(1.0, 0.5, 500))
        a = kmeans_depth(depths, k=2)
        b = kmeans_depth(depths, k=2)
        assert a.centers == b.centers
        assert a.sse_history == b.sse_history
        np.testing.assert_array_equal(a.assignment, b.assignment)

    @given(st.lists(st.floats(0.0, 5.0), min_size=8, max_size=40))
    def test_postconditions(self, depths):
        if np.unique(depths).size < 2:
            return
        model = kmeans_depth(depths, k=2)
        centers = np.asarray(model.centers)
        assert np.all(np.diff(centers) > 0)
        # every sample sits with its nearest center, ties to lower index
        d = np.abs(np.asarray(depths)[:, None] - centers[None, :])
        np.testing.assert_array_equal(model.assignment, np.argmin(d, axis=1))

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            kmeans_depth([0.1, 0.2, 0.3, 0.4], k=4)


class TestSelectForeground:
    def test_second_cluster_with_zero_depth_cluster(self):
        model = kmeans_depth([0.0, 0.0, 0.5, 0.5, 1.3, 1.3], k=3)
        assert select_foreground(model) == 1

    def test_nearest_cluster_without_zeros(self):
        model = kmeans_depth([0.50, 0.52, 1.28, 1.30], k=2)
        assert select_foreground(model) == 0


class TestSegmentFrame:
    def test_two_plane_scene_no_dropout(self):
        z = np.full((40, 60), 1.3)
        z[10:30, 20:40] = 0.5
        mask = segment_frame(metric_from_depth(z))
        np.testing.assert_array_equal(mask.mask, z == 0.5)
        assert mask.foreground_count == 20 * 20

    def test_zero_pixels_use_three_clusters(self):
        z = np.full((40, 60), 1.3)
        z[10:30, 20:40] = 0.5
        z[::7, ::11] = 0.0  # dead returns
        mask = segment_frame(metric_from_depth(z))
        np.testing.assert_array_equal(mask.mask, z == 0.5)

    def test_foreground_never_contains_zero_depth(self, rng):
        z = np.abs(rng.normal(1.0, 0.5, (30, 30)))
        z[rng.random((30, 30)) < 0.2] = 0.0
        z[5:15, 5:15] = 0.4
        mask = segment_frame(metric_from_depth(z))
        assert np.all(z[mask.mask] > 0)

    def test_uniform_depth_degenerate(self):
        z = np.full((10, 10), 1.3)
        with pytest.raises(DegenerateInput):
            segment_frame(metric_from_depth(z))


class TestSegmentBbox:
    def make_scene(self):
        z = np.full((50, 80), 1.3)
        z[10:25, 10:30] = 0.5  # object A
        z[30:45, 50:75] = 0.9  # object B
        return metric_from_depth(z), z

    def test_full_frame_box_equals_segment_frame(self):
        metric, _ = self.make_scene()
        box = DetectionBox("all", 1.0, 0.0, 0.0, 80.0, 50.0)
        frame_mask = segment_frame(metric)
        bbox_mask = segment_bbox(metric, box)
        assert (bbox_mask.x0, bbox_mask.y0) == (0, 0)
        np.testing.assert_array_equal(bbox_mask.mask, frame_mask.mask)

    def test_box_isolates_one_object(self):
        metric, z = self.make_scene()
        box = DetectionBox("A", 0.9, 5.0, 5.0, 35.0, 28.0)
        mask = segment_bbox(metric, box)
        full = np.zeros_like(z, dtype=bool)
        full[mask.y0:mask.y0 + mask.mask.shape[0],
             mask.x0:mask.x0 + mask.mask.shape[1]] = mask.mask
        np.testing.assert_array_equal(full, z == 0.5)

    def test_box_clipped_to_image(self):
        metric, _ = self.make_scene()
        box = DetectionBox("edge", 1.0, -10.0, -10.0, 15.0, 15.0)
        mask = segment_bbox(metric, box)
        assert (mask.x0, mask.y0) == (0, 0)
        assert mask.mask.shape == (15, 15)

    def test_box_outside_image(self):
        metric, _ = self.make_scene()
        with pytest.raises(EmptyRegion):
            segment_bbox(metric, DetectionBox("off", 1.0, 200.0, 10.0, 220.0, 30.0))
        with pytest.raises(EmptyRegion):
            segment_bbox(metric, DetectionBox("neg", 1.0, -30.0, -30.0, -5.0, -5.0))

    def test_degenerate_region(self):
        metric, _ = self.make_scene()
        box = DetectionBox("flat", 1.0, 60.0, 5.0, 75.0, 25.0)  # background only
        with pytest.raises(DegenerateInput):
            segment_bbox(metric, box)


class TestDetectionBox:
    def test_invariants(self):
        with pytest.raises(ValueError):
            DetectionBox("bad", 1.5, 0.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            DetectionBox("bad", 0.5, 5.0, 0.0, 1.0, 1.0)

    def test_depth_sample_invariant(self):
        with pytest.raises(ValueError):
            DepthSample((0, 0), -0.1)
