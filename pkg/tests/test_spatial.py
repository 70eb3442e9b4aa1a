import numpy as np
import pytest

from rgbdsize.camera import PixelCoord
from rgbdsize.spatial import IndexedPoint, build, nearest, nearest_per_quadrant

from oracles import brute_nearest, brute_quadrant


def make_tree(px, py, pids=None):
    return build(np.column_stack((px, py)), payload_ids=pids)


class TestBuild:
    def test_empty(self):
        tree = build([])
        assert tree.size == 0
        assert tree.nearest(PixelCoord(1.0, 2.0)) is None
        qn = tree.nearest_per_quadrant(PixelCoord(0.0, 0.0))
        assert qn.exact_hit is None
        assert qn.quadrants == (None,) * 4

    def test_single_point(self):
        tree = build([IndexedPoint(PixelCoord(3.0, 4.0), 0)])
        assert tree.size == 1
        hit, dist = tree.nearest(PixelCoord(0.0, 0.0))
        assert hit.payload_id == 0
        assert dist == pytest.approx(5.0)

    def test_all_points_reachable(self, rng):
        n = 1000
        px = rng.uniform(0, 100, n)
        py = rng.uniform(0, 100, n)
        tree = make_tree(px, py)
        slots = list(tree.traverse())
        assert len(slots) == n
        assert sorted(slots) == list(range(n))

    def test_deterministic(self, rng):
        px = rng.uniform(0, 50, 500)
        py = rng.uniform(0, 50, 500)
        a = make_tree(px, py)
        b = make_tree(px, py)
        for attr in ("left", "right", "axis", "payload_ids"):
            np.testing.assert_array_equal(getattr(a, attr), getattr(b, attr))
        assert a.root == b.root

    def test_immutable_after_build(self):
        tree = build([IndexedPoint(PixelCoord(1.0, 1.0), 0)])
        with pytest.raises(ValueError):
            tree.xs[0] = 5.0


class TestNearest:
    def test_exact_hit_distance_zero(self):
        tree = build([IndexedPoint(PixelCoord(7.0, 9.0), 4)])
        hit, dist = tree.nearest(PixelCoord(7.0, 9.0))
        assert hit.payload_id == 4
        assert dist == 0.0

    def test_matches_brute_force(self, rng):
        n = 1000
        px = rng.uniform(0, 200, n)
        py = rng.uniform(0, 150, n)
        pids = np.arange(n, dtype=np.int64)
        tree = make_tree(px, py)
        for _ in range(100):
            q = PixelCoord(float(rng.uniform(-10, 210)), float(rng.uniform(-10, 160)))
            hit, dist = tree.nearest(q)
            want_pid, want_d2 = brute_nearest(px, py, pids, q.x, q.y)
            assert hit.payload_id == want_pid
            assert dist * dist == pytest.approx(want_d2, rel=1e-12)

    def test_tie_break_lowest_payload(self, rng):
        # integer lattice with duplicated positions forces exact ties
        base = np.array([(i % 7, i // 7) for i in range(49)], dtype=np.float64)
        px = np.concatenate([base[:, 0], base[:, 0]])
        py = np.concatenate([base[:, 1], base[:, 1]])
        pids = np.arange(98, dtype=np.int64)
        tree = make_tree(px, py)
        for _ in range(50):
            q = PixelCoord(
                float(rng.integers(0, 7)) + 0.5, float(rng.integers(0, 7)) + 0.5
            )
            hit, _ = tree.nearest(q)
            want_pid, _ = brute_nearest(px, py, pids, q.x, q.y)
            assert hit.payload_id == want_pid

    def test_module_level_wrapper(self):
        tree = build([IndexedPoint(PixelCoord(1.0, 1.0), 0)])
        assert nearest(tree, PixelCoord(0.0, 0.0))[0].payload_id == 0


class TestQuadrants:
    def test_symmetric_cross(self):
        pts = [
            IndexedPoint(PixelCoord(1.0, 1.0), 0),
            IndexedPoint(PixelCoord(-1.0, 1.0), 1),
            IndexedPoint(PixelCoord(-1.0, -1.0), 2),
            IndexedPoint(PixelCoord(1.0, -1.0), 3),
        ]
        qn = build(pts).nearest_per_quadrant(PixelCoord(0.0, 0.0))
        assert qn.exact_hit is None
        for quad, entry in enumerate(qn.quadrants):
            point, dist = entry
            assert point.payload_id == quad
            assert dist == pytest.approx(np.sqrt(2.0))

    def test_boundary_convention(self):
        # points exactly on the axes fall in exactly one quadrant each:
        # Q0 takes dx>0, dy=0; Q1 takes dx=0, dy>0; Q2 dx<0, dy=0; Q3 dx=0, dy<0
        pts = [
            IndexedPoint(PixelCoord(1.0, 0.0), 10),
            IndexedPoint(PixelCoord(0.0, 1.0), 11),
            IndexedPoint(PixelCoord(-1.0, 0.0), 12),
            IndexedPoint(PixelCoord(0.0, -1.0), 13),
        ]
        qn = build(pts).nearest_per_quadrant(PixelCoord(0.0, 0.0))
        got = [e[0].payload_id for e in qn.quadrants]
        assert got == [10, 11, 12, 13]

    def test_all_points_in_one_quadrant(self):
        pts = [IndexedPoint(PixelCoord(float(i + 1), float(i + 2)), i) for i in range(5)]
        qn = build(pts).nearest_per_quadrant(PixelCoord(0.0, 0.0))
        assert qn.quadrants[0] is not None
        assert qn.quadrants[1] is None
        assert qn.quadrants[2] is None
        assert qn.quadrants[3] is None

    def test_exact_hit_short_circuit(self):
        pts = [
            IndexedPoint(PixelCoord(5.0, 5.0), 0),
            IndexedPoint(PixelCoord(6.0, 6.0), 1),
        ]
        qn = build(pts).nearest_per_quadrant(PixelCoord(5.0, 5.0))
        assert qn.exact_hit is not None
        assert qn.exact_hit.payload_id == 0
        assert qn.quadrants == (None,) * 4

    def test_matches_filtered_brute_force(self, rng):
        n = 500
        px = rng.uniform(0, 100, n)
        py = rng.uniform(0, 100, n)
        pids = np.arange(n, dtype=np.int64)
        tree = make_tree(px, py)
        for _ in range(50):
            q = PixelCoord(float(rng.uniform(0, 100)), float(rng.uniform(0, 100)))
            qn = tree.nearest_per_quadrant(q)
            for quad in range(4):
                want = brute_quadrant(px, py, pids, q.x, q.y, quad)
                got = qn.quadrants[quad]
                if want is None:
                    assert got is None
                else:
                    assert got[0].payload_id == want[0]
                    assert got[1] ** 2 == pytest.approx(want[1], rel=1e-12)

    def test_quadrant_ties_and_lattice(self, rng):
        # lattice queries sitting between points exercise boundary + ties
        px, py = np.meshgrid(np.arange(8.0), np.arange(8.0))
        px, py = px.ravel(), py.ravel()
        pids = np.arange(px.size, dtype=np.int64)
        tree = make_tree(px, py)
        queries = [(3.5, 3.5), (3.0, 3.0), (0.0, 0.0), (7.0, 7.0), (3.5, 3.0)]
        for qx, qy in queries:
            qn = tree.nearest_per_quadrant(PixelCoord(qx, qy))
            if qn.exact_hit is not None:
                want_pid, want_d2 = brute_nearest(px, py, pids, qx, qy)
                assert want_d2 == 0.0
                assert qn.exact_hit.payload_id == want_pid
                continue
            for quad in range(4):
                want = brute_quadrant(px, py, pids, qx, qy, quad)
                got = qn.quadrants[quad]
                if want is None:
                    assert got is None
                else:
                    assert got[0].payload_id == want[0]

    def test_module_level_wrapper(self):
        tree = build([IndexedPoint(PixelCoord(1.0, 1.0), 0)])
        qn = nearest_per_quadrant(tree, PixelCoord(0.0, 0.0))
        assert qn.quadrants[0][0].payload_id == 0
