"""Group merging and convex-hull extraction tests."""

import numpy as np
import pytest

import oracles
from cidseg import (GroupSamplingPolicy, InvalidInputError, MergeSchedule,
                    PointCloud, SegmentDiscretization, SpatialIndex, cid_fps,
                    convex_hulls, group_points, merge_groups)
from cidseg.metrics import majority_counts
from conftest import random_cloud, tetrahedron_cloud


def _grouped(cloud, k, rng_seed=0, m=8):
    index = SpatialIndex(cloud)
    disc = SegmentDiscretization(m)
    prop = cid_fps(cloud, index, k, disc, rng_seed=rng_seed)
    return group_points(prop), index, disc


class TestMergeSchedule:
    def test_validation(self):
        with pytest.raises(InvalidInputError):
            MergeSchedule.fixed(-1)
        with pytest.raises(InvalidInputError):
            MergeSchedule.with_threshold(-0.5)
        assert MergeSchedule.fixed(0).iterations == 0
        assert MergeSchedule.with_threshold(0.0).threshold == 0.0


class TestMergeGroups:
    def test_zero_iterations_is_identity(self):
        cloud = random_cloud(0, 30)
        assignment, index, disc = _grouped(cloud, 4)
        merged, filled = merge_groups(assignment, index, disc,
                                      schedule=MergeSchedule.fixed(0))
        assert merged.n_groups == 4
        assert np.array_equal(merged.group_of, assignment.group_of)
        assert filled.history == []

    def test_fixed_count_ledger(self):
        cloud = random_cloud(1, 40)
        assignment, index, disc = _grouped(cloud, 6)
        merged, filled = merge_groups(assignment, index, disc,
                                      schedule=MergeSchedule.fixed(4))
        assert merged.n_groups == 2
        assert len(filled.history) == 4

    def test_rejects_too_many_iterations(self):
        cloud = random_cloud(2, 20)
        assignment, index, disc = _grouped(cloud, 3)
        with pytest.raises(InvalidInputError):
            merge_groups(assignment, index, disc, schedule=MergeSchedule.fixed(3))
        with pytest.raises(InvalidInputError):
            merge_groups(assignment, index, disc, schedule=None)

    def test_coplanar_halves_merge_before_the_wall(self):
        # one plane split in two artificial groups plus a perpendicular wall:
        # the in-plane pair has the smallest group distance
        gx, gy = np.meshgrid(np.linspace(0, 2, 41), np.linspace(0, 1, 21))
        floor = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
        wy, wz = np.meshgrid(np.linspace(0, 1, 21), np.linspace(0.05, 1, 20))
        wall = np.column_stack([np.zeros(wy.size), wy.ravel(), wz.ravel()])
        cloud = PointCloud(np.vstack([floor, wall]))
        index = SpatialIndex(cloud)
        on_floor = cloud.points[:, 2] == 0.0
        left = np.flatnonzero(on_floor & (cloud.points[:, 0] < 1.0))
        right = np.flatnonzero(on_floor & (cloud.points[:, 0] >= 1.0))
        wall_idx = np.arange(floor.shape[0], cloud.n_points)
        group_of = np.empty(cloud.n_points, dtype=np.int64)
        group_of[left], group_of[right], group_of[wall_idx] = 0, 1, 2
        from cidseg import GroupAssignment
        assignment = GroupAssignment(group_of=group_of,
                                     groups=[left, right, wall_idx])
        merged, filled = merge_groups(assignment, index,
                                      SegmentDiscretization(16),
                                      schedule=MergeSchedule.fixed(1))
        assert merged.n_groups == 2
        assert (filled.history[0].group_a, filled.history[0].group_b) == (0, 1)

    @pytest.mark.parametrize("seed,k,iters", [(4, 5, 3), (5, 7, 5), (6, 4, 2)])
    def test_matches_recompute_all_oracle(self, seed, k, iters):
        cloud = random_cloud(seed, 60)
        assignment, index, disc = _grouped(cloud, k, rng_seed=seed)
        policy = GroupSamplingPolicy(8)
        merged, filled = merge_groups(assignment, index, disc, policy,
                                      MergeSchedule.fixed(iters))
        ref_hist, ref_members = oracles.merge_ref(
            [g.tolist() for g in assignment.groups], index, disc, policy,
            iterations=iters)
        got_hist = [(ev.group_a, ev.group_b, ev.value) for ev in filled.history]
        assert got_hist == ref_hist
        ref_groups = [ref_members[g] for g in sorted(ref_members)]
        assert [g.tolist() for g in merged.groups] == ref_groups

    def test_threshold_mode_stops_at_gap(self):
        cloud = random_cloud(7, 50)
        assignment, index, disc = _grouped(cloud, 6)
        policy = GroupSamplingPolicy()
        all_the_way, hist_all = merge_groups(
            assignment, index, disc, policy, MergeSchedule.with_threshold(np.inf))
        assert all_the_way.n_groups == 1
        assert len(hist_all.history) == 5
        # cut at the value of the third merge: exactly the merges below it run
        cut = hist_all.history[2].value
        partial, hist_partial = merge_groups(
            assignment, index, disc, policy,
            MergeSchedule.with_threshold(cut * 0.999999))
        assert all(ev.value <= cut * 0.999999 for ev in hist_partial.history)
        assert len(hist_partial.history) < 5

    def test_merge_never_raises_purity(self):
        # majority of a union never exceeds the sum of the parts' majorities
        cloud = random_cloud(8, 45, labels=True)
        assignment, index, disc = _grouped(cloud, 6)
        before = majority_counts(assignment, cloud.instance_labels)
        merged, filled = merge_groups(assignment, index, disc,
                                      schedule=MergeSchedule.fixed(1))
        after = majority_counts(merged, cloud.instance_labels)
        ev = filled.history[0]
        assert after.sum() <= before.sum()
        # the merged pair specifically obeys the counting bound
        union_majority = after.sum() - (before.sum() - before[ev.group_a]
                                        - before[ev.group_b])
        assert union_majority <= before[ev.group_a] + before[ev.group_b]


class TestConvexHulls:
    def _one_group(self, cloud):
        from cidseg import GroupAssignment
        n = cloud.n_points
        return GroupAssignment(group_of=np.zeros(n, dtype=np.int64),
                               groups=[np.arange(n, dtype=np.int64)])

    def test_tetrahedron(self):
        cloud = tetrahedron_cloud()
        part = convex_hulls(cloud, self._one_group(cloud))[0]
        assert part.degeneracy == "none"
        assert len(part.vertices) == 4
        assert len(part.facets) == 4
        assert sorted(part.vertex_indices.tolist()) == [0, 1, 2, 3]

    def test_facet_normals_point_outward(self):
        cloud = tetrahedron_cloud(extra=30)
        part = convex_hulls(cloud, self._one_group(cloud))[0]
        centroid = part.vertices.mean(axis=0)
        for tri in part.facets:
            a, b, c = part.vertices[tri]
            normal = np.cross(b - a, c - a)
            assert np.dot(normal, (a + b + c) / 3.0 - centroid) > 0

    def test_collinear_group_flagged_linear(self):
        t = np.linspace(0, 1, 10)
        cloud = PointCloud(np.column_stack([t, 2 * t, -t]))
        part = convex_hulls(cloud, self._one_group(cloud))[0]
        assert part.degeneracy == "linear"
        assert len(part.vertices) == 2
        assert sorted(part.vertex_indices.tolist()) == [0, 9]

    def test_coplanar_group_flagged_planar(self):
        rng = np.random.default_rng(9)
        uv = rng.uniform(0, 1, (40, 2))
        plane = uv[:, :1] * np.array([[1.0, 0.5, 0.0]]) \
            + uv[:, 1:] * np.array([[0.0, 1.0, 1.0]])
        cloud = PointCloud(plane)
        part = convex_hulls(cloud, self._one_group(cloud))[0]
        assert part.degeneracy == "planar"
        assert part.facets.shape[1] == 2  # polygon edges, not triangles

    def test_duplicate_point_group_flagged_point(self):
        cloud = PointCloud(np.ones((5, 3)))
        part = convex_hulls(cloud, self._one_group(cloud))[0]
        assert part.degeneracy == "point"
        assert len(part.vertices) == 1

    def test_2d_polygon_hull(self):
        rng = np.random.default_rng(10)
        cloud = PointCloud(rng.uniform(0, 1, (50, 2)))
        part = convex_hulls(cloud, self._one_group(cloud))[0]
        assert part.degeneracy == "none"
        assert part.facets.shape[1] == 2
        ref = oracles.extreme_points(cloud.points)
        assert sorted(part.vertex_indices.tolist()) == ref

    def test_hull_vertices_match_extreme_point_oracle(self):
        rng = np.random.default_rng(11)
        cloud = PointCloud(rng.uniform(0, 1, (60, 3)))
        part = convex_hulls(cloud, self._one_group(cloud))[0]
        ref = oracles.extreme_points(cloud.points)
        assert sorted(part.vertex_indices.tolist()) == ref

    def test_support_and_containment(self):
        rng = np.random.default_rng(12)
        cloud = PointCloud(rng.normal(0, 1, (80, 3)))
        part = convex_hulls(cloud, self._one_group(cloud))[0]
        dirs = rng.normal(0, 1, (64, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        # hull vertices reach every support plane of the full group
        assert oracles.support_gap(cloud.points, part.vertices, dirs) <= 1e-9
        # and every group point sits inside the hull
        diag = np.linalg.norm(cloud.points.max(0) - cloud.points.min(0))
        for p in cloud.points[::7]:
            assert oracles.in_convex_hull(p + 0.0, part.vertices) or \
                oracles.support_gap([p], part.vertices, dirs) <= 1e-7 * diag

    def test_hull_idempotent(self):
        rng = np.random.default_rng(13)
        cloud = PointCloud(rng.uniform(0, 1, (70, 3)))
        part = convex_hulls(cloud, self._one_group(cloud))[0]
        again = PointCloud(part.vertices)
        part2 = convex_hulls(again, self._one_group(again))[0]
        assert len(part2.vertices) == len(part.vertices)
        got = {tuple(v) for v in part2.vertices}
        assert got == {tuple(v) for v in part.vertices}

    def test_multiple_groups_one_part_each(self):
        cloud = random_cloud(14, 50)
        assignment, _, _ = _grouped(cloud, 3)
        parts = convex_hulls(cloud, assignment)
        assert [p.group_id for p in parts] == [0, 1, 2]
