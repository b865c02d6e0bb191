"""Synthetic-scene generator tests."""

import numpy as np
import pytest

from cidseg import InvalidInputError, synth_scene
from cidseg.synth import SCENE_NAMES, SEM_BOX, SEM_CEILING, SEM_FLOOR, SEM_WALL


class TestLShape:
    def test_geometry_and_labels(self):
        cloud = synth_scene("l_shape", 100.0)
        assert cloud.n_points == 201  # shared corner kept once
        on_x = cloud.points[:, 1] == 0.0
        on_y = cloud.points[:, 0] == 0.0
        assert np.all(on_x | on_y)
        assert np.all(cloud.points[:, 2] == 0.0)
        assert set(np.unique(cloud.instance_labels)) == {0, 1}

    def test_no_duplicate_points(self):
        cloud = synth_scene("l_shape", 50.0)
        assert len(np.unique(cloud.points, axis=0)) == cloud.n_points


class TestFourArcs:
    def test_four_instances_on_circles(self):
        cloud = synth_scene("four_arcs", 40.0)
        assert set(np.unique(cloud.instance_labels)) == {0, 1, 2, 3}
        for i in range(4):
            arc = cloud.points[cloud.instance_labels == i]
            center = np.array([0.5 + i, 0.0, 0.0])
            radii = np.linalg.norm(arc - center, axis=1)
            assert np.allclose(radii, 0.5, atol=1e-12)
            sign = 1.0 if i % 2 == 0 else -1.0
            interior = arc[np.abs(arc[:, 1]) > 1e-9]
            assert np.all(np.sign(interior[:, 1]) == sign)

    def test_arcs_join_without_duplicates(self):
        cloud = synth_scene("four_arcs", 40.0)
        assert len(np.unique(cloud.points, axis=0)) == cloud.n_points
        # consecutive arcs share their junction x = 1, 2, 3
        for x in (1.0, 2.0, 3.0):
            at = np.isclose(cloud.points[:, 0], x, atol=1e-9) \
                & np.isclose(cloud.points[:, 1], 0.0, atol=1e-9)
            assert at.sum() == 1

    def test_point_count_tracks_arc_length(self):
        density = 40.0
        cloud = synth_scene("four_arcs", density)
        analytic = 4 * np.pi * 0.5 * density
        assert abs(cloud.n_points - analytic) / analytic < 0.02


class TestTwoPlanes:
    def test_count_within_one_percent_of_area(self):
        density = 500.0
        cloud = synth_scene("two_planes", density)
        assert abs(cloud.n_points - 2 * density) / (2 * density) < 0.01
        assert set(np.unique(cloud.instance_labels)) == {0, 1}

    def test_planes_are_perpendicular(self):
        cloud = synth_scene("two_planes", 200.0)
        a = cloud.points[cloud.instance_labels == 0]
        b = cloud.points[cloud.instance_labels == 1]
        assert np.all(a[:, 2] == 0.0)
        assert np.all(b[:, 1] == 0.0)


class TestBoxRoom:
    def test_instances_and_semantics(self):
        cloud = synth_scene("box_room", 60.0)
        assert set(np.unique(cloud.instance_labels)) == set(range(7))
        assert set(np.unique(cloud.semantic_labels)) == \
            {SEM_FLOOR, SEM_WALL, SEM_CEILING, SEM_BOX}
        walls = np.unique(cloud.instance_labels[cloud.semantic_labels == SEM_WALL])
        assert len(walls) == 4

    def test_extents(self):
        cloud = synth_scene("box_room", 60.0)
        lo, hi = cloud.points.min(axis=0), cloud.points.max(axis=0)
        assert np.all(lo >= -1e-9) and np.all(lo <= 0.15)
        assert np.all(np.abs(hi - [4.0, 3.0, 2.5]) <= 0.15)

    def test_box_sits_on_floor_with_overhang(self):
        cloud = synth_scene("box_room", 150.0)
        box = cloud.points[cloud.semantic_labels == SEM_BOX]
        top = box[box[:, 2] == box[:, 2].max()]
        sides = box[box[:, 2] < box[:, 2].max()]
        assert top[:, 2].max() <= 0.2
        # overhang: the top face extends beyond the base footprint
        assert top[:, 0].min() < sides[:, 0].min()
        assert top[:, 0].max() > sides[:, 0].max()

    def test_holes_carve_floor_and_ceiling(self):
        dense = synth_scene("box_room", 200.0)
        floor = dense.points[dense.semantic_labels == SEM_FLOOR]
        full_face = 4.0 * 3.0 * 200.0
        assert len(floor) < 0.995 * full_face  # strictly below the un-carved count
        ceil = dense.points[dense.semantic_labels == SEM_CEILING]
        assert len(ceil) < 0.995 * full_face


class TestSceneApi:
    @pytest.mark.parametrize("name", SCENE_NAMES)
    def test_deterministic_per_seed(self, name):
        a = synth_scene(name, 45.0, rng_seed=3)
        b = synth_scene(name, 45.0, rng_seed=3)
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.instance_labels, b.instance_labels)

    def test_jittered_scenes_vary_with_seed(self):
        a = synth_scene("box_room", 45.0, rng_seed=0)
        b = synth_scene("box_room", 45.0, rng_seed=1)
        assert not np.array_equal(a.points[:min(a.n_points, b.n_points)],
                                  b.points[:min(a.n_points, b.n_points)])

    def test_rejects_unknown_scene_and_bad_density(self):
        with pytest.raises(InvalidInputError):
            synth_scene("sphere", 10.0)
        with pytest.raises(InvalidInputError):
            synth_scene("l_shape", 0.0)
