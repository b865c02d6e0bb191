"""Deterministic synthetic scenes with ground-truth labels.

Curve scenes (l_shape, four_arcs) are sampled on even arc-length grids and
take density in points per unit length; surface scenes (two_planes,
box_room) draw stratified-jittered points per face and take density in
points per unit area. Per-part counts are round(measure * density), so
totals are within rounding of the analytic value.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .geometry import PointCloud

SCENE_NAMES = ("l_shape", "four_arcs", "two_planes", "box_room")


def _l_shape(density: float) -> PointCloud:
    """Two unit arms meeting at the origin along +x and +y (z = 0)."""
    n = max(1, round(density))
    t = np.arange(n + 1) / n
    arm_x = np.column_stack([t, np.zeros(n + 1), np.zeros(n + 1)])
    arm_y = np.column_stack([np.zeros(n), t[1:], np.zeros(n)])  # origin kept once
    pts = np.vstack([arm_x, arm_y])
    inst = np.concatenate([np.zeros(n + 1, np.int64), np.ones(n, np.int64)])
    return PointCloud(pts, semantic_labels=inst.copy(), instance_labels=inst)


def _four_arcs(density: float) -> PointCloud:
    """Four semicircles of radius 0.5 alternating up/down along the x-axis.

    Consecutive arcs share endpoints, forming a continuous wave whose
    alternating convexity produces triangle-inequality violations of the
    pair distance.
    """
    r = 0.5
    arc_len = np.pi * r
    n = max(2, round(density * arc_len))
    pts, inst = [], []
    for i in range(4):
        cx = 0.5 + i
        sign = 1.0 if i % 2 == 0 else -1.0
        j0 = 1 if i > 0 else 0  # shared endpoint kept once
        theta = np.pi - np.arange(j0, n + 1) * (np.pi / n)  # left-to-right
        x = cx + r * np.cos(theta)
        y = sign * r * np.sin(theta)
        pts.append(np.column_stack([x, y, np.zeros_like(x)]))
        inst.append(np.full(len(x), i, dtype=np.int64))
    pts = np.vstack(pts)
    inst = np.concatenate(inst)
    return PointCloud(pts, semantic_labels=inst.copy(), instance_labels=inst)


def _rect_patch(rng, count, origin, edge_u, edge_v):
    """count stratified-jittered points on the parallelogram patch.

    One point uniform inside each cell of a near-square grid, surplus cells
    dropped at random. Keeps coverage gaps bounded by ~one cell so distances
    measured along a face stay well below cross-face distances.
    """
    edge_u = np.asarray(edge_u, dtype=np.float64)
    edge_v = np.asarray(edge_v, dtype=np.float64)
    lu, lv = np.linalg.norm(edge_u), np.linalg.norm(edge_v)
    nu = max(1, round(np.sqrt(count * lu / lv)))
    nv = max(1, -(-count // nu))
    iu, iv = np.divmod(rng.permutation(nu * nv)[:count], nv)
    u = (iu + rng.uniform(0.0, 1.0, count)) / nu
    v = (iv + rng.uniform(0.0, 1.0, count)) / nv
    return (np.asarray(origin)[None, :]
            + u[:, None] * edge_u[None, :]
            + v[:, None] * edge_v[None, :])


def _two_planes(density: float, rng) -> PointCloud:
    """Two perpendicular unit squares sharing an edge."""
    n = max(1, round(density))  # unit area each
    a = _rect_patch(rng, n, (0, 0, 0), (1, 0, 0), (0, 1, 0))
    b = _rect_patch(rng, n, (0, 0, 0), (1, 0, 0), (0, 0, 1))
    pts = np.vstack([a, b])
    inst = np.concatenate([np.zeros(n, np.int64), np.ones(n, np.int64)])
    return PointCloud(pts, semantic_labels=inst.copy(), instance_labels=inst)


# box_room semantic categories
SEM_FLOOR, SEM_WALL, SEM_CEILING, SEM_BOX = 0, 1, 2, 3

_ROOM_W, _ROOM_D, _ROOM_H = 4.0, 3.0, 2.5
# table-like box: the top overhangs the base, so the rim keeps the top
# surface a fixed hop away from the floor regardless of table height
_TOP_MIN, _TOP_SIZE = np.array([1.45, 1.15]), np.array([1.1, 0.7])
_BASE_MIN, _BASE_SIZE = np.array([1.55, 1.25]), np.array([0.9, 0.5])
_TABLE_H = 0.15
# sensor-shadow holes carved out of the floor and ceiling (center, jittered)
_FLOOR_HOLES = ((0.9, 1.0), (3.1, 0.9), (3.0, 2.15))
_CEIL_HOLES = ((1.3, 2.1), (2.8, 0.9))
_HOLE_R = 0.14
_HOLE_JITTER = 0.12


def _carve_holes(pts, centers, rng):
    """Boolean keep-mask removing points inside jittered circular holes."""
    keep = np.ones(len(pts), dtype=bool)
    for cx, cy in centers:
        cx += rng.uniform(-_HOLE_JITTER, _HOLE_JITTER)
        cy += rng.uniform(-_HOLE_JITTER, _HOLE_JITTER)
        keep &= (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2 >= _HOLE_R ** 2
    return keep


def _box_room(density: float, rng) -> PointCloud:
    """Room shell (floor, 4 walls, ceiling) plus a table-like box.

    7 instances, 4 semantic categories. The table top is low and overhangs
    its base, and floor/ceiling carry a few sensor-shadow holes, so sparse
    seeding exhausts the holes before it discovers the table while denser
    seeding finds both.
    """
    w, d, h = _ROOM_W, _ROOM_D, _ROOM_H
    (tx, ty), (tw, td) = _TOP_MIN, _TOP_SIZE
    (bx, by), (bw, bd) = _BASE_MIN, _BASE_SIZE
    tz = _TABLE_H
    faces = [
        # (origin, edge_u, edge_v, semantic, instance, hole centers)
        ((0, 0, 0), (w, 0, 0), (0, d, 0), SEM_FLOOR, 0, _FLOOR_HOLES),
        ((0, 0, 0), (w, 0, 0), (0, 0, h), SEM_WALL, 1, ()),
        ((0, d, 0), (w, 0, 0), (0, 0, h), SEM_WALL, 2, ()),
        ((0, 0, 0), (0, d, 0), (0, 0, h), SEM_WALL, 3, ()),
        ((w, 0, 0), (0, d, 0), (0, 0, h), SEM_WALL, 4, ()),
        ((0, 0, h), (w, 0, 0), (0, d, 0), SEM_CEILING, 5, _CEIL_HOLES),
        # table: overhanging top plus four base sides; the resting face and
        # the occluded underside of the overhang are not sampled
        ((tx, ty, tz), (tw, 0, 0), (0, td, 0), SEM_BOX, 6, ()),
        ((bx, by, 0), (bw, 0, 0), (0, 0, tz), SEM_BOX, 6, ()),
        ((bx, by + bd, 0), (bw, 0, 0), (0, 0, tz), SEM_BOX, 6, ()),
        ((bx, by, 0), (0, bd, 0), (0, 0, tz), SEM_BOX, 6, ()),
        ((bx + bw, by, 0), (0, bd, 0), (0, 0, tz), SEM_BOX, 6, ()),
    ]
    pts, sem, inst = [], [], []
    for origin, eu, ev, s, i, holes in faces:
        area = np.linalg.norm(np.cross(eu, ev))
        count = max(1, round(area * density))
        p = _rect_patch(rng, count, origin, eu, ev)
        if holes:
            p = p[_carve_holes(p, holes, rng)]
        pts.append(p)
        sem.append(np.full(len(p), s, dtype=np.int64))
        inst.append(np.full(len(p), i, dtype=np.int64))
    return PointCloud(np.vstack(pts), semantic_labels=np.concatenate(sem),
                      instance_labels=np.concatenate(inst))


def synth_scene(descriptor: str, density: float, rng_seed: int = 0) -> PointCloud:
    """Build a named synthetic scene with per-point ground-truth labels."""
    if density <= 0:
        raise InvalidInputError("density must be positive")
    rng = np.random.default_rng(rng_seed)
    if descriptor == "l_shape":
        return _l_shape(density)
    if descriptor == "four_arcs":
        return _four_arcs(density)
    if descriptor == "two_planes":
        return _two_planes(density, rng)
    if descriptor == "box_room":
        return _box_room(density, rng)
    raise InvalidInputError(
        f"unknown scene descriptor {descriptor!r}; expected one of {SCENE_NAMES}")
