"""Shared builders for the test suite."""

import numpy as np
import pytest

from cidseg import PointCloud


def random_cloud(seed, n, dim=3, spread=1.0, labels=False):
    """Uniform blob cloud; optional arbitrary labels for harness tests."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-spread, spread, (n, dim))
    if not labels:
        return PointCloud(pts)
    sem = rng.integers(0, 3, n).astype(np.int64)
    inst = rng.integers(0, 5, n).astype(np.int64)
    return PointCloud(pts, semantic_labels=sem, instance_labels=inst)


def tetrahedron_cloud(extra=0):
    """Regular-ish tetrahedron, optionally with interior points appended."""
    base = np.array([[0.0, 0.0, 0.0],
                     [1.0, 0.0, 0.0],
                     [0.0, 1.0, 0.0],
                     [0.0, 0.0, 1.0]])
    if extra:
        rng = np.random.default_rng(7)
        w = rng.dirichlet(np.ones(4), extra)
        base = np.vstack([base, w @ base])
    return PointCloud(base)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
