"""Run configuration and worker-count policy."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import InvalidInputError


def worker_count() -> int:
    """Worker cap for data-parallel kernels: min(cpu count, CID_THREADS)."""
    n = os.cpu_count() or 1
    env = os.environ.get("CID_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise InvalidInputError(f"CID_THREADS must be an integer, got {env!r}")
        if cap < 1:
            raise InvalidInputError("CID_THREADS must be >= 1")
        n = min(n, cap)
    return n


@dataclass
class RunConfig:
    """Pipeline parameters; defaults follow the reference experiment setup."""

    subsample_size: int = 20000
    k_seeds: int = 100
    m_discretization: int = 100
    group_cap: int = 32
    merge_mode: str | None = None  # "fixed" | "threshold" | None (no merging)
    merge_iters: int | None = None
    merge_thresh: float | None = None
    rng_seed: int = 0
    iou_thresholds: tuple = (0.25, 0.5, 0.75)

    def __post_init__(self):
        for name in ("subsample_size", "k_seeds", "m_discretization", "group_cap"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {v}")
            setattr(self, name, int(v))
        if self.m_discretization < 2:
            raise InvalidInputError("m_discretization must be >= 2")
        if self.merge_mode not in (None, "fixed", "threshold"):
            raise InvalidInputError(f"unknown merge mode {self.merge_mode!r}")
        if self.merge_mode == "fixed":
            if self.merge_iters is None or self.merge_iters < 0:
                raise InvalidInputError("fixed merge mode requires merge_iters >= 0")
        if self.merge_mode == "threshold":
            if self.merge_thresh is None or self.merge_thresh < 0:
                raise InvalidInputError("threshold merge mode requires merge_thresh >= 0")
        self.rng_seed = int(self.rng_seed)
        ts = tuple(float(t) for t in self.iou_thresholds)
        if not ts or any(not (0.0 < t < 1.0) for t in ts):
            raise InvalidInputError("iou thresholds must lie in (0, 1)")
        self.iou_thresholds = ts

    def to_json_dict(self) -> dict:
        return {
            "subsample_size": self.subsample_size,
            "k_seeds": self.k_seeds,
            "m_discretization": self.m_discretization,
            "group_cap": self.group_cap,
            "merge_mode": self.merge_mode,
            "merge_iters": self.merge_iters,
            "merge_thresh": self.merge_thresh,
            "rng_seed": self.rng_seed,
            "iou_thresholds": list(self.iou_thresholds),
        }
