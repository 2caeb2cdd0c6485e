"""Formal disks and their containment order.

A formal disk is a pair ``(center, radius)`` with a signed radius. Disk ``a``
contains disk ``b`` iff ``d(center_a, center_b) <= radius_a - radius_b``; the
closed condition is used, so touching boundaries count as contained.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import geometry
from .errors import InvalidArgumentError


class FormalDisk(NamedTuple):
    center: np.ndarray
    radius: float

    def shifted(self, t: float) -> "FormalDisk":
        return FormalDisk(self.center, self.radius + t)

    def reversed(self) -> "FormalDisk":
        return FormalDisk(self.center, -self.radius)


def make_disk(space: geometry.QuasiMetricSpace, center, radius: float) -> FormalDisk:
    center = geometry.check_point(space, center, "center")
    radius = float(radius)
    if not np.isfinite(radius):
        raise InvalidArgumentError("radius must be finite")
    return FormalDisk(center, radius)


def protrusion(space: geometry.QuasiMetricSpace, a: FormalDisk, b: FormalDisk) -> float:
    """``d(center_a, center_b) - radius_a + radius_b``; non-positive iff ``a`` contains ``b``."""
    return geometry.distance(space, a.center, b.center) - (a.radius - b.radius)


def contains(space: geometry.QuasiMetricSpace, a: FormalDisk, b: FormalDisk) -> bool:
    return protrusion(space, a, b) <= 0.0


def lower_cone(space: geometry.QuasiMetricSpace, disks, k: int) -> frozenset[int]:
    """Indices of the disks in ``disks`` that disk ``k`` contains."""
    return frozenset(i for i, d in enumerate(disks) if contains(space, disks[k], d))
