# src/Core/Tools/Synth/skeleton.py

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.Core.Models.errors import ConfigurationError

ROOT = -1

# head, left hand, right hand, left foot, right foot (y grows downwards)
STAR_OFFSETS = ((0.0, -0.9), (-0.8, -0.1), (0.8, -0.1), (-0.5, 0.9), (0.5, 0.9))
JOINT_NAMES = ("head", "left_hand", "right_hand", "left_foot", "right_foot")


@dataclass(frozen=True)
class SkeletonTemplate:
    """K canonical joint offsets at unit scale plus limbs (parent, child).

    Parent ``ROOT`` is the person center, so the limb graph is a tree.
    """

    offsets: np.ndarray  # [K, 2]
    limbs: tuple[tuple[int, int], ...]
    names: tuple[str, ...]

    @property
    def k(self) -> int:
        return len(self.offsets)

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.offsets, axis=1).max())

    @classmethod
    def for_joints(cls, k: int = 5) -> SkeletonTemplate:
        """The 5-joint star for k == 5, otherwise k joints spaced on a circle."""
        if k < 1:
            raise ConfigurationError(f"a skeleton needs at least one joint, got {k}", key="k")
        if k == len(STAR_OFFSETS):
            offsets = np.array(STAR_OFFSETS)
            names = JOINT_NAMES
        else:
            angles = 2 * math.pi * np.arange(k) / k - math.pi / 2
            offsets = 0.9 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
            names = tuple(f"joint_{i}" for i in range(k))
        return cls(offsets=offsets, limbs=tuple((ROOT, i) for i in range(k)), names=names)

    def place(self, center: np.ndarray, scale: float, rotation: float) -> np.ndarray:
        """[K, 2] joint coordinates of a person at ``center``."""
        c, s = math.cos(rotation), math.sin(rotation)
        rot = np.array([[c, -s], [s, c]])
        return np.asarray(center, dtype=np.float64) + scale * self.offsets @ rot.T
