# src/Core/Tools/Synth/scene.py
# Deterministic multi-person scenes. A scene is a pure function of (seed, config):
# every random draw comes from default_rng([seed, attempt]).

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.Core.Models.configs import RunConfig
from src.Core.Models.errors import SceneGenerationError
from src.Core.Tools.Synth.render import render_image
from src.Core.Tools.Synth.skeleton import SkeletonTemplate
from src.Core.Tools.Tensor.tensor import Tensor
from Utils.Logger.logfire import logfire

PLACEMENT_TRIES = 100
SUBSEED_ATTEMPTS = 2
MIN_CENTER_GAP = 8.0
MIN_OVERLAP = 0.3
SCALE_RANGE = (10.0, 16.0)
MAX_ROTATION = math.pi / 6
OVERLAP_SHIFT = 0.8


class SceneConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_max: Annotated[int, Field(ge=1, le=6, description="Maximum persons per scene.")] = 4
    height: Annotated[int, Field(ge=4, description="Image height in pixels.")] = 64
    width: Annotated[int, Field(ge=4, description="Image width in pixels.")] = 64
    overlap_prob: Annotated[float, Field(ge=0, le=1, description="Chance of forcing an overlapping pair.")] = 0.5
    k: Annotated[int, Field(ge=1, description="Joints per person.")] = 5

    @classmethod
    def from_run(cls, config: RunConfig) -> SceneConfig:
        return cls(
            n_max=config.data.n_max,
            height=config.model.height,
            width=config.model.width,
            overlap_prob=config.data.overlap_prob,
            k=config.model.k,
        )


@dataclass(frozen=True)
class Person:
    center: np.ndarray  # (x, y)
    scale: float
    rotation: float
    joints: np.ndarray  # [K, 2] (x, y)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        (x0, y0), (x1, y1) = self.joints.min(axis=0), self.joints.max(axis=0)
        return float(x0), float(y0), float(x1), float(y1)

    @property
    def diagonal(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0)


@dataclass(frozen=True)
class Scene:
    image: np.ndarray  # [3, H, W]
    persons: tuple[Person, ...]
    seed: int
    template: SkeletonTemplate

    @property
    def count(self) -> int:
        return len(self.persons)

    @property
    def height(self) -> int:
        return self.image.shape[1]

    @property
    def width(self) -> int:
        return self.image.shape[2]

    @property
    def centers(self) -> list[tuple[float, float]]:
        return [(float(p.center[0]), float(p.center[1])) for p in self.persons]

    @property
    def joints(self) -> np.ndarray:
        """[N, K, 2]"""
        if not self.persons:
            return np.zeros((0, self.template.k, 2))
        return np.stack([p.joints for p in self.persons])

    def image_tensor(self) -> Tensor:
        return Tensor(self.image)


def overlap_ratio(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    """Intersection area over the smaller box's area."""
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    smaller = min((a[2] - a[0]) * (a[3] - a[1]), (b[2] - b[0]) * (b[3] - b[1]))
    return float(iw * ih / smaller) if smaller > 0 else 0.0


def _inside(joints: np.ndarray, config: SceneConfig) -> bool:
    xs, ys = joints[:, 0], joints[:, 1]
    return bool(xs.min() >= 0 and ys.min() >= 0 and xs.max() <= config.width - 1 and ys.max() <= config.height - 1)


def _place_persons(rng: np.random.Generator, config: SceneConfig, template: SkeletonTemplate) -> list[Person] | None:
    n = int(rng.integers(1, config.n_max + 1))
    force_overlap = n >= 2 and rng.random() < config.overlap_prob
    persons: list[Person] = []
    for index in range(n):
        for _ in range(PLACEMENT_TRIES):
            scale = float(rng.uniform(*SCALE_RANGE))
            rotation = float(rng.uniform(-MAX_ROTATION, MAX_ROTATION))
            margin = template.radius * scale + 1.0
            if force_overlap and index == 1:
                center = persons[0].center + rng.uniform(-OVERLAP_SHIFT, OVERLAP_SHIFT, size=2) * scale
            else:
                low = np.array([margin, margin])
                high = np.array([config.width - margin, config.height - margin])
                if np.any(high <= low):
                    continue
                center = rng.uniform(low, high)
            joints = template.place(center, scale, rotation)
            if not _inside(joints, config):
                continue
            if any(np.hypot(*(center - p.center)) < MIN_CENTER_GAP for p in persons):
                continue
            candidate = Person(center=np.asarray(center, dtype=np.float64), scale=scale, rotation=rotation, joints=joints)
            if force_overlap and index == 1 and overlap_ratio(candidate.bbox, persons[0].bbox) < MIN_OVERLAP:
                continue
            persons.append(candidate)
            break
        else:
            return None
    return persons


def generate_scene(seed: int, config: SceneConfig | None = None) -> Scene:
    """Sample 1..n_max persons, place them, and render the 3-channel image.

    A placement that fails 100 times restarts the whole scene from a fresh
    sub-seed; if that fails too, SceneGenerationError.
    """
    config = config or SceneConfig()
    template = SkeletonTemplate.for_joints(config.k)
    for attempt in range(SUBSEED_ATTEMPTS):
        rng = np.random.default_rng([seed, attempt])
        persons = _place_persons(rng, config, template)
        if persons is None:
            logfire.debug("scene placement failed", seed=seed, attempt=attempt)
            continue
        image = render_image(persons, template, config.height, config.width, rng)
        return Scene(image=image, persons=tuple(persons), seed=seed, template=template)
    raise SceneGenerationError(
        f"could not place persons for seed {seed} in a {config.height}x{config.width} image "
        f"after {SUBSEED_ATTEMPTS} sub-seeds"
    )
