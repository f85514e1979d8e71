# src/Core/Tools/Synth/render.py
# Image rendering (limbs, joint blobs, center discs, noise) and target heatmaps.

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

import numpy as np

from src.Core.Models.configs import ENCODER_STRIDE
from src.Core.Models.errors import DimensionError
from src.Core.Tools.Synth.skeleton import ROOT, SkeletonTemplate
from src.Core.Tools.Tensor.tensor import get_default_dtype
from src.Core.Workflow.Nodes.readout import feature_coordinate
from src.Core.Workflow.State.state import Targets

if TYPE_CHECKING:
    from src.Core.Tools.Synth.scene import Person, Scene

LIMB_HALF_WIDTH = 0.5
BLOB_SIGMA = 1.0
CENTER_RADIUS = 1.5
NOISE_SIGMA = 0.05


def _segment_distance(xs: np.ndarray, ys: np.ndarray, p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    d = p1 - p0
    length2 = float(d @ d)
    if length2 == 0.0:
        t = np.zeros_like(xs, dtype=np.float64)
    else:
        t = np.clip(((xs - p0[0]) * d[0] + (ys - p0[1]) * d[1]) / length2, 0.0, 1.0)
    return np.hypot(xs - (p0[0] + t * d[0]), ys - (p0[1] + t * d[1]))


def _coverage(distance: np.ndarray, half_width: float) -> np.ndarray:
    # one pixel of linear falloff outside the solid core
    return np.clip(half_width + 0.5 - distance, 0.0, 1.0)


def render_image(
    persons: Sequence[Person],
    template: SkeletonTemplate,
    height: int,
    width: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """[3, H, W]: limbs in channel 0, joint blobs in 1 (intensity (k+1)/K), centers in 2."""
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    image = np.zeros((3, height, width))
    k = template.k
    for person in persons:
        for parent, child in template.limbs:
            start = person.center if parent == ROOT else person.joints[parent]
            limb = _coverage(_segment_distance(xs, ys, start, person.joints[child]), LIMB_HALF_WIDTH)
            np.maximum(image[0], limb, out=image[0])
        for j, (jx, jy) in enumerate(person.joints):
            blob = (j + 1) / k * np.exp(-((xs - jx) ** 2 + (ys - jy) ** 2) / (2 * BLOB_SIGMA**2))
            np.maximum(image[1], blob, out=image[1])
        disc = _coverage(np.hypot(xs - person.center[0], ys - person.center[1]), CENTER_RADIUS)
        np.maximum(image[2], disc, out=image[2])
    return image + rng.normal(0.0, NOISE_SIGMA, size=image.shape)


def gaussian_peak(h: int, w: int, cx: int, cy: int, sigma: float) -> np.ndarray:
    ys, xs = np.mgrid[0:h, 0:w]
    return np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * sigma**2))


def render_targets(scene: Scene, sigma_t: float = 1.5, stride: int = ENCODER_STRIDE) -> Targets:
    """Center map [1, h, w] and heatmaps [N, K, h, w], peak 1 at stride-grid coordinates.

    Overlapping centers combine by max; each person owns its K heatmaps.
    """
    if scene.height % stride or scene.width % stride:
        raise DimensionError(f"stride {stride} does not divide the {scene.height}x{scene.width} scene")
    h, w = scene.height // stride, scene.width // stride
    dtype = get_default_dtype()
    center_map = np.zeros((1, h, w))
    heatmaps = np.zeros((scene.count, scene.template.k, h, w))
    for n, person in enumerate(scene.persons):
        cx = feature_coordinate(person.center[0], stride, w)
        cy = feature_coordinate(person.center[1], stride, h)
        np.maximum(center_map[0], gaussian_peak(h, w, cx, cy, sigma_t), out=center_map[0])
        for j, (jx, jy) in enumerate(person.joints):
            heatmaps[n, j] = gaussian_peak(
                h, w, feature_coordinate(jx, stride, w), feature_coordinate(jy, stride, h), sigma_t
            )
    return Targets(centers=scene.centers, center_map=center_map.astype(dtype), heatmaps=heatmaps.astype(dtype))
