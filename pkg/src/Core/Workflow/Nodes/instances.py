# src/Core/Workflow/Nodes/instances.py
# Instance decoder: center-map head, soft Gaussian masks and masked projections.

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.Core.Models.configs import ENCODER_STRIDE
from src.Core.Models.errors import DimensionError, UsageError
from src.Core.Models.model_params import InstanceHeadParams
from src.Core.Tools.Tensor import functional as F
from src.Core.Tools.Tensor.tensor import Tensor
from src.Core.Workflow.Nodes.readout import feature_coordinate
from src.Core.Workflow.State.state import InstanceDecoding, Point
from Utils.Logger.logfire import logfire


def predict_centers(f: Tensor, params: InstanceHeadParams) -> Tensor:
    """[c, h, w] -> [1, h, w] center probabilities."""
    c, h, w = f.shape
    x = F.reshape(f, (1, c, h, w))
    hidden = F.relu(F.conv2d(x, params.center1_weight, params.center1_bias, padding=1))
    logits = F.conv2d(hidden, params.center2_weight, params.center2_bias)
    return F.reshape(F.sigmoid(logits), (1, h, w))


def gaussian_masks(centers: Sequence[tuple[int, int]], h: int, w: int, sigma: float, dtype=np.float32) -> np.ndarray:
    """[N, 1, h, w] unnormalised Gaussians, exactly 1.0 at each (x, y) center pixel."""
    ys, xs = np.mgrid[0:h, 0:w]
    masks = np.zeros((len(centers), 1, h, w), dtype=dtype)
    for n, (cx, cy) in enumerate(centers):
        masks[n, 0] = np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * sigma**2))
    return masks


def detect_centers(center_map: np.ndarray, threshold: float, max_proposals: int) -> list[tuple[int, int, float]]:
    """3x3 local maxima above ``threshold`` as (x, y, score).

    Sorted by score, then by row-major index; at most ``max_proposals``.
    """
    scores = np.asarray(center_map, dtype=np.float64).reshape(center_map.shape[-2:])
    padded = np.pad(scores, 1, constant_values=-np.inf)
    neighbourhood = sliding_window_view(padded, (3, 3)).max(axis=(2, 3))
    peaks = np.argwhere((scores >= neighbourhood) & (scores > threshold))
    ranked = sorted(((-scores[y, x], y * scores.shape[1] + x, x, y) for y, x in peaks))
    return [(int(x), int(y), float(-neg)) for neg, _, x, y in ranked[:max_proposals]]


def decode_instances(
    f: Tensor,
    params: InstanceHeadParams,
    *,
    sigma_mask: float,
    gt_centers: Sequence[Point] | None = None,
    peak_threshold: float | None = None,
    max_proposals: int = 6,
) -> InstanceDecoding:
    """Predict the center map, then build one masked feature per instance.

    ``gt_centers`` (input pixels) places instances at the ground truth; otherwise peaks of the
    predicted map above ``peak_threshold`` become the instances. No peak is a
    valid empty result.
    """
    if f.ndim != 3:
        raise DimensionError(f"visual features must be [c, h, w], got {f.shape}")
    c, h, w = f.shape
    center_map = predict_centers(f, params)
    if gt_centers is not None:
        centers = [
            (feature_coordinate(x, ENCODER_STRIDE, w), feature_coordinate(y, ENCODER_STRIDE, h)) for x, y in gt_centers
        ]
        scores = [1.0] * len(centers)
    elif peak_threshold is not None:
        found = detect_centers(center_map.data, peak_threshold, max_proposals)
        centers = [(x, y) for x, y, _ in found]
        scores = [s for _, _, s in found]
        logfire.debug("detected {count} centers", count=len(centers), threshold=peak_threshold)
    else:
        raise UsageError("decode_instances needs gt_centers (training) or peak_threshold (inference)")

    d = params.proj_weight.shape[0]
    masks = gaussian_masks(centers, h, w, sigma_mask, dtype=f.dtype)
    if not centers:
        f_inst = Tensor(np.zeros((0, d, h, w)), dtype=f.dtype)
    else:
        n = len(centers)
        shared = F.expand(F.reshape(f, (1, c, h, w)), (n, c, h, w))
        masked = F.mul(shared, Tensor(masks, dtype=f.dtype))
        f_inst = F.conv2d(masked, params.proj_weight, params.proj_bias)
    return InstanceDecoding(center_map=center_map, masks=masks, f_inst=f_inst, centers=centers, scores=scores)
