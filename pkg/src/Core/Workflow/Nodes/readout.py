# src/Core/Workflow/Nodes/readout.py

from __future__ import annotations

import numpy as np

from src.Core.Models.configs import ENCODER_STRIDE
from src.Core.Models.errors import DimensionError
from src.Core.Tools.Tensor.tensor import Tensor


def decode_pose(heatmaps: Tensor | np.ndarray, stride: int = ENCODER_STRIDE) -> np.ndarray:
    """[N, K, h, w] heatmaps -> [N, K, 2] input-pixel (x, y), argmax times stride.

    Ties resolve to the smallest row-major index.
    """
    maps = heatmaps.data if isinstance(heatmaps, Tensor) else np.asarray(heatmaps)
    if maps.ndim != 4 or maps.shape[2] < 1 or maps.shape[3] < 1:
        raise DimensionError(f"decode_pose needs [N, K, h, w] with h, w >= 1, got {maps.shape}")
    n, k, h, w = maps.shape
    flat = maps.reshape(n, k, h * w).argmax(axis=2)
    coords = np.stack([flat % w, flat // w], axis=-1).astype(np.float64)
    return coords * stride


def feature_coordinate(value: float, stride: int, size: int) -> int:
    """Nearest feature-grid index of an input-pixel coordinate, clipped to the grid."""
    return int(min(max(np.floor(value / stride + 0.5), 0), size - 1))
