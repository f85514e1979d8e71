# src/Core/Workflow/Nodes/positional.py

from __future__ import annotations

import math

import numpy as np

from src.Core.Models.errors import ConfigurationError, DimensionError
from src.Core.Tools.Tensor.tensor import Tensor, get_default_dtype


def argmax_coordinate(heatmap: np.ndarray) -> tuple[int, int]:
    """(x, y) of the maximum; ties go to the smallest row-major index."""
    h, w = heatmap.shape
    flat = int(np.argmax(heatmap.reshape(-1)))
    return flat % w, flat // w


def positional_embedding(center_maps: np.ndarray, d: int) -> Tensor:
    """[N, h, w] (or [N, 1, h, w]) per-instance center maps -> [N, d] sinusoidal rows.

    Per frequency pi * 2**i the entries are sin/cos of x*/w then sin/cos of y*/h,
    truncated to d.
    """
    if d % 2:
        raise ConfigurationError(f"positional embedding width must be even, got {d}", key="d")
    maps = np.asarray(center_maps)
    if maps.ndim == 4:
        maps = maps[:, 0]
    if maps.ndim != 3:
        raise DimensionError(f"center maps must be [N, h, w], got {maps.shape}")
    n, h, w = maps.shape
    freqs = math.pi * 2.0 ** np.arange(math.ceil(d / 4))
    rows = np.zeros((n, d), dtype=np.float64)
    for i in range(n):
        x, y = argmax_coordinate(maps[i])
        phase_x, phase_y = freqs * (x / w), freqs * (y / h)
        interleaved = np.stack([np.sin(phase_x), np.cos(phase_x), np.sin(phase_y), np.cos(phase_y)], axis=1)
        rows[i] = interleaved.reshape(-1)[:d]
    dtype = maps.dtype if maps.dtype in (np.float32, np.float64) else get_default_dtype()
    return Tensor(rows, dtype=dtype)
