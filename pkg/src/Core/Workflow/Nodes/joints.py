# src/Core/Workflow/Nodes/joints.py
# Joint decoder: one shared head over concat(F, F_inst^n) for every instance.

from __future__ import annotations

import numpy as np

from src.Core.Models.errors import DimensionError
from src.Core.Models.model_params import JointHeadParams
from src.Core.Tools.Tensor import functional as F
from src.Core.Tools.Tensor.tensor import Tensor


def decode_joints(f: Tensor, f_inst: Tensor, params: JointHeadParams) -> Tensor:
    """[c, h, w] and [N, d, h, w] -> [N, K, h, w]."""
    c, h, w = f.shape
    n = f_inst.shape[0]
    if f_inst.ndim != 4 or f_inst.shape[2:] != (h, w):
        raise DimensionError(f"instance features {f_inst.shape} do not match visual features {f.shape}")
    k = params.conv2_weight.shape[0]
    if n == 0:
        return Tensor(np.zeros((0, k, h, w)), dtype=f.dtype)
    shared = F.expand(F.reshape(f, (1, c, h, w)), (n, c, h, w))
    x = F.concat_channels([shared, f_inst])
    pad = params.conv1_weight.shape[2] // 2
    hidden = F.relu(F.conv2d(x, params.conv1_weight, params.conv1_bias, padding=pad))
    return F.conv2d(hidden, params.conv2_weight, params.conv2_bias)
