# src/Core/Tools/Relnet/adfm.py
# Adaptive feature fusion: squeeze-excite channel gate over the concatenation,
# then a 1x1 conv to the width the next stage expects.

from __future__ import annotations

from src.Core.Models.errors import DimensionError
from src.Core.Tools.Relnet.params import AdfmParams
from src.Core.Tools.Tensor import functional as F
from src.Core.Tools.Tensor.tensor import Tensor


def channel_gate(cat: Tensor, params: AdfmParams) -> Tensor:
    """sigmoid(MLP(GAP(cat))) as [N, C]."""
    squeezed = F.global_pool("avg", cat)
    hidden = F.relu(F.linear(squeezed, params.fc1_weight, params.fc1_bias))
    return F.sigmoid(F.linear(hidden, params.fc2_weight, params.fc2_bias))


def adfm_fuse(a: Tensor, b: Tensor, params: AdfmParams, *, gated: bool = True) -> Tensor:
    """Fuse ``a`` and ``b`` (concatenated in that order) into ``params.c_out`` channels.

    With ``gated=False`` the channel gate is skipped and the concatenation goes
    straight into the fuse conv.
    """
    if a.ndim != 4 or b.ndim != 4:
        raise DimensionError(f"adfm_fuse needs two [N,C,h,w] tensors, got {a.shape} and {b.shape}")
    if a.shape[1] + b.shape[1] != params.c_in:
        raise DimensionError(
            f"adfm_fuse: {a.shape[1]} + {b.shape[1]} channels do not match gate width {params.c_in}"
        )
    cat = F.concat_channels([a, b])
    if gated:
        n, c = cat.shape[:2]
        gate = F.reshape(channel_gate(cat, params), (n, c, 1, 1))
        cat = F.mul(cat, gate)
    return F.conv2d(cat, params.fuse_weight, params.fuse_bias)
