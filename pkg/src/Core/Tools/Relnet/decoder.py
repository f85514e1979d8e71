# src/Core/Tools/Relnet/decoder.py
# Pose decoder: CBAM channel gate, CBAM spatial gate, then two head convs.

from __future__ import annotations

from src.Core.Models.errors import DimensionError
from src.Core.Tools.Relnet.params import SPATIAL_KERNEL, DecoderParams
from src.Core.Tools.Tensor import functional as F
from src.Core.Tools.Tensor.tensor import Tensor


def _shared_mlp(v: Tensor, params: DecoderParams) -> Tensor:
    hidden = F.relu(F.linear(v, params.ca_fc1_weight, params.ca_fc1_bias))
    return F.linear(hidden, params.ca_fc2_weight, params.ca_fc2_bias)


def cbam_channel_gate(x: Tensor, params: DecoderParams) -> Tensor:
    """[N, C, 1, 1] gate from the avg- and max-pooled descriptors."""
    n, c = x.shape[:2]
    scores = F.add(_shared_mlp(F.global_pool("avg", x), params), _shared_mlp(F.global_pool("max", x), params))
    return F.reshape(F.sigmoid(scores), (n, c, 1, 1))


def cbam_spatial_gate(x: Tensor, params: DecoderParams) -> Tensor:
    """[N, 1, h, w] gate from stacked channel-avg / channel-max maps."""
    stacked = F.concat_channels([F.channel_pool("avg", x), F.channel_pool("max", x)])
    return F.sigmoid(F.conv2d(stacked, params.sa_weight, params.sa_bias, padding=SPATIAL_KERNEL // 2))


def pose_decode(f_ij: Tensor, f_ji: Tensor, params: DecoderParams, use_adfm: bool = True) -> Tensor:
    if f_ij.ndim != 4 or f_ji.ndim != 4:
        raise DimensionError(f"pose_decode needs [N,C,h,w] inputs, got {f_ij.shape} and {f_ji.shape}")
    if f_ij.shape[0] != f_ji.shape[0] or f_ij.shape[2:] != f_ji.shape[2:]:
        raise DimensionError(f"pose_decode: {f_ij.shape} and {f_ji.shape} disagree on N, h or w")
    if f_ij.shape[1] + f_ji.shape[1] != params.c_in:
        raise DimensionError(f"pose_decode: {f_ij.shape[1] + f_ji.shape[1]} channels, head expects {params.c_in}")
    x = F.concat_channels([f_ij, f_ji])
    if use_adfm:
        x = F.mul(x, cbam_channel_gate(x, params))
        x = F.mul(x, cbam_spatial_gate(x, params))
    hidden = F.relu(F.conv2d(x, params.head1_weight, params.head1_bias, padding=1))
    return F.conv2d(hidden, params.head2_weight, params.head2_bias)
