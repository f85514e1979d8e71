# src/Core/Tools/Relnet/cim.py
# Cross-instance interaction: parameter-free attention over whole-person maps.

from __future__ import annotations

from src.Core.Models.errors import DimensionError, EmptyAttentionError
from src.Core.Tools.Relnet.types import (
    InstanceAttention,
    InstanceFeatures,
    PositionalEmbedding,
    require_same_instances,
    require_shape,
)
from src.Core.Tools.Tensor import functional as F


def _check(f_inst: InstanceFeatures, f_pos: PositionalEmbedding) -> None:
    require_shape(f_inst, 4, "instance features")
    require_shape(f_pos, 2, "positional embedding")
    require_same_instances(f_inst, f_pos)
    if f_inst.shape[0] == 0:
        raise EmptyAttentionError("cross-instance attention over zero instances; skip the relation stage")
    if f_pos.shape[1] != f_inst.shape[1]:
        raise DimensionError(f"positional width {f_pos.shape[1]} does not match feature width {f_inst.shape[1]}")


def cim_attention(f_inst: InstanceFeatures, f_pos: PositionalEmbedding) -> InstanceAttention:
    """Row i of the result weighs every source instance j for target instance i.

    logits = flat(F) @ flat(F)^T + F_pos @ F_pos^T, softmax over each row.
    """
    _check(f_inst, f_pos)
    n = f_inst.shape[0]
    flat = F.reshape(f_inst, (n, f_inst.size // n))
    gram = F.matmul(flat, F.permute(flat, (1, 0)))
    pos_gram = F.matmul(f_pos, F.permute(f_pos, (1, 0)))
    logits = F.add(gram, pos_gram)
    return InstanceAttention(weights=F.softmax_rows(logits), logits=logits)


def cim_forward_with_attention(
    f_inst: InstanceFeatures, f_pos: PositionalEmbedding
) -> tuple[InstanceFeatures, InstanceAttention]:
    attention = cim_attention(f_inst, f_pos)
    n = f_inst.shape[0]
    flat = F.reshape(f_inst, (n, f_inst.size // n))
    mixed = F.reshape(F.matmul(attention.weights, flat), f_inst.shape)
    return F.add(mixed, f_inst), attention


def cim_forward(f_inst: InstanceFeatures, f_pos: PositionalEmbedding) -> InstanceFeatures:
    """output_i = sum_j Att[i, j] * F_j + F_i, reshaped back to [N, d, h, w]."""
    out, _ = cim_forward_with_attention(f_inst, f_pos)
    return out
