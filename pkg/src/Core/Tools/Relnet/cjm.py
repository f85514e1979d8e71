# src/Core/Tools/Relnet/cjm.py
# Cross-joint interaction. Each instance attends over its own K joint maps;
# instances never mix here.

from __future__ import annotations

from src.Core.Models.errors import DimensionError
from src.Core.Tools.Relnet.params import CjmParams
from src.Core.Tools.Relnet.types import JointAttention, JointFeatures, require_shape
from src.Core.Tools.Tensor import functional as F


def cjm_forward(f_joint: JointFeatures, params: CjmParams) -> tuple[JointFeatures, JointAttention]:
    """Q, K, V come from three 1x1 convs; each row of Q/K/V is one joint's h*w map.

    Att[n] = softmax_rows(Q[n] @ K[n]^T) and output = reshape(Att @ V) + F_joint.
    """
    require_shape(f_joint, 4, "joint features")
    n, k, h, w = f_joint.shape
    if n == 0 or k == 0:
        raise DimensionError(f"cross-joint attention needs N >= 1 and K >= 1, got {f_joint.shape}")
    if k != params.k:
        raise DimensionError(f"joint features carry {k} channels, CJM convs expect {params.k}")
    q = F.reshape(F.conv2d(f_joint, params.q_weight, params.q_bias), (n, k, h * w))
    key = F.reshape(F.conv2d(f_joint, params.k_weight, params.k_bias), (n, k, h * w))
    v = F.reshape(F.conv2d(f_joint, params.v_weight, params.v_bias), (n, k, h * w))
    logits = F.matmul(q, F.permute(key, (0, 2, 1)))
    weights = F.softmax_rows(logits)
    mixed = F.reshape(F.matmul(weights, v), f_joint.shape)
    return F.add(mixed, f_joint), JointAttention(weights=weights, logits=logits)
