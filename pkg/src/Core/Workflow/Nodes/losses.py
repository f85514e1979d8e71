# src/Core/Workflow/Nodes/losses.py
# L_total = L_inst + alpha * L_joint, built from engine ops so it differentiates.

from __future__ import annotations

import numpy as np

from src.Core.Models.errors import ConfigurationError, DimensionError, NumericError
from src.Core.Models.reports import LossReport
from src.Core.Tools.Tensor import functional as F
from src.Core.Tools.Tensor.tensor import Tensor

CLAMP_MARGIN = 1e-6
POSITIVE_EXPONENT = 2
NEGATIVE_EXPONENT = 4


def _const(value, like: Tensor) -> Tensor:
    return Tensor(value, dtype=like.dtype)


def focal_center_loss(pred: Tensor, gt: np.ndarray | Tensor) -> Tensor:
    """Penalty-reduced focal loss on center maps.

    -1/max(P, 1) * [ sum_{gt=1} (1-p)^2 log p + sum_{gt<1} (1-gt)^4 p^2 log(1-p) ]
    where P counts the pixels with gt == 1.
    """
    target = gt.data if isinstance(gt, Tensor) else np.asarray(gt)
    if target.shape != pred.shape:
        raise DimensionError(f"focal loss: prediction {pred.shape} and target {target.shape} differ")
    if np.any(pred.data < 0.0) or np.any(pred.data > 1.0):
        raise NumericError("focal loss: predicted center probabilities left [0, 1]")
    positive = (target == 1.0).astype(pred.dtype)
    negative_weight = np.where(target < 1.0, (1.0 - target) ** NEGATIVE_EXPONENT, 0.0).astype(pred.dtype)

    p = F.clamp(pred, CLAMP_MARGIN, 1.0 - CLAMP_MARGIN)
    one = _const(1.0, pred)
    one_minus_p = F.sub(one, p)
    pos_term = F.mul(F.mul(F.square(one_minus_p), F.log(p)), _const(positive, pred))
    neg_term = F.mul(F.mul(F.square(p), F.log(one_minus_p)), _const(negative_weight, pred))
    total = F.add(F.sum_all(pos_term), F.sum_all(neg_term))
    normaliser = max(float(positive.sum()), 1.0)
    return F.mul(total, _const(-1.0 / normaliser, pred))


def heatmap_mse_loss(pred: Tensor | None, gt: np.ndarray | Tensor | None) -> Tensor:
    """Mean squared error over all N*K*h*w elements; zero when there are no instances."""
    if pred is None or pred.shape[0] == 0:
        dtype = pred.dtype if pred is not None else None
        return Tensor(0.0, dtype=dtype)
    target = gt.data if isinstance(gt, Tensor) else np.asarray(gt)
    if target.shape != pred.shape:
        raise DimensionError(f"heatmap loss: prediction {pred.shape} and target {target.shape} differ")
    return F.mean_all(F.square(F.sub(pred, _const(target, pred))))


def total_loss(l_inst: Tensor | float, l_joint: Tensor | float, alpha: float = 1.0) -> LossReport:
    """LossReport whose ``total_tensor`` is differentiable when the terms are tensors."""
    if not alpha > 0:
        raise ConfigurationError(f"alpha must be positive, got {alpha}", key="alpha")
    inst = l_inst if isinstance(l_inst, Tensor) else Tensor(l_inst)
    joint = l_joint if isinstance(l_joint, Tensor) else Tensor(l_joint, dtype=inst.dtype)
    total_tensor = F.add(inst, F.mul(joint, _const(alpha, joint)))
    l_inst_value, l_joint_value = inst.item(), joint.item()
    report = LossReport(
        l_inst=l_inst_value,
        l_joint=l_joint_value,
        total=l_inst_value + alpha * l_joint_value,
        alpha=alpha,
    )
    report._total_tensor = total_tensor
    return report
