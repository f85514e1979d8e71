# src/Core/Tools/Relnet/types.py
# Shape-carrying aliases and the attention containers dumped by the CLI.

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TypeAlias

from src.Core.Models.errors import DimensionError
from src.Core.Tools.Tensor.tensor import Tensor

InstanceFeatures: TypeAlias = Tensor  # [N, d, h, w]
JointFeatures: TypeAlias = Tensor  # [N, K, h, w]
PositionalEmbedding: TypeAlias = Tensor  # [N, d]


@dataclass(frozen=True)
class InstanceAttention:
    """Row-stochastic [N, N] attention over instances plus the pre-softmax logits."""

    weights: Tensor
    logits: Tensor


@dataclass(frozen=True)
class JointAttention:
    """Per-instance row-stochastic [N, K, K] attention over joints plus logits."""

    weights: Tensor
    logits: Tensor


@dataclass
class AttentionBundle:
    """Attention maps kept from one DIM pass, keyed by branch name ("ijr"/"jir")."""

    instance: dict[str, InstanceAttention] = field(default_factory=dict)
    joint: dict[str, JointAttention] = field(default_factory=dict)


def require_shape(t: Tensor, rank: int, what: str) -> None:
    if t.ndim != rank:
        raise DimensionError(f"{what} must have rank {rank}, got shape {t.shape}")


def require_same_instances(*tensors: Tensor) -> int:
    counts = {t.shape[0] for t in tensors}
    if len(counts) != 1:
        raise DimensionError(f"instance counts disagree: {[t.shape for t in tensors]}")
    return counts.pop()
