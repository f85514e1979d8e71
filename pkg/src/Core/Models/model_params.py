# src/Core/Models/model_params.py
# Every learnable tensor of the toy model, registered under a unique dotted name.
# The registry order is the checkpoint order.

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Mapping

import numpy as np

from src.Core.Models.configs import ModelDims
from src.Core.Models.errors import ConfigurationError
from src.Core.Tools.Relnet.params import DecoderParams, DimParams
from src.Core.Tools.Tensor import init
from src.Core.Tools.Tensor.tensor import Tensor

CENTER_PRIOR = 0.1
SPACE_TO_DEPTH = 2


def center_bias_prior(prob: float = CENTER_PRIOR) -> float:
    """Bias that makes sigmoid start at ``prob``: -log((1 - p) / p)."""
    return -math.log((1.0 - prob) / prob)


@dataclass
class EncoderParams:
    conv1_weight: Tensor
    conv1_bias: Tensor
    conv2_weight: Tensor
    conv2_bias: Tensor
    conv3_weight: Tensor
    conv3_bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, c: int) -> EncoderParams:
        c1 = max(c // 2, 1)
        w1, b1 = init.conv_params(rng, c1, 3, 3, "encoder.conv1")
        w2, b2 = init.conv_params(rng, c, c1 * SPACE_TO_DEPTH**2, 3, "encoder.conv2")
        w3, b3 = init.conv_params(rng, c, c * SPACE_TO_DEPTH**2, 3, "encoder.conv3")
        return cls(w1, b1, w2, b2, w3, b3)


@dataclass
class InstanceHeadParams:
    """Center-map head (3x3 then 1x1 to one channel) and the 1x1 c -> d projection."""

    center1_weight: Tensor
    center1_bias: Tensor
    center2_weight: Tensor
    center2_bias: Tensor
    proj_weight: Tensor
    proj_bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, c: int, d: int) -> InstanceHeadParams:
        w1, b1 = init.conv_params(rng, c, c, 3, "instances.center1")
        w2, _ = init.conv_params(rng, 1, c, 1, "instances.center2")
        b2 = init.constant((1,), center_bias_prior(), "instances.center2.bias")
        pw, pb = init.conv_params(rng, d, c, 1, "instances.proj")
        return cls(w1, b1, w2, b2, pw, pb)


@dataclass
class JointHeadParams:
    """5x5 conv over concat(F, F_inst) then 1x1 to K channels."""

    conv1_weight: Tensor
    conv1_bias: Tensor
    conv2_weight: Tensor
    conv2_bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, c: int, d: int, hidden: int, k: int) -> JointHeadParams:
        w1, b1 = init.conv_params(rng, hidden, c + d, 5, "joints.conv1")
        w2, b2 = init.conv_params(rng, k, hidden, 1, "joints.conv2")
        return cls(w1, b1, w2, b2)


def _flat(obj, prefix: str) -> dict[str, Tensor]:
    if hasattr(obj, "named_tensors"):
        return obj.named_tensors(prefix)
    return {f"{prefix}.{f.name}": getattr(obj, f.name) for f in fields(obj)}


@dataclass
class ModelParams:
    dims: ModelDims
    encoder: EncoderParams
    instances: InstanceHeadParams
    joints: JointHeadParams
    dim: DimParams
    decoder: DecoderParams

    @classmethod
    def init(cls, dims: ModelDims, seed: int = 0) -> ModelParams:
        """Seeded uniform(+-1/sqrt(fan_in)) weights, zero biases except the center prior."""
        rng = np.random.default_rng(seed)
        return cls(
            dims=dims,
            encoder=EncoderParams.init(rng, dims.c),
            instances=InstanceHeadParams.init(rng, dims.c, dims.d),
            joints=JointHeadParams.init(rng, dims.c, dims.d, dims.head_channels, dims.k),
            dim=DimParams.init(rng, dims.d, dims.k),
            decoder=DecoderParams.init(rng, dims.k + dims.d, dims.head_channels, dims.k),
        )

    def named_tensors(self) -> dict[str, Tensor]:
        named: dict[str, Tensor] = {}
        for part in ("encoder", "instances", "joints", "dim", "decoder"):
            named.update(_flat(getattr(self, part), part))
        return named

    def load_named(self, tensors: Mapping[str, np.ndarray | Tensor]) -> None:
        """Overwrite every registered tensor from ``tensors`` (same names, same shapes)."""
        own = self.named_tensors()
        missing = sorted(set(own) - set(tensors))
        extra = sorted(set(tensors) - set(own))
        if missing or extra:
            raise ConfigurationError(
                f"checkpoint tensors do not match the model: missing {missing[:3]}, unexpected {extra[:3]}",
                key="model",
            )
        for name, param in own.items():
            value = tensors[name]
            array = value.data if isinstance(value, Tensor) else np.asarray(value)
            if array.shape != param.shape:
                raise ConfigurationError(
                    f"tensor '{name}' has shape {array.shape}, model expects {param.shape}", key="model"
                )
            param.data = array.astype(param.dtype, copy=True)
            param.zero_grad()

    def parameter_count(self) -> int:
        return sum(t.size for t in self.named_tensors().values())
