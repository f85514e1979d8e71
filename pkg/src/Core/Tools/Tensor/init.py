# src/Core/Tools/Tensor/init.py

import math
from typing import Sequence

import numpy as np

from src.Core.Tools.Tensor.tensor import Tensor


def uniform_weight(rng: np.random.Generator, shape: Sequence[int], fan_in: int, name: str) -> Tensor:
    """Centered uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
    bound = 1.0 / math.sqrt(max(fan_in, 1))
    return Tensor(rng.uniform(-bound, bound, size=tuple(shape)), requires_grad=True, name=name)


def constant(shape: Sequence[int], value: float, name: str) -> Tensor:
    return Tensor(np.full(tuple(shape), value), requires_grad=True, name=name)


def conv_params(rng: np.random.Generator, c_out: int, c_in: int, k: int, name: str) -> tuple[Tensor, Tensor]:
    weight = uniform_weight(rng, (c_out, c_in, k, k), c_in * k * k, f"{name}.weight")
    return weight, constant((c_out,), 0.0, f"{name}.bias")


def linear_params(rng: np.random.Generator, c_in: int, c_out: int, name: str) -> tuple[Tensor, Tensor]:
    weight = uniform_weight(rng, (c_in, c_out), c_in, f"{name}.weight")
    return weight, constant((c_out,), 0.0, f"{name}.bias")
