# src/Core/Tools/Tensor/optim.py
# Adam with bias correction. Moments live in AdamState keyed by parameter name.

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Annotated, Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.Core.Models.errors import DimensionError
from src.Core.Tools.Tensor.tensor import Tensor


class AdamHyper(BaseModel):
    """Adam hyperparameters."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    lr: Annotated[float, Field(gt=0, description="Learning rate (step size).")] = 0.001
    beta1: Annotated[float, Field(ge=0, lt=1, description="Decay of the first-moment estimate.")] = 0.9
    beta2: Annotated[float, Field(ge=0, lt=1, description="Decay of the second-moment estimate.")] = 0.999
    epsilon: Annotated[float, Field(gt=0, description="Denominator stabiliser.")] = 1e-8


@dataclass
class AdamState:
    hyper: AdamHyper = field(default_factory=AdamHyper)
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)
    step_count: int = 0


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray | None],
    state: AdamState,
    lr: float | None = None,
) -> AdamState:
    """One bias-corrected Adam update.

    Parameters are rebound to fresh arrays, never mutated in place. A missing or
    None gradient counts as zero. ``lr`` overrides ``state.hyper.lr`` for this step
    (used by the step-drop schedule).
    """
    hyper = state.hyper
    step_size = hyper.lr if lr is None else lr
    t = state.step_count + 1
    bc1 = 1.0 - hyper.beta1**t
    bc2 = 1.0 - hyper.beta2**t
    for name, param in params.items():
        g = grads.get(name)
        g = np.zeros_like(param.data) if g is None else np.asarray(g, dtype=param.dtype)
        if g.shape != param.shape:
            raise DimensionError(f"gradient for '{name}' has shape {g.shape}, parameter has {param.shape}")
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        elif m.shape != param.shape:
            raise DimensionError(f"moment buffer for '{name}' has shape {m.shape}, parameter has {param.shape}")
        m = hyper.beta1 * m + (1.0 - hyper.beta1) * g
        v = hyper.beta2 * v + (1.0 - hyper.beta2) * (g * g)
        update = step_size * (m / bc1) / (np.sqrt(v / bc2) + hyper.epsilon)
        param.data = (param.data - update).astype(param.dtype, copy=False)
        state.first_moment[name] = m.astype(param.dtype, copy=False)
        state.second_moment[name] = v.astype(param.dtype, copy=False)
    state.step_count = t
    return state


class Adam:
    """Thin stateful wrapper used by the training loop."""

    def __init__(self, params: Mapping[str, Tensor], hyper: AdamHyper | None = None):
        self.params = dict(params)
        self.state = AdamState(hyper=hyper or AdamHyper())

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self, lr: float | None = None) -> None:
        adam_step(self.params, {k: p.grad for k, p in self.params.items()}, self.state, lr=lr)
