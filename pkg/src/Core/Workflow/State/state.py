# src/Core/Workflow/State/state.py
# State handed between the pipeline nodes. Tensors and arrays ride along as
# arbitrary types; everything else is validated like any other model.

from __future__ import annotations

from typing import Annotated, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, SkipValidation

from src.Core.Models.reports import LossReport
from src.Core.Tools.Relnet.types import AttentionBundle
from src.Core.Tools.Tensor.tensor import Tensor

Point = Tuple[float, float]


class Targets(BaseModel):
    """Rendered supervision for one scene, at feature resolution."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    centers: Annotated[List[Point], Field(description="Person centers in input pixels, scene order.")]
    center_map: Annotated[np.ndarray, Field(description="[1, h, w] Gaussian peaks at the centers.")]
    heatmaps: Annotated[np.ndarray, Field(description="[N, K, h, w] per-person joint Gaussians.")]

    @property
    def count(self) -> int:
        return len(self.centers)


class InstanceDecoding(BaseModel):
    """Output of decode_instances."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    center_map: Annotated[Tensor, Field(description="[1, h, w] predicted center probabilities.")]
    masks: Annotated[np.ndarray, Field(description="[N, 1, h, w] soft instance masks in [0, 1].")]
    f_inst: Annotated[Tensor, Field(description="[N, d, h, w] instance features.")]
    centers: Annotated[List[Tuple[int, int]], Field(description="Feature-grid (x, y) of each instance.")]
    scores: Annotated[List[float], Field(description="Center score per instance (1.0 for ground-truth centers).")]

    @property
    def count(self) -> int:
        return len(self.centers)


class ForwardResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    heatmaps: Annotated[Optional[Tensor], Field(description="[N, K, h, w]; None when no instance was found.")]
    center_map: Tensor
    attention: Annotated[SkipValidation[AttentionBundle], Field(description="Attention maps per branch.")]
    instances: InstanceDecoding
    loss: Annotated[Optional[LossReport], Field(description="Present in training mode only.")] = None

    @property
    def count(self) -> int:
        return self.instances.count
