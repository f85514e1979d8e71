# src/Core/Workflow/Nodes/encoder.py
# Stride-4 toy encoder standing in for a pretrained backbone.
#
#   conv3x3 + relu  (3 -> c/2, full resolution)   space_to_depth(2)
#   conv3x3 + relu  (-> c, 1/2 resolution)         space_to_depth(2)
#   conv3x3 + relu  (-> c, 1/4 resolution)

from __future__ import annotations

from src.Core.Models.configs import ENCODER_STRIDE
from src.Core.Models.errors import ConfigurationError
from src.Core.Models.model_params import SPACE_TO_DEPTH, EncoderParams
from src.Core.Tools.Tensor import functional as F
from src.Core.Tools.Tensor.tensor import Tensor


def encode(image: Tensor, params: EncoderParams) -> Tensor:
    """[3, H, W] image -> [c, H/4, W/4] visual features."""
    if image.ndim != 3 or image.shape[0] != 3:
        raise ConfigurationError(f"encoder expects a [3, H, W] image, got {image.shape}", key="image")
    _, height, width = image.shape
    if height % ENCODER_STRIDE or width % ENCODER_STRIDE:
        raise ConfigurationError(
            f"image size {height}x{width} is not divisible by the encoder stride {ENCODER_STRIDE}",
            key="height" if height % ENCODER_STRIDE else "width",
        )
    x = F.reshape(image, (1, 3, height, width))
    x = F.relu(F.conv2d(x, params.conv1_weight, params.conv1_bias, padding=1))
    x = F.space_to_depth(x, SPACE_TO_DEPTH)
    x = F.relu(F.conv2d(x, params.conv2_weight, params.conv2_bias, padding=1))
    x = F.space_to_depth(x, SPACE_TO_DEPTH)
    x = F.relu(F.conv2d(x, params.conv3_weight, params.conv3_bias, padding=1))
    return F.reshape(x, x.shape[1:])
