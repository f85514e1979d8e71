# src/Core/graph.py
# The full forward pass wires the pipeline nodes together:
#
#   encode -> decode_instances -> decode_joints -> positional_embedding
#          -> dim_forward -> pose_decode            (+ losses in training mode)
#
# Scenes without instances skip everything after decode_instances and are
# supervised by the center loss alone.

from __future__ import annotations

from typing import Sequence

from src.Core.Models.configs import BranchConfig, EvalConfig, LossConfig
from src.Core.Models.model_params import ModelParams
from src.Core.Tools.Relnet.branches import dim_forward
from src.Core.Tools.Relnet.decoder import pose_decode
from src.Core.Tools.Relnet.types import AttentionBundle
from src.Core.Tools.Tensor.tensor import Tensor
from src.Core.Workflow.Nodes.encoder import encode
from src.Core.Workflow.Nodes.instances import decode_instances
from src.Core.Workflow.Nodes.joints import decode_joints
from src.Core.Workflow.Nodes.losses import focal_center_loss, heatmap_mse_loss, total_loss
from src.Core.Workflow.Nodes.positional import positional_embedding
from src.Core.Workflow.State.state import ForwardResult, Point, Targets


def forward_full(
    image: Tensor,
    params: ModelParams,
    branch: BranchConfig,
    *,
    targets: Targets | None = None,
    centers: Sequence[Point] | None = None,
    loss: LossConfig | None = None,
    detection: EvalConfig | None = None,
) -> ForwardResult:
    """Run one image through the model.

    Training mode: pass ``targets``; instances are placed at the GT
    centers and the LossReport is filled in. Inference mode: instances come from
    ``centers`` (input pixels) when given, otherwise from peaks of the predicted
    center map selected with ``detection``.
    """
    loss = loss or LossConfig()
    detection = detection or EvalConfig()
    features = encode(image, params.encoder)
    gt_centers = targets.centers if targets is not None else centers
    instances = decode_instances(
        features,
        params.instances,
        sigma_mask=loss.sigma_mask,
        gt_centers=gt_centers,
        peak_threshold=detection.peak_threshold,
        max_proposals=detection.max_proposals,
    )

    heatmaps = None
    bundle = AttentionBundle()
    if instances.count > 0:
        f_joint = decode_joints(features, instances.f_inst, params.joints)
        f_pos = positional_embedding(instances.masks, params.dims.d)
        dim_out, bundle = dim_forward(instances.f_inst, f_joint, f_pos, branch, params.dim)
        heatmaps = pose_decode(dim_out.f_ij, dim_out.f_ji, params.decoder, use_adfm=branch.use_adfm_in_decoder)

    report = None
    if targets is not None:
        l_inst = focal_center_loss(instances.center_map, targets.center_map)
        if heatmaps is None:
            l_joint = Tensor(0.0, dtype=l_inst.dtype)
        else:
            l_joint = heatmap_mse_loss(heatmaps, targets.heatmaps)
        report = total_loss(l_inst, l_joint, loss.alpha)

    return ForwardResult(
        heatmaps=heatmaps,
        center_map=instances.center_map,
        attention=bundle,
        instances=instances,
        loss=report,
    )
