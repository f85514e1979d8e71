# src/Core/Tools/Relnet/branches.py
# The two complementary branch orders and the dual-path module that runs them.
#
#   IJR  (coarse-to-fine): CIM -> fuse(F^_inst, F_joint) -> CJM   => [N, K, h, w]
#   JIR  (fine-to-coarse): CJM -> fuse(F^_joint, F_inst) -> CIM   => [N, d, h, w]
#
# Single-level designs drop one stage but always keep the fusion, so the
# output widths above never change.

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from src.Core.Models.configs import BranchConfig
from src.Core.Tools.Relnet.adfm import adfm_fuse
from src.Core.Tools.Relnet.cim import cim_forward_with_attention
from src.Core.Tools.Relnet.cjm import cjm_forward
from src.Core.Tools.Relnet.params import BranchParams, DimParams
from src.Core.Tools.Relnet.types import (
    AttentionBundle,
    InstanceFeatures,
    JointFeatures,
    PositionalEmbedding,
    require_same_instances,
)
from src.Core.Tools.Tensor.tensor import Tensor

IJR_ORDER = ("cim", "cjm")
JIR_ORDER = ("cjm", "cim")


@dataclass(frozen=True)
class DimOutput:
    f_ij: Tensor  # [N, K, h, w]
    f_ji: Tensor  # [N, d, h, w]


def ijr_branch(
    f_inst: InstanceFeatures,
    f_joint: JointFeatures,
    f_pos: PositionalEmbedding,
    params: BranchParams,
    *,
    modules: Sequence[str] = IJR_ORDER,
    use_adfm: bool = True,
    attention: AttentionBundle | None = None,
) -> JointFeatures:
    require_same_instances(f_inst, f_joint, f_pos)
    inst = f_inst
    if "cim" in modules:
        inst, att = cim_forward_with_attention(f_inst, f_pos)
        if attention is not None:
            attention.instance["ijr"] = att
    fused = adfm_fuse(inst, f_joint, params.adfm, gated=use_adfm)
    if "cjm" in modules:
        fused, joint_att = cjm_forward(fused, params.cjm)
        if attention is not None:
            attention.joint["ijr"] = joint_att
    return fused


def jir_branch(
    f_inst: InstanceFeatures,
    f_joint: JointFeatures,
    f_pos: PositionalEmbedding,
    params: BranchParams,
    *,
    modules: Sequence[str] = JIR_ORDER,
    use_adfm: bool = True,
    attention: AttentionBundle | None = None,
) -> InstanceFeatures:
    """The CIM stage here reuses the same F_pos as the IJR branch."""
    require_same_instances(f_inst, f_joint, f_pos)
    joint = f_joint
    if "cjm" in modules:
        joint, joint_att = cjm_forward(f_joint, params.cjm)
        if attention is not None:
            attention.joint["jir"] = joint_att
    fused = adfm_fuse(joint, f_inst, params.adfm, gated=use_adfm)
    if "cim" in modules:
        fused, att = cim_forward_with_attention(fused, f_pos)
        if attention is not None:
            attention.instance["jir"] = att
    return fused


def dim_forward(
    f_inst: InstanceFeatures,
    f_joint: JointFeatures,
    f_pos: PositionalEmbedding,
    config: BranchConfig,
    params: DimParams,
) -> tuple[DimOutput, AttentionBundle]:
    """Run the enabled branches.

    A disabled branch is replaced by the raw feature of the same width (F_joint in
    the I->J slot, F_inst in the J->I slot), so baseline returns the inputs untouched.
    """
    config.dim_row()
    bundle = AttentionBundle()
    f_ij = f_joint
    f_ji = f_inst
    if config.enable_ijr:
        f_ij = ijr_branch(
            f_inst, f_joint, f_pos, params.ijr,
            modules=config.ijr_modules, use_adfm=config.use_adfm_in_dim, attention=bundle,
        )
    if config.enable_jir:
        f_ji = jir_branch(
            f_inst, f_joint, f_pos, params.jir,
            modules=config.jir_modules, use_adfm=config.use_adfm_in_dim, attention=bundle,
        )
    return DimOutput(f_ij=f_ij, f_ji=f_ji), bundle
