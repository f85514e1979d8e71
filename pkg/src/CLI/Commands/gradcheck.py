# src/CLI/Commands/gradcheck.py
# Builds each module at minimal size in float64 and compares backward() with
# central differences for every parameter and input.

from __future__ import annotations

from typing import Callable

import numpy as np

from src.Core.graph import forward_full
from src.Core.Models.configs import BranchConfig, LossConfig, ModelDims
from src.Core.Models.errors import GradientCheckFailed, UsageError
from src.Core.Models.model_params import ModelParams
from src.Core.Models.reports import GradCheckResult
from src.Core.Templates.Reports.reports import render_gradcheck_report
from src.Core.Tools.Relnet.adfm import adfm_fuse
from src.Core.Tools.Relnet.branches import ijr_branch, jir_branch
from src.Core.Tools.Relnet.cim import cim_forward
from src.Core.Tools.Relnet.cjm import cjm_forward
from src.Core.Tools.Relnet.decoder import pose_decode
from src.Core.Tools.Relnet.params import AdfmParams, BranchParams, CjmParams, DecoderParams
from src.Core.Tools.Synth.render import gaussian_peak
from src.Core.Tools.Tensor import functional as F
from src.Core.Tools.Tensor.gradcheck import RELATIVE_TOLERANCE, check_gradients
from src.Core.Tools.Tensor.tensor import Tensor, precision
from src.Core.Workflow.State.state import Targets
from Utils.Logger.logfire import logfire

N, K, D, SIZE, C = 2, 2, 4, 4, 4
IMAGE_SIZE = SIZE * 4
INPUT_SCALE = 0.3

Case = tuple[Callable[[], Tensor], dict[str, Tensor]]


def _input(rng: np.random.Generator, shape: tuple[int, ...], name: str) -> Tensor:
    return Tensor(rng.normal(scale=INPUT_SCALE, size=shape), requires_grad=True, name=name)


def _projected(out_fn: Callable[[], Tensor], rng: np.random.Generator, shape: tuple[int, ...]) -> Callable[[], Tensor]:
    """Scalar loss sum(out * R) for a fixed random R."""
    weights = Tensor(rng.normal(size=shape))
    return lambda: F.sum_all(F.mul(out_fn(), weights))


def _cim(rng):
    f_inst, f_pos = _input(rng, (N, D, SIZE, SIZE), "f_inst"), _input(rng, (N, D), "f_pos")
    loss = _projected(lambda: cim_forward(f_inst, f_pos), rng, f_inst.shape)
    return loss, {"f_inst": f_inst, "f_pos": f_pos}


def _cjm(rng):
    f_joint = _input(rng, (N, K, SIZE, SIZE), "f_joint")
    params = CjmParams.init(rng, K)
    loss = _projected(lambda: cjm_forward(f_joint, params)[0], rng, f_joint.shape)
    return loss, {"f_joint": f_joint, **params.named_tensors("cjm")}


def _adfm(rng):
    a, b = _input(rng, (N, D, SIZE, SIZE), "a"), _input(rng, (N, K, SIZE, SIZE), "b")
    params = AdfmParams.init(rng, D + K, K)
    loss = _projected(lambda: adfm_fuse(a, b, params), rng, (N, K, SIZE, SIZE))
    return loss, {"a": a, "b": b, **params.named_tensors("adfm")}


def _branch_inputs(rng):
    return (
        _input(rng, (N, D, SIZE, SIZE), "f_inst"),
        _input(rng, (N, K, SIZE, SIZE), "f_joint"),
        _input(rng, (N, D), "f_pos"),
    )


def _ijr(rng):
    f_inst, f_joint, f_pos = _branch_inputs(rng)
    params = BranchParams(CjmParams.init(rng, K), AdfmParams.init(rng, D + K, K))
    loss = _projected(lambda: ijr_branch(f_inst, f_joint, f_pos, params), rng, f_joint.shape)
    return loss, {"f_inst": f_inst, "f_joint": f_joint, "f_pos": f_pos, **params.named_tensors("ijr")}


def _jir(rng):
    f_inst, f_joint, f_pos = _branch_inputs(rng)
    params = BranchParams(CjmParams.init(rng, K), AdfmParams.init(rng, K + D, D))
    loss = _projected(lambda: jir_branch(f_inst, f_joint, f_pos, params), rng, f_inst.shape)
    return loss, {"f_inst": f_inst, "f_joint": f_joint, "f_pos": f_pos, **params.named_tensors("jir")}


def _decoder(rng):
    f_ij, f_ji = _input(rng, (N, K, SIZE, SIZE), "f_ij"), _input(rng, (N, D, SIZE, SIZE), "f_ji")
    params = DecoderParams.init(rng, K + D, C, K)
    loss = _projected(lambda: pose_decode(f_ij, f_ji, params), rng, (N, K, SIZE, SIZE))
    return loss, {"f_ij": f_ij, "f_ji": f_ji, **params.named_tensors("decoder")}


def _full(rng):
    dims = ModelDims(c=C, d=D, k=K, height=IMAGE_SIZE, width=IMAGE_SIZE, head_channels=C)
    params = ModelParams.init(dims, seed=int(rng.integers(2**31)))
    image = _input(rng, (3, IMAGE_SIZE, IMAGE_SIZE), "image")
    grid = [(1, 1), (2, 3)]
    center_map = np.zeros((1, SIZE, SIZE))
    for cx, cy in grid:
        center_map[0] = np.maximum(center_map[0], gaussian_peak(SIZE, SIZE, cx, cy, 1.5))
    heatmaps = np.stack(
        [np.stack([gaussian_peak(SIZE, SIZE, (cx + j) % SIZE, cy, 1.5) for j in range(K)]) for cx, cy in grid]
    )
    targets = Targets(centers=[(4.0 * cx, 4.0 * cy) for cx, cy in grid], center_map=center_map, heatmaps=heatmaps)
    branch = BranchConfig()

    def loss():
        return forward_full(image, params, branch, targets=targets, loss=LossConfig()).loss.total_tensor

    return loss, {"image": image, **params.named_tensors()}


SELECTORS: dict[str, Callable[[np.random.Generator], Case]] = {
    "cim": _cim,
    "cjm": _cjm,
    "adfm": _adfm,
    "ijr": _ijr,
    "jir": _jir,
    "decoder": _decoder,
    "full": _full,
}


def run_gradcheck(selector: str, seed: int = 0, tolerance: float = RELATIVE_TOLERANCE) -> list[GradCheckResult]:
    if selector not in SELECTORS:
        raise UsageError(f"unknown gradcheck selector '{selector}'; expected one of {', '.join(SELECTORS)}")
    with precision(np.float64):
        rng = np.random.default_rng(seed)
        loss_fn, tensors = SELECTORS[selector](rng)
        with logfire.span("gradcheck {selector}", selector=selector, seed=seed, tensors=len(tensors)):
            results = check_gradients(loss_fn, tensors, tolerance=tolerance)
            worst = max((r.max_rel_error for r in results), default=0.0)
            logfire.info("gradcheck {selector} worst {worst:.3e}", selector=selector, worst=worst)
    return results


def cmd_gradcheck(selector: str, seed: int = 0) -> list[GradCheckResult]:
    """Print the per-tensor table; GradientCheckFailed when any tensor is off."""
    results = run_gradcheck(selector, seed)
    print(render_gradcheck_report(selector, results, RELATIVE_TOLERANCE))
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise GradientCheckFailed(f"gradcheck {selector}: {len(failed)} tensor(s) failed: {', '.join(failed[:5])}")
    return results
