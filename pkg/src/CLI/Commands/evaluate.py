# src/CLI/Commands/evaluate.py

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from tqdm import tqdm

from src.CLI.Services.checkpoint import load_checkpoint
from src.Core.graph import forward_full
from src.Core.Models.configs import RunConfig
from src.Core.Models.errors import ConfigurationError
from src.Core.Models.model_params import ModelParams
from src.Core.Models.reports import MetricReport
from src.Core.Templates.Reports.reports import render_eval_report
from src.Core.Tools.Synth.metrics import pck_evaluate
from src.Core.Tools.Synth.scene import SceneConfig, generate_scene
from src.Core.Tools.Synth.skeleton import SkeletonTemplate
from src.Core.Tools.Tensor.tensor import get_default_dtype, precision
from src.Core.Workflow.Nodes.readout import decode_pose
from Utils.Logger.logfire import logfire


def evaluate_scene(params: ModelParams, config: RunConfig, scene_seed: int) -> MetricReport:
    scene = generate_scene(scene_seed, SceneConfig.from_run(config))
    result = forward_full(
        scene.image_tensor(),
        params,
        config.branch,
        centers=scene.centers if config.eval.eval_with_gt_centers else None,
        loss=config.loss,
        detection=config.eval,
    )
    if result.heatmaps is None:
        pred = np.zeros((0, config.model.k, 2))
    else:
        pred = decode_pose(result.heatmaps)
    return pck_evaluate(pred, scene, config.eval.pck_radius)


def evaluate_params(
    params: ModelParams, config: RunConfig, seeds: range | None = None, *, progress: bool = True
) -> MetricReport:
    """PCK over ``seeds`` (default: eval_seeds), fanned out over eval_workers threads."""
    seeds = seeds if seeds is not None else config.data.eval_seeds.seeds()
    # precision is thread-local; workers inherit the caller's
    dtype = get_default_dtype()

    def run(scene_seed: int) -> MetricReport:
        with precision(dtype):
            return evaluate_scene(params, config, scene_seed)

    with logfire.span("evaluate", scenes=len(seeds), workers=config.eval.eval_workers):
        with ThreadPoolExecutor(max_workers=config.eval.eval_workers) as pool:
            reports = list(
                tqdm(
                    pool.map(run, seeds),
                    total=len(seeds),
                    desc="eval",
                    disable=not progress,
                )
            )
        merged = MetricReport.merge(reports)
        logfire.info("pck {pck:.4f}", pck=merged.pck, hits=merged.hits, total=merged.total)
    return merged


def load_params(ckpt_path: str | Path, config: RunConfig) -> ModelParams:
    ckpt = load_checkpoint(ckpt_path)
    if ckpt.config.model != config.model:
        raise ConfigurationError(
            f"checkpoint was trained with {ckpt.config.model.model_dump()}, config asks for {config.model.model_dump()}",
            key="model",
        )
    params = ModelParams.init(config.model, seed=config.seed)
    params.load_named(ckpt.tensors)
    return params


def cmd_eval(ckpt_path: str | Path, config: RunConfig, *, seeds: range | None = None) -> MetricReport:
    """Evaluate a checkpoint on the eval seeds and print the per-joint breakdown."""
    params = load_params(ckpt_path, config)
    report = evaluate_params(params, config, seeds)
    names = list(SkeletonTemplate.for_joints(config.model.k).names)
    print(render_eval_report(report, names, checkpoint=str(ckpt_path), seeds=str(config.data.eval_seeds)))
    return report
