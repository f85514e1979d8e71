# src/CLI/Commands/train.py
# Training loop: one generated scene per Adam step, step-drop lr schedule,
# append-only CSV log, checkpoint at the end.

from __future__ import annotations

import math
from pathlib import Path
from typing import TextIO

import numpy as np
import yaml
from tqdm import tqdm

from src.CLI.Config.parser import config_lines
from src.CLI.Services.checkpoint import Checkpoint, save_checkpoint
from src.Core.graph import forward_full
from src.Core.Models.configs import RunConfig
from src.Core.Models.errors import NumericError, TrainingDivergedError
from src.Core.Models.model_params import ModelParams
from src.Core.Tools.Synth.render import render_targets
from src.Core.Tools.Synth.scene import SceneConfig, generate_scene
from src.Core.Tools.Tensor.optim import Adam
from src.Core.Tools.Tensor.tensor import backward
from Utils.Logger.logfire import logfire


def scene_order(config: RunConfig) -> np.ndarray:
    """Training scene seed for every step, drawn from train_seeds with the global seed."""
    seeds = np.array(config.data.train_seeds.seeds())
    rng = np.random.default_rng(config.seed)
    return seeds[rng.integers(0, len(seeds), size=config.schedule.steps)]


def _write_divergence(path: Path, config: RunConfig, step: int, scene_seed: int, reason: str) -> None:
    dump = {"step": step, "scene_seed": scene_seed, "reason": reason, "config": config_lines(config)}
    path.write_text(yaml.safe_dump(dump, sort_keys=False), encoding="utf-8")


def train_params(
    config: RunConfig,
    *,
    log: TextIO | None = None,
    divergence_path: Path | None = None,
    progress: bool = True,
) -> ModelParams:
    """Train a freshly initialised model and return its parameters."""
    params = ModelParams.init(config.model, seed=config.seed)
    optimizer = Adam(params.named_tensors(), config.optimizer)
    scene_config = SceneConfig.from_run(config)
    schedule = config.schedule
    order = scene_order(config)

    with logfire.span("train {variant}", variant=config.branch.dim_row(), steps=schedule.steps, seed=config.seed):
        for step in tqdm(range(schedule.steps), desc="train", disable=not progress):
            scene_seed = int(order[step])
            lr = schedule.lr_at(step, config.optimizer.lr)
            try:
                scene = generate_scene(scene_seed, scene_config)
                targets = render_targets(scene, config.loss.sigma_target)
                optimizer.zero_grad()
                result = forward_full(scene.image_tensor(), params, config.branch, targets=targets, loss=config.loss)
                report = result.loss
                if not math.isfinite(report.total):
                    raise NumericError(f"loss is {report.total}")
                backward(report.total_tensor)
                optimizer.step(lr)
            except NumericError as exc:
                logfire.error("training diverged", step=step, scene_seed=scene_seed, reason=str(exc))
                if divergence_path is not None:
                    _write_divergence(divergence_path, config, step, scene_seed, str(exc))
                raise TrainingDivergedError(str(exc), scene_seed=scene_seed, step=step) from exc

            if log is not None:
                log.write(f"{step},{report.l_inst!r},{report.l_joint!r},{report.total!r},{lr!r}\n")
            if step % schedule.log_every == 0 or step == schedule.steps - 1:
                logfire.info(
                    "step {step}",
                    step=step,
                    l_inst=report.l_inst,
                    l_joint=report.l_joint,
                    total=report.total,
                    lr=lr,
                    persons=scene.count,
                    scene_seed=scene_seed,
                )
    return params


def cmd_train(config: RunConfig, out_path: str | Path) -> Checkpoint:
    """Train, then write ``out_path``, ``<out>.log`` and, on divergence, ``<out>.diverged.yaml``."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    log_path = out_path.with_name(out_path.name + ".log")
    divergence_path = out_path.with_name(out_path.name + ".diverged.yaml")
    with log_path.open("w", encoding="utf-8") as log:
        params = train_params(config, log=log, divergence_path=divergence_path)
    ckpt = Checkpoint.from_named(params.named_tensors(), config, step=config.schedule.steps)
    save_checkpoint(out_path, ckpt)
    return ckpt
