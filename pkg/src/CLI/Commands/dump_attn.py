# src/CLI/Commands/dump_attn.py
# Raw attention dumps: CSV matrices (repr floats, row order = matrix row order),
# binary PGM renderings and a manifest.yaml listing what was written.

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import yaml

from src.CLI.Commands.evaluate import load_params
from src.CLI.Services.checkpoint import load_checkpoint
from src.Core.graph import forward_full
from src.Core.Models.configs import RunConfig
from src.Core.Tools.Synth.scene import SceneConfig, generate_scene
from Utils.Logger.logfire import logfire


def write_csv(path: Path, matrix: np.ndarray) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for row in np.atleast_2d(matrix):
            writer.writerow([repr(float(v)) for v in row])


def write_pgm(path: Path, matrix: np.ndarray) -> None:
    """8-bit binary PGM: header ``P5\\n<w> <h>\\n255\\n`` then w*h bytes."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    h, w = matrix.shape
    pixels = np.round(np.clip(matrix, 0.0, 1.0) * 255).astype(np.uint8)
    path.write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes())


def cmd_dump_attn(
    ckpt_path: str | Path,
    scene_seed: int,
    out_dir: str | Path,
    *,
    config: RunConfig | None = None,
    gt_centers: bool | None = None,
) -> list[str]:
    """Run one scene and dump every attention map of every enabled branch.

    Returns the written file names (also listed in ``manifest.yaml``). A scene
    with no detected instance yields an empty manifest.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = config or load_checkpoint(ckpt_path).config
    params = load_params(ckpt_path, config)
    use_gt = config.eval.eval_with_gt_centers if gt_centers is None else gt_centers

    scene = generate_scene(scene_seed, SceneConfig.from_run(config))
    result = forward_full(
        scene.image_tensor(),
        params,
        config.branch,
        centers=scene.centers if use_gt else None,
        loss=config.loss,
        detection=config.eval,
    )

    written: list[str] = []

    def dump(stem: str, matrix: np.ndarray, logits: np.ndarray) -> None:
        write_csv(out_dir / f"{stem}.csv", matrix)
        write_pgm(out_dir / f"{stem}.pgm", matrix)
        write_csv(out_dir / f"{stem}_logits.csv", logits)
        written.extend([f"{stem}.csv", f"{stem}.pgm", f"{stem}_logits.csv"])

    with logfire.span("dump-attn", scene_seed=scene_seed, instances=result.count):
        for branch, att in result.attention.instance.items():
            dump(f"inst_{branch}", att.weights.numpy(), att.logits.numpy())
        for branch, att in result.attention.joint.items():
            for n in range(att.weights.shape[0]):
                dump(f"joint_{branch}_{n}", att.weights.numpy()[n], att.logits.numpy()[n])

        manifest = {
            "scene_seed": scene_seed,
            "instances": result.count,
            "centers": [list(c) for c in result.instances.centers],
            "files": written,
        }
        (out_dir / "manifest.yaml").write_text(yaml.safe_dump(manifest, sort_keys=False), encoding="utf-8")
        logfire.info("dumped {count} files", count=len(written), out_dir=str(out_dir))
    return written
