# src/Core/Tools/Synth/metrics.py
# PCK with greedy one-to-one instance matching.

from __future__ import annotations

import numpy as np

from src.Core.Models.errors import DimensionError, MetricError
from src.Core.Models.reports import MetricReport
from src.Core.Tools.Synth.scene import Scene


def match_instances(pred_joints: np.ndarray, gt_joints: np.ndarray) -> list[tuple[int, int]]:
    """Greedy (pred, gt) pairs by joint-centroid distance.

    Candidate pairs are ranked by (distance, gt index, predicted centroid), so the
    result does not depend on the order predictions arrive in.
    """
    if len(pred_joints) == 0 or len(gt_joints) == 0:
        return []
    pred_c = pred_joints.mean(axis=1)
    gt_c = gt_joints.mean(axis=1)
    candidates = []
    for p, pc in enumerate(pred_c):
        for g, gc in enumerate(gt_c):
            candidates.append((float(np.hypot(*(pc - gc))), g, float(pc[0]), float(pc[1]), p))
    candidates.sort()
    used_pred: set[int] = set()
    used_gt: set[int] = set()
    pairs = []
    for _, g, _, _, p in candidates:
        if p in used_pred or g in used_gt:
            continue
        used_pred.add(p)
        used_gt.add(g)
        pairs.append((p, g))
    return pairs


def pck_evaluate(pred_joints: np.ndarray, scene: Scene, r_frac: float = 0.1) -> MetricReport:
    """A joint hits when it lies within r_frac * (GT bbox diagonal) of its GT joint.

    pck = hits / (N_gt * K); unmatched GT persons count as misses.
    """
    if scene.count == 0:
        raise MetricError(f"PCK is undefined for scene {scene.seed}: it has no persons")
    k = scene.template.k
    pred = np.asarray(pred_joints, dtype=np.float64)
    if pred.size == 0:
        pred = np.zeros((0, k, 2))
    elif pred.ndim != 3 or pred.shape[1:] != (k, 2):
        raise DimensionError(f"predicted joints must be [N, {k}, 2], got {pred.shape}")
    gt = scene.joints
    hits = [0] * k
    for p, g in match_instances(pred, gt):
        radius = r_frac * scene.persons[g].diagonal
        distances = np.hypot(*(pred[p] - gt[g]).T)
        for j in range(k):
            if distances[j] <= radius:
                hits[j] += 1
    totals = [scene.count] * k
    return MetricReport(pck=sum(hits) / (scene.count * k), joint_hits=hits, joint_totals=totals, radius_frac=r_frac)
