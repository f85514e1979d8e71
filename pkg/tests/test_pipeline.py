import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.Core.graph import forward_full
from src.Core.Models.configs import BranchConfig, LossConfig
from src.Core.Models.errors import ConfigurationError, DimensionError, NumericError, UsageError
from src.Core.Models.model_params import CENTER_PRIOR, ModelParams
from src.Core.Tools.Synth.render import render_targets
from src.Core.Tools.Synth.scene import SceneConfig, generate_scene
from src.Core.Tools.Tensor.tensor import Tensor, precision
from src.Core.Workflow.Nodes.encoder import encode
from src.Core.Workflow.Nodes.instances import decode_instances, detect_centers, gaussian_masks
from src.Core.Workflow.Nodes.joints import decode_joints
from src.Core.Workflow.Nodes.losses import focal_center_loss, heatmap_mse_loss, total_loss
from src.Core.Workflow.Nodes.positional import positional_embedding
from src.Core.Workflow.Nodes.readout import decode_pose, feature_coordinate
from src.Core.Workflow.State.state import Targets


@pytest.fixture
def params(tiny_dims) -> ModelParams:
    return ModelParams.init(tiny_dims, seed=7)


def zero_biases(params: ModelParams) -> None:
    for name, t in params.named_tensors().items():
        if name.endswith("bias"):
            t.data = np.zeros_like(t.data)


# --- encoder / decoders --------------------------------------------------------------


def test_encoder_output_shape(params, tiny_dims, rng):
    f = encode(Tensor(rng.normal(size=(3, 32, 32))), params.encoder)
    assert f.shape == (tiny_dims.c, 8, 8)


def test_encoder_zero_image_gives_zero_features(params):
    zero_biases(params)
    f = encode(Tensor(np.zeros((3, 32, 32))), params.encoder)
    assert np.array_equal(f.data, np.zeros_like(f.data))


def test_encoder_rejects_indivisible_sizes(params):
    with pytest.raises(ConfigurationError):
        encode(Tensor(np.zeros((3, 30, 32))), params.encoder)
    with pytest.raises(ConfigurationError):
        encode(Tensor(np.zeros((1, 32, 32))), params.encoder)


def test_center_head_starts_at_the_prior(params):
    zero_biases(params)
    params.instances.center2_bias.data = np.full((1,), -math.log((1 - CENTER_PRIOR) / CENTER_PRIOR), np.float32)
    decoded = decode_instances(Tensor(np.zeros((4, 8, 8))), params.instances, sigma_mask=2.0, gt_centers=[])
    assert np.allclose(decoded.center_map.data, CENTER_PRIOR, atol=1e-6)


def test_decode_instances_with_two_gt_centers(params, tiny_dims, rng):
    f = Tensor(rng.normal(size=(4, 8, 8)))
    decoded = decode_instances(f, params.instances, sigma_mask=2.0, gt_centers=[(8.0, 8.0), (21.0, 14.0)])
    assert decoded.count == 2
    assert decoded.f_inst.shape == (2, tiny_dims.d, 8, 8)
    assert decoded.centers == [(2, 2), (5, 4)]
    assert decoded.masks.shape == (2, 1, 8, 8)
    assert decoded.masks[0, 0, 2, 2] == 1.0
    assert np.all((decoded.masks >= 0) & (decoded.masks <= 1))


def test_zero_features_give_zero_instance_features(params):
    zero_biases(params)
    decoded = decode_instances(Tensor(np.zeros((4, 8, 8))), params.instances, sigma_mask=2.0, gt_centers=[(8.0, 8.0)])
    assert np.array_equal(decoded.f_inst.data, np.zeros_like(decoded.f_inst.data))


def test_decode_instances_needs_a_mode(params):
    with pytest.raises(UsageError):
        decode_instances(Tensor(np.zeros((4, 8, 8))), params.instances, sigma_mask=2.0)


def test_no_peak_is_an_empty_instance_set(params, tiny_dims):
    params.instances.center2_bias.data = np.full((1,), -30.0, np.float32)
    decoded = decode_instances(Tensor(np.zeros((4, 8, 8))), params.instances, sigma_mask=2.0, peak_threshold=0.1)
    assert decoded.count == 0
    assert decoded.f_inst.shape == (0, tiny_dims.d, 8, 8)


def test_detect_centers_orders_and_caps_peaks():
    center_map = np.zeros((1, 8, 8))
    center_map[0, 1, 1] = 0.5
    center_map[0, 6, 2] = 0.9
    center_map[0, 3, 6] = 0.5
    center_map[0, 3, 5] = 0.05
    found = detect_centers(center_map, threshold=0.1, max_proposals=6)
    assert [(x, y) for x, y, _ in found] == [(2, 6), (1, 1), (6, 3)]
    assert len(detect_centers(center_map, threshold=0.1, max_proposals=2)) == 2


def test_gaussian_masks_peak_at_their_centers():
    masks = gaussian_masks([(1, 2), (3, 0)], 4, 5, sigma=1.0)
    assert masks.shape == (2, 1, 4, 5)
    assert masks[0, 0, 2, 1] == 1.0
    assert masks[1, 0, 0, 3] == 1.0
    assert masks[0, 0, 2, 2] == pytest.approx(math.exp(-0.5))


def test_decode_joints_shapes(params, tiny_dims, rng):
    f = Tensor(rng.normal(size=(4, 8, 8)))
    assert decode_joints(f, Tensor(rng.normal(size=(3, tiny_dims.d, 8, 8))), params.joints).shape == (3, 2, 8, 8)
    assert decode_joints(f, Tensor(np.zeros((0, tiny_dims.d, 8, 8))), params.joints).shape == (0, 2, 8, 8)
    with pytest.raises(DimensionError):
        decode_joints(f, Tensor(np.zeros((1, tiny_dims.d, 4, 4))), params.joints)


def test_decode_joints_follows_instance_order(tiny_dims, rng):
    order = [2, 0, 3, 1]
    with precision(np.float64):
        joints = ModelParams.init(tiny_dims, seed=7).joints
        f = Tensor(rng.normal(size=(tiny_dims.c, 8, 8)))
        f_inst = rng.normal(size=(4, tiny_dims.d, 8, 8))
        base = decode_joints(f, Tensor(f_inst), joints).data
        permuted = decode_joints(f, Tensor(f_inst[order]), joints).data
    assert np.allclose(permuted, base[order], atol=1e-6)


# --- positional embedding ------------------------------------------------------------


def test_positional_embedding_at_the_origin():
    maps = np.zeros((1, 8, 8))
    maps[0, 0, 0] = 1.0
    row = positional_embedding(maps, 8).data[0]
    assert np.allclose(row, [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0])


def test_positional_embedding_ties_go_to_the_first_maximum():
    maps = np.zeros((1, 4, 4))
    maps[0, 1, 3] = 1.0
    maps[0, 2, 0] = 1.0
    first_only = np.zeros((1, 4, 4))
    first_only[0, 1, 3] = 1.0
    assert np.array_equal(positional_embedding(maps, 4).data, positional_embedding(first_only, 4).data)


def test_positional_embedding_needs_even_width():
    with pytest.raises(ConfigurationError):
        positional_embedding(np.zeros((1, 4, 4)), 3)


def test_positional_embedding_values():
    maps = np.zeros((1, 1, 8, 8))
    maps[0, 0, 2, 4] = 1.0  # x = 4, y = 2
    row = positional_embedding(maps.astype(np.float64), 4).data[0]
    assert row.dtype == np.float64
    assert np.allclose(row, [math.sin(math.pi / 2), math.cos(math.pi / 2), math.sin(math.pi / 4), math.cos(math.pi / 4)])


# --- losses ----------------------------------------------------------------------------


def test_focal_loss_single_positive_at_one_half():
    loss = focal_center_loss(Tensor([[[0.5]]]), np.ones((1, 1, 1)))
    assert loss.item() == pytest.approx(0.25 * math.log(2.0), abs=1e-4)
    assert loss.item() == pytest.approx(0.1733, abs=1e-4)


def test_focal_loss_perfect_and_confident_predictions():
    gt = np.zeros((1, 4, 4))
    gt[0, 1, 1] = 1.0
    pred = np.full((1, 4, 4), 1e-6)
    pred[0, 1, 1] = 1 - 1e-6
    assert focal_center_loss(Tensor(pred, dtype=np.float64), gt).item() == pytest.approx(0.0, abs=1e-5)
    negatives = focal_center_loss(Tensor(np.full((1, 4, 4), 1e-6), dtype=np.float64), np.zeros((1, 4, 4)))
    assert negatives.item() == pytest.approx(0.0, abs=1e-5)


def test_focal_loss_falls_as_the_positive_gets_confident():
    losses = [focal_center_loss(Tensor([[[p]]]), np.ones((1, 1, 1))).item() for p in (0.1, 0.5, 0.9)]
    assert losses[0] > losses[1] > losses[2]


def test_focal_loss_rejects_out_of_range_predictions():
    with pytest.raises(NumericError):
        focal_center_loss(Tensor([[[1.5]]]), np.ones((1, 1, 1)))


def test_focal_loss_is_differentiable():
    pred = Tensor(np.full((1, 2, 2), 0.3), requires_grad=True, dtype=np.float64)
    gt = np.array([[[1.0, 0.5], [0.0, 0.0]]])
    focal_center_loss(pred, gt).backward()
    assert pred.grad is not None
    assert pred.grad[0, 0, 0] < 0  # raising p at the positive lowers the loss


def test_heatmap_mse_cases():
    gt = np.random.default_rng(0).normal(size=(2, 2, 3, 3))
    assert heatmap_mse_loss(Tensor(gt, dtype=np.float64), gt).item() == 0.0
    assert heatmap_mse_loss(Tensor(gt + 1, dtype=np.float64), gt).item() == pytest.approx(1.0)
    half = gt.copy()
    half[0] += 2.0
    assert heatmap_mse_loss(Tensor(half, dtype=np.float64), gt).item() == pytest.approx(2.0)
    assert heatmap_mse_loss(Tensor(np.zeros((0, 2, 3, 3))), np.zeros((0, 2, 3, 3))).item() == 0.0
    assert heatmap_mse_loss(None, None).item() == 0.0


@given(st.floats(min_value=0, max_value=100), st.floats(min_value=0.01, max_value=10))
def test_total_loss_arithmetic(l_inst, alpha):
    assert total_loss(l_inst, 0.0, alpha).total == pytest.approx(l_inst, rel=1e-6, abs=1e-6)


def test_total_loss_examples():
    report = total_loss(2.0, 3.0, 0.5)
    assert report.total == pytest.approx(3.5)
    assert report.total_tensor.item() == pytest.approx(3.5)
    with pytest.raises(ConfigurationError):
        total_loss(1.0, 1.0, 0.0)


# --- readout ---------------------------------------------------------------------------


def test_decode_pose_scales_by_the_stride():
    maps = np.zeros((1, 2, 8, 8))
    maps[0, 0, 5, 3] = 1.0
    coords = decode_pose(maps)
    assert coords.shape == (1, 2, 2)
    assert tuple(coords[0, 0]) == (12.0, 20.0)
    assert tuple(coords[0, 1]) == (0.0, 0.0)  # constant map, first index wins


@given(st.floats(min_value=-10, max_value=80), st.integers(min_value=1, max_value=32))
def test_feature_coordinate_stays_on_the_grid(value, size):
    index = feature_coordinate(value, 4, size)
    assert 0 <= index < size


# --- full forward ----------------------------------------------------------------------


def tiny_scene(tiny_dims, seed=3):
    return generate_scene(seed, SceneConfig(n_max=1, height=tiny_dims.height, width=tiny_dims.width, k=tiny_dims.k))


def test_forward_training_mode(params, tiny_dims):
    scene = tiny_scene(tiny_dims)
    targets = render_targets(scene)
    result = forward_full(scene.image_tensor(), params, BranchConfig(), targets=targets, loss=LossConfig())
    assert result.count == scene.count
    assert result.heatmaps.shape == (scene.count, tiny_dims.k, 8, 8)
    assert result.loss.total == pytest.approx(result.loss.l_inst + result.loss.l_joint, rel=1e-5)
    result.loss.total_tensor.backward()
    assert params.decoder.head2_weight.grad is not None
    assert params.encoder.conv1_weight.grad is not None


def test_forward_without_instances(params, tiny_dims):
    scene = tiny_scene(tiny_dims)
    result = forward_full(scene.image_tensor(), params, BranchConfig(), centers=[])
    assert result.count == 0
    assert result.heatmaps is None
    assert not result.attention.instance and not result.attention.joint


def test_training_mode_with_an_empty_scene(params, tiny_dims):
    scene = tiny_scene(tiny_dims)
    targets = Targets(centers=[], center_map=np.zeros((1, 8, 8)), heatmaps=np.zeros((0, tiny_dims.k, 8, 8)))
    result = forward_full(scene.image_tensor(), params, BranchConfig(), targets=targets, loss=LossConfig())
    assert result.count == 0
    assert result.heatmaps is None
    assert result.loss.l_joint == 0.0
    assert result.loss.total == pytest.approx(result.loss.l_inst)
    result.loss.total_tensor.backward()
    assert params.instances.center2_weight.grad is not None


def test_training_losses_are_bit_identical(tiny_dims):
    scene = tiny_scene(tiny_dims)
    targets = render_targets(scene)
    first, second = [
        forward_full(
            scene.image_tensor(), ModelParams.init(tiny_dims, seed=11), BranchConfig(), targets=targets, loss=LossConfig()
        ).loss
        for _ in range(2)
    ]
    assert (first.l_inst, first.l_joint, first.total) == (second.l_inst, second.l_joint, second.total)


def test_forward_is_deterministic(tiny_dims):
    scene = tiny_scene(tiny_dims)
    runs = [
        forward_full(scene.image_tensor(), ModelParams.init(tiny_dims, seed=11), BranchConfig(), centers=scene.centers)
        for _ in range(2)
    ]
    assert np.array_equal(runs[0].heatmaps.data, runs[1].heatmaps.data)


@pytest.mark.parametrize("variant", ["baseline", "ijr_only", "cim_cim", "no_adfm", "adfm_decoder_only"])
def test_forward_runs_every_variant(tiny_dims, variant):
    scene = tiny_scene(tiny_dims)
    params = ModelParams.init(tiny_dims, seed=2)
    result = forward_full(scene.image_tensor(), params, BranchConfig.from_variant(variant), centers=scene.centers)
    assert result.heatmaps.shape == (scene.count, tiny_dims.k, 8, 8)
