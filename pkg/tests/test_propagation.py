import pytest
import torch

from src.errors import ShapeError
from src.harness.synthetic import SyntheticClipSpec, generate_clip
from src.propagation.propagate import propagate


def _static_clip(frames=4, size=12):
    torch.manual_seed(0)
    image = torch.rand(3, size, size)
    truth = image.expand(frames, 3, size, size).clone()
    flows = torch.zeros(frames - 1, 2, size, size)
    return truth, flows


def test_static_scene_is_filled_exactly():
    truth, flows = _static_clip()
    masks = torch.zeros(4, 1, 12, 12)
    for t in range(4):
        masks[t, :, 2 * t : 2 * t + 3, 1:5] = 1
    corrupted = torch.where(masks > 0.5, torch.zeros_like(truth), truth)

    state = propagate(corrupted, masks, flows, flows)

    assert torch.equal(state.frames, truth)
    assert not state.masks.any()
    assert state.pass_counts == [int(masks.sum())]
    assert torch.equal(state.fill_count, masks.flatten(1).sum(dim=1).long())


def test_hole_shared_by_every_frame_stays_open():
    truth, flows = _static_clip()
    masks = torch.zeros(4, 1, 12, 12)
    masks[:, :, 4:8, 4:8] = 1
    corrupted = torch.where(masks > 0.5, torch.zeros_like(truth), truth)

    state = propagate(corrupted, masks, flows, flows)

    assert torch.equal(state.frames, corrupted)
    assert torch.equal(state.masks, masks)
    assert state.pass_counts == [0]


def test_panning_scene_is_filled_along_the_flow():
    clip = generate_clip(SyntheticClipSpec(num_frames=5, height=12, width=16, pan=(1.0, 0.0), background_seed=4))
    masks = torch.zeros(5, 1, 12, 16)
    masks[:, :, 3:8, 6:10] = 1
    corrupted = torch.where(masks > 0.5, torch.zeros_like(clip.frames), clip.frames)

    state = propagate(corrupted, masks, clip.flows_fwd, clip.flows_bwd)

    assert not state.masks.any()
    assert torch.allclose(state.frames, clip.frames, atol=1e-6)
    assert state.passes >= 1


def test_valid_pixels_never_change_and_rerun_is_idempotent():
    torch.manual_seed(3)
    frames = torch.rand(5, 3, 10, 10)
    flows_fwd = torch.randn(4, 2, 10, 10)
    flows_bwd = torch.randn(4, 2, 10, 10)
    masks = (torch.rand(5, 1, 10, 10) < 0.3).float()

    state = propagate(frames, masks, flows_fwd, flows_bwd, tau=3.0, max_passes=100)

    keep = (masks < 0.5).expand_as(frames)
    assert torch.equal(state.frames[keep], frames[keep])
    assert (state.masks <= masks).all()
    again = propagate(state.frames, state.masks, flows_fwd, flows_bwd, tau=3.0, max_passes=100)
    assert torch.equal(again.frames, state.frames)
    assert torch.equal(again.masks, state.masks)


def test_max_passes_bounds_the_loop():
    clip = generate_clip(SyntheticClipSpec(num_frames=6, height=8, width=16, pan=(1.0, 0.0)))
    masks = torch.zeros(6, 1, 8, 16)
    masks[:, :, 2:6, 4:12] = 1
    state = propagate(clip.frames, masks, clip.flows_fwd, clip.flows_bwd, max_passes=1)
    assert state.passes == 1


def test_single_frame_and_empty_masks_are_returned_unchanged():
    frame = torch.rand(1, 3, 6, 6)
    mask = torch.ones(1, 1, 6, 6)
    empty = torch.zeros(0, 2, 6, 6)
    state = propagate(frame, mask, empty, empty)
    assert torch.equal(state.frames, frame)
    assert state.passes == 0

    truth, flows = _static_clip()
    state = propagate(truth, torch.zeros(4, 1, 12, 12), flows, flows)
    assert torch.equal(state.frames, truth)


def test_shape_errors():
    truth, flows = _static_clip()
    with pytest.raises(ShapeError):
        propagate(truth, torch.zeros(3, 1, 12, 12), flows, flows)
    with pytest.raises(ShapeError):
        propagate(truth, torch.zeros(4, 1, 12, 12), flows[:2], flows)
