import pytest
import torch

from src.errors import ShapeError
from src.flowcore.warp import fb_consistency_mask, sample_bilinear, warp_backward


def _constant_flow(dx, dy, h=8, w=10):
    flow = torch.zeros(2, h, w, dtype=torch.float64)
    flow[0] = dx
    flow[1] = dy
    return flow


def test_zero_flow_is_identity():
    image = torch.rand(3, 6, 7)
    warped, valid = warp_backward(image, torch.zeros(2, 6, 7))
    assert torch.equal(warped, image)
    assert torch.equal(valid, torch.ones(1, 6, 7))


def test_unit_shift_matches_ramp():
    h, w = 5, 8
    ramp = (torch.arange(w, dtype=torch.float64) / w).expand(h, w).unsqueeze(0)
    warped, valid = warp_backward(ramp, _constant_flow(1.0, 0.0, h, w))
    expected = (torch.arange(w, dtype=torch.float64) + 1) / w
    assert torch.allclose(warped[0, :, :-1], expected[:-1].expand(h, w - 1))
    assert valid[0, :, :-1].all()
    assert not valid[0, :, -1].any()


def test_shift_by_width_is_all_invalid():
    _, valid = warp_backward(torch.rand(1, 4, 6), _constant_flow(6.0, 0.0, 4, 6))
    assert not valid.any()


def test_half_pixel_sample_is_bilinear():
    image = torch.tensor([[[0.0, 1.0], [2.0, 3.0]]])
    value = sample_bilinear(image.unsqueeze(0), torch.full((1, 2, 2), 0.5), torch.full((1, 2, 2), 0.5))
    assert torch.allclose(value, torch.full((1, 1, 2, 2), 1.5))


def test_size_mismatch_is_rejected():
    with pytest.raises(ShapeError):
        warp_backward(torch.rand(3, 4, 4), torch.zeros(2, 4, 5))
    with pytest.raises(ShapeError):
        fb_consistency_mask(torch.zeros(2, 4, 4), torch.zeros(2, 4, 5))


def test_opposite_flows_are_consistent():
    fwd = _constant_flow(0.0, 1.0)
    occluded = fb_consistency_mask(fwd, -fwd, tau=0.1)
    # only rows whose round trip leaves the image are flagged
    assert not occluded[0, :-1].any()
    assert occluded[0, -1].all()


def test_zero_tau_flags_every_nonzero_residual():
    occluded = fb_consistency_mask(_constant_flow(1.0, 0.0), torch.zeros(2, 8, 10, dtype=torch.float64), tau=0.0)
    assert occluded.all()


def test_negative_tau_is_rejected():
    with pytest.raises(ValueError):
        fb_consistency_mask(torch.zeros(2, 3, 3), torch.zeros(2, 3, 3), tau=-1.0)


def test_translating_square_matches_bruteforce():
    h, w, size, shift = 16, 16, 4, 4
    y0, x0 = 5, 3
    fwd = torch.zeros(2, h, w, dtype=torch.float64)
    fwd[0, y0 : y0 + size, x0 : x0 + size] = shift
    bwd = torch.zeros(2, h, w, dtype=torch.float64)
    bwd[0, y0 : y0 + size, x0 + shift : x0 + shift + size] = -shift

    occluded = fb_consistency_mask(fwd, bwd, tau=0.5)

    expected = torch.zeros(1, h, w, dtype=torch.float64)
    for y in range(h):
        for x in range(w):
            tx, ty = x + fwd[0, y, x].item(), y + fwd[1, y, x].item()
            if not (0 <= tx <= w - 1 and 0 <= ty <= h - 1):
                expected[0, y, x] = 1
                continue
            back = bwd[:, int(ty), int(tx)]
            residual = ((fwd[0, y, x] + back[0]) ** 2 + (fwd[1, y, x] + back[1]) ** 2).sqrt()
            expected[0, y, x] = float(residual > 0.5)
    assert torch.equal(occluded, expected)
    # background about to be covered by the square is occluded
    assert occluded[0, y0, x0 + size : x0 + size + shift].all()


def test_larger_tau_never_adds_occlusions():
    torch.manual_seed(0)
    fwd = torch.randn(2, 12, 12)
    bwd = torch.randn(2, 12, 12)
    previous = fb_consistency_mask(fwd, bwd, tau=0.0)
    for tau in (0.25, 0.5, 1.0, 2.0, 4.0):
        current = fb_consistency_mask(fwd, bwd, tau=tau)
        assert (current <= previous).all()
        previous = current
