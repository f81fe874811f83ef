import struct

import numpy as np
import pytest
import torch

from src.errors import EmptyRegionError, FlowFormatError, ShapeError
from src.flowcore.edges import canny_edges, flow_gradients, image_gradients
from src.flowcore.flo_io import FLO_MAGIC, read_flo, write_flo
from src.flowcore.metrics import epe
from src.flowcore.viz import flow_to_rgb


def test_constant_flow_has_no_edges():
    assert not canny_edges(torch.full((2, 16, 16), 2.5)).any()


def test_half_planes_give_one_vertical_edge():
    flow = torch.zeros(2, 24, 24)
    flow[0, :, 12:] = 10.0
    edges = canny_edges(flow)[0]
    columns = torch.nonzero(edges.any(dim=0)).flatten().tolist()
    assert columns
    assert all(10 <= c <= 13 for c in columns)
    assert edges[4:20].any(dim=1).all()


def test_high_threshold_admits_nothing():
    flow = torch.zeros(2, 24, 24)
    flow[0, :, 12:] = 10.0
    assert not canny_edges(flow, low=4.5, high=4.5).any()


def test_gradients_of_constant_and_plane():
    assert not flow_gradients(torch.full((2, 5, 6), 3.0)).any()
    plane = torch.arange(6.0).expand(5, 6)
    flow = torch.stack([plane, torch.zeros(5, 6)])
    grads = flow_gradients(flow)
    assert torch.equal(grads[0, 0, :, :-1], torch.ones(5, 5))


def test_gradients_match_stencil():
    torch.manual_seed(0)
    x = torch.randn(4, 7)
    grads = image_gradients(x)
    for y in range(4):
        for c in range(7):
            dx = x[y, c + 1] - x[y, c] if c < 6 else 0.0
            dy = x[y + 1, c] - x[y, c] if y < 3 else 0.0
            assert grads[0, y, c] == pytest.approx(float(dx))
            assert grads[1, y, c] == pytest.approx(float(dy))


def test_epe_examples():
    gt = torch.randn(2, 4, 4)
    assert epe(gt, gt) == 0
    shifted = gt + torch.tensor([3.0, 4.0]).view(2, 1, 1)
    assert epe(shifted, gt).item() == pytest.approx(5.0)
    assert epe(gt, shifted).item() == pytest.approx(5.0)


def test_epe_region_errors():
    with pytest.raises(EmptyRegionError):
        epe(torch.zeros(2, 3, 3), torch.ones(2, 3, 3), torch.zeros(1, 3, 3))
    with pytest.raises(ShapeError):
        epe(torch.zeros(2, 3, 3), torch.zeros(2, 3, 4))


def test_flo_round_trip_is_bit_exact(tmp_path):
    flow = torch.randn(2, 5, 7)
    write_flo(flow, tmp_path / "a.flo")
    assert torch.equal(read_flo(tmp_path / "a.flo"), flow)


def test_flo_byte_layout(tmp_path):
    flow = torch.tensor([[[1.0, 2.0], [3.0, 4.0]], [[-1.0, -2.0], [-3.0, -4.0]]])
    write_flo(flow, tmp_path / "b.flo")
    raw = (tmp_path / "b.flo").read_bytes()
    expected = struct.pack("<f", FLO_MAGIC) + struct.pack("<ii", 2, 2)
    expected += struct.pack("<8f", 1, -1, 2, -2, 3, -3, 4, -4)
    assert len(raw) == 44
    assert raw == expected


def test_flo_format_errors(tmp_path):
    (tmp_path / "bad.flo").write_bytes(struct.pack("<f", 1.0) + struct.pack("<ii", 1, 1) + b"\0" * 8)
    with pytest.raises(FlowFormatError):
        read_flo(tmp_path / "bad.flo")
    (tmp_path / "short.flo").write_bytes(struct.pack("<f", FLO_MAGIC) + struct.pack("<ii", 4, 4) + b"\0" * 8)
    with pytest.raises(FlowFormatError):
        read_flo(tmp_path / "short.flo")


def test_flow_to_rgb_is_deterministic():
    flow = torch.randn(2, 6, 9)
    image = flow_to_rgb(flow)
    assert image.shape == (6, 9, 3)
    assert image.dtype == np.uint8
    assert np.array_equal(image, flow_to_rgb(flow))
    assert (flow_to_rgb(torch.zeros(2, 3, 3)) == 255).all()
