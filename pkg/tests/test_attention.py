import math
import random

import pytest
import torch

from src.errors import ConfigurationError, ShapeError
from src.fgt.attention import (
    FlowReweight,
    GlobalTokens,
    MultiHeadAttention,
    PositionalEncodingGenerator,
    SpatialDualAttention,
    TemporalZoneAttention,
    global_stride_report,
    min_global_stride,
    pad_tokens,
    retrieval_count,
    window_merge,
    window_partition,
    zone_merge,
    zone_partition,
)


def test_partitions_round_trip():
    x = torch.randn(2, 3, 8, 12, 5)
    windows = window_partition(x, 4, 3)
    assert windows.shape == (2 * 3 * 2 * 4, 12, 5)
    assert torch.equal(window_merge(windows, (2, 3, 8, 12), 4, 3), x)
    cubes = zone_partition(x, 2)
    assert cubes.shape == (2 * 4, 3 * 4 * 6, 5)
    assert torch.equal(zone_merge(cubes, (2, 3, 8, 12), 2), x)
    with pytest.raises(ShapeError):
        window_partition(x, 5, 3)


def test_window_partition_groups_neighbours():
    x = torch.arange(16.0).view(1, 1, 4, 4, 1)
    windows = window_partition(x, 2, 2)
    assert windows[0].flatten().tolist() == [0.0, 1.0, 4.0, 5.0]
    assert windows[3].flatten().tolist() == [10.0, 11.0, 14.0, 15.0]


def test_zone_cubes_span_all_frames():
    cubes = zone_partition(torch.randn(1, 4, 16, 16, 3), 2)
    assert cubes.shape == (4, 256, 3)


def test_pad_tokens_marks_real_tokens():
    padded, valid = pad_tokens(torch.randn(1, 2, 5, 7, 3), 4, 4)
    assert padded.shape == (1, 2, 8, 8, 3)
    assert int(valid.sum()) == 2 * 5 * 7
    assert pad_tokens(torch.randn(1, 1, 4, 8, 3), 4, 4)[1] is None


def test_attention_rows_sum_to_one_and_ignore_padding():
    rng = random.Random(0)
    for _ in range(20):
        heads = rng.choice([1, 2, 4])
        dim = heads * rng.randint(1, 4)
        lq, lk = rng.randint(1, 9), rng.randint(2, 9)
        attn = MultiHeadAttention(dim, dim, dim, heads)
        valid = torch.rand(3, lk) > 0.3
        valid[:, 0] = True
        _, weights = attn(torch.randn(3, lq, dim), torch.randn(3, lk, dim), valid)
        assert weights.shape == (3, heads, lq, lk)
        assert torch.allclose(weights.sum(dim=-1), torch.ones(3, heads, lq), atol=1e-6)
        assert (weights.masked_select(~valid[:, None, None, :].expand_as(weights)) == 0).all()


def test_retrieval_count_matches_global_token_grid():
    rng = random.Random(1)
    for _ in range(50):
        height, width = rng.randint(1, 40), rng.randint(1, 40)
        h, w, stride = rng.randint(1, 8), rng.randint(1, 8), rng.randint(1, 6)
        tokens = GlobalTokens(1, 2 * stride, stride)(torch.zeros(1, 1, height, width, 1))
        assert retrieval_count(height, width, h, w, stride) == tokens.shape[2] * tokens.shape[3] + h * w


def test_min_global_stride_examples():
    assert min_global_stride(8, 8, 7, 7) == 3
    assert min_global_stride(64, 108, 8, 8) == 2
    report = global_stride_report(5, 5, 4, 4)
    assert (report.closed_form, report.minimum) == (2, 3)
    assert report.count_at_minimum == 20
    assert report.count_below_minimum == 25 == report.all_pairs


def test_min_global_stride_is_the_smallest_that_saves_keys():
    for height, width, h, w in [(16, 16, 4, 4), (10, 30, 5, 5), (64, 108, 8, 8), (9, 9, 8, 8)]:
        stride = min_global_stride(height, width, h, w)
        assert retrieval_count(height, width, h, w, stride) < height * width
        for smaller in range(1, stride):
            assert retrieval_count(height, width, h, w, smaller) >= height * width


def test_min_global_stride_errors():
    with pytest.raises(ConfigurationError):
        min_global_stride(4, 4, 4, 4)
    with pytest.raises(ConfigurationError):
        min_global_stride(3, 3, 2, 4)


def test_global_tokens_grid_and_weights():
    tokens = GlobalTokens(8, 8, 4)(torch.randn(1, 2, 64, 108, 8))
    assert tokens.shape == (1, 2, 16, 27, 8)

    identity = GlobalTokens(3, 1, 1)
    torch.nn.init.ones_(identity.conv.weight)
    torch.nn.init.zeros_(identity.conv.bias)
    x = torch.randn(1, 2, 5, 6, 3)
    assert torch.allclose(identity(x), x)

    average = GlobalTokens(1, 2, 2)
    torch.nn.init.constant_(average.conv.weight, 0.25)
    torch.nn.init.zeros_(average.conv.bias)
    x = torch.arange(16.0).view(1, 1, 4, 4, 1)
    assert average(x).flatten().tolist() == [2.5, 4.5, 10.5, 12.5]


def test_positional_encoding_starts_as_identity():
    peg = PositionalEncodingGenerator(4)
    x = torch.randn(1, 2, 5, 5, 4)
    assert torch.equal(peg(x), x)
    with torch.no_grad():
        peg.conv.weight[:, :, 1, 1] = 1.0
    assert torch.allclose(peg(x), 2 * x)


def test_temporal_attention_handles_single_frames_and_padding():
    attn = TemporalZoneAttention(8, 2, zones=2)
    out, weights = attn(torch.randn(1, 1, 5, 7, 8), return_weights=True)
    assert out.shape == (1, 1, 5, 7, 8)
    assert weights.shape == (4, 2, 12, 12)
    assert torch.isfinite(out).all()


def test_temporal_attention_is_frame_permutation_equivariant():
    torch.manual_seed(0)
    attn = TemporalZoneAttention(8, 2, zones=2)
    x = torch.randn(1, 4, 4, 4, 8)
    order = torch.tensor([2, 0, 3, 1])
    assert torch.allclose(attn(x[:, order]), attn(x)[:, order], atol=1e-5)


def test_flow_reweight_gate_probes():
    reweight = FlowReweight(512, 512)
    assert reweight.out_dim == 1024
    frames, flows = torch.randn(1, 1, 2, 2, 512), torch.randn(1, 1, 2, 2, 512)
    reweight.fixed_gate = 0.0
    closed = reweight(frames, flows)
    assert torch.equal(closed[..., :512], frames)
    assert not closed[..., 512:].any()
    reweight.fixed_gate = 1.0
    assert torch.equal(reweight(frames, flows), torch.cat([frames, flows], dim=-1))
    reweight.fixed_gate = None
    gated = reweight(frames, flows)[..., 512:]
    assert (gated.abs() <= flows.abs()).all()
    with pytest.raises(ShapeError):
        reweight(frames, flows[:, :, :1])


def test_spatial_keys_are_window_plus_global_tokens():
    attn = SpatialDualAttention(8, 8, 2, window=(8, 8), stride=4)
    out, weights = attn(torch.randn(1, 1, 64, 108, 8), return_weights=True)
    assert out.shape == (1, 1, 64, 108, 8)
    assert weights.shape[-2:] == (64, 496)
    assert weights.shape[-1] == retrieval_count(64, 108, 8, 8, 4)


def test_spatial_attention_without_global_tokens():
    attn = SpatialDualAttention(8, 8, 2, window=(4, 4), use_global_tokens=False)
    _, weights = attn(torch.randn(1, 2, 8, 8, 8), return_weights=True)
    assert weights.shape == (2 * 4, 2, 16, 16)


def test_spatial_window_is_clamped_to_the_grid():
    attn = SpatialDualAttention(4, 4, 1, window=(8, 8), stride=2)
    assert attn.effective_window(3, 5) == (3, 5)
    out, weights = attn(torch.randn(1, 1, 3, 5, 4), return_weights=True)
    assert out.shape == (1, 1, 3, 5, 4)
    assert weights.shape[-1] == 15 + math.ceil(3 / 2) * math.ceil(5 / 2)


def test_attention_gradchecks():
    torch.manual_seed(0)
    temporal = TemporalZoneAttention(4, 2, zones=1).double()
    x = torch.randn(1, 2, 2, 2, 4, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(temporal, (x,))

    spatial = SpatialDualAttention(4, 4, 2, window=(2, 2), stride=2).double()
    y = torch.randn(1, 1, 3, 4, 4, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(spatial, (y,))

    reweight = FlowReweight(3, 2, hidden=4).double()
    a = torch.randn(1, 1, 2, 2, 3, dtype=torch.float64, requires_grad=True)
    b = torch.randn(1, 1, 2, 2, 2, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(reweight, (a, b))
