import math

import numpy as np
import pytest
import torch
from skimage.metrics import structural_similarity

from src.errors import EmptyRegionError, ShapeError
from src.harness.metrics import PSNR_CAP, psnr, ssim


def test_psnr_of_identical_images_is_capped():
    x = torch.rand(3, 8, 8)
    assert psnr(x, x) == PSNR_CAP == 99.0


def test_psnr_known_value():
    target = torch.zeros(3, 8, 8)
    assert psnr(target + 0.1, target) == pytest.approx(20.0)


def test_psnr_over_a_region():
    target = torch.zeros(2, 3, 4, 4)
    pred = target.clone()
    pred[..., :2, :] = 0.01
    region = torch.zeros(2, 1, 4, 4)
    region[..., :2, :] = 1
    assert psnr(pred, target, region) == pytest.approx(40.0)
    assert psnr(pred, target) == pytest.approx(40.0 + 10 * math.log10(2))
    with pytest.raises(EmptyRegionError):
        psnr(pred, target, torch.zeros(2, 1, 4, 4))


def test_ssim_of_identical_images_is_one():
    x = torch.rand(3, 16, 16)
    assert ssim(x, x) == pytest.approx(1.0)


def test_ssim_matches_skimage():
    rng = np.random.default_rng(0)
    for _ in range(3):
        a = rng.uniform(size=(3, 24, 30))
        b = np.clip(a + rng.normal(scale=0.1, size=a.shape), 0, 1)
        expected = structural_similarity(
            a,
            b,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
            data_range=1.0,
            channel_axis=0,
        )
        assert ssim(torch.from_numpy(b), torch.from_numpy(a)) == pytest.approx(expected, abs=1e-6)


def test_metric_shape_errors():
    with pytest.raises(ShapeError):
        ssim(torch.rand(3, 10, 16), torch.rand(3, 10, 16))
    with pytest.raises(ShapeError):
        psnr(torch.rand(3, 4, 4), torch.rand(3, 4, 5))
