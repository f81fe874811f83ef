import json
import math

import pandas as pd
import pytest
import torch

from src.harness.evaluate import evaluate_clip, evaluate_directories
from src.harness.frame_io import write_flows, write_frames, write_masks
from src.harness.schema import EVAL_COLUMNS
from src.main import build_parser, main


def test_evaluate_clip_rows():
    target = torch.rand(3, 3, 16, 16)
    pred = target.clone()
    masks = torch.zeros(3, 1, 16, 16)
    masks[1, :, 4:8, 4:8] = 1
    pred[1, :, 4:8, 4:8] += 0.1
    table = evaluate_clip(pred.clamp(0, 1), target, masks)
    assert list(table.columns) == EVAL_COLUMNS
    assert table["frame"].tolist() == [0, 1, 2]
    assert math.isnan(table["psnr_hole"][0]) and math.isnan(table["psnr_hole"][2])
    assert table["psnr_full"][0] == 99.0
    assert table["ssim_full"][0] == pytest.approx(1.0)


def test_evaluate_directories_writes_tables(tmp_path):
    torch.manual_seed(0)
    target = torch.rand(2, 3, 16, 16)
    masks = torch.zeros(2, 1, 16, 16)
    masks[:, :, 2:6, 2:6] = 1
    write_frames(target, tmp_path / "gt")
    write_frames(target, tmp_path / "pred")
    write_masks(masks, tmp_path / "masks")
    flows = torch.randn(1, 2, 16, 16)
    write_flows(flows, tmp_path / "gt_flows")
    write_flows(flows + torch.tensor([3.0, 4.0]).view(2, 1, 1), tmp_path / "pred_flows")

    summary = evaluate_directories(
        tmp_path / "pred", tmp_path / "gt", tmp_path / "masks", tmp_path / "out", tmp_path / "pred_flows", tmp_path / "gt_flows"
    )

    assert summary.frames == summary.hole_frames == 2
    assert summary.psnr_hole == summary.psnr_full == 99.0
    assert summary.epe_hole == pytest.approx(5.0, abs=1e-5)
    assert len(pd.read_csv(tmp_path / "out" / "metrics.csv")) == 2
    assert json.loads((tmp_path / "out" / "summary.json").read_text())["ssim_full"] == pytest.approx(1.0)


def test_cli_generates_data_with_overrides(tmp_path):
    out = tmp_path / "data"
    code = main(
        [
            "--set", "data.num_clips=2",
            "--set", "data.num_frames=3",
            "--set", "data.height=16",
            "--set", "data.width=16",
            "--log-level", "WARNING",
            "gen-data", "--out", str(out),
        ]
    )
    assert code == 0
    assert sorted(p.name for p in out.glob("clip_*")) == ["clip_0000", "clip_0001"]
    assert len(list((out / "clip_0000" / "frames").glob("*.png"))) == 3
    assert "num_clips = 2" in (out / "config.ini").read_text()


def test_cli_reports_failures_with_exit_code_one(tmp_path):
    missing = str(tmp_path / "missing")
    assert main(["inpaint", "--frames", missing, "--masks", missing, "--out", str(tmp_path / "o")]) == 1
    assert main(["--set", "lafc.n=-3", "gen-data", "--out", str(tmp_path / "d")]) == 1


def test_cli_sweep_without_validation_clips_fails_cleanly(tmp_path):
    code = main(
        [
            "--set", "data.num_clips=2",
            "--set", "data.val_clips=0",
            "--set", "data.num_frames=3",
            "--set", "data.height=16",
            "--set", "data.width=16",
            "--log-level", "WARNING",
            "sweep", "--numbers", "1", "--intervals", "", "--seeds", "0", "--out", str(tmp_path / "s"),
        ]
    )
    assert code == 1


def test_cli_inpaints_with_zero_flows(tmp_path):
    frames = torch.rand(3, 3, 12, 12)
    frames[:] = frames[0]
    masks = torch.zeros(3, 1, 12, 12)
    masks[1, :, 3:6, 3:6] = 1
    write_frames(frames, tmp_path / "frames")
    write_masks(masks, tmp_path / "masks")
    args = ["--log-level", "WARNING", "inpaint", "--frames", str(tmp_path / "frames"), "--masks", str(tmp_path / "masks")]

    assert main(args + ["--flow-source", "zero", "--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("00000.png", "00001.png", "00002.png"):
        assert (tmp_path / "a" / "frames" / name).read_bytes() == (tmp_path / "b" / "frames" / name).read_bytes()
    assert main(args + ["--flow-source", "flo", "--flows", str(tmp_path / "nowhere"), "--out", str(tmp_path / "c")]) == 1


def test_cli_trains_and_inpaints_end_to_end(tmp_path):
    overrides = [
        "data.num_clips=2", "data.val_clips=1", "data.num_frames=4", "data.height=16", "data.width=16",
        "lafc.base_channels=4", "lafc.encoder_stages=2", "lafc.edge_channels=4", "lafc.interval=1",
        "lafc_train.iterations=1",
        "fgt.dim=8", "fgt.flow_dim=8", "fgt.heads=2", "fgt.blocks=TS", "fgt.window=2,2",
        "fgt.global_stride=1", "fgt.embed_channels=2", "fgt.disc_channels=4", "fgt_train.iterations=1",
    ]
    options = [part for item in overrides for part in ("--set", item)] + ["--log-level", "WARNING"]
    data = tmp_path / "data"
    assert main(options + ["gen-data", "--out", str(data)]) == 0
    assert main(options + ["train-lafc", "--data", str(data), "--out", str(tmp_path / "lafc")]) == 0
    assert main(options + ["train-fgt", "--data", str(data), "--out", str(tmp_path / "fgt")]) == 0

    clip = data / "clip_0000"

    def inpaint(out):
        return main(
            options
            + [
                "inpaint",
                "--frames", str(clip / "frames"),
                "--masks", str(clip / "masks"),
                "--flows", str(clip),
                "--lafc", str(tmp_path / "lafc" / "lafc.pt"),
                "--fgt", str(tmp_path / "fgt" / "fgt.pt"),
                "--out", str(out),
                "--dump-flows",
            ]
        )

    out, again = tmp_path / "inpainted", tmp_path / "inpainted_again"
    assert inpaint(out) == 0
    assert inpaint(again) == 0
    assert len(list((out / "frames").glob("*.png"))) == 4
    assert len(list((out / "flows_fwd").glob("*.flo"))) == 3
    for first in sorted((out / "frames").glob("*.png")) + sorted((out / "flows_fwd").glob("*.flo")):
        second = again / first.parent.name / first.name
        assert first.read_bytes() == second.read_bytes()

    code = main(
        options
        + ["evaluate", "--pred", str(out / "frames"), "--gt", str(clip / "frames"), "--masks", str(clip / "masks"),
           "--out", str(tmp_path / "eval")]
    )
    assert code == 0
    assert (tmp_path / "eval" / "summary.json").exists()


def test_parser_defaults():
    args = build_parser().parse_args(["sweep", "--numbers", "1,3"])
    assert args.numbers == [1, 3]
    assert args.intervals == [1, 3, 5, 7]
    assert args.overrides == []
    inpaint = build_parser().parse_args(["inpaint", "--frames", "f", "--masks", "m"])
    assert inpaint.flow_source == "flo"
    ablate = build_parser().parse_args(["ablate", "--variants", "full, no_flow", "--seeds", "4"])
    assert ablate.variants == ["full", "no_flow"]
    assert ablate.seeds == [4]
    assert build_parser().parse_args(["ablate"]).variants == ["full", "window_only", "no_reweight"]
