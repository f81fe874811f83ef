import math

import numpy as np
import pandas as pd
import pytest

from src.checkpoint import load_checkpoint
from src.config import build_config
from src.errors import ConfigurationError
from src.harness.ablation import VARIANTS, ablate_fgt, mean_by_variant
from src.harness.dataset import generate_dataset, split_dataset
from src.harness.schema import ABLATION_COLUMNS, FGT_LOG_COLUMNS, SWEEP_COLUMNS
from src.harness.sweep import flow_number_to_n, sweep_flow_window
from src.harness.train_fgt import evaluate_fgt, make_batch, train_fgt

TOY_FGT = {
    "dim": 8,
    "flow_dim": 8,
    "heads": 2,
    "blocks": "TS",
    "zones": 1,
    "window": "2,2",
    "global_stride": 1,
    "embed_channels": 2,
    "disc_channels": 4,
}
TINY_LAFC = {"base_channels": 4, "encoder_stages": 2, "edge_channels": 4}


def _config(**sections):
    values = {
        "run": {"seed": 1, "device": "cpu"},
        "data": {"num_clips": 3, "val_clips": 1, "num_frames": 4, "height": 16, "width": 16, "num_sprites": 1},
        "fgt": dict(TOY_FGT),
        "lafc": dict(TINY_LAFC),
        "fgt_train": {"iterations": 2, "log_interval": 1},
        "lafc_train": {"iterations": 1, "log_interval": 1, "batch_size": 2},
    }
    for name, entries in sections.items():
        values.setdefault(name, {}).update(entries)
    return build_config(values)


def _clips(config):
    return split_dataset(generate_dataset(config.data, config.seed), config.data.val_clips)


def test_batches_stack_clips_with_one_flow_per_frame():
    config = _config()
    train, _ = _clips(config)
    batch = make_batch(train, "cpu")
    assert batch.frames.shape == (2, 4, 3, 16, 16)
    assert batch.flows.shape == (2, 4, 2, 16, 16)
    assert batch.masks.shape == (2, 4, 1, 16, 16)


def test_fgt_training_is_deterministic_and_checkpointed(tmp_path):
    config = _config()
    train, val = _clips(config)

    first = train_fgt(train, val, config, out_dir=tmp_path, show_progress=False)
    second = train_fgt(train, val, config, show_progress=False)

    assert list(first.history.columns) == FGT_LOG_COLUMNS
    assert first.history["iteration"].tolist() == [0, 1, 2]
    assert first.history.equals(second.history)
    assert first.history["d_loss"].iloc[1:].notna().all()
    checkpoint = load_checkpoint(first.checkpoint, "fgt")
    assert set(checkpoint.state_dicts) == {"generator", "discriminator"}
    assert len(pd.read_csv(tmp_path / "fgt_log.csv")) == 3


def test_fgt_training_without_adversary():
    config = _config(fgt={"adversarial_weight": 0.0})
    train, val = _clips(config)
    result = train_fgt(train, val, config, show_progress=False)
    assert result.discriminator is None
    assert result.history["adv_g"].isna().all()
    assert evaluate_fgt(result.generator, val) is not None


@pytest.mark.slow
def test_fgt_overfits_one_clip():
    config = build_config(
        {
            "run": {"seed": 1, "device": "cpu"},
            "data": {"num_clips": 1, "val_clips": 0, "num_frames": 8, "height": 64, "width": 64},
            "fgt": {"dim": 64, "flow_dim": 64, "adversarial_weight": 0.0},
            "fgt_train": {"iterations": 300, "log_interval": 300, "learning_rate": 1e-4, "milestone_fraction": 1.0},
        }
    )
    clips = generate_dataset(config.data, config.seed)
    result = train_fgt(clips, clips, config, show_progress=False)
    assert result.history["iteration"].tolist() == [0, 300]
    start, end = result.history["val_psnr"].iloc[0], result.history["val_psnr"].iloc[-1]
    assert end - start >= 6.0


def test_ablation_table_covers_every_variant(tmp_path):
    config = _config(fgt={"adversarial_weight": 0.0}, fgt_train={"iterations": 1})
    train, val = _clips(config)

    table = ablate_fgt(train, val, config, variants=list(VARIANTS), seeds=[0, 1], out_path=tmp_path / "ablation.csv")
    again = ablate_fgt(train, val, config, variants=list(VARIANTS), seeds=[0, 1])

    assert list(table.columns) == ABLATION_COLUMNS
    assert table["variant"].tolist() == ["full", "window_only", "no_reweight", "no_flow"]
    assert table["flow_guidance"].tolist() == ["reweight", "reweight", "concat", "none"]
    assert table["global_tokens"].tolist() == [True, False, True, True]
    assert (table["seeds"] == 2).all()
    assert all(math.isfinite(score) for score in table["psnr_mean"])
    assert table.equals(again)
    assert len(pd.read_csv(tmp_path / "ablation.csv")) == 4
    with pytest.raises(ConfigurationError):
        ablate_fgt(train, [], config)
    with pytest.raises(ConfigurationError):
        ablate_fgt(train, val, config, variants=["full", "bogus"])


@pytest.mark.slow
def test_global_tokens_and_flow_reweighting_do_not_hurt():
    config = _config(
        data={"num_clips": 8, "val_clips": 2, "num_frames": 6, "height": 32, "width": 32, "num_sprites": 2},
        fgt={"dim": 32, "flow_dim": 32, "heads": 4, "blocks": "TSTS", "window": "2,2", "global_stride": 2,
             "embed_channels": 8, "adversarial_weight": 0.0},
        fgt_train={"iterations": 400, "log_interval": 400, "learning_rate": 1e-3, "batch_size": 2},
    )
    train, val = _clips(config)
    means = mean_by_variant(ablate_fgt(train, val, config, seeds=[0, 1, 2]))
    assert means["full"] >= means["window_only"]
    assert means["full"] >= means["no_reweight"]


@pytest.mark.slow
def test_three_flows_complete_better_than_one():
    config = _config(
        data={"num_clips": 6, "val_clips": 2, "num_frames": 8, "height": 32, "width": 32, "num_sprites": 2},
        lafc={"base_channels": 8, "encoder_stages": 2, "edge_channels": 8},
        lafc_train={"iterations": 300, "log_interval": 300, "learning_rate": 1e-3, "batch_size": 4},
    )
    train, val = _clips(config)
    table = sweep_flow_window(train, val, config, numbers=[1, 3], intervals=[], seeds=[0, 1, 2], fixed_interval=3)
    epe = dict(zip(table["flow_number"], table["epe_mean"]))
    assert table["interval"].tolist() == [3, 3]
    assert epe[3] <= epe[1]


def test_flow_number_must_be_odd():
    assert [flow_number_to_n(k) for k in (1, 3, 5, 7)] == [0, 1, 2, 3]
    for bad in (0, 2, -1):
        with pytest.raises(ConfigurationError):
            flow_number_to_n(bad)


def test_sweep_rows_and_reruns(tmp_path):
    config = _config()
    train, val = _clips(config)
    kwargs = dict(numbers=[1, 3], intervals=[2], seeds=[0, 1], fixed_interval=1, fixed_number=1)

    table = sweep_flow_window(train, val, config, out_path=tmp_path / "sweep.csv", **kwargs)
    again = sweep_flow_window(train, val, config, **kwargs)

    assert list(table.columns) == SWEEP_COLUMNS
    assert table["axis"].tolist() == ["number", "number", "interval"]
    assert table[["flow_number", "interval"]].values.tolist() == [[1, 1], [3, 1], [1, 2]]
    assert (table["seeds"] == 2).all()
    assert np.isfinite(table["epe_mean"]).all()
    assert table.equals(again)
    assert len(pd.read_csv(tmp_path / "sweep.csv")) == 3
    with pytest.raises(ValueError):
        sweep_flow_window(train, [], config, **kwargs)
