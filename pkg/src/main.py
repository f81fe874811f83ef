"""Command-line entry points for the flow-guided video inpainting workflow."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

try:  # pragma: no cover - optional dependency
    from rich import print as rich_print
    from rich.logging import RichHandler
    from rich.markup import escape
except ModuleNotFoundError:  # pragma: no cover - optional dependency
    def escape(markup: str) -> str:
        return markup

    def rich_print(*args: object, **kwargs: object) -> None:
        """Fallback printer when ``rich`` is not installed."""

        print(*args, **kwargs)

    RichHandler = None  # type: ignore[assignment]

from src.checkpoint import load_checkpoint
from src.config import DATA_ROOT, LOG_LEVEL, RUNS_ROOT, RunConfig, load_run_config
from src.errors import InpaintError
from src.fgt.model import FgtNet
from src.harness.ablation import DEFAULT_SEEDS as ABLATION_SEEDS
from src.harness.ablation import DEFAULT_VARIANTS as ABLATION_VARIANTS
from src.harness.ablation import ablate_fgt
from src.harness.dataset import (
    generate_dataset,
    lafc_samples,
    load_or_generate,
    save_dataset,
    split_dataset,
)
from src.harness.evaluate import evaluate_directories
from src.harness.flow_provider import make_flow_provider
from src.harness.frame_io import read_frames, read_masks, write_flows, write_frames
from src.harness.pipeline import inpaint_pipeline
from src.harness.sweep import DEFAULT_INTERVALS, DEFAULT_NUMBERS, DEFAULT_SEEDS, sweep_flow_window
from src.harness.train_fgt import train_fgt
from src.lafc.model import LafcNet
from src.lafc.train import train_lafc
from src.runtime import seed_everything

logger = logging.getLogger(__name__)


def _setup_logging(level: str = LOG_LEVEL) -> None:
    """Configure logging with Rich handler if available, otherwise use basic config."""

    log_level = getattr(logging, level.upper(), logging.INFO)
    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    if RichHandler:
        logging.basicConfig(
            level=log_level,
            format="%(message)s",
            datefmt="[%X]",
            handlers=[RichHandler(rich_tracebacks=True)],
            force=True,
        )
    else:
        logging.basicConfig(level=log_level, format=log_format, datefmt="%Y-%m-%d %H:%M:%S", force=True)

    # Per-frame chatter
    logging.getLogger("src.flowcore.fill").setLevel(max(log_level, logging.INFO))
    logging.getLogger("src.propagation.propagate").setLevel(max(log_level, logging.INFO))


def _int_list(text: str) -> List[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _name_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _run_dir(args: argparse.Namespace, name: str) -> Path:
    out = Path(args.out) if args.out else RUNS_ROOT / name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _save_config(config: RunConfig, out: Path) -> None:
    (out / "config.ini").write_text(config.to_text())


def cmd_gen_data(args: argparse.Namespace, config: RunConfig) -> None:
    out = Path(args.out) if args.out else DATA_ROOT
    clips = generate_dataset(config.data, config.seed, count=args.clips, workers=args.workers, show_progress=True)
    save_dataset(clips, out)
    _save_config(config, out)
    rich_print(f"[green]Wrote {len(clips)} clips to {out}.[/green]")


def cmd_train_lafc(args: argparse.Namespace, config: RunConfig) -> None:
    out = _run_dir(args, "lafc")
    _save_config(config, out)
    train_clips, val_clips = split_dataset(load_or_generate(config, args.data), config.data.val_clips)
    result = train_lafc(lafc_samples(train_clips, config), lafc_samples(val_clips, config), config, out_dir=out)
    rich_print(f"[green]LAFC checkpoint:[/green] {result.checkpoint}")


def cmd_train_fgt(args: argparse.Namespace, config: RunConfig) -> None:
    out = _run_dir(args, "fgt")
    _save_config(config, out)
    train_clips, val_clips = split_dataset(load_or_generate(config, args.data), config.data.val_clips)
    result = train_fgt(train_clips, val_clips, config, out_dir=out)
    rich_print(f"[green]FGT checkpoint:[/green] {result.checkpoint}")


def cmd_inpaint(args: argparse.Namespace, config: RunConfig) -> None:
    seed_everything(config.seed)
    out = _run_dir(args, "inpaint")
    frames, masks = read_frames(args.frames), read_masks(args.masks)
    lafc = LafcNet.from_checkpoint(load_checkpoint(args.lafc, "lafc")) if args.lafc else None
    fgt = FgtNet.from_checkpoint(load_checkpoint(args.fgt, "fgt")) if args.fgt else None
    source = args.flow_source
    if source == "flo" and not args.flows:
        logger.warning("No --flows directory given; using zero flows")
        source = "zero"
    provider = make_flow_provider(source, args.flows)
    result = inpaint_pipeline(frames, masks, config, lafc, fgt, provider)
    write_frames(result.frames, out / "frames")
    if args.dump_flows and result.flows_fwd.shape[0]:
        write_flows(result.flows_fwd, out / "flows_fwd", visualize=True)
        write_flows(result.flows_bwd, out / "flows_bwd", visualize=True)
    for report in result.diagnostics:
        status = "skipped" if report.skipped else f"{report.seconds:.2f}s"
        rich_print(f"  {report.stage:<10} holes={report.hole_pixels:<8} {status}")
    rich_print(f"[green]Inpainted {frames.shape[0]} frames into {out / 'frames'}.[/green]")


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> None:
    out = _run_dir(args, "evaluate")
    summary = evaluate_directories(args.pred, args.gt, args.masks, out, args.pred_flows, args.gt_flows)
    rich_print(f"[green]PSNR (hole) {summary.psnr_hole}, PSNR {summary.psnr_full:.2f}, SSIM {summary.ssim_full:.4f}[/green]")


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> None:
    out = _run_dir(args, "sweep")
    _save_config(config, out)
    train_clips, val_clips = split_dataset(load_or_generate(config, args.data), config.data.val_clips)
    table = sweep_flow_window(
        train_clips,
        val_clips,
        config,
        numbers=args.numbers,
        intervals=args.intervals,
        seeds=args.seeds,
        out_path=out / "sweep.csv",
    )
    rich_print(table.to_string(index=False))


def cmd_ablate(args: argparse.Namespace, config: RunConfig) -> None:
    out = _run_dir(args, "ablate")
    _save_config(config, out)
    train_clips, val_clips = split_dataset(load_or_generate(config, args.data), config.data.val_clips)
    table = ablate_fgt(train_clips, val_clips, config, variants=args.variants, seeds=args.seeds, out_path=out / "ablation.csv")
    rich_print(table.to_string(index=False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inpaint", description="Flow-guided video inpainting at desk scale.")
    parser.add_argument("--config", help="sectioned key = value config file")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override one value"
    )
    parser.add_argument("--log-level", default=LOG_LEVEL)
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-data", help="render a synthetic dataset")
    gen.add_argument("--out")
    gen.add_argument("--clips", type=int)
    gen.add_argument("--workers", type=int, default=0)
    gen.set_defaults(handler=cmd_gen_data)

    for name, handler in (("train-lafc", cmd_train_lafc), ("train-fgt", cmd_train_fgt)):
        train = commands.add_parser(name, help=f"{name.split('-')[1].upper()} training")
        train.add_argument("--data", help="dataset directory; generated in memory when omitted")
        train.add_argument("--out")
        train.set_defaults(handler=handler)

    inpaint = commands.add_parser("inpaint", help="inpaint a frame directory")
    inpaint.add_argument("--frames", required=True)
    inpaint.add_argument("--masks", required=True)
    inpaint.add_argument("--flows", help="directory with flows_fwd/ and flows_bwd/ .flo folders")
    inpaint.add_argument("--flow-source", choices=("flo", "zero"), default="flo", help="where input flows come from")
    inpaint.add_argument("--lafc", help="LAFC checkpoint")
    inpaint.add_argument("--fgt", help="FGT checkpoint")
    inpaint.add_argument("--out")
    inpaint.add_argument("--dump-flows", action="store_true", help="write completed flows and their colour images")
    inpaint.set_defaults(handler=cmd_inpaint)

    evaluate = commands.add_parser("evaluate", help="score inpainted frames")
    evaluate.add_argument("--pred", required=True)
    evaluate.add_argument("--gt", required=True)
    evaluate.add_argument("--masks", required=True)
    evaluate.add_argument("--pred-flows")
    evaluate.add_argument("--gt-flows")
    evaluate.add_argument("--out")
    evaluate.set_defaults(handler=cmd_evaluate)

    sweep = commands.add_parser("sweep", help="flow number and interval sweep")
    sweep.add_argument("--data")
    sweep.add_argument("--out")
    sweep.add_argument("--numbers", type=_int_list, default=list(DEFAULT_NUMBERS))
    sweep.add_argument("--intervals", type=_int_list, default=list(DEFAULT_INTERVALS))
    sweep.add_argument("--seeds", type=_int_list, default=list(DEFAULT_SEEDS))
    sweep.set_defaults(handler=cmd_sweep)

    ablate = commands.add_parser("ablate", help="attention and flow-guidance ablation of the transformer")
    ablate.add_argument("--data")
    ablate.add_argument("--out")
    ablate.add_argument("--variants", type=_name_list, default=list(ABLATION_VARIANTS))
    ablate.add_argument("--seeds", type=_int_list, default=list(ABLATION_SEEDS))
    ablate.set_defaults(handler=cmd_ablate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and return the exit code."""

    args = build_parser().parse_args(argv)
    _setup_logging(args.log_level)
    try:
        config = load_run_config(args.config, args.overrides)
        args.handler(args, config)
    except (InpaintError, OSError, ValueError) as exc:
        logger.debug("Command failed", exc_info=True)
        rich_print(f"[red]{args.command} failed:[/red] {escape(str(exc))}")
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover - CLI invocation
    sys.exit(main())
