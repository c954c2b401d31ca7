"""Training command line: flags or a JSON config mirroring TrainConfig."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import make_image_bank
from .formats import read_psf_map
from .train import TrainConfig, train_base


def _load_config(args) -> TrainConfig:
    values = {}
    if args.config:
        values.update(json.loads(Path(args.config).read_text()))
    for key in (
        "iterations",
        "batch",
        "learning_rate",
        "crop",
        "loss",
        "seed",
        "stages",
        "noise_sigma",
    ):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if args.subgrid:
        r, c = args.subgrid.split("x")
        values["psf_subgrid"] = (int(r), int(c))
    if args.widths:
        values["widths"] = tuple(int(w) for w in args.widths.split(","))
        values["scales"] = len(values["widths"])
    for key in ("psf_subgrid", "widths", "mu_schedule", "lambda_schedule"):
        if key in values and isinstance(values[key], list):
            values[key] = tuple(values[key])
    return TrainConfig(**values)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="abertrain", description="Train projector weights for the restoration engine"
    )
    parser.add_argument("--config", help="JSON file with TrainConfig fields")
    parser.add_argument("--psfm", action="append", required=True, help="PSF map file, repeatable")
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--batch", type=int)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float)
    parser.add_argument("--crop", type=int)
    parser.add_argument("--subgrid", help="PSF sub-grid, e.g. 2x2")
    parser.add_argument("--widths", help="comma-separated channel widths, e.g. 8,16,32")
    parser.add_argument("--stages", type=int)
    parser.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--loss", choices=["l1"])
    parser.add_argument("--images", type=int, default=20, help="synthetic clean images to draw")
    parser.add_argument("--image-size", type=int, default=256)
    parser.add_argument("--init-weights", help="UABC file to fine-tune from")
    parser.add_argument("--loss-log", help="CSV loss curve path (default OUTPUT.loss.csv)")
    parser.add_argument("-o", "--output", required=True, help="UABC weights output path")
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        psf_maps = [read_psf_map(p) for p in args.psfm]
        images = make_image_bank(args.images, args.image_size, seed=config.seed + 1000)
        loss_log = args.loss_log or (args.output + ".loss.csv")
        losses = train_base(
            images,
            psf_maps,
            config,
            weights_out=args.output,
            loss_log_out=loss_log,
            init_weights=args.init_weights,
        )
        if losses:
            print(
                f"trained {len(losses)} iterations: loss {losses[0]:.5f} -> {losses[-1]:.5f}"
            )
        else:
            print("exported initialization weights (0 iterations)")
        return 0
    except Exception as exc:  # noqa: BLE001 - single CLI error boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
