"""Command-line interface tying the restoration modules together.

Subcommands: synth-psf, degrade, deconv, refine, eval.  Every command
writes a JSON run manifest next to its primary output so runs can be
reproduced exactly.  Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .blur import NoiseSpec, degrade
from .errors import InvalidSpec
from .imgio import read_image, write_image
from .metrics import benchmark
from .projectors import cnn_projector, identity_projector, load_weights, tv_projector
from .psf import load_psf_map, save_psf_map, synth_gaussian_map
from .solver import SolverConfig, default_schedules, solve
from .tune import (
    RefineConfig,
    load_hyperparam_map,
    refine,
    save_hyperparam_map,
)


@dataclass
class RunManifest:
    command: str
    tool_version: str
    seed: int | None
    inputs: dict
    outputs: dict
    config: dict = field(default_factory=dict)


def _write_manifest(out_path: str, manifest: RunManifest) -> None:
    Path(str(out_path) + ".manifest.json").write_text(
        json.dumps(asdict(manifest), indent=2, sort_keys=True)
    )


def _parse_noise(text: str) -> NoiseSpec:
    """Parse ``none`` or ``gaussian:SIGMA[:seed=N]``."""
    parts = text.split(":")
    if parts[0] == "none":
        return NoiseSpec()
    if parts[0] != "gaussian" or len(parts) < 2:
        raise InvalidSpec(f"bad --noise value {text!r}")
    sigma = float(parts[1])
    seed = 0
    for extra in parts[2:]:
        key, _, value = extra.partition("=")
        if key != "seed":
            raise InvalidSpec(f"bad --noise option {extra!r}")
        seed = int(value)
    return NoiseSpec(kind="gaussian", sigma=sigma, seed=seed)


def _make_projector(args):
    if args.projector == "identity":
        return identity_projector()
    if args.projector == "tv":
        return tv_projector(iterations=args.tv_iters)
    if args.projector == "cnn":
        if not args.weights:
            raise InvalidSpec("--projector cnn requires --weights")
        return cnn_projector(load_weights(args.weights))
    raise InvalidSpec(f"unknown projector {args.projector!r}")


def _solver_config(args):
    hyper = load_hyperparam_map(args.hpm) if args.hpm else None
    stages = hyper.stages if hyper is not None else args.stages
    return SolverConfig(
        stages=stages,
        pad=args.pad,
        hyper=hyper,
        projector=_make_projector(args),
        threads=args.threads,
    )


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--projector", choices=["identity", "tv", "cnn"], default="tv")
    parser.add_argument("--weights", help="UABC weight file for --projector cnn")
    parser.add_argument("--stages", type=int, default=8)
    parser.add_argument("--tv-iters", type=int, default=30)
    parser.add_argument("--pad", type=int, default=None)
    parser.add_argument("--hpm", help="HPMV schedule file overriding the defaults")
    parser.add_argument("--threads", type=int, default=1)


def _solver_manifest(args) -> dict:
    return {
        "projector": args.projector,
        "weights": args.weights,
        "stages": args.stages,
        "tv_iters": args.tv_iters,
        "pad": args.pad,
        "hpm": args.hpm,
        "threads": args.threads,
    }


def cmd_synth_psf(args) -> int:
    psf_map = synth_gaussian_map(
        rows=args.rows,
        cols=args.cols,
        channels=args.channels,
        seed=args.seed,
        sigma_range=(args.sigma_min, args.sigma_max),
        size=args.size,
    )
    save_psf_map(psf_map, args.output)
    _write_manifest(
        args.output,
        RunManifest(
            command="synth-psf",
            tool_version=__version__,
            seed=args.seed,
            inputs={},
            outputs={"psf": args.output},
            config={
                "rows": args.rows,
                "cols": args.cols,
                "channels": args.channels,
                "size": args.size,
                "sigma_range": [args.sigma_min, args.sigma_max],
            },
        ),
    )
    return 0


def cmd_degrade(args) -> int:
    image = read_image(args.input)
    psf_map = load_psf_map(args.psf)
    noise = _parse_noise(args.noise)
    result = degrade(image, psf_map, noise)
    write_image(args.output, result, bits=args.bits)
    _write_manifest(
        args.output,
        RunManifest(
            command="degrade",
            tool_version=__version__,
            seed=noise.seed,
            inputs={"image": args.input, "psf": args.psf},
            outputs={"image": args.output},
            config={"noise": args.noise, "bits": args.bits},
        ),
    )
    return 0


def cmd_deconv(args) -> int:
    image = read_image(args.input)
    psf_map = load_psf_map(args.psf)
    config = _solver_config(args)
    restored = solve(image, psf_map, config)
    write_image(args.output, restored, bits=args.bits)
    _write_manifest(
        args.output,
        RunManifest(
            command="deconv",
            tool_version=__version__,
            seed=None,
            inputs={"image": args.input, "psf": args.psf},
            outputs={"image": args.output},
            config={**_solver_manifest(args), "bits": args.bits},
        ),
    )
    return 0


def _parse_pairs(values):
    pairs = []
    for value in values:
        fields = value.split(":")
        if len(fields) != 2:
            raise InvalidSpec(f"--pair must look like BLURRED:TRUTH, got {value!r}")
        pairs.append((read_image(fields[0]), read_image(fields[1])))
    return pairs


def cmd_refine(args) -> int:
    psf_map = load_psf_map(args.psf)
    pairs = _parse_pairs(args.pair)
    init = (
        load_hyperparam_map(args.init)
        if args.init
        else default_schedules(args.stages, psf_map)
    )
    config = RefineConfig(
        max_iters=args.max_iters,
        step_factor=args.step_factor,
        objective=args.objective,
        patience=args.patience,
    )
    best, trace = refine(
        psf_map,
        pairs,
        init,
        config,
        _make_projector(args),
        pad=args.pad,
        threads=args.threads,
    )
    save_hyperparam_map(best, args.output)
    trace_path = args.trace or (args.output + ".trace.csv")
    with open(trace_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["evaluation", "best_objective"])
        for i, value in enumerate(trace):
            writer.writerow([i, f"{value:.9f}"])
    _write_manifest(
        args.output,
        RunManifest(
            command="refine",
            tool_version=__version__,
            seed=None,
            inputs={"psf": args.psf, "pairs": list(args.pair), "init": args.init},
            outputs={"hpm": args.output, "trace": trace_path},
            config={
                **_solver_manifest(args),
                "max_iters": args.max_iters,
                "step_factor": args.step_factor,
                "objective": args.objective,
                "patience": args.patience,
            },
        ),
    )
    return 0


def cmd_eval(args) -> int:
    psf_map = load_psf_map(args.psf)
    scenes = []
    for value in args.scene:
        fields = value.split(":")
        if len(fields) != 3:
            raise InvalidSpec(f"--scene must look like NAME:BLURRED:TRUTH, got {value!r}")
        scenes.append((fields[0], read_image(fields[1]), read_image(fields[2])))
    config = _solver_config(args)
    csv_path = args.output + ".csv"
    json_path = args.output + ".json"
    benchmark(scenes, psf_map, config, csv_path=csv_path, json_path=json_path)
    _write_manifest(
        args.output,
        RunManifest(
            command="eval",
            tool_version=__version__,
            seed=None,
            inputs={"psf": args.psf, "scenes": list(args.scene)},
            outputs={"csv": csv_path, "json": json_path},
            config=_solver_manifest(args),
        ),
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deaberrate",
        description="Patch-wise frequency-domain deconvolution for spatially "
        "varying lens blur",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-psf", help="synthesize a Gaussian PSF map")
    p.add_argument("--rows", type=int, default=16)
    p.add_argument("--cols", type=int, default=16)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--size", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-min", type=float, default=1.0)
    p.add_argument("--sigma-max", type=float, default=3.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth_psf)

    p = sub.add_parser("degrade", help="apply the patch-wise blur model")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--psf", required=True)
    p.add_argument("--noise", default="none", help="none or gaussian:SIGMA[:seed=N]")
    p.add_argument("--bits", type=int, choices=[8, 16], default=8)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("deconv", help="restore a degraded image")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--psf", required=True)
    p.add_argument("--bits", type=int, choices=[8, 16], default=8)
    p.add_argument("-o", "--output", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_deconv)

    p = sub.add_parser("refine", help="adapt mu/lambda maps to one lens")
    p.add_argument("--psf", required=True)
    p.add_argument(
        "--pair", action="append", required=True, help="BLURRED:TRUTH, repeatable"
    )
    p.add_argument("--init", help="HPMV file to start from (default schedules otherwise)")
    p.add_argument("--max-iters", type=int, default=60)
    p.add_argument("--step-factor", type=float, default=2.0)
    p.add_argument("--objective", choices=["psnr", "l1"], default="psnr")
    p.add_argument("--patience", type=int, default=2)
    p.add_argument("--trace", help="trace CSV path (default OUTPUT.trace.csv)")
    p.add_argument("-o", "--output", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval", help="benchmark restoration quality")
    p.add_argument("--psf", required=True)
    p.add_argument(
        "--scene", action="append", required=True, help="NAME:BLURRED:TRUTH, repeatable"
    )
    p.add_argument("-o", "--output", required=True, help="report path stem")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single CLI error boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
