"""Lens-specific refinement of the per-patch penalty-weight maps.

Given a calibration set of (degraded, truth) pairs for one lens, a
derivative-free coordinate descent walks the mu/lambda map in log-space:
each move multiplies or divides one (cell, channel) group, shared across
all stages, by the current step factor and is kept only if the mean
objective over the pairs improves.  Projector weights stay fixed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidSpec, NonFiniteError
from .metrics import psnr
from .psf import PsfMap
from .solver import HyperParamMap, SolverConfig, solve

_HPMV_MAGIC = b"HPMV"
_HPMV_VERSION = 1
_HPMV_HEADER = struct.Struct("<5I")  # version, stages, rows, cols, channels


@dataclass(frozen=True)
class RefineConfig:
    max_iters: int = 60          # objective evaluations, not sweeps
    step_factor: float = 2.0     # multiplicative move size, > 1
    objective: str = "psnr"      # "psnr" or "l1"
    patience: int = 2            # barren sweeps tolerated before stopping

    def validate(self) -> None:
        if self.max_iters < 1:
            raise InvalidSpec(f"max_iters must be >= 1, got {self.max_iters}")
        if self.step_factor <= 1.0:
            raise InvalidSpec(f"step_factor must be > 1, got {self.step_factor}")
        if self.objective not in ("psnr", "l1"):
            raise InvalidSpec(f"unknown objective {self.objective!r}")
        if self.patience < 1:
            raise InvalidSpec(f"patience must be >= 1, got {self.patience}")


def evaluate_map(
    psf_map: PsfMap,
    pairs,
    hyper: HyperParamMap,
    projector,
    objective: str = "psnr",
    pad: int | None = None,
    threads: int = 1,
) -> float:
    """Mean objective of solve() over the pairs (higher is better).

    "psnr" averages capped PSNR in dB; "l1" averages the negative mean
    absolute error, so both are maximized.
    """
    pairs = list(pairs)
    if not pairs:
        raise InvalidSpec("at least one calibration pair is required")
    config = SolverConfig(
        stages=hyper.stages, pad=pad, hyper=hyper, projector=projector, threads=threads
    )
    values = []
    for degraded, truth in pairs:
        restored = solve(degraded, psf_map, config)
        if objective == "psnr":
            values.append(psnr(restored, truth))
        else:
            values.append(-float(np.mean(np.abs(restored.astype(np.float64) - truth))))
    value = float(np.mean(values))
    if not np.isfinite(value):
        raise NonFiniteError(f"objective evaluated to {value}")
    return value


def refine(
    psf_map: PsfMap,
    pairs,
    init: HyperParamMap,
    config: RefineConfig,
    projector,
    pad: int | None = None,
    threads: int = 1,
) -> tuple[HyperParamMap, list[float]]:
    """Coordinate descent over the mu/lambda map; returns (best map, trace).

    The trace records the best objective after every evaluation (the init
    evaluation first), so it is non-decreasing by construction.
    """
    config.validate()
    pairs = list(pairs)

    def score(candidate: HyperParamMap) -> float:
        return evaluate_map(
            psf_map, pairs, candidate, projector,
            objective=config.objective, pad=pad, threads=threads,
        )

    rows, cols, channels = init.grid_shape
    coords = [
        (kind, r, c, ch)
        for kind in ("mu", "lam")
        for r in range(rows)
        for c in range(cols)
        for ch in range(channels)
    ]

    best = init
    best_obj = score(init)
    trace = [best_obj]
    step = float(config.step_factor)
    evals = 1
    barren = 0
    while evals < config.max_iters and barren < config.patience:
        improved = False
        for kind, r, c, ch in coords:
            for factor in (step, 1.0 / step):
                if evals >= config.max_iters:
                    break
                candidate = best.scaled(kind, r, c, ch, factor)
                obj = score(candidate)
                evals += 1
                if obj > best_obj:
                    best, best_obj = candidate, obj
                    improved = True
                trace.append(best_obj)
            if evals >= config.max_iters:
                break
        if improved:
            barren = 0
        else:
            barren += 1
            step = float(np.sqrt(step))  # halve the move in log-space
    return best, trace


def save_hyperparam_map(hyper: HyperParamMap, path: str | Path) -> None:
    """Write in the HPMV format: magic, version u32, stages/rows/cols/channels
    u32, then the mu block and the lambda block as float32."""
    stages, (rows, cols, channels) = hyper.stages, hyper.grid_shape
    header = _HPMV_MAGIC + _HPMV_HEADER.pack(_HPMV_VERSION, stages, rows, cols, channels)
    mu = np.ascontiguousarray(hyper.mu, dtype="<f4").tobytes()
    lam = np.ascontiguousarray(hyper.lam, dtype="<f4").tobytes()
    Path(path).write_bytes(header + mu + lam)


def load_hyperparam_map(path: str | Path) -> HyperParamMap:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != _HPMV_MAGIC:
        raise FormatError("not an HPMV file (bad magic)", offset=0)
    if len(data) < 4 + _HPMV_HEADER.size:
        raise FormatError("truncated HPMV header", offset=len(data))
    version, stages, rows, cols, channels = _HPMV_HEADER.unpack_from(data, 4)
    if version != _HPMV_VERSION:
        raise FormatError(f"unsupported HPMV version {version}", offset=4)
    count = stages * rows * cols * channels
    body = 4 + _HPMV_HEADER.size
    expected = body + 8 * count
    if len(data) != expected:
        raise FormatError(
            f"HPMV payload must be {expected} bytes, got {len(data)}",
            offset=min(len(data), expected),
        )
    shape = (stages, rows, cols, channels)
    mu = np.frombuffer(data, dtype="<f4", count=count, offset=body).reshape(shape).copy()
    lam = (
        np.frombuffer(data, dtype="<f4", count=count, offset=body + 4 * count)
        .reshape(shape)
        .copy()
    )
    return HyperParamMap(mu=mu, lam=lam)
