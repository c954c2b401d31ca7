"""Base-model training: unroll the solver, minimize L1, export UABC weights."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .data import PairSampler
from .model import ProjectorNet, export_weights
from .pipeline import restore


class TrainingDiverged(RuntimeError):
    def __init__(self, iteration: int, value: float):
        super().__init__(f"non-finite loss {value} at iteration {iteration}")
        self.iteration = iteration


@dataclass
class TrainConfig:
    iterations: int = 200
    batch: int = 3
    learning_rate: float = 1e-3
    crop: int = 128
    psf_subgrid: tuple[int, int] = (2, 2)
    loss: str = "l1"
    seed: int = 0
    stages: int = 3
    scales: int = 3
    widths: tuple[int, ...] = (8, 16, 32)
    blocks_per_scale: int = 2
    noise_sigma: float = 0.01
    mu_schedule: tuple[float, ...] = field(default=())    # empty -> log-spaced default
    lambda_schedule: tuple[float, ...] = field(default=())
    # desk-scale tensors are small enough that intra-op threading only adds
    # oversubscription overhead; raise this for larger crops/widths
    threads: int = 1

    def validate(self) -> None:
        if self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.loss != "l1":
            raise ValueError(f"only the l1 loss is supported, got {self.loss!r}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")


def _initial_schedules(config: TrainConfig) -> tuple[np.ndarray, np.ndarray]:
    if config.mu_schedule:
        mu = np.asarray(config.mu_schedule, dtype=np.float64)
    else:
        mu = np.geomspace(1e-2, 1.0, config.stages)
    if config.lambda_schedule:
        lam = np.asarray(config.lambda_schedule, dtype=np.float64)
    else:
        lam = np.geomspace(5e-2, 5e-3, config.stages)
    if len(mu) != config.stages or len(lam) != config.stages:
        raise ValueError("mu/lambda schedules must have one entry per stage")
    return mu, lam


def train_base(
    images: list[np.ndarray],
    psf_maps: list[np.ndarray],
    config: TrainConfig,
    weights_out: str | Path,
    loss_log_out: str | Path | None = None,
    init_weights: str | Path | None = None,
) -> list[float]:
    """Train the projector (and per-stage uniform mu/lambda) on synthetic pairs.

    Returns the per-iteration loss curve.  ``init_weights`` continues from
    an exported UABC file, which is the lens-specific fine-tuning path.
    """
    config.validate()
    torch.set_num_threads(max(1, config.threads))
    torch.manual_seed(config.seed)
    if init_weights is not None:
        from .model import load_net

        net = load_net(init_weights)
    else:
        net = ProjectorNet(
            scales=config.scales,
            widths=config.widths,
            blocks_per_scale=config.blocks_per_scale,
        )
    mu0, lam0 = _initial_schedules(config)
    log_mu = torch.nn.Parameter(torch.log(torch.tensor(mu0, dtype=torch.float32)))
    log_lam = torch.nn.Parameter(torch.log(torch.tensor(lam0, dtype=torch.float32)))
    optimizer = torch.optim.Adam(
        list(net.parameters()) + [log_mu, log_lam], lr=config.learning_rate
    )
    sampler = PairSampler(
        images,
        psf_maps,
        crop=config.crop,
        subgrid=config.psf_subgrid,
        noise_sigma=config.noise_sigma,
        seed=config.seed,
    )
    kernel_size = psf_maps[0].shape[-1]
    pad = kernel_size // 2
    rows, cols = config.psf_subgrid

    losses: list[float] = []
    for iteration in range(config.iterations):
        degraded, clean, kernels = sampler.batch(config.batch)
        restored = restore(degraded, kernels, net, log_mu, log_lam, rows, cols, pad)
        loss = torch.mean(torch.abs(restored - clean))
        value = float(loss.detach())
        if not np.isfinite(value):
            raise TrainingDiverged(iteration, value)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        losses.append(value)

    export_weights(net, weights_out)
    if loss_log_out is not None:
        with open(loss_log_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "l1_loss"])
            for i, value in enumerate(losses):
                writer.writerow([i, f"{value:.8f}"])
    return losses
