"""Desk-scale trainer for the restoration engine's projector network."""

__version__ = "0.1.0"

from .data import PairSampler, make_image_bank, procedural_image
from .formats import read_psf_map, read_uabc, tensor_names, write_uabc
from .model import ProjectorNet, export_weights, load_net
from .pipeline import assemble, chop, degrade, kernel_otf, restore, z_step
from .train import TrainConfig, TrainingDiverged, train_base

__all__ = [
    "PairSampler",
    "ProjectorNet",
    "TrainConfig",
    "TrainingDiverged",
    "assemble",
    "chop",
    "degrade",
    "export_weights",
    "kernel_otf",
    "load_net",
    "make_image_bank",
    "procedural_image",
    "read_psf_map",
    "read_uabc",
    "restore",
    "tensor_names",
    "train_base",
    "write_uabc",
    "z_step",
]
