"""Restoration of images blurred by spatially varying lens aberrations.

The engine alternates closed-form frequency-domain deconvolution on a grid
of patches (one PSF per patch and color channel) with a whole-image prior
projector, and can adapt its per-patch penalty weights to a specific lens.
"""

__version__ = "0.1.0"

from .blur import NoiseSpec, PairSample, degrade, make_pair_set
from .fourier import PatchSpectra, precompute_spectra, wiener_init, z_update
from .metrics import MetricReport, benchmark, per_patch_psnr, psnr, ssim
from .projectors import (
    CnnArch,
    CnnWeights,
    ProjectorInput,
    cnn_projector,
    identity_projector,
    init_weights,
    load_weights,
    project_cnn,
    project_identity,
    project_tv,
    save_weights,
    tv_projector,
)
from .psf import (
    GaussianSpec,
    PsfMap,
    delta_psf_map,
    load_psf_map,
    save_psf_map,
    synth_gaussian,
    synth_gaussian_map,
)
from .scenes import synthetic_scene
from .solver import (
    HyperParamMap,
    SolverConfig,
    default_schedules,
    rasterize_lambda,
    solve,
)
from .tiles import GridGeometry, chop, plan_grid, shave_assemble
from .tune import (
    RefineConfig,
    evaluate_map,
    load_hyperparam_map,
    refine,
    save_hyperparam_map,
)

__all__ = [
    "CnnArch",
    "CnnWeights",
    "GaussianSpec",
    "GridGeometry",
    "HyperParamMap",
    "MetricReport",
    "NoiseSpec",
    "PairSample",
    "PatchSpectra",
    "ProjectorInput",
    "PsfMap",
    "RefineConfig",
    "SolverConfig",
    "benchmark",
    "chop",
    "cnn_projector",
    "default_schedules",
    "degrade",
    "delta_psf_map",
    "evaluate_map",
    "identity_projector",
    "init_weights",
    "load_hyperparam_map",
    "load_psf_map",
    "load_weights",
    "make_pair_set",
    "per_patch_psnr",
    "plan_grid",
    "precompute_spectra",
    "project_cnn",
    "project_identity",
    "project_tv",
    "psnr",
    "rasterize_lambda",
    "refine",
    "save_hyperparam_map",
    "save_psf_map",
    "save_weights",
    "shave_assemble",
    "solve",
    "ssim",
    "synth_gaussian",
    "synth_gaussian_map",
    "synthetic_scene",
    "tv_projector",
    "wiener_init",
    "z_update",
]
