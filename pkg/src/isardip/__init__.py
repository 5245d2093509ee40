"""ISAR echo-matrix completion: low-rank solvers, deep image prior and imaging."""

from .dip import DipConfig, EarlyStop, dip_complete_complex, dip_complete_part
from .lowrank import SolverConfig, complete_ialm, complete_nnm
from .metrics import MetricsReport, add_noise, correlation, image_contrast, rmse, snr_db
from .radar import (RadarParams, Scatterer, Scene, default_params, random_scene, rd_image,
                    simulate_echo, to_db_image)
from .sampling import Mask, apply_mask, gen_mask, pretransform, invert_pretransform

__version__ = "0.1.0"

__all__ = [
    "DipConfig", "EarlyStop", "dip_complete_complex", "dip_complete_part",
    "SolverConfig", "complete_ialm", "complete_nnm",
    "MetricsReport", "add_noise", "correlation", "image_contrast", "rmse", "snr_db",
    "RadarParams", "Scatterer", "Scene", "default_params", "random_scene", "rd_image",
    "simulate_echo", "to_db_image",
    "Mask", "apply_mask", "gen_mask", "pretransform", "invert_pretransform",
]
