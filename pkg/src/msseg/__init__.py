"""Multiscale segmentation by inverse scale space on convex Chan-Vese.

Bregman iterations on the convexified Chan-Vese model with anisotropic total
variation, solved by a Chambolle-Pock primal-dual scheme, and the spectral
analysis of the resulting mask sequence (components, response, scale map,
peak detection and band filtering).
"""

__version__ = "0.1.0"

from .bregman import (BregmanState, critical_alpha, default_alphas, effective_alpha, estimate_constants,
                      resolve_constants, run_bregman, run_forward_sweep, solve_cv)
from .estimators import BregmanCVSegmenter, ConvexCVSegmenter, ForwardSweepSegmenter
from .gamma import (EigenReport, GammaNorm, check_eigenfunction_condition, disc_eigenvalue, dual_norm,
                    gamma_value, project_dual_ball, tv_value)
from .grid import divergence, estimate_operator_norm, gradient, operator_norm_bound
from .io import RunManifest, load_image, load_run, save_image, save_outputs
from .phantoms import (SceneSpec, Shape, gaussian_noise, load_scene, preset, preset_names, preset_run, render,
                       save_scene)
from .solver import (InnerState, NumericalDivergenceError, SolverConfig, data_term, prox_primal,
                     solve_inner, threshold)
from .spectral import (FORWARD, INVERSE, ScaleMap, ScaleSequence, SpectralComponent, detect_peaks,
                       filter_scales, response, scale_map, transform)

__all__ = [
    "BregmanCVSegmenter", "BregmanState", "ConvexCVSegmenter", "EigenReport", "FORWARD",
    "ForwardSweepSegmenter", "GammaNorm", "INVERSE", "InnerState", "NumericalDivergenceError",
    "RunManifest", "ScaleMap", "ScaleSequence", "SceneSpec", "Shape", "SolverConfig",
    "SpectralComponent", "check_eigenfunction_condition", "critical_alpha", "data_term",
    "default_alphas", "detect_peaks", "disc_eigenvalue", "divergence", "dual_norm", "effective_alpha",
    "estimate_constants", "estimate_operator_norm", "filter_scales", "gamma_value", "gaussian_noise",
    "gradient", "load_image", "load_run", "load_scene", "operator_norm_bound", "preset", "preset_names", "preset_run",
    "project_dual_ball", "prox_primal", "render", "resolve_constants", "response", "run_bregman",
    "run_forward_sweep", "save_image", "save_outputs", "save_scene", "scale_map", "solve_cv", "solve_inner",
    "threshold", "transform", "tv_value",
]
