"""Stability-gated rational residual forecasting for iterative denoising loops."""

from .config import ExperimentConfig
from .gate import GateDecision, TsiVariant, decide, tsi, unit_diff
from .metrics import (
    annotate_traces,
    build_report,
    compare_runs,
    pca_project,
    psnr,
    relative_l2,
    similarity_curves,
)
from .predictor import (
    PadeCoefficients,
    PhaseConfig,
    RationalCoeffs,
    adaptive_coefficients,
    pade21_predict,
    rational_predict,
    reconstruct_output,
    stability_factor,
    step_aware_predict,
    taylor_predict,
)
from .scheduler import CachePolicy, ResidualHistory, push_residual, run, run_taylor_baseline
from .simulator import TrajectoryModel, oracle_trajectory
from .tensor import FeatureTensor, cosine_similarity, elementwise, l2_norm, scale_add

__version__ = "0.1.0"
