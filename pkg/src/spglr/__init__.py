"""Rank-penalized matrix recovery with a smoothed nonsmooth loss.

A smoothing proximal gradient solver for completion and low-rank plus
sparse decomposition under a capped singular-value penalty, plus a
nuclear-norm baseline, a synthetic experiment harness, and file codecs.
"""

from .linalg import (
    DecompositionError,
    SvdFactors,
    as_matrix,
    frobenius_norm,
    inner_product,
    rank_estimate,
    reconstruct,
    svd,
)
from .penalty import (
    CappedPenaltyParams,
    PenaltyCapAdvisory,
    capped_surrogate,
    d_vector,
    phi,
    phi_d,
    prox_matrix,
    prox_vector,
)
from .losses import CompletionLoss, MaskedData, RpcaLoss, huber, huber_grad
from .solver import (
    IterationRecord,
    SolveResult,
    SolverConfig,
    energy,
    line_search,
    q_model,
    solve,
    spg_step,
    stationarity_residual,
    update_mu,
)
from .svt import SvtConfig, soft_threshold_sigma, svt_solve
from .experiments import (
    GmmNoiseParams,
    McSummary,
    TrialResult,
    TrialSpec,
    build_trial_data,
    gen_low_rank,
    gmm_noise,
    monte_carlo,
    psnr,
    rmse,
    run_trial,
    sample_mask,
)

__version__ = "0.1.0"

__all__ = [
    "CappedPenaltyParams",
    "CompletionLoss",
    "DecompositionError",
    "GmmNoiseParams",
    "IterationRecord",
    "MaskedData",
    "McSummary",
    "PenaltyCapAdvisory",
    "RpcaLoss",
    "SolveResult",
    "SolverConfig",
    "SvdFactors",
    "SvtConfig",
    "TrialResult",
    "TrialSpec",
    "as_matrix",
    "build_trial_data",
    "capped_surrogate",
    "d_vector",
    "energy",
    "frobenius_norm",
    "gen_low_rank",
    "gmm_noise",
    "huber",
    "huber_grad",
    "inner_product",
    "line_search",
    "monte_carlo",
    "phi",
    "phi_d",
    "prox_matrix",
    "prox_vector",
    "psnr",
    "q_model",
    "rank_estimate",
    "reconstruct",
    "rmse",
    "run_trial",
    "sample_mask",
    "soft_threshold_sigma",
    "solve",
    "spg_step",
    "stationarity_residual",
    "svd",
    "svt_solve",
    "update_mu",
]
