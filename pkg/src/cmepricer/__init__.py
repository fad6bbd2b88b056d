"""Low-rank kernel conditional-expectation pricing engine for American puts."""

from .cme import (
    CmeOperator,
    FullCmeOperator,
    LowRankErrorBound,
    apply_cme,
    fit_full_cme,
    fit_lowrank_cme,
    hnorm_sq_difference,
    lowrank_error_bound,
    project_full_to_lowrank,
)
from .kernels import KernelSpec, SampleMatrix, kernel_eval, kernel_matrix_source, median_heuristic
from .lowrank import (
    DenseMatrixSource,
    LowRankFactors,
    PsdMatrixSource,
    SpectralBasis,
    pivoted_cholesky,
    spectral_rotation,
)
from .market import (
    HestonParams,
    PathSet,
    experiment_seed,
    load_paths,
    monitoring_steps,
    save_paths,
    simulate_heston,
    simulate_terminal_logprice,
)
from .pricing import (
    BackwardBoundReport,
    ContractSpec,
    PricingResult,
    backward_bound_report,
    binomial_american_put,
    black_scholes_put,
    fit_pricing_operator,
    implied_vol_put,
    price_american_cme,
    price_american_ls,
    price_european_mc,
    price_strike_ladder,
)

__version__ = "0.1.0"

__all__ = [
    "BackwardBoundReport",
    "CmeOperator",
    "ContractSpec",
    "DenseMatrixSource",
    "FullCmeOperator",
    "HestonParams",
    "KernelSpec",
    "LowRankErrorBound",
    "LowRankFactors",
    "PathSet",
    "PricingResult",
    "PsdMatrixSource",
    "SampleMatrix",
    "SpectralBasis",
    "apply_cme",
    "backward_bound_report",
    "binomial_american_put",
    "black_scholes_put",
    "experiment_seed",
    "fit_full_cme",
    "fit_lowrank_cme",
    "fit_pricing_operator",
    "hnorm_sq_difference",
    "implied_vol_put",
    "kernel_eval",
    "kernel_matrix_source",
    "load_paths",
    "lowrank_error_bound",
    "median_heuristic",
    "monitoring_steps",
    "pivoted_cholesky",
    "price_american_cme",
    "price_american_ls",
    "price_european_mc",
    "price_strike_ladder",
    "project_full_to_lowrank",
    "save_paths",
    "simulate_heston",
    "simulate_terminal_logprice",
    "spectral_rotation",
]
