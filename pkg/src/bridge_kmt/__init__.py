"""Strong couplings of pinned random walks to Brownian bridges.

The package builds couplings in which an n-step walk conditioned to end at z
and a variance-matched Brownian bridge are driven by one uniform stream, so
that their sup-distance grows only logarithmically in n for well-behaved jump
laws.  Alongside the coupler it ships the saddle-point and convolution
density engines, exact midpoint laws, Cramer transform utilities, Gaussian
special functions, experiment drivers, and the bridge-kmt CLI.
"""

from .coupling import (CoupledSample, CouplerConfig, backend_name,
                       brownian_bridge_sample, compute_delta, couple_midpoint,
                       exact_bridge_sample, sample_coupled_bridge, sample_deltas)
from .cramer import SaddleData, rate_function, solve_saddle
from .density import (DensityTable, MidpointLaw, density,
                      density_gaussian_asymptotic, density_saddle,
                      midpoint_gaussian_deviation, midpoint_law,
                      midpoint_law_continuous, pdf_grid_convolution,
                      pmf_exact_convolution, tail_bound_check, walk_pmf_tables)
from .errors import (GridTooCoarseError, NumericError, SaddleConvergenceError,
                     SlopeOutOfRangeError, SpecError, TableUnderflowError)
from .gaussian import (bridge_cov, log_std_normal_cdf, std_normal_cdf,
                       std_normal_pdf, std_normal_quantile)
from .harness import (CounterexampleResult, ExperimentSpec, ScalingResult,
                      TailResult, run_counterexample, run_density_validation,
                      run_scaling, run_tails, spiky_conditional)
from .jump_dist import (AssumptionCheck, AssumptionReport, JumpDistribution,
                        bernoulli, check_assumptions, counterexample_spiky,
                        exponential, from_json, from_spec, geometric,
                        log_gamma, make_builtin, spiky_raw_log_weight,
                        tabulated_pdf, tabulated_pmf, uniform_int)

__version__ = "0.1.0"

__all__ = [
    "AssumptionCheck", "AssumptionReport", "CoupledSample", "CouplerConfig",
    "CounterexampleResult", "DensityTable", "ExperimentSpec",
    "GridTooCoarseError", "JumpDistribution", "MidpointLaw", "NumericError",
    "SaddleConvergenceError", "SaddleData", "ScalingResult",
    "SlopeOutOfRangeError", "SpecError", "TableUnderflowError", "TailResult",
    "backend_name", "bernoulli", "bridge_cov", "brownian_bridge_sample",
    "check_assumptions", "compute_delta", "couple_midpoint",
    "counterexample_spiky", "density", "density_gaussian_asymptotic",
    "density_saddle", "exact_bridge_sample", "exponential", "from_json",
    "from_spec", "geometric", "log_gamma", "log_std_normal_cdf",
    "make_builtin", "midpoint_gaussian_deviation", "midpoint_law",
    "midpoint_law_continuous", "pdf_grid_convolution",
    "pmf_exact_convolution", "rate_function", "run_counterexample",
    "run_density_validation", "run_scaling", "run_tails",
    "sample_coupled_bridge", "sample_deltas", "solve_saddle",
    "spiky_conditional", "spiky_raw_log_weight", "std_normal_cdf", "std_normal_pdf",
    "std_normal_quantile", "tabulated_pdf", "tabulated_pmf",
    "tail_bound_check", "uniform_int", "walk_pmf_tables", "__version__",
]
