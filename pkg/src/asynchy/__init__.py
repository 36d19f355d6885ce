"""Functionals of asynchronously observed bivariate semimartingales.

Exact simulation of a bivariate jump diffusion with piecewise-constant
coefficients, observation-scheme generation and diagnostics, pair and
marginal functional evaluation, their limit formulas, and a Monte Carlo
driver verifying convergence at desk scale.
"""

from ._backend import BACKEND
from .errors import (
    AsynchyError,
    ContractError,
    InputError,
    ParameterError,
    PathLookupError,
    SchemeSizeError,
)
from .functionals import (
    AbsProductPower,
    Custom,
    CustomOneDim,
    OneDimPower,
    PerturbedProductPower,
    SignedProductPower,
    marginal_sum,
    normalized_marginal_sum,
    normalized_pair_sum,
    pair_sum,
    parse_functional,
)
from .harness import (
    ConvergenceReport,
    ExperimentConfig,
    LimitTarget,
    Normalization,
    load_config,
    run_experiment,
    run_scheme_diagnostics,
    save_config,
)
from .limits import (
    abs_normal_moment,
    even_triple_exponents,
    jump_sum,
    marginal_jump_sum,
    marginal_limit,
    normal_expectation,
    normal_moment,
    product_power_limit,
    product_power_limit_preset,
    stieltjes,
    synchronous_limit,
    uncorrelated_limit,
)
from .model import (
    JumpEvent,
    PathRecord,
    PoissonJumps,
    Schedule,
    SemimartingaleSpec,
    SizeDist,
    covariance_on,
    increment,
    sample_path,
)
from .scheme_stats import (
    StepFunction,
    capped_pair_power_sum,
    interval_power_sum,
    pair_interval_power_sum,
    pair_overlap_power_sum,
    split_overlap_power_sum,
)
from .schemes import (
    EquidistantAsync,
    EquidistantSync,
    ExplicitScheme,
    GridScheme,
    ObservationScheme,
    Oscillating,
    PoissonScheme,
    PoissonSyncScheme,
    alternating_subsample,
    generate_scheme,
    load_scheme_text,
    max_overlap_count,
    mesh,
    overlap_pairs,
    parse_scheme,
    save_scheme_text,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
