"""Bayesian inversion of quantum thermal averages.

Forward problem: ring-polymer Langevin sampling of canonical averages,
with a surface-hopping extension for two-level systems. Inverse problem:
preconditioned Crank-Nicolson Metropolis over potential functions given
noisy observed averages. See README for the command line and file formats.
"""

__version__ = "0.1.0"

from .basis import (
    HermiteEvaluator,
    PotentialCoeffs,
    PriorSpec,
    SineGaussianPotential,
    hermite_eval,
    hermite_table,
    potential_eval,
    sample_prior,
    w1_distance,
)
from .errors import (
    ConfigError,
    DegenerateDesignError,
    DegeneratePosteriorError,
    DimensionError,
    DivergenceError,
    InvalidDistributionError,
    InvalidGridError,
    InvalidTransitionError,
    OracleError,
    OrderOverflowError,
    QtiError,
)
from .inversion import (
    AcfResult,
    ChainRecord,
    InversionConfig,
    InversionResult,
    NoiseModel,
    PredictionSummary,
    RunResult,
    autocorrelation,
    exact_observations,
    mh_decide,
    neg_log_likelihood,
    pcn_exponential,
    pcn_gaussian,
    propose_potential,
    propose_two_level,
    run_inversion,
)
from .metrics import (
    DiscreteDist,
    StabilityReport,
    bin_chain,
    brute_force_posterior,
    fit_loglog_slope,
    hellinger_distance,
    posterior_axes,
    stability_sweep,
    tv_distance,
)
from .pimd import (
    DEFAULT_GRID,
    ForwardEstimate,
    GridSpec,
    LangevinConfig,
    baoab_step,
    batch_means,
    default_dt,
    exact_thermal_average,
    forward_estimate,
    rp_harmonic_variance,
    sample_features,
    with_seed,
)
from .recipes import RECIPES, Budget, Recipe, one_level_recipe, two_level_recipe
from .ringpoly import (
    GaussianBump,
    Observable,
    RingParams,
    RingState,
    ScaledHermite,
    action,
    force,
    hamiltonian,
    ring_average,
)
from .twolevel import (
    CouplingComponent,
    TwoLevelObservable,
    TwoLevelPotential,
    TwoLevelState,
    default_eta,
    exact_thermal_average_2level,
    exact_thermal_averages_2level,
    g_entry,
    h2,
    hop_intensity,
    neighbor_labels,
    pimd_sh_estimate,
    sample_weight_series,
    weight_fn,
)

__all__ = [name for name in dir() if not name.startswith("_")]
