"""Numerical laboratory for model weighted Bergman kernels.

Convex potentials phi(x) on R^d define weighted spaces of entire functions;
this package evaluates the associated dual exponential integral F(xi, lambda)
in overflow-safe log form, the Legendre-type limit of its normalized
logarithm, model reproducing kernels and their off-diagonal decay rates,
complex-zero certificates and near-resonance deficiencies, and the weighted
divergence-equation bounds, all at desk scale against closed-form Gaussian
oracles.
"""

__version__ = "0.1.0"

from .logcomplex import LogComplex, logsumexp_complex
from .potentials import (
    catalog,
    ConvexPotential,
    parse_potential_spec,
    PotentialError,
    translate,
    validate,
    ValidationReport,
)
from .legendre import (
    inverse_identity_defect,
    LegendrePoint,
    tau,
    TauConvergenceError,
    u_limit,
)
from .quadrature import CancellationUnderflowError, QuadratureError
from .scriptf import (
    harmonicity_defect,
    laplace_log_asymptotic,
    log_scriptF,
    log_scriptF_saddle,
    normalized_log,
    ScriptFSample,
    weight_context,
    WeightContext,
)
from .zeroscan import (
    DeficiencyReport,
    find_zeros,
    find_zeros_of,
    resonance_deficiency,
    winding_number,
    ZeroCertificate,
)
from .kernel1d import (
    decay_fit,
    DecayFit,
    KernelSample,
    log_bergman,
    normalized_offdiag,
    reproducing_residual,
)
from .divsolve import (
    BoundReport,
    bound_ratio_51,
    bound_ratio_52,
    conjugated_ratio,
    div_star,
    Grid,
    GridFunction,
    make_grid,
    norm_H1,
    norm_H2,
    random_mean_zero,
    solve_div,
)
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import run, RunManifest
