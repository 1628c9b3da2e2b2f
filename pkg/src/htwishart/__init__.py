"""Heavy-tailed (algebraic) and Gaussian doubly correlated Wishart ensembles.

Closed-form matrix moments, the special integrals behind them, exact
samplers, Monte Carlo cross-checks and a gauge-fixed estimator of the
correlation matrices.
"""
__version__ = "0.1.0"

from .model import (  # noqa: E402
    DataMatrix,
    DimensionError,
    ExistenceError,
    ModelParams,
    NotPositiveDefiniteError,
    ParameterError,
    ThetaSpectrum,
    ValidationReport,
    log_density_alg,
    log_density_gauss,
    log_normalization,
    validate_params,
)
from .moments import (  # noqa: E402
    DomainError,
    MomentReport,
    first_moment,
    generating_function_gauss,
    matrix_variance,
    moment_from_generating_fd,
    second_moment,
)
from .special import (  # noqa: E402
    AomotoParams,
    PsiTriple,
    aomoto_closed,
    aomoto_laguerre_limit,
    ingham_siegel_closed,
    psi_closed,
)
from .sampling import RngState, WishartSpec, draw_batch, sample_alg, sample_gauss, sample_wishart  # noqa: E402
from .montecarlo import McEstimate, estimate_moment_mc, estimate_psi_mc, verification_table  # noqa: E402
from .estimation import EstimationResult, choose_M, estimate_sigma_xi  # noqa: E402
