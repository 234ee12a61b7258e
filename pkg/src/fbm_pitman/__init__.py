"""Monte Carlo laboratory for Pitman and argmax estimators driven by fractional Brownian motion."""

from .closedform import (
    ck_asymptotic,
    ck_root,
    riemann_zeta,
    var_zeta_closed,
    yao_tail,
    yao_variance,
)
from .functionals import (
    absolute_moment,
    log_beta,
    log_likelihood_field,
    mle_argmax,
    path_functionals,
    pitman_estimate,
    posterior,
)
from .moments import MomentAccumulator
from .montecarlo import McSummary, RunConfig, run_campaign
from .sampler import (
    FbmPath,
    TimeGrid,
    build_embedding,
    covariance,
    fgn_autocovariance,
    sample_path_cholesky,
    sample_two_sided_path,
)
from .streams import trajectory_stream

__version__ = "0.1.0"
