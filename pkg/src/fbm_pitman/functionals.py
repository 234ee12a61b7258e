"""Per-path statistics of the limit likelihood Z_t = exp(W_t - |t|^2H / 2).

Everything is computed in the log domain with max subtraction; ``exp`` of the
raw log-likelihood underflows long before the grid edge.  All functions act
on the last axis, so a batch of paths of shape (B, N) is handled in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMass, ParameterOutOfRange
from .sampler import FbmPath, TimeGrid

M_LIMIT = 0.125
DEFAULT_P_ORDERS = (1.0, 2.0, 4.0)
DEFAULT_G_STEP = 0.02


@dataclass(frozen=True)
class LogLikelihoodField:
    grid: TimeGrid
    hurst: float
    log_z: np.ndarray

    def shifted(self, c: float) -> "LogLikelihoodField":
        return LogLikelihoodField(self.grid, self.hurst, self.log_z + c)

    def reversed(self) -> "LogLikelihoodField":
        return LogLikelihoodField(self.grid, self.hurst, self.log_z[..., ::-1].copy())


@dataclass(frozen=True)
class PosteriorDensity:
    """Normalised likelihood q_t and log of its normaliser ∫ Z_u du."""

    grid: TimeGrid
    q: np.ndarray
    log_b0: np.ndarray | float


@dataclass
class PathFunctionals:
    zeta: np.ndarray | float
    xi: np.ndarray | float
    a_moments: dict[float, np.ndarray | float] = field(default_factory=dict)
    log_beta: dict[float, np.ndarray | float] = field(default_factory=dict)
    log_b0: np.ndarray | float = 0.0


def _scalar(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def _wsum(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    # numpy pairwise summation keeps results independent of BLAS threading
    return np.sum(values * weights, axis=-1)


def _log_weighted_sum_exp(log_terms: np.ndarray, weights: np.ndarray):
    peak = np.max(log_terms, axis=-1, keepdims=True)
    mass = _wsum(weights, np.exp(log_terms - peak))
    return peak[..., 0] + np.log(mass), peak, mass


def log_likelihood_field(path: FbmPath) -> LogLikelihoodField:
    drift = 0.5 * np.abs(path.grid.nodes) ** (2.0 * path.hurst)
    return LogLikelihoodField(path.grid, path.hurst, path.values - drift)


def posterior(field: LogLikelihoodField) -> PosteriorDensity:
    w = field.grid.weights
    peak = np.max(field.log_z, axis=-1, keepdims=True)
    unnorm = np.exp(field.log_z - peak)
    mass = _wsum(w, unnorm)
    if np.any(~(mass > 0.0)):
        raise DegenerateMass("posterior normaliser vanished")
    q = unnorm / mass[..., None]
    return PosteriorDensity(field.grid, q, _scalar(peak[..., 0] + np.log(mass)))


def pitman_estimate(post: PosteriorDensity):
    """Posterior mean ∫ t q_t dt by the trapezoid rule."""
    return _scalar(_wsum(post.grid.weights * post.grid.nodes, post.q))


def absolute_moment(post: PosteriorDensity, p: float):
    if p < 1:
        raise ParameterOutOfRange(f"moment order must be >= 1, got {p}")
    return _scalar(_wsum(post.grid.weights * np.abs(post.grid.nodes) ** p, post.q))


def mle_argmax(field: LogLikelihoodField):
    """Grid node maximising log Z; ties go to the smallest |t|, then to t < 0."""
    order = field.grid.argmax_order
    j = order[np.argmax(field.log_z[..., order], axis=-1)]
    return _scalar(field.grid.nodes[j])


def log_beta(field: LogLikelihoodField, m: float):
    """log ∫ exp(m u) Z_u du."""
    if not abs(m) < M_LIMIT:
        raise ParameterOutOfRange(f"|m| must be < {M_LIMIT}, got {m}")
    if m == 0.0:
        terms = field.log_z
    else:
        terms = field.log_z + m * field.grid.nodes
    value, _, _ = _log_weighted_sum_exp(terms, field.grid.weights)
    return _scalar(value)


def shift_test_rhs(post: PosteriorDensity, zeta, test_fn) -> np.ndarray:
    """∫ G(ζ - t) q_t dt for each path, with ζ that path's own estimate."""
    zeta = np.asarray(zeta, dtype=float)
    shifted = zeta[..., None] - post.grid.nodes
    return _scalar(_wsum(post.grid.weights, test_fn(shifted) * post.q))


def outer_mass(post: PosteriorDensity, fraction: float = 0.05):
    """Posterior mass in the outer ``fraction`` of the grid on each side."""
    grid = post.grid
    outer = np.abs(grid.nodes) > (1.0 - fraction) * grid.half_width
    return _scalar(_wsum(grid.weights * outer, post.q))


def path_functionals(
    path: FbmPath,
    p_orders=DEFAULT_P_ORDERS,
    m_values=(-DEFAULT_G_STEP, 0.0, DEFAULT_G_STEP),
) -> PathFunctionals:
    for m in m_values:
        if not abs(m) < M_LIMIT:
            raise ParameterOutOfRange(f"|m| must be < {M_LIMIT}, got {m}")
    fld = log_likelihood_field(path)
    post = posterior(fld)
    return functionals_from(fld, post, p_orders, m_values)


def functionals_from(fld, post, p_orders, m_values) -> PathFunctionals:
    return PathFunctionals(
        zeta=pitman_estimate(post),
        xi=mle_argmax(fld),
        a_moments={float(p): absolute_moment(post, p) for p in p_orders},
        log_beta={float(m): (post.log_b0 if m == 0 else log_beta(fld, m)) for m in m_values},
        log_b0=post.log_b0,
    )
