"""Two-sided fractional Brownian motion on a symmetric uniform grid.

The production sampler is circulant embedding of fractional Gaussian noise
(one real FFT per path).  A Cholesky sampler over the exact covariance
matrix is kept as an independent oracle for small grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CovarianceNotPSD, EigenvalueNegative, GridTooLarge, ParameterOutOfRange

EIGENVALUE_TOLERANCE = 1e-9
CHOLESKY_MAX_POINTS = 2048


def validate_hurst(H: float) -> float:
    H = float(H)
    if not 0.0 < H <= 1.0:
        raise ParameterOutOfRange(f"Hurst parameter must lie in (0, 1], got {H!r}")
    return H


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [-T, T] with an odd number of nodes, one of them at 0."""

    half_width: float
    n_points: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ParameterOutOfRange(f"half_width must be positive, got {self.half_width!r}")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ParameterOutOfRange(
                f"n_points must be odd and at least 3, got {self.n_points!r}"
            )

    @property
    def center(self) -> int:
        return (self.n_points - 1) // 2

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        # (j - c) * spacing is exactly antisymmetric about the center
        offsets = np.arange(self.n_points) - self.center
        nodes = offsets * self.spacing
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        w.setflags(write=False)
        return w

    @cached_property
    def argmax_order(self) -> np.ndarray:
        """Node indices ordered 0, -Δ, +Δ, -2Δ, +2Δ, ... (argmax tie priority)."""
        c = self.center
        order = np.empty(self.n_points, dtype=np.intp)
        order[0] = c
        order[1::2] = c - np.arange(1, c + 1)
        order[2::2] = c + np.arange(1, c + 1)
        order.setflags(write=False)
        return order


@dataclass(frozen=True)
class FbmPath:
    """Sampled fBm values on ``grid``; ``values`` has shape (..., n_points)."""

    grid: TimeGrid
    hurst: float
    values: np.ndarray

    def reversed(self) -> "FbmPath":
        return FbmPath(self.grid, self.hurst, self.values[..., ::-1].copy())


@dataclass(frozen=True)
class EmbeddingPlan:
    """Reusable circulant embedding of the fGn covariance.

    ``eigenvalues`` holds the first ``circulant_size // 2 + 1`` eigenvalues of
    the symmetric circulant (the rest repeat in reverse), clamped at zero.
    """

    hurst: float
    spacing: float
    n_increments: int
    circulant_size: int
    eigenvalues: np.ndarray

    @cached_property
    def _half_scale(self) -> np.ndarray:
        # Hermitian coefficients: sqrt(lambda/M) on the two real modes,
        # sqrt(lambda/2M) on the complex ones.
        M = self.circulant_size
        scale = np.sqrt(self.eigenvalues / (2.0 * M))
        scale[0] = np.sqrt(self.eigenvalues[0] / M)
        scale[-1] = np.sqrt(self.eigenvalues[-1] / M)
        return scale

    @property
    def normals_per_path(self) -> int:
        return 1 if self.hurst == 1.0 else self.circulant_size

    def increments(self, normals: np.ndarray) -> np.ndarray:
        """Map standard normals of shape (..., M) to fGn of shape (..., n_increments)."""
        M = self.circulant_size
        half = M // 2
        coeff = np.empty(normals.shape[:-1] + (half + 1,), dtype=complex)
        coeff.real[..., 0] = normals[..., 0]
        coeff.imag[..., 0] = 0.0
        coeff.real[..., half] = normals[..., 1]
        coeff.imag[..., half] = 0.0
        coeff.real[..., 1:half] = normals[..., 2 : half + 1]
        coeff.imag[..., 1:half] = normals[..., half + 1 :]
        coeff *= self._half_scale
        x = np.fft.irfft(coeff, n=M, axis=-1) * M
        return x[..., : self.n_increments]


def covariance(t, s, H: float):
    """R(t, s) = (|t|^2H + |s|^2H - |t - s|^2H) / 2."""
    two_h = 2.0 * H
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    out = 0.5 * (np.abs(t) ** two_h + np.abs(s) ** two_h - np.abs(t - s) ** two_h)
    return out[()] if out.ndim == 0 else out


def covariance_matrix(nodes: np.ndarray, H: float) -> np.ndarray:
    return covariance(nodes[:, None], nodes[None, :], H)


def fgn_autocovariance(k, H: float, spacing: float = 1.0):
    """Covariance of fBm increments over steps of ``spacing``, ``k`` steps apart."""
    if not spacing > 0:
        raise ParameterOutOfRange("spacing must be positive")
    two_h = 2.0 * H
    k = np.abs(np.asarray(k, dtype=float))
    out = 0.5 * spacing**two_h * (
        np.abs(k + 1) ** two_h - 2.0 * k**two_h + np.abs(k - 1) ** two_h
    )
    return out[()] if out.ndim == 0 else out


def circulant_size_for(n_increments: int) -> int:
    return max(2, 1 << (2 * n_increments - 1).bit_length())


def build_embedding(
    n_increments: int, H: float, spacing: float, circulant_size: int | None = None
) -> EmbeddingPlan:
    H = validate_hurst(H)
    if n_increments < 1:
        raise ParameterOutOfRange("n_increments must be at least 1")
    M = circulant_size_for(n_increments) if circulant_size is None else int(circulant_size)
    if M < 2 * n_increments or M & (M - 1):
        raise ParameterOutOfRange(
            f"circulant size must be a power of two >= {2 * n_increments}, got {M}"
        )
    half = M // 2
    gamma = fgn_autocovariance(np.arange(half + 1), H, spacing)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.rfft(row).real
    floor = -EIGENVALUE_TOLERANCE * eig.max()
    if eig.min() < floor:
        raise EigenvalueNegative(
            f"circulant embedding failed: min eigenvalue {eig.min():.3e} "
            f"(H={H}, n={n_increments}, M={M})"
        )
    eig = np.maximum(eig, 0.0)
    eig.setflags(write=False)
    return EmbeddingPlan(H, float(spacing), int(n_increments), M, eig)


def plan_for_grid(grid: TimeGrid, H: float) -> EmbeddingPlan:
    return build_embedding(grid.n_points - 1, H, grid.spacing)


def _check_plan(plan: EmbeddingPlan, grid: TimeGrid) -> None:
    if plan.n_increments < grid.n_points - 1:
        raise ParameterOutOfRange(
            f"plan covers {plan.n_increments} increments, grid needs {grid.n_points - 1}"
        )
    if not np.isclose(plan.spacing, grid.spacing, rtol=1e-12, atol=0.0):
        raise ParameterOutOfRange("plan spacing does not match grid spacing")


def paths_from_normals(plan: EmbeddingPlan, grid: TimeGrid, normals: np.ndarray) -> np.ndarray:
    """Two-sided path values from the normals consumed by ``plan``.

    A one-sided path B on [0, 2T] is shifted to W(t) = B(t + T) - B(T), which
    has the two-sided fBm law by stationarity of increments and pins W(0) = 0.
    """
    _check_plan(plan, grid)
    normals = np.asarray(normals, dtype=float)
    if plan.hurst == 1.0:
        return normals[..., :1] * grid.nodes
    n = grid.n_points - 1
    inc = plan.increments(normals)[..., :n]
    B = np.zeros(inc.shape[:-1] + (n + 1,))
    np.cumsum(inc, axis=-1, out=B[..., 1:])
    W = B - B[..., grid.center : grid.center + 1]
    W[..., grid.center] = 0.0
    return W


def sample_two_sided_path(
    plan: EmbeddingPlan, grid: TimeGrid, rng: np.random.Generator, size: int | None = None
) -> FbmPath:
    """Sample one path (or ``size`` paths from the same stream)."""
    shape = (plan.normals_per_path,) if size is None else (size, plan.normals_per_path)
    values = paths_from_normals(plan, grid, rng.standard_normal(shape))
    return FbmPath(grid, plan.hurst, values)


def sample_one_sided_values(plan: EmbeddingPlan, normals: np.ndarray) -> np.ndarray:
    """fBm at 0, Δ, ..., nΔ from the plan's increments; column 0 is zero."""
    normals = np.asarray(normals, dtype=float)
    n = plan.n_increments
    if plan.hurst == 1.0:
        return normals[..., :1] * (plan.spacing * np.arange(n + 1))
    inc = plan.increments(normals)
    B = np.zeros(inc.shape[:-1] + (n + 1,))
    np.cumsum(inc, axis=-1, out=B[..., 1:])
    return B


def cholesky_factor(cov: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Lower factor of a positive semidefinite matrix; zero pivots give zero columns."""
    n = cov.shape[0]
    L = np.zeros_like(cov, dtype=float)
    scale = max(float(np.max(np.diag(cov))), 1.0)
    for j in range(n):
        row = L[j, :j]
        pivot = cov[j, j] - row @ row
        if pivot < -tol:
            raise CovarianceNotPSD(f"pivot {pivot:.3e} at index {j}")
        if pivot <= 1e-12 * scale:
            continue
        d = np.sqrt(pivot)
        L[j, j] = d
        L[j + 1 :, j] = (cov[j + 1 :, j] - L[j + 1 :, :j] @ row) / d
    return L


def sample_path_cholesky(
    grid: TimeGrid, H: float, rng: np.random.Generator, size: int | None = None
) -> FbmPath:
    """Exact Gaussian sampling from the full covariance matrix (small grids only)."""
    H = validate_hurst(H)
    if grid.n_points > CHOLESKY_MAX_POINTS:
        raise GridTooLarge(
            f"Cholesky sampler limited to {CHOLESKY_MAX_POINTS} points, got {grid.n_points}"
        )
    keep = np.arange(grid.n_points) != grid.center
    L = cholesky_factor(covariance_matrix(grid.nodes[keep], H))
    shape = (L.shape[0],) if size is None else (size, L.shape[0])
    z = rng.standard_normal(shape)
    values = np.zeros(shape[:-1] + (grid.n_points,))
    values[..., keep] = z @ L.T
    return FbmPath(grid, H, values)
