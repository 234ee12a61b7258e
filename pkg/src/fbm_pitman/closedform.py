"""Exact and quadrature reference values used as oracles for the simulations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import BracketFailure, ParameterOutOfRange, QuadratureNotConverged
from .sampler import validate_hurst

#: ln(1 + sqrt 2), the positive root of sinh(D) = 1.
D_CONSTANT = math.log1p(math.sqrt(2.0))
#: Largest root of (4H^2 + 2H - 1) / (2(2H+2)(2H+1)) = 1/8.
H0 = (math.sqrt(73.0) - 1.0) / 12.0

YAO_CUTOFF = 400.0

# Bernoulli numbers B_2, B_4, ..., B_12 for the Euler-Maclaurin tail
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730)


def riemann_zeta(k: int, n_terms: int = 64) -> float:
    """ζ(k) for integer k >= 2.

    Direct partial sum to ``n_terms`` plus the Euler-Maclaurin tail
    ∫_n^∞ x^-k dx - n^-k/2 + Σ B_2j/(2j)! · (k)_(2j-1) · n^(-k-2j+1).
    """
    if k < 2:
        raise ParameterOutOfRange(f"zeta argument must be >= 2, got {k}")
    n = n_terms
    head = math.fsum(j ** -float(k) for j in range(1, n))
    tail = n ** (1.0 - k) / (k - 1) + 0.5 * n ** -float(k)
    rising = float(k)  # k (k+1) ... (k + 2j - 2)
    for j, b in enumerate(_BERNOULLI, start=1):
        tail += b / math.factorial(2 * j) * rising * n ** (-k - 2.0 * j + 1)
        rising *= (k + 2 * j - 1) * (k + 2 * j)
    return head + tail


def var_zeta_closed(H: float) -> float | None:
    """Known closed forms for Var(ζ_H): 16 ζ(3) at H = 1/2, 1 at H = 1."""
    H = validate_hurst(H)
    if H == 0.5:
        return 16.0 * riemann_zeta(3)
    if H == 1.0:
        return 1.0
    return None


def normal_cdf(x):
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def yao_tail(t):
    """P(|ξ| > t) for the argmax ξ of two-sided Brownian motion with drift -|t|/2.

    Each Φ(-c√t) e^{...} product is rewritten with the scaled complementary
    error function erfcx so that e^{t} Φ(-3√t/2) never forms ∞ · 0.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterOutOfRange("yao_tail needs t >= 0")
    s = np.sqrt(t / 8.0)
    # (t+5) Φ(-√t/2)        = (t+5)/2 · erfcx(s) e^{-t/8}
    # 3 e^{t} Φ(-3√t/2)     = 3/2 · erfcx(3s) e^{-t/8}
    bracket = 0.5 * (t + 5.0) * special.erfcx(s) - np.sqrt(2.0 * t / math.pi) - 1.5 * special.erfcx(3.0 * s)
    out = np.clip(np.exp(-t / 8.0) * bracket, 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


def yao_tail_envelope(t):
    """The expression √(32/(πt)) e^{-t/8}; an upper bound on yao_tail for large t."""
    t = np.asarray(t, dtype=float)
    return np.sqrt(32.0 / (math.pi * t)) * np.exp(-t / 8.0)


def yao_truncation_bound(cutoff: float = YAO_CUTOFF) -> float:
    """Upper bound on ∫_cutoff^∞ 2t · yao_tail(t) dt using 1.1 × envelope.

    ∫_a^∞ 2t √(32/(πt)) e^{-t/8} dt = 2√(32/π) · 8^{3/2} Γ(3/2, a/8).
    """
    upper_gamma = special.gammaincc(1.5, cutoff / 8.0) * special.gamma(1.5)
    return 1.1 * 2.0 * math.sqrt(32.0 / math.pi) * 8.0**1.5 * upper_gamma


def yao_variance(tol: float = 1e-6) -> float:
    """Var(ξ) = ∫_0^∞ 2t P(|ξ| > t) dt for the Brownian argmax (exactly 26)."""
    value, err = integrate.quad(
        lambda t: 2.0 * t * yao_tail(t), 0.0, YAO_CUTOFF,
        epsabs=1e-11, epsrel=1e-12, limit=400, points=(8.0, 40.0),
    )
    truncation = yao_truncation_bound()
    if err + truncation > tol:
        raise QuadratureNotConverged(f"error estimate {err + truncation:.3e} exceeds {tol}")
    return value


@dataclass(frozen=True)
class CkSolution:
    k: int
    root: float
    residual: float


def _ck_lhs(x: float, k: int) -> float:
    with np.errstate(over="ignore"):
        x = np.float64(x)
        return float((x + 1) ** k - (x - 1) ** k + 2 * k * (x**k - x ** (k - 1)) - 2)


def _ck_slope(x: float, k: int) -> float:
    with np.errstate(over="ignore"):
        x = np.float64(x)
        return float(k * ((x + 1) ** (k - 1) - (x - 1) ** (k - 1))
                     + 2 * k * (k * x ** (k - 1) - (k - 1) * x ** (k - 2)))


def ck_root(k: int, max_iter: int = 200) -> CkSolution:
    """Unique positive root of (x+1)^k - (x-1)^k + 2k(x^k - x^(k-1)) = 2, k even."""
    if k < 2 or k % 2 or k > 10_000:
        raise ParameterOutOfRange(f"k must be an even integer in [2, 10000], got {k}")
    lo, hi = 0.0, 1.0
    f_lo, f_hi = _ck_lhs(lo, k), _ck_lhs(hi, k)
    if not (f_lo < 0.0 < f_hi):
        raise BracketFailure(f"no sign change on (0, 1] for k={k}: f={f_lo}, {f_hi}")
    probe = np.array([_ck_lhs(x, k) for x in np.linspace(lo, hi, 257)])
    if np.any(probe[1:] < probe[:-1]):
        raise BracketFailure(f"left side not monotone on (0, 1] for k={k}")

    def tolerance(x):
        with np.errstate(over="ignore"):
            return 1e-12 * max(1.0, float(np.float64(x + 1.0) ** k))

    x = 0.5
    for _ in range(max_iter):
        x = 0.5 * (lo + hi)
        fx = _ck_lhs(x, k)
        if fx < 0:
            lo = x
        else:
            hi = x
        if hi - lo < 1e-6 * hi:
            break
    for _ in range(max_iter):
        fx = _ck_lhs(x, k)
        if abs(fx) <= tolerance(x):
            break
        step = x - fx / _ck_slope(x, k)
        # fall back to bisection when Newton leaves the bracket
        if not lo < step < hi:
            step = 0.5 * (lo + hi)
        if _ck_lhs(step, k) < 0:
            lo = step
        else:
            hi = step
        x = step
    return CkSolution(k, x, abs(_ck_lhs(x, k)))


def ck_asymptotic(k: int) -> float:
    if k < 1:
        raise ParameterOutOfRange("k must be >= 1")
    return D_CONSTANT / k


def alpha_rational_branch(H: float) -> float:
    return (4 * H * H + 2 * H - 1) / (2 * (2 * H + 2) * (2 * H + 1))


def alpha_lower_bound(H: float) -> float:
    """Lower bound on the exponential-moment index α_H of |ζ_H|^2H."""
    H = validate_hurst(H)
    if H == 1.0:
        return 0.5
    return max(0.125, alpha_rational_branch(H))


def integrated_fbm_variance(t: float, H: float) -> float:
    """Var ∫_0^t W_s ds = t^(2H+2) / (2H+2)."""
    if not t > 0:
        raise ParameterOutOfRange("t must be positive")
    H = validate_hurst(H)
    return t ** (2 * H + 2) / (2 * H + 2)


def lemma2_bound(t: float, r: float, H: float) -> float:
    """Jensen bound t^-r exp(r^2 Var(∫_0^t W) / (2 t^2)) on E(∫_0^t e^W ds)^-r."""
    if not r > 0:
        raise ParameterOutOfRange("r must be positive")
    v = integrated_fbm_variance(t, H)
    return t**-r * math.exp(r * r * v / (2.0 * t * t))
