"""Reproducible trajectory-parallel campaigns and the statistical identity checks.

Trajectories are cut into fixed-size chunks by index.  A chunk is a pure
function of (config, chunk bounds), so the worker pool only changes who
computes it, never what is computed; chunk results are folded in index order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from . import closedform, streams
from .errors import ConfigInvalid, ParameterOutOfRange
from .functionals import (
    DEFAULT_G_STEP,
    DEFAULT_P_ORDERS,
    M_LIMIT,
    functionals_from,
    log_likelihood_field,
    outer_mass,
    posterior,
    shift_test_rhs,
)
from .moments import MomentAccumulator
from .sampler import (
    FbmPath,
    TimeGrid,
    build_embedding,
    paths_from_normals,
    plan_for_grid,
    sample_one_sided_values,
    validate_hurst,
)

CHECK_NAMES = ("corollary1", "theorem2", "corollary2_k4", "lemma2", "gcurvature")
TABLE1_HURST = (0.4, 0.5, 0.6, 0.7, 0.81, 0.91)
THREADS_ENV = "FBM_PITMAN_THREADS"

TEST_FUNCTIONS = {
    "one": np.ones_like,
    "cos": np.cos,
    "sigmoid": special.expit,
}

DESK_HALF_WIDTH = 1000.0
DESK_POINTS = 2**14 + 1
DESK_TRAJECTORIES = 20_000


def default_m_values(h: float = DEFAULT_G_STEP) -> tuple[float, ...]:
    return (-h, -h / 2, 0.0, h / 2, h)


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RunConfig:
    hurst: float
    half_width: float = DESK_HALF_WIDTH
    n_points: int = DESK_POINTS
    n_trajectories: int = DESK_TRAJECTORIES
    seed: int = 0
    p_orders: tuple[float, ...] = DEFAULT_P_ORDERS
    m_values: tuple[float, ...] = field(default_factory=default_m_values)
    checks: frozenset[str] = frozenset()
    theorem2_tests: tuple[str, ...] = ("cos", "sigmoid")
    chunk_size: int = 64
    lemma2_points: int = 1025

    def __post_init__(self):
        try:
            validate_hurst(self.hurst)
        except ParameterOutOfRange as exc:
            raise ConfigInvalid(str(exc)) from None
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ConfigInvalid(f"n_points must be odd and >= 3, got {self.n_points}")
        if not self.half_width > 0:
            raise ConfigInvalid(f"half_width must be positive, got {self.half_width}")
        if self.n_trajectories < 2:
            raise ConfigInvalid("n_trajectories must be at least 2")
        if any(not abs(m) < M_LIMIT for m in self.m_values):
            raise ConfigInvalid(f"m_values must lie in (-{M_LIMIT}, {M_LIMIT})")
        if 0.0 not in self.m_values:
            raise ConfigInvalid("m_values must contain 0")
        if any(p < 1 for p in self.p_orders):
            raise ConfigInvalid("moment orders must be >= 1")
        unknown = set(self.checks) - set(CHECK_NAMES)
        if unknown:
            raise ConfigInvalid(f"unknown checks: {sorted(unknown)}")
        if "corollary1" in self.checks and 2.0 not in self.p_orders:
            raise ConfigInvalid("corollary1 needs moment order 2")
        if "corollary2_k4" in self.checks and 4.0 not in self.p_orders:
            raise ConfigInvalid("corollary2_k4 needs moment order 4")
        if "gcurvature" in self.checks and self.hurst < 0.5:
            raise ConfigInvalid("g-curvature check requires H >= 0.5")
        if set(self.theorem2_tests) - set(TEST_FUNCTIONS):
            raise ConfigInvalid(f"theorem2 test functions must be among {sorted(TEST_FUNCTIONS)}")
        if self.chunk_size < 1 or self.lemma2_points < 3:
            raise ConfigInvalid("chunk_size and lemma2_points must be positive")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.half_width, self.n_points)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["checks"] = sorted(self.checks)
        out["p_orders"] = list(self.p_orders)
        out["m_values"] = list(self.m_values)
        out["theorem2_tests"] = list(self.theorem2_tests)
        return out


@dataclass
class Statistic:
    name: str
    estimate: float
    standard_error: float
    count: int


@dataclass
class CheckResult:
    name: str
    passed: bool
    statistic: float
    standard_error: float
    details: dict = field(default_factory=dict)


@dataclass
class McSummary:
    config: RunConfig
    statistics: dict[str, Statistic]
    checks: dict[str, CheckResult] = field(default_factory=dict)
    trajectories: dict[str, np.ndarray] | None = None

    def __getitem__(self, name: str) -> float:
        return self.statistics[name].estimate

    def se(self, name: str) -> float:
        return self.statistics[name].standard_error

    def to_dict(self) -> dict:
        out = {
            "config": self.config.to_dict(),
            "statistics": {k: asdict(v) for k, v in self.statistics.items()},
            "checks": {k: asdict(v) for k, v in self.checks.items()},
        }
        for key in ("var_zeta", "var_xi", "mean_a2"):
            if key in self.statistics:
                out[key] = self[key]
        for key in ("var_zeta", "var_xi"):
            out[f"se_{key}"] = self.se(key)
        return out


# ---------------------------------------------------------------------------
# chunk computation
# ---------------------------------------------------------------------------


def moment_column(p: float) -> str:
    return f"a{p:g}"


def log_beta_column(m: float) -> str:
    return f"log_beta[{m:+.6g}]"


def simulate_chunk(config: RunConfig, plan, start: int, stop: int) -> dict[str, np.ndarray]:
    """Per-trajectory functionals for trajectories ``start`` .. ``stop - 1``."""
    grid = config.grid
    normals = streams.stacked_normals(config.seed, range(start, stop), plan.normals_per_path)
    path = FbmPath(grid, config.hurst, paths_from_normals(plan, grid, normals))
    fld = log_likelihood_field(path)
    post = posterior(fld)
    f = functionals_from(fld, post, config.p_orders, config.m_values)
    cols = {
        "trajectory_id": np.arange(start, stop),
        "zeta": np.asarray(f.zeta),
        "xi": np.asarray(f.xi),
        "log_b0": np.asarray(f.log_b0),
        "outer_mass": np.asarray(outer_mass(post)),
    }
    for p, v in f.a_moments.items():
        cols[moment_column(p)] = np.asarray(v)
    for m, v in f.log_beta.items():
        cols[log_beta_column(m)] = np.asarray(v)
    if "theorem2" in config.checks:
        for name in config.theorem2_tests:
            cols[f"theorem2_rhs[{name}]"] = np.asarray(
                shift_test_rhs(post, f.zeta, TEST_FUNCTIONS[name])
            )
    return cols


def _chunk_bounds(config: RunConfig):
    n, size = config.n_trajectories, config.chunk_size
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def _map_ordered(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(*item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda item: fn(*item), items))


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def paired_z(name: str, diff, threshold: float = 3.0, **details) -> CheckResult:
    """Two-sided z-test that the mean of a paired difference vanishes."""
    acc = MomentAccumulator.from_values(diff)
    mean, se = acc.mean, acc.standard_error()
    if se == 0.0:
        z = 0.0 if mean == 0.0 else math.copysign(math.inf, mean)
    else:
        z = mean / se
    return CheckResult(name, bool(abs(z) <= threshold), z, se,
                       {"mean_difference": mean, "count": acc.count, **details})


def check_corollary1(zeta, a2) -> CheckResult:
    """E ζ^2 = E A_2 / 2, tested on d_i = ζ_i^2 - A_2,i / 2."""
    zeta = np.asarray(zeta, dtype=float)
    return paired_z("corollary1", zeta**2 - 0.5 * np.asarray(a2, dtype=float))


def check_theorem2(zeta, rhs, test: str = "cos") -> CheckResult:
    """E G(ζ) = E ∫ G(ζ - t) q_t dt, paired per trajectory."""
    lhs = TEST_FUNCTIONS[test](np.asarray(zeta, dtype=float))
    return paired_z(f"theorem2[{test}]", lhs - np.asarray(rhs, dtype=float), test=test)


def check_corollary2(zeta, a_k, k: int = 4) -> CheckResult:
    """E ζ^k >= c_k^k E A_k; passes when the paired margin is >= -3 SE."""
    c = closedform.ck_root(k).root
    d = np.asarray(zeta, dtype=float) ** k - c**k * np.asarray(a_k, dtype=float)
    acc = MomentAccumulator.from_values(d)
    se = acc.standard_error()
    return CheckResult(f"corollary2_k{k}", bool(acc.mean >= -3.0 * se), acc.mean, se,
                       {"c_k": c, "count": acc.count})


def lemma2_functional(W: np.ndarray, t: float, r: float) -> np.ndarray:
    """(∫_0^t e^{W_s} ds)^-r by the trapezoid rule; W sampled uniformly on [0, t]."""
    n = W.shape[-1] - 1
    w = np.full(n + 1, t / n)
    w[0] = w[-1] = 0.5 * t / n
    return np.sum(np.exp(W) * w, axis=-1) ** -r


def lemma2_samples(H: float, t: float, r: float, n_samples: int, seed: int,
                   n_points: int = 1025, chunk_size: int = 256) -> np.ndarray:
    n = n_points - 1
    plan = build_embedding(n, H, t / n)
    out = np.empty(n_samples)
    for a in range(0, n_samples, chunk_size):
        b = min(a + chunk_size, n_samples)
        z = streams.stacked_normals(seed, range(a, b), plan.normals_per_path, streams.ONE_SIDED)
        out[a:b] = lemma2_functional(sample_one_sided_values(plan, z), t, r)
    return out


def check_lemma2(H: float, t: float = 1.0, r: float = 1.0, n_samples: int = 20_000,
                 seed: int = 0, n_points: int = 1025) -> CheckResult:
    bound = closedform.lemma2_bound(t, r, H)
    acc = MomentAccumulator.from_values(lemma2_samples(H, t, r, n_samples, seed, n_points))
    se = acc.standard_error()
    return CheckResult("lemma2", bool(acc.mean <= bound + 3.0 * se), acc.mean, se,
                       {"bound": bound, "t": t, "r": r, "count": acc.count})


def _second_difference(log_beta: dict, h: float) -> np.ndarray:
    lb = {round(m, 12): np.asarray(v, dtype=float) for m, v in log_beta.items()}
    try:
        plus, zero, minus = lb[round(h, 12)], lb[0.0], lb[round(-h, 12)]
    except KeyError:
        raise ParameterOutOfRange(f"log_beta must be available at -{h}, 0, {h}") from None
    return (plus - 2.0 * zero + minus) / (h * h)


def estimate_g_curvature(log_beta: dict, zeta, hurst: float, h: float | None = None) -> CheckResult:
    """g''(0) by common-random-number second differences, compared with E ζ^2.

    When log β is also available at ±h/2 the O(h^2) bias of the step-h
    difference is estimated by Richardson, (4/3)(s_h - s_{h/2}), and used as
    the bias allowance.
    """
    if hurst < 0.5:
        raise ParameterOutOfRange("g-curvature representation needs H >= 1/2")
    if h is None:
        h = max(log_beta)
    if not 0.0 < h < M_LIMIT:
        raise ParameterOutOfRange(f"step h must lie in (0, {M_LIMIT}), got {h}")
    s = _second_difference(log_beta, h)
    acc = MomentAccumulator.from_values(s)
    bias = 0.0
    half = round(h / 2, 12)
    if half in {round(m, 12) for m in log_beta}:
        bias = abs(4.0 / 3.0 * (acc.mean - float(np.mean(_second_difference(log_beta, h / 2)))))
    zeta = np.asarray(zeta, dtype=float)
    diff = MomentAccumulator.from_values(s - zeta**2)
    tol = 3.0 * diff.standard_error() + bias
    return CheckResult(
        "gcurvature", bool(abs(diff.mean) <= tol), acc.mean, acc.standard_error(),
        {"h": h, "var_zeta": float(np.mean(zeta**2)), "difference": diff.mean,
         "difference_se": diff.standard_error(), "bias_allowance": bias, "tolerance": tol},
    )


# ---------------------------------------------------------------------------
# campaign
# ---------------------------------------------------------------------------


def _variance_stat(name: str, acc: MomentAccumulator, centered: bool) -> Statistic:
    est = acc.variance() if centered else acc.second_moment()
    return Statistic(name, est, acc.variance_standard_error(), acc.count)


def _mean_stat(name: str, acc: MomentAccumulator) -> Statistic:
    return Statistic(name, acc.mean, acc.standard_error(), acc.count)


def run_campaign(config: RunConfig, workers: int | None = None,
                 keep_trajectories: bool = False) -> McSummary:
    workers = default_workers() if workers is None else max(1, int(workers))
    plan = plan_for_grid(config.grid, config.hurst)
    chunks = _map_ordered(
        lambda a, b: simulate_chunk(config, plan, a, b), _chunk_bounds(config), workers
    )

    keys = [k for k in chunks[0] if k != "trajectory_id" and not k.startswith("theorem2")]
    accs = {k: MomentAccumulator() for k in keys}
    for cols in chunks:
        for k in keys:
            accs[k] = accs[k].merge(MomentAccumulator.from_values(cols[k]))

    stats = {
        "var_zeta": _variance_stat("var_zeta", accs["zeta"], centered=False),
        "var_zeta_centered": _variance_stat("var_zeta_centered", accs["zeta"], centered=True),
        "var_xi": _variance_stat("var_xi", accs["xi"], centered=False),
        "var_xi_centered": _variance_stat("var_xi_centered", accs["xi"], centered=True),
        "mean_zeta": _mean_stat("mean_zeta", accs["zeta"]),
        "mean_xi": _mean_stat("mean_xi", accs["xi"]),
        "outer_mass": _mean_stat("outer_mass", accs["outer_mass"]),
    }
    for p in config.p_orders:
        col = moment_column(p)
        stats[f"mean_{col}"] = _mean_stat(f"mean_{col}", accs[col])
    for m in config.m_values:
        col = log_beta_column(m)
        stats[f"g[{m:+.6g}]"] = _mean_stat(f"g[{m:+.6g}]", accs[col])

    table = {k: np.concatenate([c[k] for c in chunks]) for k in chunks[0]}
    checks: dict[str, CheckResult] = {}
    if "corollary1" in config.checks:
        checks["corollary1"] = check_corollary1(table["zeta"], table[moment_column(2.0)])
    if "theorem2" in config.checks:
        for name in config.theorem2_tests:
            res = check_theorem2(table["zeta"], table[f"theorem2_rhs[{name}]"], name)
            checks[res.name] = res
    if "corollary2_k4" in config.checks:
        checks["corollary2_k4"] = check_corollary2(table["zeta"], table[moment_column(4.0)], 4)
    if "lemma2" in config.checks:
        checks["lemma2"] = check_lemma2(config.hurst, 1.0, 1.0, config.n_trajectories,
                                        config.seed, config.lemma2_points)
    if "gcurvature" in config.checks:
        lb = {m: table[log_beta_column(m)] for m in config.m_values}
        checks["gcurvature"] = estimate_g_curvature(lb, table["zeta"], config.hurst)

    return McSummary(config, stats, checks, table if keep_trajectories else None)
