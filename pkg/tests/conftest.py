import functools

import numpy as np
import pytest

from fbm_pitman.montecarlo import CHECK_NAMES, RunConfig, run_campaign

DESK_SEED = 20240601

_criteria_report: list[str] = []


@functools.lru_cache(maxsize=None)
def desk_campaign(H: float):
    """Desk-scale campaign (T=1000, N=2^14+1, n=2e4) with its path checks, cached for the session."""
    checks = [c for c in CHECK_NAMES if c != "lemma2" and (c != "gcurvature" or H >= 0.5)]
    return run_campaign(RunConfig(hurst=H, seed=DESK_SEED, checks=frozenset(checks)))


@pytest.fixture
def report():
    def record(label: str, passed: bool, detail: str = "") -> bool:
        _criteria_report.append(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip())
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _criteria_report:
        terminalreporter.section("acceptance criteria")
        for line in _criteria_report:
            terminalreporter.write_line(line)


def gaussian_second_moments(x: np.ndarray):
    """Entrywise E[x_i x_j] and its standard error for zero-mean samples (rows)."""
    n = x.shape[0]
    est = x.T @ x / n
    sq = x * x
    # sample variance of x_i x_j from E[x_i^2 x_j^2] without forming the n x k x k products
    var = (sq.T @ sq / n - est**2) * n / (n - 1)
    se = np.sqrt(np.maximum(var, 0.0) / n)
    return est, se
