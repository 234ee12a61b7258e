"""Mergeable single-pass moments up to order four (Welford / Pébay updates)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class MomentAccumulator:
    """Count, mean and central sums M_p = Σ (x - mean)^p for p = 2, 3, 4."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    def push(self, x: float) -> None:
        n1 = self.count
        n = n1 + 1
        delta = x - self.mean
        dn = delta / n
        dn2 = dn * dn
        term1 = delta * dn * n1
        self.mean += dn
        self.m4 += term1 * dn2 * (n * n - 3 * n + 3) + 6 * dn2 * self.m2 - 4 * dn * self.m3
        self.m3 += term1 * dn * (n - 2) - 3 * dn * self.m2
        self.m2 += term1
        self.count = n

    @classmethod
    def from_values(cls, values) -> "MomentAccumulator":
        """Two-pass moments of a batch; cheaper and more accurate than repeated push."""
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            return cls()
        mean = float(np.mean(x))
        d = x - mean
        d2 = d * d
        return cls(x.size, mean, float(np.sum(d2)), float(np.sum(d2 * d)), float(np.sum(d2 * d2)))

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Combined moments of both samples; neither operand is modified."""
        na, nb = self.count, other.count
        if na == 0:
            return MomentAccumulator(**vars(other))
        if nb == 0:
            return MomentAccumulator(**vars(self))
        n = na + nb
        delta = other.mean - self.mean
        d_n = delta / n
        mean = self.mean + nb * d_n
        m2 = self.m2 + other.m2 + delta * d_n * na * nb
        m3 = (
            self.m3 + other.m3
            + delta * d_n * d_n * na * nb * (na - nb)
            + 3.0 * d_n * (na * other.m2 - nb * self.m2)
        )
        m4 = (
            self.m4 + other.m4
            + delta * d_n**3 * na * nb * (na * na - na * nb + nb * nb)
            + 6.0 * d_n * d_n * (na * na * other.m2 + nb * nb * self.m2)
            + 4.0 * d_n * (na * other.m3 - nb * self.m3)
        )
        return MomentAccumulator(n, mean, m2, m3, m4)

    __add__ = merge

    def _need(self, k: int) -> None:
        if self.count < k:
            raise ValueError(f"need at least {k} samples, have {self.count}")

    def variance(self) -> float:
        """Unbiased sample variance."""
        self._need(2)
        return max(self.m2 / (self.count - 1), 0.0)

    def central_moment(self, p: int) -> float:
        """Biased central sample moment (divided by n)."""
        self._need(1)
        return {2: self.m2, 3: self.m3, 4: self.m4}[p] / self.count

    def second_moment(self) -> float:
        """Uncentered E x^2."""
        self._need(1)
        return self.mean * self.mean + self.m2 / self.count

    def standard_error(self) -> float:
        """Standard error of the mean."""
        return math.sqrt(self.variance() / self.count)

    def variance_standard_error(self) -> float:
        """SE of a variance estimate: sqrt((m4 - m2^2) / n) from central moments."""
        self._need(2)
        c2 = self.central_moment(2)
        return math.sqrt(max(self.central_moment(4) - c2 * c2, 0.0) / self.count)
