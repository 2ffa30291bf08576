"""Differentially private Mann-Whitney U test run directly on sensitive data.

The mechanism privatizes the smaller group size with part of the budget
(plus all of delta, spent on a high-probability lower bound that caps the
U statistic's sensitivity), privatizes U itself with the rest, and obtains
a two-sided p-value from a Monte Carlo null distribution of equally noised
permutation statistics. The total record count is treated as public.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .data import GroupedDataset
from .rng import RandomSource, laplace_sample
from .stattests import TestOutcome, u_statistic
from .synth import BudgetLedger, PrivacyBudget

__all__ = ["DPMWConfig", "dp_mann_whitney"]

# Rows per vectorized permutation block; bounds memory at ~32 MB of int32.
_CHUNK_BUDGET = 8_000_000


@dataclass(frozen=True)
class DPMWConfig:
    """Budget split and null-simulation size for the DP Mann-Whitney test.

    ``size_fraction`` of epsilon estimates the smaller group size; the rest
    privatizes the U statistic. delta is consumed only by the size bound.
    """

    budget: PrivacyBudget
    size_fraction: float = 0.65
    null_samples: int = 10_000

    def __post_init__(self):
        if not self.budget.delta > 0:
            raise ValueError("the DP Mann-Whitney test requires delta > 0")
        if not 0.0 < self.size_fraction < 1.0:
            raise ValueError(f"size_fraction must be in (0, 1), got {self.size_fraction}")
        if self.null_samples < 1000:
            raise ValueError(f"null_samples must be at least 1000, got {self.null_samples}")


def _null_rank_sums(n_total: int, m_hat: int, k: int, rng: RandomSource) -> np.ndarray:
    """Rank sums of k random m_hat-subsets of the ranks 1..n_total."""
    out = np.empty(k, dtype=np.int64)
    chunk = max(1, min(k, _CHUNK_BUDGET // n_total))
    base = np.arange(1, n_total + 1, dtype=np.int32)
    done = 0
    while done < k:
        rows = min(chunk, k - done)
        block = np.tile(base, (rows, 1))
        rng.generator.permuted(block, axis=1, out=block)
        out[done : done + rows] = block[:, :m_hat].sum(axis=1, dtype=np.int64)
        done += rows
    return out


def dp_mann_whitney(data: GroupedDataset, cfg: DPMWConfig, rng: RandomSource) -> TestOutcome:
    """(epsilon, delta)-DP two-sided Mann-Whitney U test on the original data.

    Steps: privatize the minimum group size with Laplace(1/eps1); derive a
    high-probability lower bound on it, which bounds the U sensitivity by
    Delta = N - max(1, lower); release u_tilde = U + Laplace(Delta/eps2);
    compare |u_tilde - mu| against ``null_samples`` permutation statistics
    of sizes (m_hat, N - m_hat), each re-noised with the same Laplace scale.
    """
    n0 = int((data.groups == 0).sum())
    n1 = int((data.groups == 1).sum())
    if n0 == 0 or n1 == 0:
        raise ValueError("both groups must be non-empty")
    n_total = n0 + n1
    eps = cfg.budget.epsilon
    ledger = BudgetLedger(eps)
    size_frac = Fraction(cfg.size_fraction)
    eps1 = ledger.spend(size_frac, "group size")
    eps2 = ledger.spend(1 - size_frac, "u statistic")

    m = min(n0, n1)
    m_tilde = m + laplace_sample(1.0 / eps1, rng)
    m_low = math.floor(m_tilde - math.log(1.0 / (2.0 * cfg.budget.delta)) / eps1)
    m_hat = int(np.clip(round(m_tilde), 1, n_total // 2))
    sensitivity = n_total - max(1, m_low)

    u = u_statistic(data.group_values(0), data.group_values(1))
    u_tilde = u + laplace_sample(sensitivity / eps2, rng)
    ledger.close()

    # Null distribution: untied ranks split into groups of sizes (m_hat, rest).
    k = cfg.null_samples
    rank_sums = _null_rank_sums(n_total, m_hat, k, rng)
    u_null = rank_sums.astype(float) - m_hat * (m_hat + 1) / 2.0
    u_null += laplace_sample(sensitivity / eps2, rng, size=k)
    mu = m_hat * (n_total - m_hat) / 2.0
    # Both sides of the comparison are snapped back to U's half-integer
    # lattice (identical post-processing, so exchangeability under the null
    # is untouched). Without this, the observed statistic lands within the
    # noise scale of one of the lattice atoms and vanishing noise would
    # break the ties 50/50 instead of recovering the plain permutation test.
    exceed = int(
        np.count_nonzero(np.abs(_half_round(u_null) - mu) >= abs(_half_round(u_tilde) - mu))
    )
    p = (1 + exceed) / (k + 1)
    return TestOutcome(float(u_tilde), p, True)


def _half_round(x):
    return np.round(2.0 * x) / 2.0
