"""Differentially private synthetic-data generators over histograms and marginals.

Four mechanisms are provided:

* ``perturbed_histogram`` - discrete Laplace noise on every cell count,
  negatives clamped to zero, records emitted from the noisy counts.
* ``smoothed_histogram`` - draws exactly ``m`` records from cell
  probabilities proportional to ``count + 2m/epsilon``.
* ``mwem`` - iterative multiplicative-weights fitting of noisy cell-count
  measurements selected by the exponential mechanism.
* ``marginal_ipf`` - noisy one-way/two-way marginal release reconciled into
  a joint distribution by iterative proportional fitting.

Every mechanism accounts for its privacy budget through a
:class:`BudgetLedger`; a run that would not consume exactly the configured
epsilon fails loudly rather than silently over- or under-spending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .data import DiscreteTable, GroupedDataset, GroupedHistogram, samples_from_counts
from .rng import RandomSource, categorical_sample, discrete_laplace_sample, laplace_sample

__all__ = [
    "PrivacyBudget",
    "Provenance",
    "SyntheticDataset",
    "BudgetLedger",
    "perturbed_histogram",
    "smoothed_histogram",
    "smoothed_probabilities",
    "mwem",
    "mwem_weights",
    "fit_marginal_joint",
    "marginal_ipf",
    "all_low_order_marginals",
]


@dataclass(frozen=True)
class PrivacyBudget:
    """(epsilon, delta) pair; the synthesizers here are pure epsilon-DP."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")


@dataclass(frozen=True)
class Provenance:
    method: str
    epsilon: float
    seed: int
    stream: tuple[int, ...]
    original_n: int
    synthetic_n: int

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "stream": list(self.stream),
            "original_n": self.original_n,
            "synthetic_n": self.synthetic_n,
        }


@dataclass(frozen=True)
class SyntheticDataset:
    data: GroupedDataset
    provenance: Provenance

    def __post_init__(self):
        if self.provenance.synthetic_n != self.data.n:
            raise ValueError("provenance synthetic_n must match the record count")


class BudgetLedger:
    """Tracks mechanism invocations as exact fractions of the total epsilon."""

    def __init__(self, epsilon: float):
        self.epsilon = epsilon
        self.spent = Fraction(0)
        self.entries: list[tuple[str, Fraction]] = []

    def spend(self, fraction: Fraction, what: str) -> float:
        """Record spending ``fraction`` of the budget; returns it in epsilon units."""
        if fraction <= 0:
            raise ValueError("budget fractions must be positive")
        self.spent += fraction
        self.entries.append((what, fraction))
        return float(fraction) * self.epsilon

    def close(self) -> None:
        if self.spent != 1:
            raise AssertionError(
                f"mechanism consumed {self.spent} of its budget instead of all of it: {self.entries}"
            )


def _provenance(method, budget, rng, original_n, synthetic_n) -> Provenance:
    return Provenance(method, budget.epsilon, rng.seed, rng.path, original_n, synthetic_n)


def perturbed_histogram(
    hist: GroupedHistogram,
    budget: PrivacyBudget,
    rng: RandomSource,
    normalize: bool = False,
) -> SyntheticDataset:
    """Discrete Laplace(2/epsilon) noise per cell, negatives set to zero.

    By default the clamped noisy counts are emitted directly, so the
    synthetic size is similar to (not exactly) the original. With
    ``normalize=True`` the clamped counts are renormalized to proportions
    and the original number of records is resampled from them.
    """
    ledger = BudgetLedger(budget.epsilon)
    scale = 2.0 / ledger.spend(Fraction(1), "histogram release")
    noise = discrete_laplace_sample(scale, rng, size=hist.counts.shape)
    noisy = np.maximum(hist.counts + noise, 0)
    ledger.close()
    if normalize:
        total = noisy.sum()
        if total > 0:
            cells = categorical_sample(noisy.ravel(), rng, size=hist.total_n)
            noisy = np.bincount(cells, minlength=noisy.size).reshape(noisy.shape)
        else:
            noisy = np.zeros_like(noisy)
    data = samples_from_counts(noisy, hist.spec)
    return SyntheticDataset(data, _provenance("perturbed", budget, rng, hist.total_n, data.n))


def smoothed_probabilities(counts, epsilon: float, m: int) -> np.ndarray:
    """Cell probabilities proportional to count + 2m/epsilon."""
    c = np.asarray(counts, dtype=float)
    alpha = 2.0 * m / epsilon
    weights = c + alpha
    return weights / weights.sum()


def smoothed_histogram(
    hist: GroupedHistogram, budget: PrivacyBudget, m: int, rng: RandomSource
) -> SyntheticDataset:
    """Draw exactly ``m`` records from the additively smoothed cell distribution.

    Smoothing is applied over the joint group-by-bin cells so that group
    membership is protected along with the values. The additive constant
    2m/epsilon makes the m draws jointly epsilon-DP.
    """
    if not isinstance(m, (int, np.integer)) or m <= 0:
        raise ValueError(f"m must be a positive integer, got {m}")
    ledger = BudgetLedger(budget.epsilon)
    ledger.spend(Fraction(1), f"{m} smoothed draws")
    probs = smoothed_probabilities(hist.counts.ravel(), budget.epsilon, int(m))
    cells = categorical_sample(probs, rng, size=int(m))
    counts = np.bincount(cells, minlength=probs.size).reshape(hist.counts.shape)
    ledger.close()
    data = samples_from_counts(counts, hist.spec)
    return SyntheticDataset(data, _provenance("smoothed", budget, rng, hist.total_n, data.n))


def _mw_update(weights: np.ndarray, measurements: dict[int, float], n: int, sweeps: int, tol: float) -> np.ndarray:
    """Multiplicative-weights sweeps over the measured cell-count queries.

    Iterates until the distribution stabilizes (or the sweep cap is hit);
    with a single noiseless measurement this drives the approximating count
    to its fixed point. Only noisy measurements are consulted, never the
    real histogram.
    """
    a = weights
    for _ in range(sweeps):
        prev = a
        for cell, measured in measurements.items():
            exponent = (measured - n * a[cell]) / (2.0 * n)
            a = a.copy()
            a[cell] *= math.exp(min(max(exponent, -600.0), 600.0))
            a /= a.sum()
        if np.max(np.abs(a - prev)) < tol:
            break
    return a


def mwem_weights(
    hist: GroupedHistogram,
    budget: PrivacyBudget,
    iterations: int,
    rng: RandomSource,
    update_sweeps: int = 2000,
    update_tol: float = 1e-10,
) -> np.ndarray:
    """Multiplicative Weights Exponential Mechanism over the 2 x B cell counts.

    Each of the T iterations spends epsilon/(2T) selecting the worst
    unmeasured cell-count query (exponential mechanism, sensitivity 1,
    score |true - approximated|) and epsilon/(2T) measuring it with
    Laplace(2T/epsilon) noise, then reweights the running distribution.
    Queries are selected without replacement. Returns the fitted cell
    distribution (flattened); consumes the whole budget, so sampling from
    it is post-processing.
    """
    cells = hist.counts.size
    if not isinstance(iterations, (int, np.integer)) or iterations < 1:
        raise ValueError(f"iterations must be a positive integer, got {iterations}")
    if iterations > cells:
        raise ValueError(f"iterations ({iterations}) cannot exceed the {cells} cell queries")
    t_total = int(iterations)
    n = hist.total_n
    true_counts = hist.counts.ravel().astype(float)
    ledger = BudgetLedger(budget.epsilon)
    a = np.full(cells, 1.0 / cells)
    measurements: dict[int, float] = {}
    unmeasured = np.ones(cells, dtype=bool)
    for t in range(t_total):
        eps_select = ledger.spend(Fraction(1, 2 * t_total), f"selection {t + 1}")
        scores = np.abs(true_counts - n * a)
        # Gumbel-max draw == exponential mechanism with sensitivity 1, and it
        # cannot overflow for large scores the way exp-normalization can.
        gumbel = rng.generator.gumbel(size=cells)
        keyed = np.where(unmeasured, eps_select * scores / 2.0 + gumbel, -np.inf)
        query = int(np.argmax(keyed))
        unmeasured[query] = False
        eps_measure = ledger.spend(Fraction(1, 2 * t_total), f"measurement {t + 1}")
        measurements[query] = true_counts[query] + laplace_sample(1.0 / eps_measure, rng)
        a = _mw_update(a, measurements, n, update_sweeps, update_tol)
    ledger.close()
    return a


def mwem(
    hist: GroupedHistogram,
    budget: PrivacyBudget,
    iterations: int,
    rng: RandomSource,
    update_sweeps: int = 2000,
    update_tol: float = 1e-10,
) -> SyntheticDataset:
    """Draw ``total_n`` records from the MWEM-fitted cell distribution."""
    a = mwem_weights(hist, budget, iterations, rng, update_sweeps, update_tol)
    n = hist.total_n
    drawn = categorical_sample(a, rng, size=n)
    counts = np.bincount(drawn, minlength=a.size).reshape(hist.counts.shape)
    data = samples_from_counts(counts, hist.spec)
    return SyntheticDataset(data, _provenance("mwem", budget, rng, n, data.n))


def all_low_order_marginals(n_variables: int) -> tuple[tuple[int, ...], ...]:
    """Every one-way and two-way marginal, by variable index."""
    singles = [(j,) for j in range(n_variables)]
    pairs = [tuple(p) for p in combinations(range(n_variables), 2)]
    return tuple(singles + pairs)


def _marginal_counts(table: DiscreteTable, axes: tuple[int, ...]) -> np.ndarray:
    shape = tuple(table.domains[j] for j in axes)
    out = np.zeros(shape)
    np.add.at(out, tuple(table.codes[:, j] for j in axes), 1.0)
    return out


def _expand(arr: np.ndarray, axes: tuple[int, ...], ndim: int) -> np.ndarray:
    shape = [1] * ndim
    for k, j in enumerate(axes):
        shape[j] = arr.shape[k]
    return arr.reshape(shape)


def fit_marginal_joint(
    table: DiscreteTable,
    budget: PrivacyBudget,
    rng: RandomSource,
    marginals: tuple[tuple[int, ...], ...] | None = None,
    max_sweeps: int = 500,
    tol: float = 1e-8,
) -> np.ndarray:
    """DP marginal release plus IPF reconstruction of the joint distribution.

    Each selected marginal receives Laplace(2k/epsilon) noise (k marginals,
    budget split evenly), is clamped at zero and renormalized; iterative
    proportional fitting from a uniform start then produces a joint
    distribution matching the noisy targets. Consumes the whole budget;
    anything derived from the returned joint is post-processing.
    """
    ndim = len(table.variables)
    if marginals is None:
        marginals = all_low_order_marginals(ndim)
    if not marginals:
        raise ValueError("at least one marginal is required")
    seen: set[tuple[int, ...]] = set()
    covered: set[int] = set()
    for axes in marginals:
        if not axes or len(set(axes)) != len(axes) or any(not 0 <= j < ndim for j in axes):
            raise ValueError(f"invalid marginal {axes!r}")
        if tuple(axes) != tuple(sorted(axes)):
            raise ValueError(f"marginal axes must be sorted, got {axes!r}")
        if tuple(axes) in seen:
            raise ValueError(f"duplicate marginal {axes!r}")
        seen.add(tuple(axes))
        covered.update(axes)
    if covered != set(range(ndim)):
        raise ValueError("every variable must appear in at least one marginal")

    k = len(marginals)
    ledger = BudgetLedger(budget.epsilon)
    targets = []
    for axes in marginals:
        eps_share = ledger.spend(Fraction(1, k), f"marginal {axes}")
        counts = _marginal_counts(table, axes)
        noisy = np.maximum(counts + laplace_sample(2.0 / eps_share, rng, size=counts.shape), 0.0)
        total = noisy.sum()
        # A fully clamped marginal carries no information; fall back to uniform.
        target = noisy / total if total > 0 else np.full(counts.shape, 1.0 / counts.size)
        # Keep targets strictly positive (tiny uniform mixture): clamped-to-zero
        # cells in different marginals are often mutually contradictory at small
        # epsilon, and exact zeros would annihilate the multiplicative fit.
        targets.append((1.0 - 1e-8) * target + 1e-8 / target.size)
    ledger.close()

    joint = np.full(table.domains, 1.0 / float(np.prod(table.domains)))
    for _ in range(max_sweeps):
        worst = 0.0
        for axes, target in zip(marginals, targets):
            other = tuple(j for j in range(ndim) if j not in axes)
            current = joint.sum(axis=other)
            worst = max(worst, float(np.max(np.abs(current - target))))
            ratio = np.divide(target, current, out=np.ones_like(target), where=current > 0)
            joint = joint * _expand(ratio, axes, ndim)
        mass = joint.sum()
        if mass <= 0:
            # Contradictory clamped-to-zero targets can annihilate the joint
            # at very small epsilon; restart from uniform and stop fitting.
            joint = np.full(table.domains, 1.0 / float(np.prod(table.domains)))
            break
        joint /= mass
        if worst <= tol:
            break
    return joint


def marginal_ipf(
    table: DiscreteTable,
    budget: PrivacyBudget,
    rng: RandomSource,
    marginals: tuple[tuple[int, ...], ...] | None = None,
    max_sweeps: int = 500,
    tol: float = 1e-8,
) -> SyntheticDataset:
    """Sample ``table.n`` records from the IPF-fitted noisy-marginal joint."""
    joint = fit_marginal_joint(table, budget, rng, marginals, max_sweeps, tol)
    n = table.n
    drawn = categorical_sample(joint.ravel(), rng, size=n)
    codes = np.stack(np.unravel_index(drawn, table.domains), axis=1)
    data = _decode_table(table, codes)
    return SyntheticDataset(data, _provenance("marginal_ipf", budget, rng, n, data.n))


def _decode_table(table: DiscreteTable, codes: np.ndarray) -> GroupedDataset:
    columns = {
        name: table.levels[j][codes[:, j]] for j, name in enumerate(table.variables)
    }
    if "group" not in columns:
        raise ValueError("tables must include a 'group' variable to decode")
    groups = columns.pop("group").astype(np.int64)
    value_name, *extra_names = columns
    return GroupedDataset(
        groups,
        columns[value_name],
        {name: columns[name] for name in extra_names},
        value_name=value_name,
    )
