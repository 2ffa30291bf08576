"""Repetition engine: Type I / Type II error rates over (method, epsilon, n) grids.

Each grid cell runs R independent repetitions: generate an original dataset,
synthesize (unless the cell is a baseline), run the configured test, and
record feasibility and rejection at the significance level. Every cell and
repetition draws from a child stream derived from the master seed, so a
full-grid run, a parallel run, and an isolated re-run of one cell all
produce identical numbers.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, NamedTuple

import numpy as np

from .data import (
    BinningSpec,
    GroupedDataset,
    bmi_bins,
    build_histogram,
    build_table,
    gaussian_unit_bins,
    load_cardio_csv,
    load_grouped_csv,
    psa_bins,
    table_from_grouped,
    uniform_bins,
)
from .dpmw import DPMWConfig, dp_mann_whitney
from .rng import RandomSource
from .simgen import CopulaSpec, copula_multivariate, default_prostate_spec, gaussian_bivariate, load_copula_spec
from .stattests import FailureReason, TestOutcome, chi_squared, mann_whitney_u, median_test, t_test
from .synth import PrivacyBudget, marginal_ipf, mwem, perturbed_histogram, smoothed_histogram

__all__ = [
    "ConfigError",
    "GeneratorSpec",
    "ExperimentConfig",
    "Cell",
    "ErrorRateReport",
    "grid_cells",
    "run_cell",
    "run_grid",
    "config_from_dict",
    "config_to_dict",
    "load_config",
]

SYNTHESIZERS = ("none", "perturbed", "smoothed", "mwem", "marginal_ipf", "dp_mw_baseline")
TESTS = ("mw_u", "t", "chi2", "median")
_BINNING_NAMES = {"gaussian100": gaussian_unit_bins, "bmi24": bmi_bins, "psa40": psa_bins}


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or inconsistent."""


class Cell(NamedTuple):
    epsilon: float
    n_original: int
    n_synthetic: int | None


@dataclass(frozen=True)
class GeneratorSpec:
    """Where original datasets come from and which column gets tested."""

    kind: str
    mode: str
    variable: str | None = None
    csv_path: str | None = None
    copula: CopulaSpec | None = None
    binning: object = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "copula", "csv"):
            raise ConfigError(f"generator.kind must be gaussian, copula, or csv, got {self.kind!r}")
        if self.mode not in ("null", "signal"):
            raise ConfigError(f"generator.mode must be null or signal, got {self.mode!r}")
        if self.kind == "csv" and not self.csv_path:
            raise ConfigError("generator.csv_path is required for the csv generator")
        if self.kind == "copula":
            if self.copula is None:
                raise ConfigError("generator.copula is required for the copula generator")
            if self.variable is not None:
                self.copula.variable(self.variable)
        if self.kind != "copula" and self.variable is not None:
            raise ConfigError("generator.variable only applies to the copula generator")

    def binning_spec(self) -> BinningSpec:
        """Discretization used by the bivariate histogram synthesizers."""
        if self.binning is None:
            return gaussian_unit_bins() if self.kind == "gaussian" else bmi_bins()
        if isinstance(self.binning, str):
            try:
                return _BINNING_NAMES[self.binning]()
            except KeyError:
                raise ConfigError(f"generator.binning {self.binning!r} is not one of {sorted(_BINNING_NAMES)}") from None
        if isinstance(self.binning, Mapping):
            try:
                return uniform_bins(float(self.binning["lo"]), float(self.binning["hi"]), int(self.binning["count"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"generator.binning mapping needs numeric lo/hi/count: {exc}") from None
        raise ConfigError("generator.binning must be a named spec or a {count, lo, hi} mapping")

    def category_domain(self) -> np.ndarray | None:
        """Fixed category levels of the tested variable, when it has any."""
        if self.kind != "copula":
            return None
        name = self.variable or self.copula.variables[0].name
        return self.copula.variable(name).marginal.category_levels()


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorSpec
    synthesizer: str
    epsilons: tuple[float, ...]
    original_sizes: tuple[int, ...]
    synthetic_sizes: tuple[int, ...] = ()
    repetitions: int = 200
    alpha: float = 0.05
    test: str = "mw_u"
    seed: int = 0
    min_feasible: int = 50
    mwem_iterations: int = 10
    normalize_perturbed: bool = False
    dp_mw_delta: float = 1e-6
    dp_mw_size_fraction: float = 0.65
    dp_mw_null_samples: int = 10_000

    def __post_init__(self):
        if self.synthesizer not in SYNTHESIZERS:
            raise ConfigError(f"synthesizer must be one of {SYNTHESIZERS}, got {self.synthesizer!r}")
        if self.test not in TESTS:
            raise ConfigError(f"test must be one of {TESTS}, got {self.test!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.epsilons:
            raise ConfigError("epsilons must be non-empty")
        if self.synthesizer != "none" and any(e <= 0 for e in self.epsilons):
            raise ConfigError("epsilons must be positive")
        if not self.original_sizes or any(n < 2 for n in self.original_sizes):
            raise ConfigError("original_sizes must be non-empty with entries >= 2")
        if self.min_feasible < 1:
            raise ConfigError("min_feasible must be at least 1")
        if self.synthesizer == "smoothed":
            if not self.synthetic_sizes:
                raise ConfigError(
                    "the smoothed synthesizer draws a chosen number of records from one "
                    "large original dataset: set synthetic_sizes and a single original size"
                )
            if len(self.original_sizes) != 1:
                raise ConfigError(
                    "the smoothed synthesizer grids over synthetic_sizes, so exactly one "
                    "original size must be given"
                )
        elif self.synthetic_sizes:
            raise ConfigError(
                f"synthesizer {self.synthesizer!r} emits datasets sized like the original; "
                "synthetic_sizes only applies to the smoothed synthesizer"
            )
        if self.synthesizer == "dp_mw_baseline" and self.test != "mw_u":
            raise ConfigError("the dp_mw_baseline runs the DP Mann-Whitney test; set test to mw_u")
        if self.generator.kind == "copula" and self.synthesizer in ("perturbed", "smoothed", "mwem"):
            raise ConfigError(
                f"synthesizer {self.synthesizer!r} operates on bivariate histograms; "
                "multivariate copula data requires marginal_ipf (or a baseline)"
            )

    @property
    def error_kind(self) -> str:
        return "type1" if self.generator.mode == "null" else "type2"


@dataclass(frozen=True)
class ErrorRateReport:
    """Aggregated outcome of one grid cell."""

    method: str
    test: str
    error_kind: str
    epsilon: float
    n_original: int
    n_synthetic: int | None
    repetitions: int
    feasible_count: int
    rejections: int
    error_rate: float | None
    suppressed: bool
    failure_counts: Mapping[str, int] = field(default_factory=dict)
    type1_context: bool | None = None

    def __post_init__(self):
        if not 0 <= self.rejections <= self.feasible_count <= self.repetitions:
            raise ValueError("need rejections <= feasible_count <= repetitions")
        if sum(self.failure_counts.values()) != self.repetitions - self.feasible_count:
            raise ValueError("failure counts must partition the infeasible repetitions")
        if self.feasible_count == 0:
            if self.error_rate is not None:
                raise ValueError("error_rate must be None when nothing was feasible")
        else:
            rate = self.rejections / self.feasible_count
            expected = rate if self.error_kind == "type1" else 1.0 - rate
            if self.error_rate is None or abs(self.error_rate - expected) > 1e-12:
                raise ValueError("error_rate inconsistent with rejections/feasible_count")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "test": self.test,
            "error_kind": self.error_kind,
            "epsilon": self.epsilon,
            "n_original": self.n_original,
            "n_synthetic": self.n_synthetic,
            "repetitions": self.repetitions,
            "feasible_count": self.feasible_count,
            "rejections": self.rejections,
            "error_rate": self.error_rate,
            "suppressed": self.suppressed,
            "failure_counts": dict(self.failure_counts),
            "type1_context": self.type1_context,
        }


def grid_cells(config: ExperimentConfig) -> list[Cell]:
    """The Cartesian product of grid settings, in deterministic order."""
    cells = []
    for eps in config.epsilons:
        if config.synthesizer == "smoothed":
            for m in config.synthetic_sizes:
                cells.append(Cell(float(eps), int(config.original_sizes[0]), int(m)))
        else:
            for n in config.original_sizes:
                cells.append(Cell(float(eps), int(n), None))
    return cells


def _load_source(config: ExperimentConfig) -> GroupedDataset | None:
    if config.generator.kind != "csv":
        return None
    path = Path(config.generator.csv_path)
    if path.suffix == ".csv" and path.name.startswith("cardio"):
        return load_cardio_csv(path)
    try:
        return load_grouped_csv(path)
    except ValueError:
        return load_cardio_csv(path)


def _generate(config: ExperimentConfig, source: GroupedDataset | None, n: int, rng: RandomSource) -> GroupedDataset:
    gen = config.generator
    if gen.kind == "gaussian":
        return gaussian_bivariate(n, gen.mode, rng)
    if gen.kind == "copula":
        return copula_multivariate(gen.copula, n, gen.mode, rng)
    if source.n < n:
        raise ConfigError(f"csv source has {source.n} records, cannot subsample {n}")
    idx = rng.generator.choice(source.n, size=n, replace=False)
    extras = {name: col[idx] for name, col in source.extras.items()}
    return GroupedDataset(source.groups[idx], source.values[idx], extras, source.value_name)


def _synthesize(config: ExperimentConfig, original: GroupedDataset, cell: Cell, rng: RandomSource) -> GroupedDataset:
    budget = PrivacyBudget(cell.epsilon)
    if config.generator.kind == "copula":
        table = _copula_table(config.generator.copula, original)
        return marginal_ipf(table, budget, rng).data
    spec = config.generator.binning_spec()
    if config.synthesizer == "perturbed":
        hist = build_histogram(original, spec)
        return perturbed_histogram(hist, budget, rng, normalize=config.normalize_perturbed).data
    if config.synthesizer == "smoothed":
        hist = build_histogram(original, spec)
        return smoothed_histogram(hist, budget, cell.n_synthetic, rng).data
    if config.synthesizer == "mwem":
        hist = build_histogram(original, spec)
        return mwem(hist, budget, config.mwem_iterations, rng).data
    table = table_from_grouped(original, spec)
    return marginal_ipf(table, budget, rng).data


def _copula_table(spec: CopulaSpec, data: GroupedDataset):
    columns = [("group", data.groups.astype(float), (0.0, 1.0))]
    for v in spec.variables:
        binning = v.binning()
        encoder = binning if binning is not None else v.marginal.category_levels()
        columns.append((v.name, data.column(v.name), encoder))
    return build_table(columns)


def _quartile_table(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    edges = np.quantile(np.concatenate((x, y)), [0.25, 0.5, 0.75])
    return np.array(
        [
            np.bincount(np.searchsorted(edges, x, side="right"), minlength=4),
            np.bincount(np.searchsorted(edges, y, side="right"), minlength=4),
        ]
    )


def _level_table(x: np.ndarray, y: np.ndarray, levels: np.ndarray) -> np.ndarray:
    table = np.empty((2, levels.size))
    for row, vals in enumerate((x, y)):
        table[row] = [(vals == lv).sum() for lv in levels]
    return table


def run_test(config: ExperimentConfig, data: GroupedDataset) -> TestOutcome:
    """Run the configured classical test on the configured column."""
    name = config.generator.variable
    x = data.group_values(0, name)
    y = data.group_values(1, name)
    if config.test == "mw_u":
        return mann_whitney_u(x, y)
    if config.test == "t":
        return t_test(x, y)
    if config.test == "median":
        return median_test(x, y)
    if x.size == 0 or y.size == 0:
        return chi_squared(np.array([[x.size], [y.size]]))
    domain = config.generator.category_domain()
    table = _level_table(x, y, domain) if domain is not None else _quartile_table(x, y)
    return chi_squared(table)


def run_cell(config: ExperimentConfig, cell: Cell, rng: RandomSource) -> ErrorRateReport:
    """R repetitions of generate, synthesize, test for one grid cell."""
    source = _load_source(config)
    feasible = 0
    rejections = 0
    failures: dict[str, int] = {}
    for rep in range(config.repetitions):
        rep_rng = rng.child(rep)
        original = _generate(config, source, cell.n_original, rep_rng.child(0))
        if config.synthesizer == "none":
            outcome = run_test(config, original)
        elif config.synthesizer == "dp_mw_baseline":
            cfg = DPMWConfig(
                PrivacyBudget(cell.epsilon, config.dp_mw_delta),
                config.dp_mw_size_fraction,
                config.dp_mw_null_samples,
            )
            outcome = dp_mann_whitney(original, cfg, rep_rng.child(1))
        else:
            synthetic = _synthesize(config, original, cell, rep_rng.child(1))
            outcome = run_test(config, synthetic)
        if outcome.feasible:
            feasible += 1
            if outcome.p_value <= config.alpha:
                rejections += 1
        else:
            reason = outcome.failure_reason.value
            failures[reason] = failures.get(reason, 0) + 1
    if feasible:
        rate = rejections / feasible
        error_rate = rate if config.error_kind == "type1" else 1.0 - rate
    else:
        error_rate = None
    return ErrorRateReport(
        method=config.synthesizer,
        test=config.test,
        error_kind=config.error_kind,
        epsilon=cell.epsilon,
        n_original=cell.n_original,
        n_synthetic=cell.n_synthetic,
        repetitions=config.repetitions,
        feasible_count=feasible,
        rejections=rejections,
        error_rate=error_rate,
        suppressed=feasible < config.min_feasible,
        failure_counts=failures,
        type1_context=True if config.error_kind == "type2" else None,
    )


def _cell_task(payload: tuple[ExperimentConfig, Cell, int]) -> tuple[int, ErrorRateReport]:
    config, cell, index = payload
    report = run_cell(config, cell, RandomSource(config.seed).child(index))
    return index, report


def run_grid(config: ExperimentConfig, workers: int = 1) -> list[ErrorRateReport]:
    """Run every grid cell; results are identical for any worker count."""
    cells = grid_cells(config)
    payloads = [(config, cell, i) for i, cell in enumerate(cells)]
    if workers <= 1:
        indexed = [_cell_task(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            indexed = list(pool.map(_cell_task, payloads))
    indexed.sort(key=lambda pair: pair[0])
    return [report for _, report in indexed]


def config_from_dict(payload: Mapping) -> ExperimentConfig:
    """Build a validated config from parsed JSON, naming the offending field."""
    if not isinstance(payload, Mapping):
        raise ConfigError("experiment config must be a JSON object")
    known = {
        "generator",
        "synthesizer",
        "epsilons",
        "original_sizes",
        "synthetic_sizes",
        "repetitions",
        "alpha",
        "test",
        "seed",
        "min_feasible",
        "mwem_iterations",
        "normalize_perturbed",
        "dp_mw_delta",
        "dp_mw_size_fraction",
        "dp_mw_null_samples",
    }
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
    gen = payload.get("generator")
    if not isinstance(gen, Mapping):
        raise ConfigError("field 'generator' must be an object")
    copula = None
    if gen.get("kind") == "copula":
        copula_source = gen.get("copula_path", "default")
        try:
            copula = (
                default_prostate_spec()
                if copula_source in (None, "default")
                else load_copula_spec(copula_source)
            )
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(f"field 'generator.copula_path': {exc}") from exc
    try:
        generator = GeneratorSpec(
            kind=gen.get("kind", "gaussian"),
            mode=gen.get("mode", "null"),
            variable=gen.get("variable"),
            csv_path=gen.get("csv_path"),
            copula=copula,
            binning=gen.get("binning"),
        )
    except KeyError as exc:
        raise ConfigError(f"field 'generator.variable': unknown variable {exc}") from exc

    def _require(name, caster, default=None):
        if name not in payload:
            if default is None:
                raise ConfigError(f"field {name!r} is required")
            return default
        try:
            return caster(payload[name])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field {name!r} is malformed: {exc}") from exc

    def _int_tuple(value):
        return tuple(int(v) for v in value)

    def _float_tuple(value):
        return tuple(float(v) for v in value)

    return ExperimentConfig(
        generator=generator,
        synthesizer=_require("synthesizer", str),
        epsilons=_require("epsilons", _float_tuple),
        original_sizes=_require("original_sizes", _int_tuple),
        synthetic_sizes=_require("synthetic_sizes", _int_tuple, default=()),
        repetitions=_require("repetitions", int, default=200),
        alpha=_require("alpha", float, default=0.05),
        test=_require("test", str, default="mw_u"),
        seed=_require("seed", int, default=0),
        min_feasible=_require("min_feasible", int, default=50),
        mwem_iterations=_require("mwem_iterations", int, default=10),
        normalize_perturbed=_require("normalize_perturbed", bool, default=False),
        dp_mw_delta=_require("dp_mw_delta", float, default=1e-6),
        dp_mw_size_fraction=_require("dp_mw_size_fraction", float, default=0.65),
        dp_mw_null_samples=_require("dp_mw_null_samples", int, default=10_000),
    )


def config_to_dict(config: ExperimentConfig) -> dict:
    gen = config.generator
    generator = {
        "kind": gen.kind,
        "mode": gen.mode,
        "variable": gen.variable,
        "csv_path": gen.csv_path,
        "binning": gen.binning,
    }
    if gen.kind == "copula":
        generator["copula"] = gen.copula.to_dict()
    return {
        "generator": generator,
        "synthesizer": config.synthesizer,
        "epsilons": list(config.epsilons),
        "original_sizes": list(config.original_sizes),
        "synthetic_sizes": list(config.synthetic_sizes),
        "repetitions": config.repetitions,
        "alpha": config.alpha,
        "test": config.test,
        "seed": config.seed,
        "min_feasible": config.min_feasible,
        "mwem_iterations": config.mwem_iterations,
        "normalize_perturbed": config.normalize_perturbed,
        "dp_mw_delta": config.dp_mw_delta,
        "dp_mw_size_fraction": config.dp_mw_size_fraction,
        "dp_mw_null_samples": config.dp_mw_null_samples,
    }


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    """Load an experiment config JSON file; an explicit seed overrides the file's."""
    try:
        with Path(path).open(encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    config = config_from_dict(payload)
    if seed is not None:
        config = replace(config, seed=seed)
    return config
