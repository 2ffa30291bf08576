"""Tabular data model: binned histograms, grouped records, CSV ingestion.

The central objects are :class:`GroupedDataset` (binary group label plus a
continuous value, optionally more named columns) and
:class:`GroupedHistogram` (per group-by-bin cell counts over a
:class:`BinningSpec`). :class:`DiscreteTable` is the fully categorical
encoding consumed by the marginal-based synthesizer.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "BinningSpec",
    "GroupedDataset",
    "GroupedHistogram",
    "DiscreteTable",
    "IngestionError",
    "discretize",
    "build_histogram",
    "samples_from_counts",
    "load_cardio_csv",
    "load_grouped_csv",
    "save_grouped_csv",
    "gaussian_unit_bins",
    "bmi_bins",
    "psa_bins",
    "uniform_bins",
    "build_table",
    "table_from_grouped",
]


class IngestionError(ValueError):
    """Raised when a CSV file cannot be ingested; carries offending row numbers."""

    def __init__(self, message: str, rows: Sequence[int] = ()):
        super().__init__(message)
        self.rows = tuple(rows)


@dataclass(frozen=True)
class BinningSpec:
    """Half-open bins [edge_i, edge_{i+1}); out-of-range values clamp to the end bins."""

    edges: tuple[float, ...]

    def __post_init__(self):
        if len(self.edges) < 3:
            raise ValueError("a binning spec needs at least 2 bins (3 edges)")
        e = np.asarray(self.edges, dtype=float)
        if not np.all(np.isfinite(e)):
            raise ValueError("bin edges must be finite")
        if not np.all(np.diff(e) > 0):
            raise ValueError("bin edges must be strictly increasing")
        object.__setattr__(self, "edges", tuple(float(v) for v in e))

    @property
    def bin_count(self) -> int:
        return len(self.edges) - 1

    def midpoints(self) -> np.ndarray:
        e = np.asarray(self.edges)
        return (e[:-1] + e[1:]) / 2.0


def gaussian_unit_bins() -> BinningSpec:
    """100 integer-centered bins: bin labeled k covers [k-0.5, k+0.5), k = 1..100."""
    return BinningSpec(tuple(np.arange(0.5, 101.5, 1.0)))


def bmi_bins() -> BinningSpec:
    """24 BMI bins: below 18 in the first bin, 40 and above in the last."""
    return BinningSpec(tuple(float(v) for v in range(17, 42)))


def psa_bins() -> BinningSpec:
    """40 PSA bins from 1 upward; below 1 clamps to the first bin, 40+ to the last."""
    return BinningSpec(tuple(float(v) for v in range(1, 42)))


def uniform_bins(lo: float, hi: float, count: int) -> BinningSpec:
    if count < 2:
        raise ValueError("count must be at least 2")
    return BinningSpec(tuple(np.linspace(lo, hi, count + 1)))


@dataclass(frozen=True)
class GroupedDataset:
    """Records of (binary group, value), optionally with extra named columns."""

    groups: np.ndarray
    values: np.ndarray
    extras: Mapping[str, np.ndarray] = field(default_factory=dict)
    value_name: str = "value"

    def __post_init__(self):
        g = np.asarray(self.groups, dtype=np.int64)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or v.ndim != 1 or g.shape != v.shape:
            raise ValueError("groups and values must be 1-d arrays of equal length")
        if g.size and not np.isin(g, (0, 1)).all():
            raise ValueError("group labels must be 0 or 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        extras = {}
        for name, col in dict(self.extras).items():
            arr = np.asarray(col, dtype=float)
            if arr.shape != g.shape:
                raise ValueError(f"extra column {name!r} has mismatched length")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"extra column {name!r} contains non-finite values")
            extras[name] = arr
        object.__setattr__(self, "groups", g)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "extras", extras)

    @property
    def n(self) -> int:
        return int(self.groups.size)

    def group_values(self, group: int, name: str | None = None) -> np.ndarray:
        return self.column(name)[self.groups == group]

    def column(self, name: str | None = None) -> np.ndarray:
        if name is None or name == self.value_name:
            return self.values
        try:
            return self.extras[name]
        except KeyError:
            raise KeyError(f"no column named {name!r}") from None

    @property
    def column_names(self) -> tuple[str, ...]:
        return (self.value_name, *self.extras)


@dataclass(frozen=True)
class GroupedHistogram:
    """2 x bin_count cell counts c_i over a binning spec."""

    spec: BinningSpec
    counts: np.ndarray
    total_n: int

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (2, self.spec.bin_count):
            raise ValueError(f"counts must have shape (2, {self.spec.bin_count})")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        if int(c.sum()) != int(self.total_n):
            raise ValueError("counts must sum to total_n")
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "total_n", int(self.total_n))


def discretize(values, spec: BinningSpec) -> np.ndarray:
    """Map each value to the bin whose half-open interval contains it.

    Values below the first edge map to bin 0; values at or above the last
    edge map to the last bin.
    """
    v = np.asarray(values, dtype=float)
    if np.any(np.isnan(v)):
        raise ValueError("cannot discretize NaN values")
    idx = np.searchsorted(spec.edges, v, side="right") - 1
    return np.clip(idx, 0, spec.bin_count - 1).astype(np.int64)


def build_histogram(data: GroupedDataset, spec: BinningSpec) -> GroupedHistogram:
    """Count records per (group, bin) cell."""
    if data.n == 0:
        raise ValueError("cannot build a histogram from an empty dataset")
    bins = discretize(data.values, spec)
    flat = np.bincount(data.groups * spec.bin_count + bins, minlength=2 * spec.bin_count)
    return GroupedHistogram(spec, flat.reshape(2, spec.bin_count), data.n)


def samples_from_counts(counts, spec: BinningSpec) -> GroupedDataset:
    """Expand cell counts into records placed at the bin center points."""
    c = np.asarray(counts, dtype=np.int64)
    if c.shape != (2, spec.bin_count):
        raise ValueError(f"counts must have shape (2, {spec.bin_count})")
    if np.any(c < 0):
        raise ValueError("counts must be non-negative")
    mids = spec.midpoints()
    groups = np.repeat(np.array([0, 1]), c.sum(axis=1))
    values = np.concatenate([np.repeat(mids, c[0]), np.repeat(mids, c[1])])
    return GroupedDataset(groups, values)


def _sniff_delimiter(sample: str) -> str:
    return ";" if sample.count(";") >= sample.count(",") else ","


def load_cardio_csv(path) -> GroupedDataset:
    """Ingest the public cardiovascular CSV; value = BMI, group = cardio label.

    BMI is weight in kg divided by squared height in meters. Any malformed
    row aborts ingestion and is reported by its 1-based data row number.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        head = fh.read(4096)
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=_sniff_delimiter(head))
        fields = [f.strip().lower() for f in (reader.fieldnames or [])]
        missing = {"height", "weight", "cardio"} - set(fields)
        if missing:
            raise IngestionError(f"missing required columns: {sorted(missing)}")
        groups: list[int] = []
        values: list[float] = []
        bad_rows: list[int] = []
        for i, row in enumerate(reader, start=1):
            cleaned = {(k or "").strip().lower(): (v or "").strip() for k, v in row.items()}
            try:
                height = float(cleaned["height"])
                weight = float(cleaned["weight"])
                cardio = int(float(cleaned["cardio"]))
                if height <= 0 or weight <= 0 or cardio not in (0, 1):
                    raise ValueError
            except (KeyError, TypeError, ValueError):
                bad_rows.append(i)
                continue
            groups.append(cardio)
            values.append(weight / (height / 100.0) ** 2)
        if bad_rows:
            shown = ", ".join(map(str, bad_rows[:20]))
            more = "" if len(bad_rows) <= 20 else f" (+{len(bad_rows) - 20} more)"
            raise IngestionError(f"malformed rows: {shown}{more}", rows=bad_rows)
    return GroupedDataset(np.array(groups), np.array(values))


def save_grouped_csv(data: GroupedDataset, path) -> None:
    """Write `group,value[,extra columns]` with one row per record."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        names = list(data.extras)
        writer.writerow(["group", "value", *names])
        cols = [data.extras[n] for n in names]
        for i in range(data.n):
            writer.writerow(
                [int(data.groups[i]), repr(float(data.values[i])), *(repr(float(c[i])) for c in cols)]
            )


def load_grouped_csv(path) -> GroupedDataset:
    """Read a `group,value[,extras]` CSV produced by :func:`save_grouped_csv`."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        head = fh.read(4096)
        fh.seek(0)
        reader = csv.reader(fh, delimiter=_sniff_delimiter(head))
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["group", "value"]:
            raise IngestionError("expected a header starting with 'group,value'")
        extra_names = [h.strip() for h in header[2:]]
        rows = []
        bad_rows = []
        for i, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                bad_rows.append(i)
                continue
            try:
                vals = [float(cell) for cell in row]
                if vals[0] not in (0.0, 1.0):
                    raise ValueError
            except ValueError:
                bad_rows.append(i)
                continue
            rows.append(vals)
        if bad_rows:
            raise IngestionError(
                f"malformed rows: {', '.join(map(str, bad_rows[:20]))}", rows=bad_rows
            )
    arr = np.asarray(rows, dtype=float) if rows else np.zeros((0, len(header)))
    extras = {name: arr[:, 2 + j] for j, name in enumerate(extra_names)}
    return GroupedDataset(arr[:, 0].astype(np.int64), arr[:, 1], extras)


@dataclass(frozen=True)
class DiscreteTable:
    """Fully categorical view of a dataset: per-variable integer codes.

    ``levels[j][k]`` is the representative value decoded for code ``k`` of
    variable ``j`` (bin midpoints for discretized continuous variables).
    """

    variables: tuple[str, ...]
    domains: tuple[int, ...]
    codes: np.ndarray
    levels: tuple[np.ndarray, ...]

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        if codes.ndim != 2 or codes.shape[1] != len(self.variables):
            raise ValueError("codes must be (n_records, n_variables)")
        if len(self.domains) != len(self.variables) or len(self.levels) != len(self.variables):
            raise ValueError("domains and levels must align with variables")
        for j, d in enumerate(self.domains):
            if d < 2:
                raise ValueError(f"variable {self.variables[j]!r} needs a domain of size >= 2")
            if len(self.levels[j]) != d:
                raise ValueError(f"levels for {self.variables[j]!r} must have length {d}")
            if codes.size and (codes[:, j].min() < 0 or codes[:, j].max() >= d):
                raise ValueError(f"codes for {self.variables[j]!r} fall outside its domain")
        object.__setattr__(self, "codes", codes)

    @property
    def n(self) -> int:
        return int(self.codes.shape[0])


def build_table(columns: Sequence[tuple[str, np.ndarray, BinningSpec | Sequence[float]]]) -> DiscreteTable:
    """Encode named columns into a :class:`DiscreteTable`.

    Each column comes with either a :class:`BinningSpec` (continuous: codes
    are bin indices, levels are midpoints) or an explicit sequence of
    category levels (codes are positions in that sequence).
    """
    if not columns:
        raise ValueError("at least one column is required")
    names, domains, levels, code_cols = [], [], [], []
    for name, raw, enc in columns:
        arr = np.asarray(raw, dtype=float)
        if isinstance(enc, BinningSpec):
            code_cols.append(discretize(arr, enc))
            levels.append(enc.midpoints())
            domains.append(enc.bin_count)
        else:
            lv = np.asarray(enc, dtype=float)
            pos = np.searchsorted(lv, arr)
            pos = np.clip(pos, 0, lv.size - 1)
            if not np.allclose(lv[pos], arr):
                raise ValueError(f"column {name!r} contains values outside its declared levels")
            code_cols.append(pos.astype(np.int64))
            levels.append(lv)
            domains.append(lv.size)
        names.append(name)
    codes = np.stack(code_cols, axis=1) if code_cols[0].size else np.zeros((0, len(names)), dtype=np.int64)
    return DiscreteTable(tuple(names), tuple(domains), codes, tuple(levels))


def table_from_grouped(data: GroupedDataset, spec: BinningSpec) -> DiscreteTable:
    """Two-variable table (group, binned value) used by the bivariate synthesizers."""
    return build_table(
        [
            ("group", data.groups.astype(float), (0.0, 1.0)),
            (data.value_name, data.values, spec),
        ]
    )
