"""Data model and generators: canonical metric names, CSV ingestion, synthetic data.

A :class:`MetricDataset` is an immutable matrix of per-class source code
metric values plus a binary change label per row (1 = changed between
versions, 0 = not changed). Metric extraction itself happens outside this
package; datasets arrive as flat CSV files.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DatasetError

#: The 21 canonical object-oriented source code metrics, in canonical order.
CANONICAL_METRICS: tuple[str, ...] = (
    "DIT", "NOC", "NOA", "NOD", "CBO", "RFC", "LCOM", "LCOM3", "CAM", "CAMC",
    "ICH", "MPC", "DAC", "MFA", "DAM", "NPM", "IC", "CBM", "SLOC-L", "LOC",
    "SLOC-P",
)

_CANONICAL_BY_FOLD = {name.casefold(): name for name in CANONICAL_METRICS}
_CANONICAL_INDEX = {name: i for i, name in enumerate(CANONICAL_METRICS)}

#: Accepted spellings for the label column (case-insensitive).
LABEL_ALIASES = {"0": 0, "1": 1, "unchanged": 0, "changed": 1}

DEFAULT_LABEL_COLUMN = "changed"


def canonical_metric(name: str) -> str:
    """Resolve a metric name to its canonical spelling, case-insensitively."""
    try:
        return _CANONICAL_BY_FOLD[name.strip().casefold()]
    except KeyError:
        raise DatasetError(f"unknown metric name: {name!r}") from None


def canonical_sort_key(name: str) -> tuple[int, str]:
    return (_CANONICAL_INDEX.get(name, len(CANONICAL_METRICS)), name)


def canonical_order(names: Iterable[str]) -> list[str]:
    """Sort metric names canonically; non-canonical names sort last, alphabetically."""
    return sorted(names, key=canonical_sort_key)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MetricDataset:
    """Immutable rows of metric observations with binary change labels.

    Attributes:
        id: Short identifier (used in cache keys and report file names).
        columns: Ordered metric names, one per matrix column.
        rows: Float matrix of shape (n_rows, n_metrics); every value finite.
        labels: Int vector of 0/1 change labels, one per row.
        name: Human-readable name (defaults to ``id``).
        constant_columns: Columns with zero variance, flagged at construction.
    """

    id: str
    columns: tuple[str, ...]
    rows: np.ndarray
    labels: np.ndarray
    name: str = ""
    constant_columns: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        labels = np.asarray(self.labels)
        columns = tuple(self.columns)
        if rows.ndim != 2:
            raise DatasetError("rows must be a 2-D matrix")
        if rows.shape[0] == 0:
            raise DatasetError("empty dataset")
        if rows.shape[1] != len(columns):
            raise DatasetError(
                f"row width {rows.shape[1]} does not match {len(columns)} columns"
            )
        if len(columns) == 0:
            raise DatasetError("dataset has no metric columns")
        if len(set(columns)) != len(columns):
            raise DatasetError("duplicate column names")
        if labels.shape != (rows.shape[0],):
            raise DatasetError("rows and labels must have equal length")
        if not np.isfinite(rows).all():
            bad = np.argwhere(~np.isfinite(rows))[0]
            raise DatasetError(
                f"non-finite value at row {bad[0] + 1}, column {columns[bad[1]]!r}"
            )
        labels = labels.astype(int)
        if not np.isin(labels, (0, 1)).all():
            raise DatasetError("labels must be 0 or 1")
        if labels.min() == labels.max():
            raise DatasetError("single-class labels: need both changed and unchanged rows")
        constant = tuple(
            columns[j] for j in range(rows.shape[1]) if np.ptp(rows[:, j]) == 0.0
        )
        object.__setattr__(self, "rows", _freeze(rows))
        object.__setattr__(self, "labels", _freeze(labels))
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "constant_columns", constant)
        if not self.name:
            object.__setattr__(self, "name", self.id)

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_metrics(self) -> int:
        return self.rows.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise DatasetError(f"dataset {self.id!r} has no column {name!r}") from None

    def column_values(self, name: str) -> np.ndarray:
        return self.rows[:, self.column_index(name)]

    def class_split(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Values of one column for the changed and unchanged groups."""
        x = self.column_values(name)
        mask = self.labels == 1
        return x[mask], x[~mask]

    def matrix(self, columns: Sequence[str]) -> np.ndarray:
        """Copy of the row matrix restricted to the given columns, in that order."""
        idx = [self.column_index(c) for c in columns]
        return self.rows[:, idx].copy()

    def content_digest(self) -> str:
        """Digest of columns, rows, and labels; used in cache keys."""
        h = hashlib.sha256()
        h.update("|".join(self.columns).encode())
        h.update(self.rows.tobytes())
        h.update(self.labels.tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class DatasetSummary:
    n_classes: int
    n_changed: int
    pct_changed: float


def _round_half_up(x: float, ndigits: int = 2) -> float:
    q = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def summarize(ds: MetricDataset) -> DatasetSummary:
    """Row/changed counts with the changed percentage rounded half-up to 2 decimals."""
    n = ds.n_rows
    changed = int(ds.labels.sum())
    return DatasetSummary(n, changed, _round_half_up(100.0 * changed / n))


def load_csv(
    path: str | Path,
    label_column: str = DEFAULT_LABEL_COLUMN,
    permissive: bool = False,
) -> MetricDataset:
    """Load a metric CSV: header row, numeric metric columns, one 0/1 label column.

    Metric headers are matched case-insensitively against the 21 canonical
    names; unknown headers are rejected unless ``permissive`` is set, in which
    case they are kept verbatim. The label column accepts 0/1 or the
    "changed"/"unchanged" aliases.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"missing file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path.name}: missing header row") from None
        raw_rows = [row for row in reader if row]

    header = [h.strip() for h in header]
    label_matches = [i for i, h in enumerate(header) if h.casefold() == label_column.casefold()]
    if not label_matches:
        raise DatasetError(f"{path.name}: missing label column {label_column!r}")
    if len(label_matches) > 1:
        raise DatasetError(f"{path.name}: duplicate label column {label_column!r}")
    label_idx = label_matches[0]

    columns: list[str] = []
    for i, h in enumerate(header):
        if i == label_idx:
            continue
        if h.casefold() in _CANONICAL_BY_FOLD:
            columns.append(_CANONICAL_BY_FOLD[h.casefold()])
        elif permissive:
            columns.append(h)
        else:
            raise DatasetError(f"{path.name}: unknown column {h!r} (pass permissive to keep it)")
    if len(set(columns)) != len(columns):
        dupes = sorted({c for c in columns if columns.count(c) > 1})
        raise DatasetError(f"{path.name}: duplicate header: {', '.join(dupes)}")

    if not raw_rows:
        raise DatasetError(f"{path.name}: empty dataset")

    metric_idx = [i for i in range(len(header)) if i != label_idx]
    rows = np.empty((len(raw_rows), len(columns)))
    labels = np.empty(len(raw_rows), dtype=int)
    for r, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise DatasetError(f"{path.name}: row {r + 1} has {len(row)} cells, expected {len(header)}")
        raw_label = row[label_idx].strip().casefold()
        if raw_label not in LABEL_ALIASES:
            raise DatasetError(
                f"{path.name}: row {r + 1}: label {row[label_idx]!r} is not 0/1/changed/unchanged"
            )
        labels[r] = LABEL_ALIASES[raw_label]
        for c, i in enumerate(metric_idx):
            try:
                value = float(row[i])
            except ValueError:
                raise DatasetError(
                    f"{path.name}: non-numeric cell at row {r + 1}, column {columns[c]!r}: {row[i]!r}"
                ) from None
            if not np.isfinite(value):
                raise DatasetError(
                    f"{path.name}: non-finite value at row {r + 1}, column {columns[c]!r}"
                )
            rows[r, c] = value

    if labels.size and labels.min() == labels.max():
        raise DatasetError(f"{path.name}: single-class labels")
    return MetricDataset(id=path.stem, columns=tuple(columns), rows=rows, labels=labels)


def write_csv(ds: MetricDataset, path: str | Path, label_column: str = DEFAULT_LABEL_COLUMN) -> None:
    """Write a dataset back to CSV; floats use shortest round-trip repr."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.columns) + [label_column])
        for row, label in zip(ds.rows, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def synthesize(
    n_rows: int,
    informative: Sequence[str],
    noise: Sequence[str],
    separation: float,
    seed: int,
    id: str = "synthetic",
    name: str = "",
) -> MetricDataset:
    """Generate a labeled dataset with planted signal in the informative columns.

    Informative columns are class-conditional Gaussians with unit within-class
    standard deviation and a mean gap of ``separation`` (so the gap equals
    ``separation`` pooled standard deviations); noise columns are N(0, 1) for
    both classes. Labels are balanced (n//2 changed). The generator is a
    seeded PCG64 stream, so output is bit-reproducible across runs and
    platforms for a fixed numpy major version.
    """
    informative = [canonical_metric(m) for m in informative]
    noise = [canonical_metric(m) for m in noise]
    overlap = set(informative) & set(noise)
    if overlap:
        raise DatasetError(f"overlapping column sets: {sorted(overlap)}")
    if n_rows < 4:
        raise DatasetError("n_rows too small: need at least 4")
    if separation < 0:
        raise DatasetError("separation must be non-negative")
    if not informative and not noise:
        raise DatasetError("need at least one column")

    columns = canonical_order(list(informative) + list(noise))
    informative_set = set(informative)
    rng = np.random.default_rng(seed)
    n_pos = n_rows // 2
    labels = np.zeros(n_rows, dtype=int)
    labels[:n_pos] = 1
    rng.shuffle(labels)
    rows = np.empty((n_rows, len(columns)))
    for j, col in enumerate(columns):
        base = rng.standard_normal(n_rows)
        if col in informative_set:
            base = base + separation * labels
        rows[:, j] = base
    return MetricDataset(id=id, columns=tuple(columns), rows=rows, labels=labels, name=name or id)


def synthesize_rings(
    n_rows: int,
    seed: int,
    columns: tuple[str, str] = ("CBO", "LOC"),
    inner_radius: float = 2.0,
    outer_radius: float = 3.0,
    spread: float = 0.1,
    id: str = "rings",
) -> MetricDataset:
    """Two concentric 2-D rings; the inner ring is the changed class.

    Radially symmetric, so no linear decision rule beats chance by much while
    kernel methods separate the rings. Used as a nonlinearity probe.
    """
    if n_rows < 4:
        raise DatasetError("n_rows too small: need at least 4")
    rng = np.random.default_rng(seed)
    n_pos = n_rows // 2
    labels = np.zeros(n_rows, dtype=int)
    labels[:n_pos] = 1
    rng.shuffle(labels)
    radii = np.where(labels == 1, inner_radius, outer_radius) + spread * rng.standard_normal(n_rows)
    angles = rng.uniform(0.0, 2.0 * np.pi, n_rows)
    rows = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    cols = tuple(canonical_metric(c) for c in columns)
    return MetricDataset(id=id, columns=cols, rows=rows, labels=labels)
