"""Dataset ingestion and normalization.

Feature columns are scaled per-feature to [0, 1] (min-max) by default, so the
growth thresholds keep comparable magnitudes across datasets.  Z-score scaling
is available behind a flag; de-normalization recovers raw values either way.
"""

from __future__ import annotations

import csv
import importlib.resources
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

MINMAX = "minmax"
ZSCORE = "zscore"


@dataclass
class Sample:
    """One input vector with an optional evaluation-only class label."""

    id: int
    features: np.ndarray
    label: str | None = None


@dataclass
class Dataset:
    """Normalized feature matrix plus the scaling needed to undo it.

    ``features[i]`` is the normalized vector of sample ``i``; ``raw(i)``
    recovers the original values.  Labels never enter training.
    """

    name: str
    feature_names: list[str]
    features: np.ndarray          # (n, d) normalized
    labels: list[str] | None
    norm_kind: str
    norm_a: np.ndarray            # per-feature offset (min, or mean)
    norm_b: np.ndarray            # per-feature scale (max-min, or std)
    n_rejected: int = 0
    raw_features: np.ndarray | None = None   # (n, d) as parsed, pre-scaling
    samples: list[Sample] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        labels = self.labels
        self.samples = [
            Sample(i, self.features[i], labels[i] if labels else None)
            for i in range(len(self.features))
        ]

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def raw(self, i: int) -> np.ndarray:
        """Sample ``i`` in source units: the parsed row when retained,
        otherwise the arithmetic reconstruction (1-ulp round-off possible)."""
        if self.raw_features is not None:
            return self.raw_features[i]
        return self.features[i] * self.norm_b + self.norm_a

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) * self.norm_b + self.norm_a


def normalize(raw: np.ndarray, kind: str = MINMAX) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scale columns of ``raw``; returns (scaled, offset, scale).

    Raises InputError on a constant column: its scale would be zero and every
    tau-threshold downstream would divide by it.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if kind == MINMAX:
        a = raw.min(axis=0)
        b = raw.max(axis=0) - a
    elif kind == ZSCORE:
        a = raw.mean(axis=0)
        b = raw.std(axis=0)
    else:
        raise InputError(f"unknown normalization {kind!r}")
    flat = np.flatnonzero(b == 0)
    if flat.size:
        raise InputError(f"constant feature column(s) at index {flat.tolist()}: cannot normalize")
    return (raw - a) / b, a, b


def _parse_cell(cell: str, row_no: int, col_name: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise InputError(
            f"row {row_no}: column {col_name!r} holds non-numeric value {cell!r}"
        ) from None


def load_csv(
    path: str,
    delimiter: str = ",",
    header: bool = True,
    label_column: str | int | None = None,
    norm_kind: str = MINMAX,
    name: str | None = None,
) -> Dataset:
    """Parse a CSV of numeric feature columns plus an optional label column.

    Rows with missing (empty) cells are skipped and counted in
    ``Dataset.n_rejected``; a row with the wrong column count or a
    non-numeric feature cell is a hard error naming the row.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    rows = [r for r in rows if r]  # blank lines
    if not rows:
        raise InputError(f"{path}: file is empty")

    if header:
        columns = [c.strip() for c in rows[0]]
        body = rows[1:]
        first_row_no = 2
    else:
        columns = [f"col{j}" for j in range(len(rows[0]))]
        body = rows
        first_row_no = 1
    if not body:
        raise InputError(f"{path}: no data rows")

    label_idx: int | None = None
    if label_column is not None:
        if isinstance(label_column, int):
            label_idx = label_column
            if not (-len(columns) <= label_idx < len(columns)):
                raise InputError(f"label column index {label_column} out of range")
            label_idx %= len(columns)
        else:
            if label_column not in columns:
                raise InputError(f"label column {label_column!r} not in header {columns}")
            label_idx = columns.index(label_column)
    feat_idx = [j for j in range(len(columns)) if j != label_idx]
    if not feat_idx:
        raise InputError(f"{path}: no feature columns left")

    raw_rows: list[list[float]] = []
    labels: list[str] | None = [] if label_idx is not None else None
    n_rejected = 0
    for off, row in enumerate(body):
        row_no = first_row_no + off
        if len(row) != len(columns):
            raise InputError(
                f"row {row_no}: expected {len(columns)} cells, found {len(row)}"
            )
        if any(cell.strip() == "" for cell in row):
            n_rejected += 1
            continue
        raw_rows.append([_parse_cell(row[j], row_no, columns[j]) for j in feat_idx])
        if labels is not None:
            labels.append(row[label_idx].strip())

    if not raw_rows:
        raise InputError(f"{path}: every row was rejected for missing values")

    raw = np.array(raw_rows, dtype=np.float64)
    scaled, a, b = normalize(raw, norm_kind)
    return Dataset(
        name=name or path,
        feature_names=[columns[j] for j in feat_idx],
        features=scaled,
        labels=labels,
        norm_kind=norm_kind,
        norm_a=a,
        norm_b=b,
        n_rejected=n_rejected,
        raw_features=raw,
    )


def load_iris(norm_kind: str = MINMAX) -> Dataset:
    """The bundled 150-row Iris fixture (4 features, 3 classes of 50)."""
    res = importlib.resources.files("ghsom.fixtures") / "iris.csv"
    with importlib.resources.as_file(res) as p:
        return load_csv(str(p), label_column="species", norm_kind=norm_kind, name="iris")
