"""Loading, validation, min-max normalization and holdout splitting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import DataError
from .windowing import SupervisedSet

DEFAULT_TIMESTAMP_COLUMNS = ("time", "timestamp", "date", "datetime")


@dataclass(frozen=True)
class RawSeries:
    """A d x m matrix of time-ordered readings, oldest row first.

    ``target_index`` points at the column to be predicted. Timestamp columns
    are kept aside in ``timestamps`` and never appear in ``values``.
    """

    values: np.ndarray
    column_names: tuple[str, ...]
    target_index: int = -1
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError("series values must be a 2-d matrix")
        d, m = values.shape
        if m < 2:
            raise DataError(f"series needs at least 2 columns, got {m}")
        if d < 2:
            raise DataError(f"series needs at least 2 rows, got {d}")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value at row {r + 1}, column {c + 1}")
        names = tuple(str(c) for c in self.column_names)
        if len(names) != m:
            raise DataError(f"{len(names)} column names for {m} columns")
        target = self.target_index
        if not -m <= target < m:
            raise DataError(f"target index {target} out of range for {m} columns")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "target_index", target % m)
        if self.timestamps is not None:
            stamps = tuple(self.timestamps)
            if len(stamps) != d:
                raise DataError("timestamp count does not match row count")
            _check_increasing(stamps)
            object.__setattr__(self, "timestamps", stamps)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def target(self) -> np.ndarray:
        return self.values[:, self.target_index]

    @property
    def target_name(self) -> str:
        return self.column_names[self.target_index]

    @property
    def feature_indices(self) -> list[int]:
        return [j for j in range(self.values.shape[1]) if j != self.target_index]


def _check_increasing(stamps):
    try:
        keys = [float(s) for s in stamps]
    except ValueError:
        try:
            keys = [datetime.fromisoformat(s) for s in stamps]
        except ValueError:
            keys = list(stamps)
    for i in range(1, len(keys)):
        if not keys[i] > keys[i - 1]:
            raise DataError(f"timestamps not strictly increasing at row {i + 1}")


def load_csv(
    path,
    target_column: str | int | None = None,
    timestamp_columns: Sequence[str] = DEFAULT_TIMESTAMP_COLUMNS,
) -> RawSeries:
    """Read a headered, comma-separated numeric file into a RawSeries.

    ``target_column`` may be a column name or a (possibly negative) index into
    the non-timestamp columns; the default is the last column. Row numbers in
    error messages count data rows from 1, so "row 2" is line 3 of the file.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    try:
        frame = pd.read_csv(
            path,
            encoding="utf-8",
            skipinitialspace=True,
            keep_default_na=False,
            float_precision="round_trip",
        )
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path}: empty file") from exc
    except (UnicodeDecodeError, pd.errors.ParserError) as exc:
        raise DataError(f"{path}: unreadable CSV: {exc}") from exc
    lowered = {c.lower() for c in timestamp_columns}
    stamp_cols = [c for c in frame.columns if str(c).strip().lower() in lowered]
    data_cols = [c for c in frame.columns if c not in stamp_cols]
    if len(data_cols) < 2:
        raise DataError(f"{path}: need at least 2 numeric columns, got {len(data_cols)}")
    if len(frame) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(frame)}")

    values = np.empty((len(frame), len(data_cols)), dtype=np.float64)
    for j, col in enumerate(data_cols):
        column = frame[col]
        if column.dtype.kind in "iuf":
            parsed = column.to_numpy(dtype=np.float64)
        else:
            parsed = pd.to_numeric(column.astype(str).str.strip(), errors="coerce").to_numpy(
                dtype=np.float64
            )
        bad = ~np.isfinite(parsed)
        if bad.any():
            row = int(np.argmax(bad))
            raise DataError(
                f"{path}: non-numeric or non-finite cell {str(column.iloc[row])!r} "
                f"at row {row + 1} (line {row + 2}), column {col!r}"
            )
        values[:, j] = parsed

    if target_column is None:
        target = len(data_cols) - 1
    elif isinstance(target_column, (int, np.integer)) or str(target_column).lstrip("-").isdigit():
        target = int(target_column)
    elif target_column in data_cols:
        target = data_cols.index(target_column)
    else:
        raise DataError(f"{path}: target column {target_column!r} not found")

    stamps = None
    if stamp_cols:
        stamps = tuple(frame[stamp_cols[0]].astype(str).str.strip())
    return RawSeries(values, tuple(str(c) for c in data_cols), target, stamps)


def save_csv(series: RawSeries, path) -> None:
    """Write a RawSeries in the format ``load_csv`` reads, floats in round-trip repr."""
    frame = pd.DataFrame(series.values, columns=list(series.column_names))
    if series.timestamps is not None:
        frame.insert(0, "time", list(series.timestamps))
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


@dataclass(frozen=True)
class Normalizer:
    """Per-column min-max scaling into [0, 1]; constant columns map to 0.5."""

    minimum: np.ndarray
    maximum: np.ndarray
    mode: str = "min-max-01"

    @classmethod
    def fit(cls, values) -> "Normalizer":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        return cls(values.min(axis=0), values.max(axis=0))

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum

    def apply(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        span = self.span
        constant = span == 0
        scaled = (values - self.minimum) / np.where(constant, 1.0, span)
        return np.where(constant, 0.5, scaled)

    def invert(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        return values * self.span + self.minimum

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "min": self.minimum.tolist(),
            "max": self.maximum.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Normalizer":
        return cls(
            np.asarray(data["min"], dtype=np.float64),
            np.asarray(data["max"], dtype=np.float64),
            data.get("mode", "min-max-01"),
        )


def fit_normalizer(series: RawSeries, columns) -> Normalizer:
    columns = list(columns)
    if not columns:
        raise DataError("fit_normalizer needs at least one column")
    return Normalizer.fit(series.values[:, columns])


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 2 / 3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def split_keys(n_raw_rows: int, seed: int) -> np.ndarray:
    """One uniform draw per raw row; the generator fills sequentially, so keys
    for a row never depend on how long the series is."""
    return np.random.default_rng(seed).random(n_raw_rows)


def holdout_split(data: SupervisedSet, spec: SplitSpec) -> tuple[SupervisedSet, SupervisedSet]:
    """Random train/test partition of supervised rows.

    Rows are ranked by a seeded random key attached to the raw row each window
    predicts, and the ``round(train_fraction * rows)`` lowest keys train. Sets
    built from the same series with different windows therefore share one
    random assignment. Both parts keep chronological order.
    """
    rows = len(data)
    if rows < 3:
        raise DataError(f"holdout split needs at least 3 rows, got {rows}")
    n_train = int(math.floor(spec.train_fraction * rows + 0.5))
    if n_train < 1 or n_train > rows - 1:
        raise DataError(
            f"train fraction {spec.train_fraction} leaves an empty part for {rows} rows"
        )
    keys = split_keys(int(data.index.max()) + 1, spec.seed)[data.index]
    order = np.argsort(keys, kind="stable")
    train = np.sort(order[:n_train])
    test = np.sort(order[n_train:])
    return data.take(train), data.take(test)
