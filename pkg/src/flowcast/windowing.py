"""Turn a time-ordered matrix into supervised rows by merging consecutive rows.

The input matrix holds the selected covariates followed by the target in its
last column. Two layouts are supported:

``block``
    Non-overlapping: rows are cut into ``floor(d / n)`` blocks of ``n``
    (tail rows that do not fill a block are dropped). Each block is flattened
    row by row; its final cell, the target of the block's last row, becomes
    ``y`` and everything before it becomes the feature vector.

``slide``
    One window per row ``i >= n``: all values of rows ``i - n .. i - 1``
    plus the covariates of row ``i``; ``y`` is the target of row ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError

MODES = ("block", "slide")
_MODE_ALIASES = {"non-overlapping": "block", "sliding": "slide"}


def _canonical_mode(mode: str) -> str:
    mode = _MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise DataError(f"unknown window mode {mode!r}; expected one of {MODES}")
    return mode


@dataclass(frozen=True)
class WindowSpec:
    n: int
    mode: str = "block"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DataError(f"window size must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "mode", _canonical_mode(self.mode))


@dataclass(frozen=True)
class SupervisedSet:
    """Windowed features ``X`` and targets ``y``.

    ``index`` holds, per row, the source row whose target is predicted; it is
    what splits and reports key on. ``feature_layout`` lists a
    ``(time_offset, column_name)`` pair per feature position, with offset 0
    meaning the target's own row.
    """

    X: np.ndarray
    y: np.ndarray
    n: int
    mode: str
    index: np.ndarray
    feature_layout: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0] or self.index.shape[0] != self.y.shape[0]:
            raise DataError("X, y and index must have the same number of rows")
        if self.X.shape[1] != len(self.feature_layout):
            raise DataError("feature layout does not match the number of columns")
        for arr in (self.X, self.y, self.index):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def take(self, rows) -> "SupervisedSet":
        rows = np.asarray(rows, dtype=np.intp)
        return SupervisedSet(
            self.X[rows].copy(),
            self.y[rows].copy(),
            self.n,
            self.mode,
            self.index[rows].copy(),
            self.feature_layout,
        )


def data_transform(
    series,
    spec: WindowSpec,
    column_names: Sequence[str] | None = None,
) -> SupervisedSet:
    """Window a d x m' matrix (target in the last column) into a SupervisedSet."""
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 2:
        raise DataError("data_transform expects a 2-d matrix")
    d, m = values.shape
    if m < 2:
        raise DataError(f"need at least one covariate and the target, got {m} columns")
    n = spec.n
    if 2 * n > d:
        raise DataError(f"window size {n} too large for {d} rows (need 2n <= d)")
    if column_names is None:
        column_names = [f"c{j}" for j in range(m)]
    names = list(column_names)
    if len(names) != m:
        raise DataError(f"{len(names)} column names for {m} columns")

    if spec.mode == "block":
        rows = d // n
        blocks = values[: rows * n].reshape(rows, n * m)
        X, y = blocks[:, :-1].copy(), blocks[:, -1].copy()
        index = np.arange(rows, dtype=np.intp) * n + (n - 1)
    else:
        rows = d - n
        # strided view of every (n + 1)-row window, flattened row-major
        windows = np.lib.stride_tricks.sliding_window_view(values, (n + 1, m))[:, 0]
        flat = windows.reshape(rows, (n + 1) * m)
        X, y = flat[:, :-1].copy(), flat[:, -1].copy()
        index = np.arange(n, d, dtype=np.intp)
    return SupervisedSet(X, y, n, spec.mode, index, _layout(n, spec.mode, names))


def _layout(n: int, mode: str, names: list[str]) -> tuple[tuple[int, str], ...]:
    m = len(names)
    span = n if mode == "block" else n + 1
    positions = span * m - 1
    return tuple((p // m - (span - 1), names[p % m]) for p in range(positions))


def describe_layout(data: SupervisedSet) -> list[str]:
    """Readable label per feature position, e.g. ``"pressure[t-2]"``."""
    labels = []
    for offset, name in data.feature_layout:
        labels.append(f"{name}[t{offset:+d}]" if offset else f"{name}[t]")
    return labels
