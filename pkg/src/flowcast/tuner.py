"""Window-size tuning over detected periods, plus fixed-window and grid runs."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from ._parallel import ordered_map
from .dataset import RawSeries
from .errors import DataError, NoPeriodError
from .importance import (
    FeatureSet,
    ForestConfig,
    ImportanceRanking,
    fit_forest,
    rank_importances,
    select_features,
)
from .lstm import TrainConfig, TrainedModel, train
from .period import PeriodSet, cycle
from .windowing import WindowSpec, data_transform


@dataclass(frozen=True)
class Prepared:
    """Series reduced to the selected covariates, target appended last."""

    matrix: np.ndarray
    columns: tuple[str, ...]
    ranking: ImportanceRanking
    features: FeatureSet

    @property
    def target(self) -> np.ndarray:
        return self.matrix[:, -1]


def prepare(
    series: RawSeries,
    forest_config: ForestConfig = ForestConfig(),
    threshold: float = 0.95,
    workers: int | None = None,
) -> Prepared:
    """Rank covariates with a forest fitted on the whole series and keep the
    shortest prefix whose importance exceeds ``threshold``."""
    candidates = series.feature_indices
    forest = fit_forest(series.values[:, candidates], series.target, forest_config, workers)
    ranking = rank_importances(forest, candidates)
    features = select_features(ranking, threshold)
    keep = list(features.selected) + [series.target_index]
    return Prepared(
        series.values[:, keep].copy(),
        tuple(series.column_names[j] for j in keep),
        ranking,
        features,
    )


def candidate_seed(seed: int, n: int) -> int:
    """Training seed for window size ``n``; independent across ``n``, fixed per pair."""
    return int(np.random.SeedSequence([seed, n]).generate_state(1)[0])


@dataclass(frozen=True)
class TraceEntry:
    n: int
    rmse: float | None
    wall_time: float
    skipped: bool = False
    reason: str | None = None

    def to_dict(self, timings: bool = False) -> dict:
        out = {"n": self.n, "rmse": self.rmse, "skipped": self.skipped}
        if self.reason:
            out["reason"] = self.reason
        if timings:
            out["wall_time"] = self.wall_time
        return out


@dataclass(frozen=True)
class TunedResult:
    best: TrainedModel
    best_n: int
    best_rmse: float
    trace: tuple[TraceEntry, ...]
    periods_tried: PeriodSet
    features: FeatureSet | None = None
    columns: tuple[str, ...] = ()

    def to_dict(self, timings: bool = False) -> dict:
        return {
            "best_n": self.best_n,
            "best_rmse": self.best_rmse,
            "periods": list(self.periods_tried.periods),
            "selected_columns": list(self.columns[:-1]),
            "target": self.columns[-1] if self.columns else None,
            "trace": [e.to_dict(timings) for e in self.trace],
        }


Trainer = Callable[..., TrainedModel]


def _train_window(prepared: Prepared, n, config, seed, mode, trainer) -> tuple[TrainedModel, float]:
    data = data_transform(prepared.matrix, WindowSpec(n, mode), prepared.columns)
    start = time.perf_counter()
    trained = trainer(
        data,
        config,
        seed=candidate_seed(seed, n),
        split_seed=seed,
        columns=prepared.columns,
    )
    return trained, time.perf_counter() - start


def optimized_lstm(
    series: RawSeries,
    config: TrainConfig = TrainConfig(),
    forest_config: ForestConfig = ForestConfig(),
    seed: int = 0,
    threshold: float = 0.95,
    mode: str = "block",
    trainer: Trainer = train,
    workers: int | None = 1,
    prepared: Prepared | None = None,
) -> TunedResult:
    """Train one model per detected period and keep the lowest test RMSE.

    Features are selected once, before any windowing. Every candidate uses
    the same split seed and its own training seed from ``(seed, n)``.
    Periods with ``2n >= d`` are recorded as skipped. Ties keep the smaller n.
    """
    if prepared is None:
        prepared = prepare(series, replace(forest_config, seed=seed), threshold, workers)
    periods = cycle(prepared.target)
    if not periods:
        raise NoPeriodError("no period detected in the target; pass a window size manually")
    d = prepared.matrix.shape[0]

    def run(n):
        if 2 * n >= d:
            return None, TraceEntry(n, None, 0.0, True, f"n >= d/2 (d={d})")
        trained, elapsed = _train_window(prepared, n, config, seed, mode, trainer)
        return trained, TraceEntry(n, float(trained.test_rmse), elapsed)

    outcomes = ordered_map(run, periods.periods, workers)
    best, best_entry = None, None
    for trained, entry in outcomes:
        if entry.skipped:
            continue
        if best_entry is None or entry.rmse < best_entry.rmse:
            best, best_entry = trained, entry
    if best is None:
        raise NoPeriodError(
            f"every detected period {list(periods.periods)} is too long for {d} rows; "
            "pass a window size manually"
        )
    return TunedResult(
        best=best,
        best_n=best_entry.n,
        best_rmse=best_entry.rmse,
        trace=tuple(e for _, e in outcomes),
        periods_tried=periods,
        features=prepared.features,
        columns=prepared.columns,
    )


def manual_run(
    series: RawSeries,
    n: int,
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
    forest_config: ForestConfig = ForestConfig(),
    threshold: float = 0.95,
    mode: str = "block",
    trainer: Trainer = train,
    prepared: Prepared | None = None,
) -> TrainedModel:
    """One transform-and-train pass at a fixed window size.

    Seeds are derived exactly as in ``optimized_lstm``, so ``n = best_n``
    reproduces the tuned model.
    """
    d = series.values.shape[0]
    if not 1 <= n or 2 * n >= d:
        raise DataError(f"window size {n} outside 1 <= n < d/2 for d={d}")
    if prepared is None:
        prepared = prepare(series, replace(forest_config, seed=seed), threshold)
    return _train_window(prepared, n, config, seed, mode, trainer)[0]


@dataclass(frozen=True)
class GridRow:
    param: str
    value: float
    rmse: float
    wall_time: float


def grid_run(
    series: RawSeries,
    param: str,
    values: Sequence,
    n: int = 1,
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
    forest_config: ForestConfig = ForestConfig(),
    threshold: float = 0.95,
    mode: str = "block",
    trainer: Trainer = train,
) -> list[GridRow]:
    """Vary one TrainConfig field (e.g. ``seq_len``, ``hidden_dim``, ``epochs``)
    at a fixed window size; one row per value."""
    if param not in TrainConfig.__dataclass_fields__:
        raise DataError(f"unknown training parameter {param!r}")
    prepared = prepare(series, replace(forest_config, seed=seed), threshold)
    rows = []
    for value in values:
        cfg = replace(config, **{param: value})
        start = time.perf_counter()
        trained = manual_run(series, n, cfg, seed, mode=mode, trainer=trainer, prepared=prepared)
        rows.append(GridRow(param, value, float(trained.test_rmse), time.perf_counter() - start))
    return rows
