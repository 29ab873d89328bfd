"""Error metrics, baselines, method comparison and plot-data CSVs."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import RawSeries, SplitSpec, holdout_split
from .errors import DataError
from .importance import ForestConfig, fit_forest, forest_predict
from .lstm import TrainConfig, TrainedModel
from .tuner import GridRow, TunedResult, manual_run, optimized_lstm, prepare
from .windowing import WindowSpec, data_transform

METHODS = ("persistence", "random-forest", "lstm-plain", "lstm-tuned")

# Published figures for the industrial boiler dataset, which is not public;
# carried in reports for context only.
REFERENCE_RMSE = {
    "random-forest": 40.21,
    "backpropagation": 20.90,
    "cnn": 21.97,
    "lstm-plain": 19.87,
    "lstm-tuned": 9.13,
}
REFERENCE_IMPROVEMENT_PCT = 54.05


def _check_pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise DataError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise DataError("cannot score empty vectors")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(truth))):
        raise DataError("non-finite values in predictions or truth")
    return pred, truth


def rmse(pred, truth) -> float:
    pred, truth = _check_pair(pred, truth)
    diff = pred - truth
    return math.sqrt(float(np.mean(diff * diff)))


def r2_score(pred, truth) -> float | None:
    """Coefficient of determination; None when the truth is constant."""
    pred, truth = _check_pair(pred, truth)
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0:
        return None
    return 1.0 - float(np.sum((truth - pred) ** 2)) / ss_tot


def persistence_predict(target, index) -> np.ndarray:
    """Previous observed target for each row index; row 0 has no history and
    repeats its own value."""
    target = np.asarray(target, dtype=np.float64)
    index = np.asarray(index, dtype=np.intp)
    return target[np.maximum(index - 1, 0)]


@dataclass(frozen=True)
class MethodResult:
    name: str
    rmse: float
    r2: float | None
    wall_ms: float
    window: int
    test_index: np.ndarray = field(repr=False)

    def to_dict(self, timings: bool = False) -> dict:
        return {
            "name": self.name,
            "rmse": self.rmse,
            "r2": self.r2,
            "wall_ms": self.wall_ms if timings else None,
            "window": self.window,
            "test_rows": int(self.test_index.size),
        }


@dataclass(frozen=True)
class ComparisonReport:
    methods: tuple[MethodResult, ...]
    improvement_pct: float | None
    seed: int
    train_fraction: float

    def rmse_of(self, name: str) -> float:
        for m in self.methods:
            if m.name == name:
                return m.rmse
        raise KeyError(name)

    def to_dict(self, timings: bool = False) -> dict:
        return {
            "methods": [m.to_dict(timings) for m in self.methods],
            "improvement_pct": self.improvement_pct,
            "seed": self.seed,
            "split": {"train_fraction": self.train_fraction, "seed": self.seed, "by": "target row"},
            "reference": {
                "dataset": "industrial boiler SIS data (not public, not reproduced)",
                "rmse": REFERENCE_RMSE,
                "improvement_pct": REFERENCE_IMPROVEMENT_PCT,
            },
        }


def improvement(rmse_plain: float, rmse_tuned: float) -> float | None:
    """Percent RMSE reduction of the tuned model over the plain one."""
    if rmse_plain <= 0:
        return None
    return (rmse_plain - rmse_tuned) / rmse_plain * 100.0


def compare(
    series: RawSeries,
    methods=METHODS,
    config: TrainConfig = TrainConfig(),
    forest_config: ForestConfig = ForestConfig(),
    seed: int = 0,
    threshold: float = 0.95,
    mode: str = "block",
) -> ComparisonReport:
    """Score each method on one shared holdout split.

    Persistence, random forest and the plain LSTM see the same unwindowed
    rows and the same test rows. The tuned LSTM's windows are split with the
    same per-row random keys, so its test rows are drawn from the same
    assignment.
    """
    methods = list(dict.fromkeys(methods))
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise DataError(f"unknown method(s) {unknown}; choose from {list(METHODS)}")
    forest_config = replace(forest_config, seed=seed)
    prepared = prepare(series, forest_config, threshold)
    base = data_transform(prepared.matrix, WindowSpec(1, mode), prepared.columns)
    train_set, test_set = holdout_split(base, SplitSpec(config.train_fraction, seed))

    results = {}
    for name in methods:
        start = time.perf_counter()
        if name == "persistence":
            pred = persistence_predict(prepared.target, test_set.index)
            truth, index, window = test_set.y, test_set.index, 1
        elif name == "random-forest":
            forest = fit_forest(train_set.X, train_set.y, forest_config)
            pred = forest_predict(forest, test_set.X)
            truth, index, window = test_set.y, test_set.index, 1
        elif name == "lstm-plain":
            trained = manual_run(series, 1, config, seed, mode=mode, prepared=prepared)
            pred, truth, index, window = trained.test_pred, trained.test_true, trained.test_index, 1
        else:
            tuned = optimized_lstm(series, config, seed=seed, mode=mode, prepared=prepared)
            best = tuned.best
            pred, truth, index, window = best.test_pred, best.test_true, best.test_index, tuned.best_n
        wall_ms = (time.perf_counter() - start) * 1000.0
        results[name] = MethodResult(name, rmse(pred, truth), r2_score(pred, truth), wall_ms, window, index)

    shared = [r.test_index for n, r in results.items() if n != "lstm-tuned"]
    assert all(np.array_equal(shared[0], s) for s in shared[1:]), "methods disagree on test rows"

    gain = None
    if "lstm-plain" in results and "lstm-tuned" in results:
        gain = improvement(results["lstm-plain"].rmse, results["lstm-tuned"].rmse)
    ordered = sorted(results.values(), key=lambda r: (r.rmse, METHODS.index(r.name)))
    return ComparisonReport(tuple(ordered), gain, seed, config.train_fraction)


PLOT_KINDS = {
    "rmse-vs-hidden": ("hidden_dim", "rmse"),
    "rmse-vs-iterations": ("epochs", "rmse"),
    "rmse-vs-seq-len": ("seq_len", "rmse"),
    "pred-vs-actual": ("index", "actual", "predicted"),
    "rmse-vs-n": ("n", "rmse", "skipped"),
    "loss-curves": ("epoch", "train_rmse", "test_rmse"),
    "method-comparison": ("method", "rmse", "r2"),
}


def _model_of(result) -> TrainedModel:
    if isinstance(result, TunedResult):
        return result.best
    if isinstance(result, TrainedModel):
        return result
    raise DataError(f"expected a trained or tuned model, got {type(result).__name__}")


def _plot_rows(result, kind):
    if kind in ("rmse-vs-hidden", "rmse-vs-iterations", "rmse-vs-seq-len"):
        param = PLOT_KINDS[kind][0]
        rows = list(result)
        if not all(isinstance(r, GridRow) and r.param == param for r in rows):
            raise DataError(f"{kind} needs grid rows over {param}")
        return [(r.value, r.rmse) for r in rows]
    if kind == "pred-vs-actual":
        m = _model_of(result)
        return list(zip(m.test_index.tolist(), m.test_true.tolist(), m.test_pred.tolist()))
    if kind == "rmse-vs-n":
        if not isinstance(result, TunedResult):
            raise DataError("rmse-vs-n needs a tuning result")
        return [(e.n, "" if e.rmse is None else e.rmse, int(e.skipped)) for e in result.trace]
    if kind == "loss-curves":
        m = _model_of(result)
        return [
            (k + 1, tr, te)
            for k, (tr, te) in enumerate(zip(m.train_loss_curve, m.test_loss_curve))
        ]
    if not isinstance(result, ComparisonReport):
        raise DataError("method-comparison needs a comparison report")
    return [(m.name, m.rmse, "" if m.r2 is None else m.r2) for m in result.methods]


def emit_plot_data(result, kind: str, path) -> Path:
    """Write the data behind one chart as a headered CSV."""
    if kind not in PLOT_KINDS:
        raise DataError(f"unknown plot kind {kind!r}; choose from {sorted(PLOT_KINDS)}")
    rows = _plot_rows(result, kind)
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(PLOT_KINDS[kind])
            writer.writerows([[repr(v) if isinstance(v, float) else v for v in row] for row in rows])
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    return path
