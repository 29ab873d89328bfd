"""Period-tuned LSTM forecasting for multivariate industrial time series."""

from .dataset import Normalizer, RawSeries, SplitSpec, fit_normalizer, holdout_split, load_csv
from .errors import DataError, DivergenceError, FlowcastError, NoPeriodError
from .evalkit import compare, emit_plot_data, rmse
from .importance import ForestConfig, fit_forest, forest_predict, rank_importances, select_features
from .lstm import TrainConfig, TrainedModel, load_model, predict, save_model, train
from .period import cycle, regularize
from .synth import Channel, SynthSpec, gen_periodic
from .tuner import TunedResult, manual_run, optimized_lstm
from .windowing import SupervisedSet, WindowSpec, data_transform

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "DataError",
    "DivergenceError",
    "FlowcastError",
    "ForestConfig",
    "NoPeriodError",
    "Normalizer",
    "RawSeries",
    "SplitSpec",
    "SupervisedSet",
    "SynthSpec",
    "TrainConfig",
    "TrainedModel",
    "TunedResult",
    "WindowSpec",
    "compare",
    "cycle",
    "data_transform",
    "emit_plot_data",
    "fit_forest",
    "fit_normalizer",
    "forest_predict",
    "gen_periodic",
    "holdout_split",
    "load_csv",
    "load_model",
    "manual_run",
    "optimized_lstm",
    "predict",
    "rank_importances",
    "regularize",
    "rmse",
    "save_model",
    "select_features",
    "train",
]
