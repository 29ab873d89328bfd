"""Command-line entry point: ``flowcast <command> [flags]``.

Exit codes: 0 success, 2 bad flags or config, 3 data errors, 4 divergence.
Failures print one JSON line to stderr: ``{"error": kind, "message": ...}``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import evalkit
from .config import ConfigError, RunConfig, load_config
from .dataset import RawSeries, SplitSpec, load_csv, save_csv
from .errors import DataError, DivergenceError
from .lstm import TrainedModel, load_model, predict, save_model
from .period import cycle
from .synth import Channel, SynthSpec, gen_periodic
from .tuner import grid_run, manual_run, optimized_lstm, prepare
from .windowing import WindowSpec, data_transform, describe_layout

EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 2, 3, 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": " ".join(str(message).split())}), file=sys.stderr)
    return code


def _write_json(path, data) -> None:
    text = json.dumps(data, indent=2, sort_keys=False) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _config(args) -> RunConfig:
    overrides = list(getattr(args, "set", None) or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"dataset.seed={args.seed}")
    if getattr(args, "mode", None) is not None:
        overrides.append(f"window.mode={args.mode}")
    if getattr(args, "n", None) is not None:
        overrides.append(f"window.n={args.n}")
    if getattr(args, "target", None) is not None:
        overrides.append(f"dataset.target_column={args.target}")
    cfg = load_config(getattr(args, "config", None), overrides)
    try:
        cfg.train_config()
        cfg.forest_config()
        SplitSpec(cfg.dataset.train_fraction)
    except DataError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _load(args, cfg: RunConfig) -> RawSeries:
    return load_csv(args.input, cfg.dataset.target_column, cfg.dataset.timestamp_columns)


def _require_n(cfg: RunConfig) -> int:
    if cfg.window.n is None:
        raise ConfigError("a window size is required (--n or window.n)")
    return cfg.window.n


def cmd_synth(args, cfg):
    channels = tuple(
        Channel(amplitude=1.0, period=p, noise=args.noise) for p in args.period
    )
    spec = SynthSpec(
        d=args.rows,
        channels=channels,
        n_distractors=args.distractors,
        distractor_noise=args.noise,
        lag=args.lag,
        seed=cfg.seed,
    )
    series, truth = gen_periodic(spec)
    save_csv(series, args.out)
    sidecar = args.truth or str(Path(args.out).with_suffix(".truth.json"))
    _write_json(sidecar, truth.to_dict())


def cmd_analyze_period(args, cfg):
    series = _load(args, cfg)
    _write_json(args.out, cycle(series.target).to_dict())


def cmd_transform(args, cfg):
    series = _load(args, cfg)
    n = _require_n(cfg)
    if args.all_features:
        keep = series.feature_indices + [series.target_index]
        matrix, columns = series.values[:, keep], [series.column_names[j] for j in keep]
    else:
        prep = prepare(series, cfg.forest_config(), cfg.importance.threshold)
        matrix, columns = prep.matrix, list(prep.columns)
    data = data_transform(matrix, WindowSpec(n, cfg.window.mode), columns)
    header = ",".join(["row"] + describe_layout(data) + [f"{columns[-1]}[t]"])
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for idx, x, y in zip(data.index, data.X, data.y):
            fh.write(",".join([str(idx)] + [repr(float(v)) for v in x] + [repr(float(y))]) + "\n")


def cmd_train(args, cfg):
    series = _load(args, cfg)
    trained = manual_run(
        series,
        _require_n(cfg),
        cfg.train_config(),
        cfg.seed,
        cfg.forest_config(),
        cfg.importance.threshold,
        cfg.window.mode,
    )
    save_model(trained, args.out_model)
    if args.out_curves:
        evalkit.emit_plot_data(trained, "loss-curves", args.out_curves)
    _write_json(None, {"n": trained.n, "test_rmse": trained.test_rmse})


def cmd_tune(args, cfg):
    series = _load(args, cfg)
    result = optimized_lstm(
        series,
        cfg.train_config(),
        cfg.forest_config(),
        cfg.seed,
        cfg.importance.threshold,
        cfg.window.mode,
        workers=cfg.tuner.workers,
    )
    if args.out_model:
        save_model(result.best, args.out_model)
    trace = dict(result.to_dict(timings=args.timings), seed=cfg.seed)
    _write_json(args.out_trace, trace)


def cmd_predict(args, cfg):
    trained: TrainedModel = load_model(args.model)
    series = _load(args, cfg)
    missing = [c for c in trained.columns if c not in series.column_names]
    if missing:
        raise DataError(f"input lacks model columns {missing}")
    keep = [series.column_names.index(c) for c in trained.columns]
    data = data_transform(series.values[:, keep], WindowSpec(trained.n, trained.mode), trained.columns)
    pred = predict(trained, data)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("row,actual,predicted\n")
        for idx, y, p in zip(data.index, data.y, pred):
            fh.write(f"{idx},{float(y)!r},{float(p)!r}\n")


def cmd_compare(args, cfg):
    series = _load(args, cfg)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    report = evalkit.compare(
        series,
        methods,
        cfg.train_config(),
        cfg.forest_config(),
        cfg.seed,
        cfg.importance.threshold,
        cfg.window.mode,
    )
    _write_json(args.out, report.to_dict(timings=args.timings))


_GRID_PARAM = {
    "rmse-vs-hidden": "hidden_dim",
    "rmse-vs-iterations": "epochs",
    "rmse-vs-seq-len": "seq_len",
}


def cmd_emit_plots(args, cfg):
    series = _load(args, cfg)
    kind = args.kind
    train_cfg, forest_cfg = cfg.train_config(), cfg.forest_config()
    if kind in _GRID_PARAM:
        if not args.values:
            raise ConfigError(f"{kind} needs --values")
        values = [int(v) for v in args.values.split(",")]
        result = grid_run(
            series, _GRID_PARAM[kind], values, _require_n(cfg), train_cfg, cfg.seed,
            forest_cfg, cfg.importance.threshold, cfg.window.mode,
        )
    elif kind == "method-comparison":
        result = evalkit.compare(
            series, evalkit.METHODS, train_cfg, forest_cfg, cfg.seed,
            cfg.importance.threshold, cfg.window.mode,
        )
    elif kind in ("rmse-vs-n",) or cfg.window.n is None:
        result = optimized_lstm(
            series, train_cfg, forest_cfg, cfg.seed, cfg.importance.threshold,
            cfg.window.mode, workers=cfg.tuner.workers,
        )
    else:
        result = manual_run(
            series, cfg.window.n, train_cfg, cfg.seed, forest_cfg,
            cfg.importance.threshold, cfg.window.mode,
        )
    evalkit.emit_plot_data(result, kind, args.out)


COMMANDS = {
    "synth": cmd_synth,
    "analyze-period": cmd_analyze_period,
    "transform": cmd_transform,
    "train": cmd_train,
    "tune": cmd_tune,
    "predict": cmd_predict,
    "compare": cmd_compare,
    "emit-plots": cmd_emit_plots,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flowcast", description="Period-tuned LSTM forecasting.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text, data=True):
        p = sub.add_parser(name, help=help_text)
        if data:
            p.add_argument("--input", required=True, help="CSV with a header row")
            p.add_argument("--target", help="target column name or index (default: last)")
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--seed", type=int, help="seed for all randomness")
        p.add_argument(
            "--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config value"
        )
        return p

    p = add("synth", "write a synthetic periodic series", data=False)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="ground-truth JSON path (default: <out>.truth.json)")
    p.add_argument("--rows", type=int, default=10_000)
    p.add_argument("--period", type=float, action="append", help="informative channel period (repeatable)")
    p.add_argument("--distractors", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--lag", type=int, default=1)

    p = add("analyze-period", "print detected periods as JSON")
    p.add_argument("--out", help="write JSON here instead of stdout")

    for name, help_text in (("transform", "write the windowed supervised table"),
                            ("train", "train at a fixed window size")):
        p = add(name, help_text)
        p.add_argument("--n", type=int, help="window size")
        p.add_argument("--mode", choices=["block", "slide"])
    sub.choices["transform"].add_argument("--out", required=True)
    sub.choices["transform"].add_argument("--all-features", action="store_true")
    sub.choices["train"].add_argument("--out-model", required=True)
    sub.choices["train"].add_argument("--out-curves")

    p = add("tune", "select the window size over detected periods")
    p.add_argument("--mode", choices=["block", "slide"])
    p.add_argument("--out-model")
    p.add_argument("--out-trace", help="JSON trace (default: stdout)")
    p.add_argument("--timings", action="store_true", help="include wall times in the trace")

    p = add("predict", "apply a saved model to a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)

    p = add("compare", "score baselines and LSTM variants on one split")
    p.add_argument("--methods", default=",".join(evalkit.METHODS))
    p.add_argument("--mode", choices=["block", "slide"])
    p.add_argument("--out", help="report JSON (default: stdout)")
    p.add_argument("--timings", action="store_true", help="fill wall_ms in the report")

    p = add("emit-plots", "write the CSV behind one chart")
    p.add_argument("--kind", required=True, choices=sorted(evalkit.PLOT_KINDS))
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--mode", choices=["block", "slide"])
    p.add_argument("--values", help="comma-separated grid values")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    try:
        cfg = _config(args)
        if args.command == "synth" and not args.period:
            args.period = [20.0]
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_USAGE)
    except DivergenceError as exc:
        return _fail("divergence", str(exc), EXIT_DIVERGED)
    except (DataError, OSError) as exc:
        return _fail("data", str(exc), EXIT_DATA)
    return 0


if __name__ == "__main__":
    sys.exit(main())
