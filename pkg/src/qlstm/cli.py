"""Command-line entry point: generate data, train, evaluate, gradient-check.

Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 numerical check failure.
Flag precedence: command-line flags > config file (JSON) > built-in defaults.
The output root honors the QLSTM_OUTPUT_ROOT environment variable when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import models
from .checks import run_gradcheck
from .data import TimeSeries, make_windows, rescale_minmax, unscale, write_csv
from .train import (
    TrainConfig,
    evaluate,
    load_checkpoint,
    mse,
    save_checkpoint,
    train,
    write_metrics,
)

EXPERIMENTS = ("sine", "pendulum", "bessel", "popinv")
DEFAULT_CHECKPOINT_EPOCHS = (1, 15, 30, 100)

_CONFIG_KEYS = ("experiment", "model", "seed", "epochs", "batch_size", "lr", "grad_engine", "out", "data")


def _generate(experiment: str, data_path: str | None) -> TimeSeries:
    if data_path is not None:
        return data_mod.load_csv(data_path)
    if experiment == "sine":
        return data_mod.gen_sine()
    if experiment == "pendulum":
        return data_mod.gen_pendulum()
    if experiment == "bessel":
        return data_mod.gen_bessel()
    if experiment == "popinv":
        return data_mod.gen_population_inversion()
    raise ValueError(f"unknown experiment {experiment!r}")


def _out_dir(flag_value: str | None) -> Path:
    root = os.environ.get("QLSTM_OUTPUT_ROOT")
    if flag_value is not None:
        base = Path(flag_value)
        if root and not base.is_absolute():
            base = Path(root) / base
    else:
        base = Path(root) if root else Path(".")
    base.mkdir(parents=True, exist_ok=True)
    return base


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from a JSON config file, then from defaults."""
    if getattr(args, "config", None):
        with open(args.config) as fh:
            doc = json.load(fh)
        for key in _CONFIG_KEYS:
            if getattr(args, key, None) is None and key in doc:
                setattr(args, key, doc[key])
    defaults = {"model": "qlstm", "seed": 0, "epochs": 100, "batch_size": 16,
                "lr": 0.01, "grad_engine": "adjoint"}
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def cmd_gen(args) -> int:
    series = _generate(args.experiment, None)
    out = _out_dir(args.out) / f"{args.experiment}.csv"
    write_csv(series, out)
    print(f"wrote {len(series)} rows to {out}")
    return 0


def _train_one(kind: str, dataset, scaler, args, out_dir: Path) -> None:
    config = TrainConfig(
        learning_rate=args.lr,
        max_epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        gradient_engine=args.grad_engine,
    )
    model = models.init_qlstm(args.seed) if kind == "qlstm" else models.init_lstm(args.seed)
    checkpoint_epochs = set(args.checkpoint_epochs)
    label = args.experiment or "csv"

    def callback(epoch, current, state):
        if epoch in checkpoint_epochs:
            save_checkpoint(
                current,
                state,
                out_dir / f"{label}_{kind}_seed{args.seed}_epoch{epoch}.json",
                scaler=scaler,
                meta={"experiment": args.experiment, "seed": args.seed, "epoch": epoch},
            )

    final, log = train(model, dataset, config, epoch_callback=callback)
    metrics_path = out_dir / f"{label}_{kind}_seed{args.seed}_metrics.csv"
    write_metrics(log, metrics_path, include_wall=args.timings)
    last = log.records[-1] if log.records else None
    if last is not None:
        print(
            f"{kind}: epoch {last.epoch} train_loss={last.train_loss:.6g} "
            f"test_loss={last.test_loss:.6g} ({metrics_path})"
        )
    save_checkpoint(
        final,
        None,
        out_dir / f"{label}_{kind}_seed{args.seed}_final.json",
        scaler=scaler,
        meta={"experiment": args.experiment, "seed": args.seed, "epoch": args.epochs},
    )


def cmd_train(args) -> int:
    series = _generate(args.experiment, args.data)
    scaled, scaler = rescale_minmax(series)
    dataset = make_windows(scaled, n=4)
    out_dir = _out_dir(args.out)
    kinds = ("qlstm", "lstm") if args.model == "both" else (args.model,)
    for kind in kinds:
        _train_one(kind, dataset, scaler, args, out_dir)
    return 0


def cmd_eval(args) -> int:
    model, _state, scaler, meta = load_checkpoint(args.checkpoint)
    experiment = args.experiment or meta.get("experiment")
    if experiment is None:
        raise ValueError("no experiment given and none recorded in the checkpoint")
    series = _generate(experiment, args.data)
    scaled, fitted_scaler = rescale_minmax(series)
    scaler = scaler or fitted_scaler
    dataset = make_windows(scaled, n=4)
    preds = models.predict_batch(model, dataset.inputs)
    out = _out_dir(args.out) / f"{experiment}_trace.csv"
    with open(out, "w", newline="") as fh:
        fh.write("t,truth,prediction,is_test\n")
        for k in range(dataset.n_samples):
            truth = float(unscale(dataset.targets[k], scaler))
            pred = float(unscale(preds[k], scaler))
            fh.write(f"{k + 4},{truth!r},{pred!r},{int(k >= dataset.split_index)}\n")
    train_mse = mse(preds[: dataset.split_index], dataset.targets[: dataset.split_index])
    test_mse = mse(preds[dataset.split_index :], dataset.targets[dataset.split_index :])
    print(f"train MSE {train_mse:.6g}  test MSE {test_mse:.6g}  trace: {out}")
    return 0


def cmd_gradcheck(args) -> int:
    kinds = ("qlstm", "lstm") if args.model == "both" else (args.model,)
    failed = None
    for kind in kinds:
        for result in run_gradcheck(kind, args.seed, corrupt=args.corrupt):
            status = "pass" if result.ok else "FAIL"
            print(
                f"{kind} {result.name}: worst {result.worst:.3e} "
                f"(tol {result.tolerance:.0e}) at index {result.worst_index} [{status}]"
            )
            if not result.ok and failed is None:
                failed = (kind, result)
    if failed is not None:
        kind, result = failed
        print(f"gradient check failed: {kind} {result.name}, index {result.worst_index}", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlstm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_model=True):
        p.add_argument("--config", help="JSON config file (flags take precedence)")
        p.add_argument("--out", help="output directory")
        if with_model:
            p.add_argument("--model", choices=("qlstm", "lstm", "both"))
            p.add_argument("--seed", type=int)

    p = sub.add_parser("gen", help="generate a built-in series as CSV")
    p.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    common(p, with_model=False)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train one or both models on an experiment")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--data", help="external series CSV (overrides the generator)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--grad-engine", dest="grad_engine", choices=("adjoint", "shift"))
    p.add_argument(
        "--checkpoint-epochs",
        type=int,
        nargs="+",
        default=list(DEFAULT_CHECKPOINT_EPOCHS),
        help="epochs at which to persist checkpoints",
    )
    p.add_argument("--timings", action="store_true", help="record real wall times in metrics")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="emit a prediction trace for a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--data", help="external series CSV")
    common(p, with_model=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="run gradient cross-checks")
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    common(p)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _merge_config(args)
    if getattr(args, "experiment", None) is None and getattr(args, "data", None) is None \
            and args.command == "train":
        parser.error("train requires --experiment or --data")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
