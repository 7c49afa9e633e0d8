"""RMSprop training loop, loss/metrics logging, and checkpoint persistence.

The optimizer follows the update

    E[g^2]_t = alpha * E[g^2]_{t-1} + (1 - alpha) * g_t^2
    theta_{t+1} = theta_t - eta * g_t / (sqrt(E[g^2]_t) + eps)

with the moving average initialized to g_0^2 on the very first step.

Checkpoints are single JSON documents (versioned schema) holding the model
kind, all parameters, the optimizer state, and the data scaler; floats round
trip exactly through their shortest decimal representation.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .data import WindowedDataset
from .models import (
    LstmParams,
    QlstmParams,
    collect_grads,
    window_node,
    wrap_params,
)

CHECKPOINT_SCHEMA = 1


class CheckpointError(ValueError):
    """Raised for malformed or mismatched checkpoint documents."""


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    smoothing: float = 0.99
    epsilon: float = 1e-8
    max_epochs: int = 100
    window: int = 4
    batch_size: int = 16
    seed: int = 0
    gradient_engine: str = "adjoint"

    def __post_init__(self):
        if not 0 < self.smoothing < 1:
            raise ValueError("smoothing must be in (0, 1)")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValueError("learning_rate and epsilon must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.gradient_engine not in ("adjoint", "shift"):
            raise ValueError(f"unknown gradient engine {self.gradient_engine!r}")


@dataclass
class RmspropState:
    avg_sq: np.ndarray
    step: int = 0

    @classmethod
    def fresh(cls, n_params: int) -> "RmspropState":
        return cls(avg_sq=np.zeros(n_params), step=0)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    test_loss: float
    wall_ms: float


@dataclass
class MetricsLog:
    records: list[EpochRecord] = field(default_factory=list)

    def train_losses(self) -> np.ndarray:
        return np.array([r.train_loss for r in self.records])

    def test_losses(self) -> np.ndarray:
        return np.array([r.test_loss for r in self.records])


def mse(predictions: np.ndarray, targets: np.ndarray) -> float:
    predictions = np.asarray(predictions, float)
    targets = np.asarray(targets, float)
    if predictions.shape != targets.shape or predictions.size == 0:
        raise ValueError("predictions and targets must be equal-length and non-empty")
    d = predictions - targets
    return float(np.mean(d * d))


def rmsprop_step(
    params: np.ndarray, grads: np.ndarray, state: RmspropState, config: TrainConfig
) -> tuple[np.ndarray, RmspropState]:
    """One RMSprop update on a flat parameter vector (functional)."""
    params = np.asarray(params, float)
    grads = np.asarray(grads, float)
    if params.shape != grads.shape or params.shape != state.avg_sq.shape:
        raise ValueError("params, grads, and optimizer state shapes must match")
    if state.step == 0:
        avg = grads * grads
    else:
        avg = config.smoothing * state.avg_sq + (1 - config.smoothing) * grads * grads
    new_params = params - config.learning_rate * grads / (np.sqrt(avg) + config.epsilon)
    return new_params, RmspropState(avg_sq=avg, step=state.step + 1)


def _rebuild(model, vec: np.ndarray):
    return type(model).from_vector(vec)


def evaluate(model, inputs: np.ndarray, targets: np.ndarray, engine: str = "adjoint") -> float:
    """MSE of the model over a sample set (vectorized forward)."""
    from .models import predict_batch

    return mse(predict_batch(model, inputs, engine), np.asarray(targets, float))


def train(
    model: QlstmParams | LstmParams,
    dataset: WindowedDataset,
    config: TrainConfig,
    epoch_callback=None,
    optimizer_state: RmspropState | None = None,
) -> tuple[QlstmParams | LstmParams, MetricsLog]:
    """Mini-batch RMSprop training; returns the final model and per-epoch log.

    Fully deterministic given the config seed and the initial model.  Train
    loss is the epoch mean of per-sample squared errors; the test loss is
    evaluated on the held-out split after each epoch.  ``epoch_callback``,
    when given, is invoked as callback(epoch, model, optimizer_state).
    """
    (train_x, train_y), (test_x, test_y) = dataset.train(), dataset.test()
    if train_y.size == 0 or test_y.size == 0:
        raise ValueError("both dataset splits must be non-empty")
    vec = model.to_vector()
    state = optimizer_state or RmspropState.fresh(vec.size)
    log = MetricsLog()
    for epoch in range(1, config.max_epochs + 1):
        tic = time.perf_counter()
        rng = np.random.default_rng([config.seed, epoch])
        order = rng.permutation(train_y.size)
        sq_err_sum = 0.0
        for start in range(0, order.size, config.batch_size):
            idx = order[start : start + config.batch_size]
            current = _rebuild(model, vec)
            nodes = wrap_params(current)
            pred = window_node(nodes, train_x[idx], config.gradient_engine)
            loss = ad.mean_squared_error(pred, train_y[idx][:, None])
            ad.backward(loss)
            grads = collect_grads(nodes)
            vec, state = rmsprop_step(vec, grads, state, config)
            sq_err_sum += float(loss.value) * idx.size
        current = _rebuild(model, vec)
        train_loss = sq_err_sum / order.size
        test_loss = evaluate(current, test_x, test_y, config.gradient_engine)
        wall_ms = (time.perf_counter() - tic) * 1000.0
        log.records.append(EpochRecord(epoch, train_loss, test_loss, wall_ms))
        if epoch_callback is not None:
            epoch_callback(epoch, current, state)
    return _rebuild(model, vec), log


def write_metrics(log: MetricsLog, path, include_wall: bool = False) -> None:
    """Persist the log as `epoch,train_loss,test_loss,wall_ms` CSV.

    By default wall_ms is written as 0 so reruns with the same seed produce
    byte-identical files; pass ``include_wall=True`` for real timings.
    """
    with open(path, "w", newline="") as fh:
        fh.write("epoch,train_loss,test_loss,wall_ms\n")
        for r in log.records:
            wall = int(round(r.wall_ms)) if include_wall else 0
            fh.write(f"{r.epoch},{r.train_loss!r},{r.test_loss!r},{wall}\n")


def _model_payload(model) -> dict:
    if isinstance(model, QlstmParams):
        return {
            "kind": "qlstm",
            "vqc": model.vqc.tolist(),
            "head_scale": model.head_scale,
            "head_shift": model.head_shift,
        }
    return {
        "kind": "lstm",
        "w": model.w.tolist(),
        "b_ih": model.b_ih.tolist(),
        "b_hh": model.b_hh.tolist(),
        "head_w": model.head_w.tolist(),
        "head_b": model.head_b,
    }


def save_checkpoint(
    model,
    optimizer_state: RmspropState | None,
    path,
    scaler: tuple[float, float] | None = None,
    meta: dict | None = None,
) -> None:
    doc = {
        "schema": CHECKPOINT_SCHEMA,
        "model": _model_payload(model),
        "optimizer": None
        if optimizer_state is None
        else {"avg_sq": optimizer_state.avg_sq.tolist(), "step": optimizer_state.step},
        "scaler": None if scaler is None else list(scaler),
        "meta": meta or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path, expect_kind: str | None = None):
    """Returns (model, optimizer_state, scaler, meta).

    ``expect_kind`` ('qlstm' or 'lstm'), when given, rejects checkpoints of
    the other model as a schema error.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"{path}: not a valid checkpoint: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != CHECKPOINT_SCHEMA:
        raise CheckpointError(f"{path}: unsupported checkpoint schema")
    try:
        m = doc["model"]
        if expect_kind is not None and m.get("kind") != expect_kind:
            raise CheckpointError(
                f"{path}: checkpoint holds a {m.get('kind')!r} model, expected {expect_kind!r}"
            )
        if m["kind"] == "qlstm":
            model = QlstmParams(
                vqc=np.array(m["vqc"]),
                head_scale=float(m["head_scale"]),
                head_shift=float(m["head_shift"]),
            )
        elif m["kind"] == "lstm":
            model = LstmParams(
                w=np.array(m["w"]),
                b_ih=np.array(m["b_ih"]),
                b_hh=np.array(m["b_hh"]),
                head_w=np.array(m["head_w"]),
                head_b=float(m["head_b"]),
            )
        else:
            raise CheckpointError(f"{path}: unknown model kind {m['kind']!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"{path}: malformed checkpoint: {exc}") from exc
    opt = doc.get("optimizer")
    state = None if opt is None else RmspropState(avg_sq=np.array(opt["avg_sq"]), step=int(opt["step"]))
    scaler = None if doc.get("scaler") is None else tuple(doc["scaler"])
    return model, state, scaler, doc.get("meta", {})
