"""Numerical self-checks: gradient-engine cross-validation and FD comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import models, vqc
from .models import collect_grads, window_node, wrap_params


@dataclass
class CheckResult:
    name: str
    worst: float
    tolerance: float
    worst_index: int

    @property
    def ok(self) -> bool:
        return self.worst <= self.tolerance


def finite_difference_grad(model, window: np.ndarray, target: float, h: float = 1e-4) -> np.ndarray:
    """Central differences of the single-sample squared error, per parameter."""
    vec = model.to_vector()
    out = np.empty_like(vec)
    for k in range(vec.size):
        for sign, slot in ((+1, 0), (-1, 1)):
            v = vec.copy()
            v[k] += sign * h
            pred = models.forward_window(type(model).from_vector(v), window)
            err = (pred - target) ** 2
            if slot == 0:
                plus = err
            else:
                minus = err
        out[k] = (plus - minus) / (2 * h)
    return out


def analytic_grad(model, window: np.ndarray, target: float, engine: str = "adjoint") -> np.ndarray:
    nodes = wrap_params(model)
    pred = window_node(nodes, np.asarray(window, float)[None, :], engine)
    loss = ad.mean_squared_error(pred, np.array([[target]]))
    ad.backward(loss)
    return collect_grads(nodes)


def run_gradcheck(model_kind: str, seed: int, corrupt: bool = False) -> list[CheckResult]:
    """Gradient sanity suite for one model kind.

    ``corrupt`` is a test hook that perturbs one analytic gradient entry so a
    failing report path can be exercised deliberately.
    """
    rng = np.random.default_rng(seed)
    results = []
    if model_kind == "qlstm":
        spec = models.GATE_SPEC
        worst, worst_idx = 0.0, 0
        for trial in range(20):
            params = rng.uniform(-np.pi, np.pi, size=(spec.depth, spec.n_qubits, 3))
            x = rng.uniform(-1, 1, size=spec.n_qubits)
            up = rng.normal(size=spec.n_measured)
            pg_a, ig_a = vqc.vqc_grad_adjoint(spec, params, x, up)
            pg_s, ig_s = vqc.vqc_grad_shift(spec, params, x, up)
            diff = max(np.abs(pg_a - pg_s).max(), np.abs(ig_a - ig_s).max())
            if diff > worst:
                worst, worst_idx = diff, trial
        results.append(CheckResult("adjoint-vs-shift", worst, 1e-8, worst_idx))
        model = models.init_qlstm(seed)
    else:
        model = models.init_lstm(seed)

    window = rng.uniform(-1, 1, size=4)
    target = float(rng.uniform(-1, 1))
    fd = finite_difference_grad(model, window, target)
    an = analytic_grad(model, window, target)
    if corrupt:
        an[0] += 1.0
    scale = max(np.abs(fd).max(), 1e-12)
    rel = np.abs(an - fd) / scale
    results.append(
        CheckResult("analytic-vs-finite-difference", float(rel.max()), 1e-4, int(rel.argmax()))
    )
    return results
