"""Variational quantum circuit block: encoding, entangle+rotate layers, readout.

The circuit is, in wire order:

1. H on every qubit (unbiased start).
2. Per qubit ``i``: R_y(arctan(x_i)) then R_z(arctan(x_i^2)).
3. ``depth`` repetitions of: a CNOT ring at adjacency 1 ((0->1), ..., (n-1->0)),
   a CNOT ring at adjacency 2 ((0->2), ..., (n-1->1)), then a three-angle
   rotation on each qubit with that repetition's trainable angles.
4. <Z> readout on the first ``n_measured`` qubits.

Rings degenerate for tiny registers: below 3 qubits the adjacency-2 ring is
skipped, below 2 qubits both are.

Two interchangeable gradient engines are provided: the parameter-shift rule
(two +-pi/2 circuit evaluations per angle) and an adjoint-style reverse sweep
(one backward pass for all angles).  They agree to numerical precision since
every parameterized gate is a Pauli rotation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .statevec import (
    H_MATRIX,
    PAULI,
    GateOp,
    apply_1q_batch,
    apply_cnot_batch,
    rx_matrix,
    ry_matrix,
    rz_matrix,
    z_signs,
)

AXES = ("x", "y", "z")
_ROT_BUILDERS = {"x": rx_matrix, "y": ry_matrix, "z": rz_matrix}


def _rot_mats_batch(axis: str, thetas: np.ndarray) -> np.ndarray:
    """Vectorized rotation matrices, shape (B, 2, 2)."""
    thetas = np.asarray(thetas, dtype=float)
    half = thetas / 2.0
    c, s = np.cos(half), np.sin(half)
    out = np.zeros(thetas.shape + (2, 2), dtype=complex)
    if axis == "x":
        out[..., 0, 0] = c
        out[..., 1, 1] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
    elif axis == "y":
        out[..., 0, 0] = c
        out[..., 1, 1] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
    else:
        out[..., 0, 0] = c - 1j * s
        out[..., 1, 1] = c + 1j * s
    return out


@dataclass(frozen=True)
class VqcSpec:
    """Circuit shape: register size, variational depth, measured prefix."""

    n_qubits: int
    depth: int
    n_measured: int

    def __post_init__(self):
        if self.n_qubits < 1 or self.depth < 1:
            raise ValueError("n_qubits and depth must be positive")
        if not 1 <= self.n_measured <= self.n_qubits:
            raise ValueError("n_measured must be in [1, n_qubits]")

    @property
    def n_params(self) -> int:
        return self.n_qubits * self.depth * 3


# Trainable angles, shape (depth, n_qubits, 3); axis order is (x, y, z).
VqcParams = np.ndarray


def init_params(spec: VqcSpec, seed: int) -> VqcParams:
    """Angles drawn i.i.d. uniform on (-pi, pi), deterministically per seed."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-np.pi, np.pi, size=(spec.depth, spec.n_qubits, 3))


def encode(x: np.ndarray) -> np.ndarray:
    """Angle pairs (arctan(x_i), arctan(x_i^2)), shape (..., n, 2)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("encoding input must be finite")
    return np.stack([np.arctan(x), np.arctan(x * x)], axis=-1)


class _PlanGate(NamedTuple):
    kind: str          # 'H', 'CNOT', or 'R'
    axis: str | None   # rotation axis for 'R'
    target: int
    control: int | None
    source: tuple | None  # ('enc', qubit, col) or ('var', layer, qubit, axis_idx)


@lru_cache(maxsize=None)
def _plan(spec: VqcSpec) -> tuple[_PlanGate, ...]:
    n = spec.n_qubits
    gates: list[_PlanGate] = []
    for q in range(n):
        gates.append(_PlanGate("H", None, q, None, None))
    for q in range(n):
        gates.append(_PlanGate("R", "y", q, None, ("enc", q, 0)))
        gates.append(_PlanGate("R", "z", q, None, ("enc", q, 1)))
    for d in range(spec.depth):
        if n >= 2:
            for q in range(n):
                gates.append(_PlanGate("CNOT", None, (q + 1) % n, q, None))
        if n >= 3:
            for q in range(n):
                gates.append(_PlanGate("CNOT", None, (q + 2) % n, q, None))
        for q in range(n):
            for a, axis in enumerate(AXES):
                gates.append(_PlanGate("R", axis, q, None, ("var", d, q, a)))
    return tuple(gates)


def circuit_gates(spec: VqcSpec, params: VqcParams, x: np.ndarray) -> list[GateOp]:
    """The circuit as an explicit GateOp list (for the dense-unitary oracle)."""
    enc = encode(np.asarray(x, dtype=float).reshape(spec.n_qubits))
    params = np.asarray(params, dtype=float)
    out = []
    for g in _plan(spec):
        if g.kind == "H":
            out.append(GateOp("H", g.target))
        elif g.kind == "CNOT":
            out.append(GateOp("CNOT", g.target, control=g.control))
        else:
            theta = _gate_angle(g, params, enc)
            out.append(GateOp("R" + g.axis.upper(), g.target, angles=(float(theta),)))
    return out


def _gate_angle(g: _PlanGate, params: np.ndarray, enc: np.ndarray):
    """Angle(s) for a parameterized plan gate; batched if ``enc`` is batched."""
    tag = g.source[0]
    if tag == "enc":
        return enc[..., g.source[1], g.source[2]]
    _, d, q, a = g.source
    return params[d, q, a]


def _run(spec: VqcSpec, params: np.ndarray, enc: np.ndarray) -> np.ndarray:
    """Simulate the circuit; ``enc`` shape (B, n, 2); returns amps (B, 2**n)."""
    n = spec.n_qubits
    batch = enc.shape[0]
    amps = np.zeros((batch, 2**n), dtype=complex)
    amps[:, 0] = 1.0
    for g in _plan(spec):
        amps = _apply_plan_gate(amps, g, params, enc, n)
    return amps


def _apply_plan_gate(amps, g: _PlanGate, params, enc, n, angle_override=None):
    if g.kind == "H":
        return apply_1q_batch(amps, H_MATRIX, g.target, n)
    if g.kind == "CNOT":
        return apply_cnot_batch(amps, g.control, g.target, n)
    theta = angle_override if angle_override is not None else _gate_angle(g, params, enc)
    if np.ndim(theta) == 0:
        mat = _ROT_BUILDERS[g.axis](float(theta))
    else:
        mat = _rot_mats_batch(g.axis, theta)
    return apply_1q_batch(amps, mat, g.target, n)


def _measure(spec: VqcSpec, amps: np.ndarray) -> np.ndarray:
    probs = np.abs(amps) ** 2
    signs = np.stack([z_signs(spec.n_qubits, q) for q in range(spec.n_measured)], axis=1)
    return probs @ signs


def vqc_forward_batch(spec: VqcSpec, params: VqcParams, xs: np.ndarray) -> np.ndarray:
    """<Z> of the measured qubits for a batch of inputs; shape (B, n_measured)."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != spec.n_qubits:
        raise ValueError(f"expected inputs of shape (B, {spec.n_qubits}), got {xs.shape}")
    params = _check_params(spec, params)
    return _measure(spec, _run(spec, params, encode(xs)))


def forward_with_cache(
    spec: VqcSpec, params: VqcParams, xs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched forward returning (readout, encoding angles, final amplitudes).

    The caches feed the gradient engines so backward passes skip the repeat
    forward simulation.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != spec.n_qubits:
        raise ValueError(f"expected inputs of shape (B, {spec.n_qubits}), got {xs.shape}")
    params = _check_params(spec, params)
    enc = encode(xs)
    amps = _run(spec, params, enc)
    return _measure(spec, amps), enc, amps


def vqc_forward(spec: VqcSpec, params: VqcParams, x: np.ndarray) -> np.ndarray:
    """Single-sample forward pass; returns a length-``n_measured`` vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n_qubits,):
        raise ValueError(f"expected input of shape ({spec.n_qubits},), got {x.shape}")
    return vqc_forward_batch(spec, params, x[None, :])[0]


def _check_params(spec: VqcSpec, params: VqcParams) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.depth, spec.n_qubits, 3):
        raise ValueError(
            f"expected params of shape {(spec.depth, spec.n_qubits, 3)}, got {params.shape}"
        )
    return params


def _encoding_chain(xs: np.ndarray, enc_grads: np.ndarray) -> np.ndarray:
    """Chain d(angle)/dx through arctan(x) and arctan(x^2)."""
    d1 = 1.0 / (1.0 + xs * xs)
    d2 = 2.0 * xs / (1.0 + xs**4)
    return enc_grads[..., 0] * d1 + enc_grads[..., 1] * d2


# ---------------------------------------------------------------------------
# Parameter-shift gradients (two shifted evaluations per angle).
# ---------------------------------------------------------------------------

def vqc_grad_shift_batch(
    spec: VqcSpec,
    params: VqcParams,
    xs: np.ndarray,
    upstream: np.ndarray,
    enc: np.ndarray | None = None,
    amps: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Batch gradients via +-pi/2 shifts.

    Returns (param_grads summed over the batch, per-sample input grads).
    ``upstream`` has shape (B, n_measured).  ``enc``/``amps`` are optional
    caches from a prior forward pass (``amps`` is unused here; the shift rule
    re-executes the circuit at shifted angles).
    """
    xs = np.asarray(xs, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    params = _check_params(spec, params)
    if upstream.shape != (xs.shape[0], spec.n_measured):
        raise ValueError("upstream shape does not match (batch, n_measured)")
    if enc is None:
        enc = encode(xs)
    param_grads = np.zeros_like(params)
    enc_grads = np.zeros_like(enc)

    def shifted(g_index: int, delta: float, which: str, key) -> np.ndarray:
        if which == "var":
            p = params.copy()
            p[key] += delta
            return _measure(spec, _run(spec, p, enc))
        e = enc.copy()
        e[(slice(None),) + key] += delta
        return _measure(spec, _run(spec, params, e))

    for d in range(spec.depth):
        for q in range(spec.n_qubits):
            for a in range(3):
                plus = shifted(0, +np.pi / 2, "var", (d, q, a))
                minus = shifted(0, -np.pi / 2, "var", (d, q, a))
                param_grads[d, q, a] = np.sum(upstream * (plus - minus) / 2.0)
    for q in range(spec.n_qubits):
        for col in range(2):
            plus = shifted(0, +np.pi / 2, "enc", (q, col))
            minus = shifted(0, -np.pi / 2, "enc", (q, col))
            enc_grads[:, q, col] = np.sum(upstream * (plus - minus) / 2.0, axis=1)
    return param_grads, _encoding_chain(xs, enc_grads)


def vqc_grad_shift(
    spec: VqcSpec, params: VqcParams, x: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Single-sample parameter-shift gradients: (param_grads, input_grads)."""
    x = np.asarray(x, dtype=float).reshape(spec.n_qubits)
    upstream = np.asarray(upstream, dtype=float).reshape(spec.n_measured)
    pg, ig = vqc_grad_shift_batch(spec, params, x[None, :], upstream[None, :])
    return pg, ig[0]


# ---------------------------------------------------------------------------
# Adjoint gradients (single reverse sweep).
# ---------------------------------------------------------------------------

def vqc_grad_adjoint_batch(
    spec: VqcSpec,
    params: VqcParams,
    xs: np.ndarray,
    upstream: np.ndarray,
    enc: np.ndarray | None = None,
    amps: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Same contract as :func:`vqc_grad_shift_batch`, via a reverse sweep.

    One forward simulation (skipped when the final ``amps`` are passed in),
    then for each gate in reverse: undo the gate on the state and the
    costate, reading off d<B>/d(theta) for Pauli rotations, where
    B = sum_j upstream_j Z_j.
    """
    xs = np.asarray(xs, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    params = _check_params(spec, params)
    if upstream.shape != (xs.shape[0], spec.n_measured):
        raise ValueError("upstream shape does not match (batch, n_measured)")
    n = spec.n_qubits
    if enc is None:
        enc = encode(xs)
    psi = _run(spec, params, enc) if amps is None else amps.copy()

    # Costate lambda = B|psi>, with B diagonal in the computational basis.
    signs = np.stack([z_signs(n, q) for q in range(spec.n_measured)], axis=0)
    diag = upstream @ signs  # (B, 2**n)
    lam = diag * psi

    param_grads = np.zeros_like(params)
    enc_grads = np.zeros_like(enc)
    for g in reversed(_plan(spec)):
        if g.source is not None:
            # d/dtheta exp(-i theta sigma/2) = (-i sigma/2) * gate, so with
            # psi currently *after* the gate: grad = Im(<lam| sigma |psi>).
            mu = apply_1q_batch(psi, PAULI[g.axis], g.target, n)
            gb = np.imag(np.sum(np.conj(lam) * mu, axis=1))
            tag = g.source[0]
            if tag == "var":
                _, d, q, a = g.source
                param_grads[d, q, a] += gb.sum()
            else:
                _, q, col = g.source
                enc_grads[:, q, col] += gb
        # Undo the gate on both sweeps (CNOT and H are self-inverse).
        if g.kind == "CNOT":
            psi = apply_cnot_batch(psi, g.control, g.target, n)
            lam = apply_cnot_batch(lam, g.control, g.target, n)
        elif g.kind == "H":
            psi = apply_1q_batch(psi, H_MATRIX, g.target, n)
            lam = apply_1q_batch(lam, H_MATRIX, g.target, n)
        else:
            theta = _gate_angle(g, params, enc)
            if np.ndim(theta) == 0:
                inv = _ROT_BUILDERS[g.axis](-float(theta))
            else:
                inv = _rot_mats_batch(g.axis, -theta)
            psi = apply_1q_batch(psi, inv, g.target, n)
            lam = apply_1q_batch(lam, inv, g.target, n)
    return param_grads, _encoding_chain(xs, enc_grads)


def vqc_grad_adjoint(
    spec: VqcSpec, params: VqcParams, x: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Single-sample adjoint gradients: (param_grads, input_grads)."""
    x = np.asarray(x, dtype=float).reshape(spec.n_qubits)
    upstream = np.asarray(upstream, dtype=float).reshape(spec.n_measured)
    pg, ig = vqc_grad_adjoint_batch(spec, params, x[None, :], upstream[None, :])
    return pg, ig[0]


GRAD_ENGINES = {
    "adjoint": vqc_grad_adjoint_batch,
    "shift": vqc_grad_shift_batch,
}
