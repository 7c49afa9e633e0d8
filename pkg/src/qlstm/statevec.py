"""Dense statevector simulator for small qubit registers.

Conventions used throughout the package:

* Qubit 0 is the most significant bit of the basis-state index, i.e. the
  top wire of a circuit diagram.  For ``n`` qubits, basis index
  ``i = q0 * 2**(n-1) + q1 * 2**(n-2) + ... + q_{n-1}``.
* Rotation gates follow ``R_a(theta) = exp(-i * theta * sigma_a / 2)`` for
  ``a in {x, y, z}``.
* The three-angle rotation ``ROT(alpha, beta, gamma)`` applies R_x(alpha),
  then R_y(beta), then R_z(gamma), i.e. the matrix Rz(gamma)Ry(beta)Rx(alpha).

All amplitudes are complex128.  Batched helpers (leading batch axis) are
provided for the hot training path; the public single-state API wraps them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import cos, sin, sqrt

import numpy as np

MAX_QUBITS = 12
MAX_DENSE_QUBITS = 8

_SQRT2_INV = 1.0 / sqrt(2.0)

H_MATRIX = np.array([[_SQRT2_INV, _SQRT2_INV], [_SQRT2_INV, -_SQRT2_INV]], dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}


def rx_matrix(theta: float) -> np.ndarray:
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def rot_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """General rotation: R_x(alpha) first, then R_y(beta), then R_z(gamma)."""
    return rz_matrix(gamma) @ ry_matrix(beta) @ rx_matrix(alpha)


_MATRIX_BUILDERS = {"RX": rx_matrix, "RY": ry_matrix, "RZ": rz_matrix}
_N_ANGLES = {"H": 0, "CNOT": 0, "RX": 1, "RY": 1, "RZ": 1, "ROT": 3}


@dataclass(frozen=True)
class GateOp:
    """A single gate: H, RX, RY, RZ, ROT (three angles) or CNOT."""

    kind: str
    target: int
    control: int | None = None
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _N_ANGLES:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.angles) != _N_ANGLES[self.kind]:
            raise ValueError(
                f"{self.kind} takes {_N_ANGLES[self.kind]} angles, got {len(self.angles)}"
            )
        if (self.control is not None) != (self.kind == "CNOT"):
            raise ValueError("control qubit is required for CNOT and only for CNOT")
        if self.control is not None and self.control == self.target:
            raise ValueError("CNOT control and target must differ")

    def matrix(self) -> np.ndarray:
        """2x2 matrix for single-qubit kinds; CNOT has no single-qubit matrix."""
        if self.kind == "H":
            return H_MATRIX
        if self.kind == "ROT":
            return rot_matrix(*self.angles)
        if self.kind in _MATRIX_BUILDERS:
            return _MATRIX_BUILDERS[self.kind](self.angles[0])
        raise ValueError(f"{self.kind} is not a single-qubit gate")


@dataclass
class Statevector:
    """2**n complex amplitudes of an n-qubit register."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def zero_state(n_qubits: int) -> Statevector:
    """|0...0> on ``n_qubits`` wires."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return Statevector(n_qubits, amps)


# ---------------------------------------------------------------------------
# Batched kernels.  ``amps`` has shape (..., 2**n); the basis axis is last.
# ---------------------------------------------------------------------------

def apply_1q_batch(amps: np.ndarray, mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Apply a 2x2 matrix to ``qubit`` of a (batch of) statevector(s).

    ``mat`` is either (2, 2) shared across the batch or (B, 2, 2) per-sample.
    """
    lead = amps.shape[:-1]
    left = 1 << qubit
    right = 1 << (n - 1 - qubit)
    # (B, left, right, 2) puts the target bit last; matmul contracts it.
    s = amps.reshape(-1, left, 2, right).swapaxes(-1, -2)
    if mat.ndim == 2:
        out = s @ mat.T
    else:
        out = s @ mat.transpose(0, 2, 1)[:, None]
    return out.swapaxes(-1, -2).reshape(*lead, 2**n)


def apply_cnot_batch(amps: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    """Apply CNOT(control -> target) over the last axis."""
    lead = amps.shape[:-1]
    s = amps.reshape(-1, *(2,) * n)
    out = s.copy()
    i10 = [slice(None)] * (n + 1)
    i11 = [slice(None)] * (n + 1)
    i10[1 + control], i10[1 + target] = 1, 0
    i11[1 + control], i11[1 + target] = 1, 1
    out[tuple(i10)] = s[tuple(i11)]
    out[tuple(i11)] = s[tuple(i10)]
    return out.reshape(*lead, 2**n)


def z_signs(n: int, qubit: int) -> np.ndarray:
    """(+1/-1) diagonal of Z on ``qubit`` over the 2**n basis states."""
    idx = np.arange(2**n)
    bit = (idx >> (n - 1 - qubit)) & 1
    return 1.0 - 2.0 * bit


def expectation_z_batch(amps: np.ndarray, qubit: int, n: int) -> np.ndarray:
    probs = np.abs(amps) ** 2
    return probs @ z_signs(n, qubit)


# ---------------------------------------------------------------------------
# Public single-state operations.
# ---------------------------------------------------------------------------

def _check_index(q: int, n: int, name: str = "qubit"):
    if not 0 <= q < n:
        raise IndexError(f"{name} index {q} out of range for {n} qubits")


def apply_gate(state: Statevector, gate: GateOp) -> Statevector:
    """Return the state after applying ``gate``; the input is not modified."""
    n = state.n_qubits
    _check_index(gate.target, n, "target")
    if gate.kind == "CNOT":
        _check_index(gate.control, n, "control")
        amps = apply_cnot_batch(state.amplitudes, gate.control, gate.target, n)
    else:
        amps = apply_1q_batch(state.amplitudes, gate.matrix(), gate.target, n)
    return Statevector(n, amps)


def expectation_z(state: Statevector, qubit: int) -> float:
    """<Z> of ``qubit``: sum of |c_i|^2 with sign from the measured bit."""
    _check_index(qubit, state.n_qubits)
    return float(expectation_z_batch(state.amplitudes, qubit, state.n_qubits))


def _embed_1q(mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    out = np.array([[1.0]], dtype=complex)
    for q in range(n):
        out = np.kron(out, mat if q == qubit else np.eye(2, dtype=complex))
    return out


def dense_unitary(circuit: list[GateOp], n_qubits: int) -> np.ndarray:
    """Full 2**n x 2**n unitary of ``circuit`` via Kronecker embedding.

    Test oracle only: memory is exponential, so ``n_qubits`` is capped.
    """
    if not 1 <= n_qubits <= MAX_DENSE_QUBITS:
        raise ValueError(f"dense_unitary supports 1..{MAX_DENSE_QUBITS} qubits, got {n_qubits}")
    dim = 2**n_qubits
    total = np.eye(dim, dtype=complex)
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    for gate in circuit:
        _check_index(gate.target, n_qubits, "target")
        if gate.kind == "CNOT":
            _check_index(gate.control, n_qubits, "control")
            u = _embed_1q(p0, gate.control, n_qubits) + _embed_1q(
                p1, gate.control, n_qubits
            ) @ _embed_1q(PAULI_X, gate.target, n_qubits)
        else:
            u = _embed_1q(gate.matrix(), gate.target, n_qubits)
        total = u @ total
    return total
