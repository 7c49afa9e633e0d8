"""QLSTM cell (six VQC blocks) and a parameter-matched classical LSTM.

QLSTM dimensions are fixed by arithmetic: the cell input v_t = [h_{t-1}, x_t]
must fill the 4-qubit encoding layer with a scalar x_t, so hidden_dim = 3 and
cell_dim = 4.  Blocks 1-4 (forget / input / update / output gates) measure all
4 wires, block 5 measures 3 (the hidden state), block 6 measures 1 and feeds
a 2-parameter affine head.  Total trainable scalars: 6*2*4*3 + 2 = 146.

The classical baseline is a standard LSTM with hidden size 5, two bias vectors
per gate and a 5 -> 1 output head: 4*(5*6 + 5 + 5) + 5 + 1 = 166 scalars.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .vqc import VqcSpec, vqc_forward


@dataclass(frozen=True)
class QlstmDims:
    input_dim: int = 1
    hidden_dim: int = 3
    cell_dim: int = 4
    n_qubits: int = 4
    depth: int = 2

    def __post_init__(self):
        if self.input_dim + self.hidden_dim != self.n_qubits:
            raise ValueError("input_dim + hidden_dim must equal n_qubits")
        if self.cell_dim != self.n_qubits:
            raise ValueError("cell_dim must equal n_qubits")


DIMS = QlstmDims()

# Blocks 1-4 are the gates, block 5 the hidden head, block 6 the output head.
GATE_SPEC = VqcSpec(DIMS.n_qubits, DIMS.depth, DIMS.cell_dim)
HIDDEN_SPEC = VqcSpec(DIMS.n_qubits, DIMS.depth, DIMS.hidden_dim)
OUTPUT_SPEC = VqcSpec(DIMS.n_qubits, DIMS.depth, 1)
N_VQC = 6

LSTM_HIDDEN = 5
LSTM_INPUT = 1


@dataclass
class QlstmParams:
    """Six VQC angle blocks, shape (6, depth, 4, 3), plus the affine head."""

    vqc: np.ndarray = field(repr=False)
    head_scale: float = 1.0
    head_shift: float = 0.0

    def __post_init__(self):
        self.vqc = np.asarray(self.vqc, dtype=float)
        expected = (N_VQC, DIMS.depth, DIMS.n_qubits, 3)
        if self.vqc.shape != expected:
            raise ValueError(f"expected vqc angles of shape {expected}, got {self.vqc.shape}")

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.vqc.ravel(), [self.head_scale, self.head_shift]])

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "QlstmParams":
        vec = np.asarray(vec, dtype=float)
        n = N_VQC * DIMS.depth * DIMS.n_qubits * 3
        if vec.shape != (n + 2,):
            raise ValueError(f"expected vector of length {n + 2}, got {vec.shape}")
        return cls(
            vqc=vec[:n].reshape(N_VQC, DIMS.depth, DIMS.n_qubits, 3),
            head_scale=float(vec[n]),
            head_shift=float(vec[n + 1]),
        )


@dataclass
class LstmParams:
    """Gate weights in order (f, i, C, o), dual biases, and the output head."""

    w: np.ndarray = field(repr=False)      # (4, hidden, hidden + input)
    b_ih: np.ndarray = field(repr=False)   # (4, hidden)
    b_hh: np.ndarray = field(repr=False)   # (4, hidden)
    head_w: np.ndarray = field(repr=False)  # (hidden,)
    head_b: float = 0.0

    def __post_init__(self):
        h, i = LSTM_HIDDEN, LSTM_INPUT
        self.w = np.asarray(self.w, dtype=float)
        self.b_ih = np.asarray(self.b_ih, dtype=float)
        self.b_hh = np.asarray(self.b_hh, dtype=float)
        self.head_w = np.asarray(self.head_w, dtype=float)
        if self.w.shape != (4, h, h + i) or self.b_ih.shape != (4, h) or self.b_hh.shape != (4, h):
            raise ValueError("LSTM parameter shapes are inconsistent")
        if self.head_w.shape != (h,):
            raise ValueError(f"head weights must have shape ({h},)")

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.w.ravel(), self.b_ih.ravel(), self.b_hh.ravel(), self.head_w, [self.head_b]]
        )

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "LstmParams":
        h, i = LSTM_HIDDEN, LSTM_INPUT
        sizes = [4 * h * (h + i), 4 * h, 4 * h, h, 1]
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (sum(sizes),):
            raise ValueError(f"expected vector of length {sum(sizes)}, got {vec.shape}")
        parts = np.split(vec, np.cumsum(sizes)[:-1])
        return cls(
            w=parts[0].reshape(4, h, h + i),
            b_ih=parts[1].reshape(4, h),
            b_hh=parts[2].reshape(4, h),
            head_w=parts[3],
            head_b=float(parts[4][0]),
        )


@dataclass
class CellState:
    """Recurrent memory: hidden vector h and cell vector c (zeros at t=0)."""

    h: np.ndarray
    c: np.ndarray


def init_qlstm(seed: int) -> QlstmParams:
    """Angles uniform on (-pi, pi); identity head (scale 1, shift 0)."""
    rng = np.random.default_rng(seed)
    angles = rng.uniform(-np.pi, np.pi, size=(N_VQC, DIMS.depth, DIMS.n_qubits, 3))
    return QlstmParams(vqc=angles)


def init_lstm(seed: int) -> LstmParams:
    """All weights and biases uniform on (-1/sqrt(hidden), 1/sqrt(hidden))."""
    rng = np.random.default_rng(seed)
    h, i = LSTM_HIDDEN, LSTM_INPUT
    k = 1.0 / np.sqrt(h)
    u = lambda *shape: rng.uniform(-k, k, size=shape)
    return LstmParams(
        w=u(4, h, h + i),
        b_ih=u(4, h),
        b_hh=u(4, h),
        head_w=u(h),
        head_b=float(u()),
    )


def param_count(model: QlstmParams | LstmParams) -> int:
    """Exact number of trainable scalars."""
    return model.to_vector().size


def zero_state(model: QlstmParams | LstmParams) -> CellState:
    if isinstance(model, QlstmParams):
        return CellState(h=np.zeros(DIMS.hidden_dim), c=np.zeros(DIMS.cell_dim))
    return CellState(h=np.zeros(LSTM_HIDDEN), c=np.zeros(LSTM_HIDDEN))


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60, 60)))


def qlstm_cell(params: QlstmParams, state: CellState, x_t: float) -> tuple[CellState, float]:
    """One recurrence step of the quantum cell (plain numpy, no tape)."""
    h, c = np.asarray(state.h, float), np.asarray(state.c, float)
    if h.shape != (DIMS.hidden_dim,) or c.shape != (DIMS.cell_dim,):
        raise ValueError("state dimensions do not match the QLSTM cell")
    v = np.concatenate([h, [float(x_t)]])
    f = _sigmoid(vqc_forward(GATE_SPEC, params.vqc[0], v))
    i = _sigmoid(vqc_forward(GATE_SPEC, params.vqc[1], v))
    c_tilde = np.tanh(vqc_forward(GATE_SPEC, params.vqc[2], v))
    c_new = f * c + i * c_tilde
    o = _sigmoid(vqc_forward(GATE_SPEC, params.vqc[3], v))
    gated = o * np.tanh(c_new)
    h_new = vqc_forward(HIDDEN_SPEC, params.vqc[4], gated)
    y = params.head_scale * vqc_forward(OUTPUT_SPEC, params.vqc[5], gated)[0] + params.head_shift
    return CellState(h=h_new, c=c_new), float(y)


def lstm_cell(params: LstmParams, state: CellState, x_t: float) -> tuple[CellState, float]:
    """One recurrence step of the classical cell (plain numpy, no tape)."""
    h, c = np.asarray(state.h, float), np.asarray(state.c, float)
    if h.shape != (LSTM_HIDDEN,) or c.shape != (LSTM_HIDDEN,):
        raise ValueError("state dimensions do not match the LSTM cell")
    v = np.concatenate([h, [float(x_t)]])
    pre = params.w @ v + params.b_ih + params.b_hh  # (4, hidden)
    f, i, o = _sigmoid(pre[0]), _sigmoid(pre[1]), _sigmoid(pre[3])
    c_tilde = np.tanh(pre[2])
    c_new = f * c + i * c_tilde
    h_new = o * np.tanh(c_new)
    y = float(params.head_w @ h_new + params.head_b)
    return CellState(h=h_new, c=c_new), y


def forward_window(model: QlstmParams | LstmParams, window: np.ndarray) -> float:
    """Run the cell over a window of inputs; return the final-step output."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 1 or window.size < 1:
        raise ValueError("window must be a non-empty 1-D vector")
    cell = qlstm_cell if isinstance(model, QlstmParams) else lstm_cell
    state = zero_state(model)
    y = 0.0
    for x_t in window:
        state, y = cell(model, state, x_t)
    return y


# ---------------------------------------------------------------------------
# Tape-backed forward passes for training (batched over samples).
# ---------------------------------------------------------------------------

@dataclass
class QlstmNodes:
    vqc: list  # six Nodes, each (depth, 4, 3)
    head_scale: ad.Node
    head_shift: ad.Node


@dataclass
class LstmNodes:
    w: list      # four Nodes (hidden, hidden + input)
    b: list      # four Nodes (hidden,), dual biases pre-summed is NOT done:
    b2: list     # second bias vector per gate
    head_w: ad.Node
    head_b: ad.Node


def wrap_params(model: QlstmParams | LstmParams):
    """Wrap model parameters as fresh graph leaves."""
    if isinstance(model, QlstmParams):
        return QlstmNodes(
            vqc=[ad.leaf(model.vqc[k]) for k in range(N_VQC)],
            head_scale=ad.leaf(np.asarray(model.head_scale)),
            head_shift=ad.leaf(np.asarray(model.head_shift)),
        )
    return LstmNodes(
        w=[ad.leaf(model.w[k]) for k in range(4)],
        b=[ad.leaf(model.b_ih[k]) for k in range(4)],
        b2=[ad.leaf(model.b_hh[k]) for k in range(4)],
        head_w=ad.leaf(model.head_w[None, :]),
        head_b=ad.leaf(np.asarray([model.head_b])),
    )


def collect_grads(nodes) -> np.ndarray:
    """Flatten accumulated parameter gradients in to_vector() order."""
    if isinstance(nodes, QlstmNodes):
        parts = [n.grad.ravel() for n in nodes.vqc]
        parts.append(np.array([float(nodes.head_scale.grad), float(nodes.head_shift.grad)]))
        return np.concatenate(parts)
    parts = [n.grad.ravel() for n in nodes.w]
    parts += [n.grad.ravel() for n in nodes.b]
    parts += [n.grad.ravel() for n in nodes.b2]
    parts.append(nodes.head_w.grad.ravel())
    parts.append(nodes.head_b.grad.ravel())
    return np.concatenate(parts)


def qlstm_window_node(nodes: QlstmNodes, windows: np.ndarray, engine: str = "adjoint") -> ad.Node:
    """Differentiable forward over (B, N) windows; returns predictions (B, 1)."""
    windows = np.asarray(windows, dtype=float)
    batch, n_steps = windows.shape
    h = ad.leaf(np.zeros((batch, DIMS.hidden_dim)))
    c = ad.leaf(np.zeros((batch, DIMS.cell_dim)))
    y = None
    for t in range(n_steps):
        x = ad.leaf(windows[:, t : t + 1])
        v = ad.concat([h, x])
        f = ad.sigmoid(ad.quantum_node(GATE_SPEC, nodes.vqc[0], v, engine))
        i = ad.sigmoid(ad.quantum_node(GATE_SPEC, nodes.vqc[1], v, engine))
        c_tilde = ad.tanh_op(ad.quantum_node(GATE_SPEC, nodes.vqc[2], v, engine))
        c = ad.ew_add(ad.ew_mul(f, c), ad.ew_mul(i, c_tilde))
        o = ad.sigmoid(ad.quantum_node(GATE_SPEC, nodes.vqc[3], v, engine))
        gated = ad.ew_mul(o, ad.tanh_op(c))
        h = ad.quantum_node(HIDDEN_SPEC, nodes.vqc[4], gated, engine)
        y = ad.quantum_node(OUTPUT_SPEC, nodes.vqc[5], gated, engine)
    return ad.scale_shift(y, nodes.head_scale, nodes.head_shift)


def lstm_window_node(nodes: LstmNodes, windows: np.ndarray) -> ad.Node:
    """Differentiable classical forward over (B, N) windows; output (B, 1)."""
    windows = np.asarray(windows, dtype=float)
    batch, n_steps = windows.shape
    h = ad.leaf(np.zeros((batch, LSTM_HIDDEN)))
    c = ad.leaf(np.zeros((batch, LSTM_HIDDEN)))
    for t in range(n_steps):
        x = ad.leaf(windows[:, t : t + 1])
        v = ad.concat([h, x])
        pre = [
            ad.affine(v, nodes.w[k], ad.ew_add(nodes.b[k], nodes.b2[k]))
            for k in range(4)
        ]
        f, i, o = ad.sigmoid(pre[0]), ad.sigmoid(pre[1]), ad.sigmoid(pre[3])
        c_tilde = ad.tanh_op(pre[2])
        c = ad.ew_add(ad.ew_mul(f, c), ad.ew_mul(i, c_tilde))
        h = ad.ew_mul(o, ad.tanh_op(c))
    return ad.affine(h, nodes.head_w, nodes.head_b)


def window_node(nodes, windows: np.ndarray, engine: str = "adjoint") -> ad.Node:
    if isinstance(nodes, QlstmNodes):
        return qlstm_window_node(nodes, windows, engine)
    return lstm_window_node(nodes, windows)


def predict_batch(model: QlstmParams | LstmParams, windows: np.ndarray,
                  engine: str = "adjoint") -> np.ndarray:
    """Vectorized inference over (B, N) windows; returns (B,) predictions."""
    nodes = wrap_params(model)
    return window_node(nodes, np.asarray(windows, float), engine).value[:, 0]
