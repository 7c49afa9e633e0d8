"""Minimal reverse-mode tape over whole numpy arrays.

Nodes carry batched activations of shape (B, d); parameter leaves keep their
natural shape ((d,), (out, in), or scalar ()) and accumulate gradients summed
over the batch axis.  A custom-gradient hook (:func:`quantum_node`) lets VQC
blocks participate in backpropagation through time.
"""

from __future__ import annotations

import numpy as np

from . import vqc as _vqc
from .vqc import GRAD_ENGINES, VqcSpec


class Node:
    """A value in the computation graph with its accumulated gradient."""

    __slots__ = ("value", "grad", "_parents", "_backward_fn", "_ran_backward")

    def __init__(self, value, parents=(), backward_fn=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = np.zeros_like(self.value)
        self._parents = tuple(parents)
        self._backward_fn = backward_fn
        self._ran_backward = False

    def __repr__(self):
        return f"Node(shape={self.value.shape})"


def leaf(value) -> Node:
    """Wrap an array as a graph leaf (typically a parameter)."""
    return Node(value)


def _check_same_shape(a: Node, b: Node):
    if a.value.shape != b.value.shape:
        raise ValueError(f"shape mismatch: {a.value.shape} vs {b.value.shape}")


def ew_add(a: Node, b: Node) -> Node:
    _check_same_shape(a, b)
    out = Node(a.value + b.value, (a, b))

    def _bw():
        a.grad += out.grad
        b.grad += out.grad

    out._backward_fn = _bw
    return out


def ew_mul(a: Node, b: Node) -> Node:
    _check_same_shape(a, b)
    out = Node(a.value * b.value, (a, b))

    def _bw():
        a.grad += b.value * out.grad
        b.grad += a.value * out.grad

    out._backward_fn = _bw
    return out


def sigmoid(a: Node) -> Node:
    # Stable in both tails.
    v = a.value
    s = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))), np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
    out = Node(s, (a,))

    def _bw():
        a.grad += s * (1.0 - s) * out.grad

    out._backward_fn = _bw
    return out


def tanh_op(a: Node) -> Node:
    t = np.tanh(a.value)
    out = Node(t, (a,))

    def _bw():
        a.grad += (1.0 - t * t) * out.grad

    out._backward_fn = _bw
    return out


def affine(a: Node, weight: Node, bias: Node) -> Node:
    """weight @ a + bias; ``a`` may be (in,) or batched (B, in)."""
    w, x, b = weight.value, a.value, bias.value
    if w.ndim != 2 or w.shape[0] != b.shape[0]:
        raise ValueError(f"weight {w.shape} and bias {b.shape} are inconsistent")
    if x.shape[-1] != w.shape[1]:
        raise ValueError(f"input {x.shape} does not match weight {w.shape}")
    if x.ndim == 1:
        out = Node(w @ x + b, (a, weight, bias))

        def _bw():
            a.grad += out.grad @ w
            weight.grad += np.outer(out.grad, x)
            bias.grad += out.grad

    elif x.ndim == 2:
        out = Node(x @ w.T + b, (a, weight, bias))

        def _bw():
            a.grad += out.grad @ w
            weight.grad += out.grad.T @ x
            bias.grad += out.grad.sum(axis=0)

    else:
        raise ValueError(f"affine input must be 1-D or 2-D, got {x.ndim}-D")
    out._backward_fn = _bw
    return out


def concat(nodes: list[Node]) -> Node:
    """Concatenate along the last axis."""
    values = [n.value for n in nodes]
    out = Node(np.concatenate(values, axis=-1), nodes)
    sizes = [v.shape[-1] for v in values]

    def _bw():
        start = 0
        for n, size in zip(nodes, sizes):
            n.grad += out.grad[..., start : start + size]
            start += size

    out._backward_fn = _bw
    return out


def scale_shift(a: Node, scale: Node, shift: Node) -> Node:
    """Elementwise scale * a + shift with scalar parameter nodes."""
    if scale.value.shape != () or shift.value.shape != ():
        raise ValueError("scale and shift must be scalars")
    out = Node(scale.value * a.value + shift.value, (a, scale, shift))

    def _bw():
        a.grad += scale.value * out.grad
        scale.grad += np.sum(a.value * out.grad)
        shift.grad += np.sum(out.grad)

    out._backward_fn = _bw
    return out


def quantum_node(spec: VqcSpec, params: Node, input: Node, engine: str = "adjoint") -> Node:
    """VQC block in the graph: forward expectation values, engine-backed grads."""
    if engine not in GRAD_ENGINES:
        raise ValueError(f"unknown gradient engine {engine!r}")
    x = input.value
    single = x.ndim == 1
    xs = x[None, :] if single else x
    out_val, enc, amps = _vqc.forward_with_cache(spec, params.value, xs)
    out = Node(out_val[0] if single else out_val, (params, input))

    def _bw():
        upstream = out.grad[None, :] if single else out.grad
        if not np.any(upstream):
            return
        pg, ig = GRAD_ENGINES[engine](spec, params.value, xs, upstream, enc=enc, amps=amps)
        params.grad += pg
        input.grad += ig[0] if single else ig

    out._backward_fn = _bw
    return out


def mean_squared_error(pred: Node, target: np.ndarray) -> Node:
    """Scalar mean((pred - target)^2) against a constant target."""
    target = np.asarray(target, dtype=float)
    if pred.value.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.value.shape} vs {target.shape}")
    diff = pred.value - target
    out = Node(np.mean(diff * diff), (pred,))

    def _bw():
        pred.grad += (2.0 / diff.size) * diff * out.grad

    out._backward_fn = _bw
    return out


def sum_node(a: Node) -> Node:
    out = Node(np.sum(a.value), (a,))

    def _bw():
        a.grad += np.broadcast_to(out.grad, a.value.shape)

    out._backward_fn = _bw
    return out


def _topo_order(root: Node) -> list[Node]:
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    return order


def backward(loss: Node) -> None:
    """Populate grads of all ancestors of a scalar ``loss``."""
    if loss.value.size != 1:
        raise ValueError(f"backward root must be scalar, got shape {loss.value.shape}")
    if loss._ran_backward:
        raise RuntimeError("backward already ran on this node; call zero_grads first")
    loss._ran_backward = True
    order = _topo_order(loss)
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node._backward_fn is not None:
            node._backward_fn()


def zero_grads(root: Node) -> None:
    """Reset gradients (and the backward guard) of ``root`` and its ancestors."""
    for node in _topo_order(root):
        node.grad = np.zeros_like(node.value)
        node._ran_backward = False
