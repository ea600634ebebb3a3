"""Dense layers: single-layer MLP and the BiLSTM recurrence."""

from __future__ import annotations

import math

import numpy as np

from .autograd import (
    AutogradError,
    Node,
    add,
    concat,
    dropout,
    matmul,
    mul,
    relu,
    sigmoid,
    slice1d,
    tanh,
    transpose,
)


def glorot_uniform(rng: np.random.Generator, shape, dtype) -> np.ndarray:
    fan_out, fan_in = shape if len(shape) == 2 else (shape[0], shape[0])
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def uniform_init(scale: float):
    def init(rng: np.random.Generator, shape, dtype) -> np.ndarray:
        return rng.uniform(-scale, scale, size=shape).astype(dtype)

    return init


def zeros_init(rng: np.random.Generator, shape, dtype) -> np.ndarray:
    return np.zeros(shape, dtype=dtype)


def mlp_forward(
    x: Node,
    weight: Node,
    bias: Node,
    dropout_rate: float = 0.0,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> Node:
    """One affine map + ReLU, with inverted dropout in train mode only.

    ``x`` is a single vector (in,) or a row-stacked batch (m, in);
    ``weight`` is (out, in).
    """
    if weight.value.ndim != 2 or x.value.shape[-1] != weight.value.shape[1]:
        raise AutogradError(
            f"mlp_forward shape mismatch: x {x.value.shape} vs weight {weight.value.shape}"
        )
    h = relu(add(matmul(x, transpose(weight)), bias))
    if train_mode and dropout_rate > 0.0:
        if rng is None:
            raise AutogradError("train-mode dropout requires an RNG")
        h = dropout(h, dropout_rate, rng)
    return h


def lstm_cell(
    x_t: Node, h_prev: Node, c_prev: Node, weight: Node, bias: Node, hidden: int
) -> tuple[Node, Node]:
    """Standard LSTM step. ``weight`` is (4*hidden, input+hidden) with gate
    rows ordered input, forget, candidate, output; ``bias`` is (4*hidden,)."""
    z = add(matmul(weight, concat([x_t, h_prev])), bias)
    i = sigmoid(slice1d(z, 0, hidden))
    f = sigmoid(slice1d(z, hidden, 2 * hidden))
    g = tanh(slice1d(z, 2 * hidden, 3 * hidden))
    o = sigmoid(slice1d(z, 3 * hidden, 4 * hidden))
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


def lstm_run(
    inputs: list[Node], weight: Node, bias: Node, hidden: int, reverse: bool = False
) -> list[Node]:
    """Run one LSTM direction over per-timestep input vectors; returns the
    hidden state at every timestep, indexed like ``inputs``."""
    dtype = inputs[0].value.dtype
    zero = Node(np.zeros(hidden, dtype=dtype), op="const")
    h, c = zero, zero
    states: list[Node] = [None] * len(inputs)  # type: ignore[list-item]
    steps = range(len(inputs) - 1, -1, -1) if reverse else range(len(inputs))
    for t in steps:
        h, c = lstm_cell(inputs[t], h, c, weight, bias, hidden)
        states[t] = h
    return states


def bilstm_forward(
    inputs: list[Node],
    fw_weight: Node,
    fw_bias: Node,
    bw_weight: Node,
    bw_bias: Node,
    hidden: int,
) -> tuple[list[Node], list[Node]]:
    """Single-layer BiLSTM. Returns (forward states f_1..f_n, backward
    states b_1..b_n), each a list of (hidden,) nodes indexed by character."""
    if not inputs:
        raise AutogradError("bilstm_forward requires a non-empty sequence")
    forward = lstm_run(inputs, fw_weight, fw_bias, hidden)
    backward_states = lstm_run(inputs, bw_weight, bw_bias, hidden, reverse=True)
    return forward, backward_states
