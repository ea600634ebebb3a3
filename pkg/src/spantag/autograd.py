"""Minimal reverse-mode automatic differentiation over numpy arrays.

Every value in a forward computation is a Node holding a concrete numpy
array; nodes form a DAG whose leaves are parameters (created through
ParamStore, with persistent gradient buffers) and constants. backward()
walks the DAG once in reverse topological order and accumulates
vector-Jacobian products into the parameter buffers.

Only the operations the model needs exist here. Branching operations
(relu, clip) record their branch pattern in ``kink_mask`` so the
finite-difference checker can recognize evaluations that straddle a
non-differentiable point.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class AutogradError(RuntimeError):
    """Misuse of the tape: bad shapes, non-scalar backward, and the like."""


class Node:
    __slots__ = ("value", "parents", "vjp", "grad", "op", "kink_mask")

    def __init__(
        self,
        value: np.ndarray,
        parents: tuple["Node", ...] = (),
        vjp: Callable[[np.ndarray], tuple] | None = None,
        op: str = "",
        kink_mask: np.ndarray | None = None,
    ):
        self.value = value
        self.parents = parents
        self.vjp = vjp
        self.grad: np.ndarray | None = None  # persistent buffer on parameter leaves only
        self.op = op
        self.kink_mask = kink_mask

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def dtype(self) -> np.dtype:
        return self.value.dtype

    def __add__(self, other):
        return add(self, _lift(other, self))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _lift(other, self))

    def __rsub__(self, other):
        return sub(_lift(other, self), self)

    def __mul__(self, other):
        return mul(self, _lift(other, self))

    __rmul__ = __mul__

    def __neg__(self):
        return Node(-self.value, (self,), lambda g: (-g,), op="neg")

    def __truediv__(self, other):
        if isinstance(other, Node):
            raise AutogradError("node/node division is not supported; multiply by a reciprocal")
        return self * (1.0 / float(other))

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Node(op={self.op or 'leaf'!r}, shape={self.value.shape})"


def const(x, dtype=None) -> Node:
    return Node(np.asarray(x, dtype=dtype), op="const")


def _lift(x, like: Node) -> Node:
    if isinstance(x, Node):
        return x
    return const(x, dtype=like.value.dtype)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, dim in enumerate(shape) if dim == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a: Node, b: Node) -> Node:
    value = a.value + b.value
    return Node(
        value,
        (a, b),
        lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)),
        op="add",
    )


def sub(a: Node, b: Node) -> Node:
    value = a.value - b.value
    return Node(
        value,
        (a, b),
        lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape)),
        op="sub",
    )


def mul(a: Node, b: Node) -> Node:
    value = a.value * b.value
    return Node(
        value,
        (a, b),
        lambda g: (_unbroadcast(g * b.value, a.value.shape), _unbroadcast(g * a.value, b.value.shape)),
        op="mul",
    )


def matmul(a: Node, b: Node) -> Node:
    av, bv = a.value, b.value
    if av.ndim == 0 or bv.ndim == 0 or av.ndim > 2 or bv.ndim > 2:
        raise AutogradError(f"matmul supports 1-D/2-D operands, got {av.shape} @ {bv.shape}")
    if av.shape[-1] != bv.shape[0]:
        raise AutogradError(f"matmul shape mismatch: {av.shape} @ {bv.shape}")
    value = av @ bv

    def vjp(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 2 and bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        if av.ndim == 1 and bv.ndim == 2:
            return bv @ g, np.outer(av, g)
        return g * bv, g * av  # 1-D dot, scalar g

    return Node(value, (a, b), vjp, op="matmul")


def transpose(a: Node) -> Node:
    return Node(a.value.T, (a,), lambda g: (g.T,), op="transpose")


def sigmoid(a: Node) -> Node:
    v = a.value
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return Node(out, (a,), lambda g: (g * out * (1.0 - out),), op="sigmoid")


def tanh(a: Node) -> Node:
    out = np.tanh(a.value)
    return Node(out, (a,), lambda g: (g * (1.0 - out * out),), op="tanh")


def relu(a: Node) -> Node:
    mask = a.value > 0
    value = np.where(mask, a.value, 0.0).astype(a.value.dtype, copy=False)
    return Node(value, (a,), lambda g: (g * mask,), op="relu", kink_mask=mask)


def exp(a: Node) -> Node:
    out = np.exp(a.value)
    return Node(out, (a,), lambda g: (g * out,), op="exp")


def log(a: Node) -> Node:
    v = a.value
    return Node(np.log(v), (a,), lambda g: (g / v,), op="log")


def clip(a: Node, lo: float, hi: float) -> Node:
    inside = (a.value > lo) & (a.value < hi)
    value = np.clip(a.value, lo, hi)
    return Node(value, (a,), lambda g: (g * inside,), op="clip", kink_mask=inside)


def sum_all(a: Node) -> Node:
    shape = a.value.shape
    return Node(
        np.asarray(a.value.sum(), dtype=a.value.dtype),
        (a,),
        lambda g: (np.broadcast_to(g, shape),),
        op="sum",
    )


def sum_axis(a: Node, axis: int) -> Node:
    shape = a.value.shape
    return Node(
        a.value.sum(axis=axis),
        (a,),
        lambda g: (np.broadcast_to(np.expand_dims(g, axis), shape),),
        op="sum_axis",
    )


def mean_all(a: Node) -> Node:
    return sum_all(a) * (1.0 / a.value.size)


def concat(nodes: Sequence[Node], axis: int = 0) -> Node:
    values = [n.value for n in nodes]
    sizes = [v.shape[axis] for v in values]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(
            np.take(g, np.arange(offsets[i], offsets[i + 1]), axis=axis) for i in range(len(values))
        )

    return Node(np.concatenate(values, axis=axis), tuple(nodes), vjp, op="concat")


def stack_rows(nodes: Sequence[Node]) -> Node:
    """Stack equal-length 1-D nodes into a 2-D node, one per row."""
    value = np.stack([n.value for n in nodes], axis=0)
    return Node(value, tuple(nodes), lambda g: tuple(g[i] for i in range(len(nodes))), op="stack")


def row(a: Node, i: int) -> Node:
    shape = a.value.shape

    def vjp(g):
        z = np.zeros(shape, dtype=g.dtype)
        z[i] = g
        return (z,)

    return Node(a.value[i], (a,), vjp, op="row")


def take_rows(a: Node, indices) -> Node:
    idx = np.asarray(indices, dtype=np.intp)
    shape = a.value.shape

    def vjp(g):
        z = np.zeros(shape, dtype=g.dtype)
        np.add.at(z, idx, g)
        return (z,)

    return Node(a.value[idx], (a,), vjp, op="take_rows")


def gather_rc(a: Node, rows, cols) -> Node:
    """Pick a[rows[i], cols[i]] into a vector."""
    ri = np.asarray(rows, dtype=np.intp)
    ci = np.asarray(cols, dtype=np.intp)
    shape = a.value.shape

    def vjp(g):
        z = np.zeros(shape, dtype=g.dtype)
        np.add.at(z, (ri, ci), g)
        return (z,)

    return Node(a.value[ri, ci], (a,), vjp, op="gather_rc")


def slice1d(a: Node, start: int, stop: int) -> Node:
    size = a.value.shape[0]

    def vjp(g):
        z = np.zeros(size, dtype=g.dtype)
        z[start:stop] = g
        return (z,)

    return Node(a.value[start:stop], (a,), vjp, op="slice1d")


def pad_ones(a: Node) -> Node:
    """Append a constant 1 column (2-D input) or element (1-D input)."""
    v = a.value
    if v.ndim == 1:
        value = np.concatenate([v, np.ones(1, dtype=v.dtype)])
        return Node(value, (a,), lambda g: (g[:-1],), op="pad_ones")
    if v.ndim == 2:
        value = np.concatenate([v, np.ones((v.shape[0], 1), dtype=v.dtype)], axis=1)
        return Node(value, (a,), lambda g: (g[:, :-1],), op="pad_ones")
    raise AutogradError(f"pad_ones expects 1-D or 2-D input, got shape {v.shape}")


def pairwise_bilinear(u: Node, w: Node, v: Node) -> Node:
    """scores[s, t] = u[s] @ w[t] @ v[s] for row-aligned u, v.

    u: (m, d1), w: (T, d1, d2), v: (m, d2) -> (m, T). Each output row
    depends only on the matching input rows, so scores are independent of
    which other rows appear in the batch.
    """
    uv, wv, vv = u.value, w.value, v.value
    if uv.shape[0] != vv.shape[0] or wv.shape[1] != uv.shape[1] or wv.shape[2] != vv.shape[1]:
        raise AutogradError(
            f"pairwise_bilinear shape mismatch: u{uv.shape} w{wv.shape} v{vv.shape}"
        )
    value = np.einsum("sd,tde,se->st", uv, wv, vv, optimize=True)

    def vjp(g):
        du = np.einsum("st,tde,se->sd", g, wv, vv, optimize=True)
        dw = np.einsum("st,sd,se->tde", g, uv, vv, optimize=True)
        dv = np.einsum("st,sd,tde->se", g, uv, wv, optimize=True)
        return du, dw, dv

    return Node(value, (u, w, v), vjp, op="pairwise_bilinear")


def logsumexp_rows(a: Node) -> Node:
    """Row-wise log-sum-exp of a 2-D node, stabilized by the detached row max."""
    shift = a.value.max(axis=1, keepdims=True)
    exps = exp(add(a, const(-shift)))
    return add(log(sum_axis(exps, axis=1)), const(shift[:, 0]))


def dropout(a: Node, rate: float, rng: np.random.Generator) -> Node:
    """Inverted dropout; scaling happens at train time so eval is identity."""
    if rate <= 0.0:
        return a
    if rate >= 1.0:
        return mul(a, const(np.zeros(a.value.shape, dtype=a.value.dtype)))
    keep = rng.random(a.value.shape) >= rate
    mask = keep.astype(a.value.dtype) / np.asarray(1.0 - rate, dtype=a.value.dtype)
    return mul(a, const(mask))


def topo_order(root: Node) -> list[Node]:
    """Parents-before-children ordering of the DAG under ``root``."""
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: Node) -> None:
    """Accumulate d(root)/d(param) into every parameter leaf's grad buffer.

    ``root`` must be scalar. Gradients add into existing buffers; call
    ParamStore.zero_grad() between unrelated backward passes.
    """
    if root.value.shape != ():
        raise AutogradError(f"backward requires a scalar node, got shape {root.value.shape}")
    order = topo_order(root)
    grads: dict[int, np.ndarray] = {id(root): np.ones((), dtype=root.value.dtype)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.grad is not None:
            node.grad += g
        if node.vjp is None:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            if pg is None:
                continue
            acc = grads.get(id(parent))
            grads[id(parent)] = pg if acc is None else acc + pg


def branch_signature(root: Node) -> list[bytes]:
    """Branch patterns of every kinked op under ``root``, in graph order."""
    return [n.kink_mask.tobytes() for n in topo_order(root) if n.kink_mask is not None]


class ParamStore:
    """Named parameter tensors, each with one same-shaped gradient buffer."""

    def __init__(self, seed: int = 0, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self._params: dict[str, Node] = {}

    def add(self, name: str, shape: tuple[int, ...], init) -> Node:
        """Create a parameter. ``init`` is an ndarray, a scalar fill value,
        or a callable (rng, shape, dtype) -> ndarray."""
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        if callable(init):
            value = np.asarray(init(self.rng, shape, self.dtype), dtype=self.dtype)
        elif np.isscalar(init):
            value = np.full(shape, init, dtype=self.dtype)
        else:
            value = np.asarray(init, dtype=self.dtype).copy()
        if value.shape != tuple(shape):
            raise ValueError(f"init for {name!r} produced shape {value.shape}, expected {shape}")
        node = Node(value, op="param")
        node.grad = np.zeros(shape, dtype=self.dtype)
        self._params[name] = node
        return node

    def __getitem__(self, name: str) -> Node:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for node in self._params.values():
            node.grad[...] = 0.0

    @property
    def n_params(self) -> int:
        return sum(node.value.size for node in self._params.values())

    def values(self) -> dict[str, np.ndarray]:
        """Snapshot of all parameter arrays (copies)."""
        return {name: node.value.copy() for name, node in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(values)
        if missing:
            raise ValueError(f"missing parameters: {sorted(missing)}")
        for name, node in self._params.items():
            arr = np.asarray(values[name], dtype=self.dtype)
            if arr.shape != node.value.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: {arr.shape} vs {node.value.shape}"
                )
            node.value[...] = arr
