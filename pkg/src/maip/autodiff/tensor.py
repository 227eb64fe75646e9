"""Reverse-mode differentiation over dense float64 arrays."""

from __future__ import annotations

import numpy as np


class GraphError(RuntimeError):
    """Raised when a computation graph is used after it has been consumed."""


class Tensor:
    """A dense array that records how it was produced.

    Leaves created with ``requires_grad=True`` are the learnable values.
    Intermediate tensors carry a backward closure that receives the
    gradient of the output and pushes contributions into the parents.
    """

    __slots__ = ("data", "grad", "requires_grad", "parents", "op", "name",
                 "_backward", "_consumed")

    def __init__(self, data, requires_grad=False, parents=(), backward=None,
                 op="leaf", name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.parents = tuple(parents)
        self.op = op
        self.name = name
        self._backward = backward
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(op={self.op}, shape={self.shape}{label})"

    def numpy(self):
        return self.data

    def zero_grad(self):
        self.grad = None

    def item(self):
        return float(self.data)

    def backward(self):
        """Populate ``.grad`` on every learnable ancestor of this scalar."""
        if self.data.size != 1:
            raise ValueError(f"backward needs a scalar output, got shape {self.shape}")
        if self._consumed:
            raise GraphError("backward already ran on this graph; rebuild it first")
        order = _topological_order(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
        for node in order:
            if node.parents:
                # drop intermediate buffers so a stale graph cannot be replayed
                node._backward = None
                node.grad = None
        self._consumed = True

    # operator sugar; the functions live in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def accumulate(node, g):
    if not node.requires_grad:
        return
    if node.grad is None:
        node.grad = g
    else:
        # never in place: g may be shared with a sibling parent
        node.grad = node.grad + g


def make_node(data, parents, backward, op):
    requires = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=requires, parents=parents,
                  backward=backward if requires else None, op=op)


def _topological_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def graph_listing(root):
    """Text dump of the graph below ``root``, one node per line."""
    lines = []
    for i, node in enumerate(_topological_order(root)):
        name = f" [{node.name}]" if node.name else ""
        lines.append(f"{i:5d} {node.op:<18s} {str(node.shape):<20s}{name}")
    return "\n".join(lines)
