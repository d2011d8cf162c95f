"""Reverse-mode automatic differentiation over numpy float64 arrays.

A graph is built per sentence (or per batch) out of `Node` objects and
discarded after `backward`.  Ops are fused at the granularity of whole
layer steps (one node per LSTM step, one per affine layer) to keep graphs
small; every fused op carries a hand-derived backward closure that is
verified against central finite differences by the gradient-check harness.

All values are float64.  Scalars are 0-d arrays.  Nothing here is
thread-aware: one graph must stay on one thread, but separate graphs over
separate parameter sets are independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError


class Node:
    """One value in the computation graph.

    `cell`/`cell_grad` exist only for LSTM step nodes, which carry the cell
    state alongside the exposed hidden value; the next step's backward
    deposits the cell gradient before this node's own backward runs.
    """

    __slots__ = ("value", "parents", "grad", "bw", "cell", "cell_grad")

    def __init__(self, value, parents=(), bw=None):
        self.value = value
        self.parents = parents
        self.grad = None
        self.bw = bw
        self.cell = None
        self.cell_grad = None

    def accumulate(self, g) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=float)
        else:
            self.grad += g

    def accumulate_cell(self, g) -> None:
        if self.cell_grad is None:
            self.cell_grad = np.array(g, dtype=float)
        else:
            self.cell_grad += g


def constant(value) -> Node:
    return Node(np.asarray(value, dtype=float))


def backward(loss: Node) -> None:
    """Accumulate dLoss/dx into every node reachable from `loss`.

    Parameters keep their gradients across calls (so batch losses can be
    backpropagated sentence by sentence); plain nodes are discarded with
    the graph.
    """
    if loss.value.ndim != 0:
        raise ConfigurationError("backward expects a scalar loss node")
    topo: list[Node] = []
    visited: set[int] = set()
    stack: list[tuple[Node, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    loss.accumulate(np.ones(()))
    for node in reversed(topo):
        if node.bw is not None and (node.grad is not None or node.cell_grad is not None):
            node.bw(node)


# ---------------------------------------------------------------------------
# elementwise and shape ops


def add(a: Node, b: Node) -> Node:
    def bw(node):
        a.accumulate(node.grad)
        b.accumulate(node.grad)

    return Node(a.value + b.value, (a, b), bw)


def sub(a: Node, b: Node) -> Node:
    def bw(node):
        a.accumulate(node.grad)
        b.accumulate(-node.grad)

    return Node(a.value - b.value, (a, b), bw)


def tanh(x: Node) -> Node:
    out = np.tanh(x.value)

    def bw(node):
        x.accumulate(node.grad * (1.0 - out * out))

    return Node(out, (x,), bw)


def relu(x: Node) -> Node:
    mask = x.value > 0

    def bw(node):
        x.accumulate(node.grad * mask)

    return Node(np.where(mask, x.value, 0.0), (x,), bw)


def concat(parts: list[Node]) -> Node:
    sizes = [p.value.shape[0] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bw(node):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            p.accumulate(node.grad[lo:hi])

    return Node(np.concatenate([p.value for p in parts]), tuple(parts), bw)


def dot(a: Node, b: Node) -> Node:
    def bw(node):
        a.accumulate(node.grad * b.value)
        b.accumulate(node.grad * a.value)

    return Node(np.asarray(a.value @ b.value), (a, b), bw)


def stack(scalars: list[Node]) -> Node:
    def bw(node):
        for j, s in enumerate(scalars):
            s.accumulate(node.grad[j])

    return Node(np.array([s.value for s in scalars]), tuple(scalars), bw)


def add_all(scalars: list[Node]) -> Node:
    """Sum of scalar nodes (batch and per-sentence loss accumulation)."""

    def bw(node):
        for s in scalars:
            s.accumulate(node.grad)

    total = np.asarray(sum(float(s.value) for s in scalars))
    return Node(total, tuple(scalars), bw)


def neg_log_softmax_pick(scores: Node, index: int) -> Node:
    """-log softmax(scores)[index], log-sum-exp stabilized, as one node."""
    s = scores.value
    m = s.max()
    lse = m + np.log(np.exp(s - m).sum())
    probs = np.exp(s - lse)

    def bw(node):
        g = probs.copy()
        g[index] -= 1.0
        scores.accumulate(node.grad * g)

    return Node(np.asarray(lse - s[index]), (scores,), bw)


# ---------------------------------------------------------------------------
# layers


def embed(table: Node, idx: int) -> Node:
    """Row lookup into an embedding table parameter."""

    def bw(node):
        if table.grad is None:
            table.grad = np.zeros_like(table.value)
        table.grad[idx] += node.grad

    return Node(table.value[idx].copy(), (table,), bw)


def affine(W: Node, b: Node, x: Node, activation: str = "none") -> Node:
    """activation(W @ x + b) with activation in {'none', 'tanh'}."""
    if W.value.shape[1] != x.value.shape[0]:
        raise ConfigurationError(
            f"affine shape mismatch: W is {W.value.shape}, x has {x.value.shape[0]}"
        )
    pre = W.value @ x.value + b.value
    if activation == "tanh":
        out = np.tanh(pre)
    elif activation == "none":
        out = pre
    else:
        raise ConfigurationError(f"unknown activation {activation!r}")

    def bw(node):
        dpre = node.grad * (1.0 - out * out) if activation == "tanh" else node.grad
        W.accumulate(np.outer(dpre, x.value))
        b.accumulate(dpre)
        x.accumulate(W.value.T @ dpre)

    return Node(out, (W, b, x), bw)


def dropout(x: Node, rate: float, rng: np.random.Generator) -> Node:
    """Inverted dropout: zero entries with probability `rate`, scale
    survivors by 1/(1-rate).  Evaluation mode is simply "do not call"."""
    if rate == 0.0:
        return x
    mask = (rng.random(x.value.shape) >= rate) / (1.0 - rate)

    def bw(node):
        x.accumulate(node.grad * mask)

    return Node(x.value * mask, (x,), bw)


@dataclass
class LstmWeights:
    """One direction of an LSTM; gate order in the fused matrices is
    input | forget | candidate | output."""

    W: Node  # (4H, D)
    U: Node  # (4H, H)
    b: Node  # (4H,)

    @property
    def hidden_size(self) -> int:
        return self.U.value.shape[1]

    @property
    def input_size(self) -> int:
        return self.W.value.shape[1]


@dataclass
class BiLstmWeights:
    fwd: LstmWeights
    bwd: LstmWeights


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def lstm_step(weights: LstmWeights, x: Node, prev: Node | None):
    """One LSTM cell update as a single fused node.

    `prev` is the previous step's node (carrying hidden and cell state) or
    None for a zero initial state.  A (h0, c0) array pair is also accepted
    for hand-set initial states; those receive no gradient.
    """
    H = weights.hidden_size
    if x.value.shape[0] != weights.input_size:
        raise ConfigurationError(
            f"lstm_step input size {x.value.shape[0]} != weight input size "
            f"{weights.input_size}"
        )
    if prev is None:
        h_prev = np.zeros(H)
        c_prev = np.zeros(H)
        prev_node = None
    elif isinstance(prev, Node):
        h_prev = prev.value
        c_prev = prev.cell
        prev_node = prev
    else:
        h_prev, c_prev = prev
        prev_node = None

    z = weights.W.value @ x.value + weights.U.value @ h_prev + weights.b.value
    gi = _sigmoid(z[:H])
    gf = _sigmoid(z[H:2 * H])
    gc = np.tanh(z[2 * H:3 * H])
    go = _sigmoid(z[3 * H:])
    c_new = gf * c_prev + gi * gc
    tanh_c = np.tanh(c_new)
    h_new = go * tanh_c

    def bw(node):
        dh = node.grad if node.grad is not None else 0.0
        dc = node.cell_grad if node.cell_grad is not None else 0.0
        dc_total = dc + dh * go * (1.0 - tanh_c * tanh_c)
        do = dh * tanh_c
        dz = np.empty(4 * H)
        dz[:H] = dc_total * gc * gi * (1.0 - gi)
        dz[H:2 * H] = dc_total * c_prev * gf * (1.0 - gf)
        dz[2 * H:3 * H] = dc_total * gi * (1.0 - gc * gc)
        dz[3 * H:] = do * go * (1.0 - go)
        weights.W.accumulate(np.outer(dz, x.value))
        weights.U.accumulate(np.outer(dz, h_prev))
        weights.b.accumulate(dz)
        x.accumulate(weights.W.value.T @ dz)
        if prev_node is not None:
            prev_node.accumulate(weights.U.value.T @ dz)
            prev_node.accumulate_cell(dc_total * gf)

    parents = (weights.W, weights.U, weights.b, x)
    if prev_node is not None:
        parents += (prev_node,)
    node = Node(h_new, parents, bw)
    node.cell = c_new
    return node


def lstm_run(weights: LstmWeights, xs: list[Node]) -> list[Node]:
    """Run an LSTM over a sequence from a zero initial state."""
    outputs = []
    state = None
    for x in xs:
        state = lstm_step(weights, x, state)
        outputs.append(state)
    return outputs


def bilstm(weights_fwd: LstmWeights, weights_bwd: LstmWeights,
           xs: list[Node]) -> list[Node]:
    """Per-position concat of forward and backward LSTM outputs.

    The backward direction consumes the sequence reversed, so position i's
    output pairs the forward state after reading x_0..x_i with the backward
    state after reading x_{n-1}..x_i.
    """
    if not xs:
        raise ConfigurationError("bilstm requires a non-empty input sequence")
    fwd = lstm_run(weights_fwd, xs)
    bwd = lstm_run(weights_bwd, xs[::-1])[::-1]
    return [concat([f, b]) for f, b in zip(fwd, bwd)]
