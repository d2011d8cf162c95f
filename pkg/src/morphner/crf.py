"""Exact linear-chain CRF: path scoring, log-partition, loss, Viterbi.

Label paths are augmented with START and STOP states realized as two extra
rows/columns of the transition matrix (indices K and K+1).  Transitions
into START and out of STOP carry a large negative sentinel instead of
-inf so that log-sum-exp never sees non-finite values; those cells are
never traversed by any scored path.

Two code paths share the same arithmetic: pure-numpy functions over a
`Trellis` (used for decoding and as the reference in tests) and
graph-node builders (used for the training loss).  Keeping the operation
order identical makes the two agree bitwise, which the tests assert.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffnet import Node, sub
from .errors import ConfigurationError, MorphnerError

NEG_INF = -1e4


def start_index(num_labels: int) -> int:
    return num_labels


def stop_index(num_labels: int) -> int:
    return num_labels + 1


def masked_transitions(raw: np.ndarray) -> np.ndarray:
    """Copy of a (K+2)x(K+2) matrix with forbidden cells set to the
    sentinel: nothing enters START, nothing leaves STOP."""
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1] or raw.shape[0] < 3:
        raise ConfigurationError(
            f"transition matrix must be (K+2)x(K+2), got {raw.shape}"
        )
    K = raw.shape[0] - 2
    out = raw.copy()
    out[:, start_index(K)] = NEG_INF
    out[stop_index(K), :] = NEG_INF
    return out


@dataclass
class Trellis:
    """Per-position score vectors plus the augmented transition matrix."""

    scores: np.ndarray       # (n, K)
    transitions: np.ndarray  # (K+2, K+2)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        self.transitions = np.asarray(self.transitions, dtype=float)
        if self.scores.ndim != 2 or self.scores.shape[0] < 1:
            raise ConfigurationError("trellis needs at least one score vector")
        if self.transitions.shape != (self.num_labels + 2, self.num_labels + 2):
            raise ConfigurationError(
                f"transitions {self.transitions.shape} do not match "
                f"{self.num_labels} labels"
            )

    @property
    def length(self) -> int:
        return self.scores.shape[0]

    @property
    def num_labels(self) -> int:
        return self.scores.shape[1]


def _check_labels(trellis: Trellis, y) -> None:
    if len(y) != trellis.length:
        raise MorphnerError(
            f"label sequence length {len(y)} != trellis length {trellis.length}"
        )
    for label in y:
        if not 0 <= label < trellis.num_labels:
            raise MorphnerError(f"label id {label} out of range")


def path_score(trellis: Trellis, y) -> float:
    """Sum of the n+1 transition scores (START..STOP) and n emissions."""
    _check_labels(trellis, y)
    A = trellis.transitions
    K = trellis.num_labels
    score = A[start_index(K), y[0]] + trellis.scores[0, y[0]]
    for i in range(1, trellis.length):
        score = score + A[y[i - 1], y[i]]
        score = score + trellis.scores[i, y[i]]
    return float(score + A[y[-1], stop_index(K)])


def _lse_columns(m: np.ndarray) -> np.ndarray:
    mx = m.max(axis=0)
    return mx + np.log(np.exp(m - mx).sum(axis=0))


def _lse(v: np.ndarray) -> float:
    mx = v.max()
    return mx + np.log(np.exp(v - mx).sum())


def log_partition(trellis: Trellis) -> float:
    """log of the sum over all label sequences of exp(path_score)."""
    A = trellis.transitions
    K = trellis.num_labels
    alpha = A[start_index(K), :K] + trellis.scores[0]
    for i in range(1, trellis.length):
        alpha = _lse_columns(alpha[:, None] + A[:K, :K]) + trellis.scores[i]
    return float(_lse(alpha + A[:K, stop_index(K)]))


def crf_loss(trellis: Trellis, y_gold) -> float:
    """log_partition - path_score(gold); non-negative since gold is one of
    the summed paths."""
    return log_partition(trellis) - path_score(trellis, y_gold)


def viterbi(trellis: Trellis) -> tuple[list[int], float]:
    """Maximum-score label sequence and its score.

    Ties break toward the lowest label id (np.argmax takes the first
    maximum), both at each backpointer and at the final state.
    """
    A = trellis.transitions
    K = trellis.num_labels
    n = trellis.length
    delta = A[start_index(K), :K] + trellis.scores[0]
    pointers = np.zeros((n, K), dtype=int)
    for i in range(1, n):
        cand = delta[:, None] + A[:K, :K]
        pointers[i] = np.argmax(cand, axis=0)
        delta = cand[pointers[i], np.arange(K)] + trellis.scores[i]
    final = delta + A[:K, stop_index(K)]
    last = int(np.argmax(final))
    best = [last]
    for i in range(n - 1, 0, -1):
        last = int(pointers[i, last])
        best.append(last)
    best.reverse()
    return best, float(final[best[-1]])


# ---------------------------------------------------------------------------
# graph-building loss (shares arithmetic with the pure functions above)


def _forward_initial(transitions: Node, s0: Node, K: int) -> Node:
    start = start_index(K)

    def bw(node):
        if transitions.grad is None:
            transitions.grad = np.zeros_like(transitions.value)
        transitions.grad[start, :K] += node.grad
        s0.accumulate(node.grad)

    return Node(transitions.value[start, :K] + s0.value, (transitions, s0), bw)


def _forward_step(alpha: Node, transitions: Node, s_i: Node, K: int) -> Node:
    inner = transitions.value[:K, :K]
    m = alpha.value[:, None] + inner
    lse = _lse_columns(m)
    # softmax over sources for each destination column
    p = np.exp(m - lse)

    def bw(node):
        weighted = p * node.grad
        alpha.accumulate(weighted.sum(axis=1))
        if transitions.grad is None:
            transitions.grad = np.zeros_like(transitions.value)
        transitions.grad[:K, :K] += weighted
        s_i.accumulate(node.grad)

    return Node(lse + s_i.value, (alpha, transitions, s_i), bw)


def _forward_final(alpha: Node, transitions: Node, K: int) -> Node:
    stop = stop_index(K)
    v = alpha.value + transitions.value[:K, stop]
    mx = v.max()
    lse = mx + np.log(np.exp(v - mx).sum())
    p = np.exp(v - lse)

    def bw(node):
        alpha.accumulate(node.grad * p)
        if transitions.grad is None:
            transitions.grad = np.zeros_like(transitions.value)
        transitions.grad[:K, stop] += node.grad * p

    return Node(np.asarray(lse), (alpha, transitions), bw)


def _gold_score(transitions: Node, score_nodes: list[Node], y: list[int],
                K: int) -> Node:
    A = transitions.value
    score = A[start_index(K), y[0]] + score_nodes[0].value[y[0]]
    for i in range(1, len(y)):
        score = score + A[y[i - 1], y[i]]
        score = score + score_nodes[i].value[y[i]]
    score = score + A[y[-1], stop_index(K)]

    def bw(node):
        g = node.grad
        if transitions.grad is None:
            transitions.grad = np.zeros_like(transitions.value)
        transitions.grad[start_index(K), y[0]] += g
        for i in range(1, len(y)):
            transitions.grad[y[i - 1], y[i]] += g
        transitions.grad[y[-1], stop_index(K)] += g
        for i, s in enumerate(score_nodes):
            row = np.zeros_like(s.value)
            row[y[i]] = g
            s.accumulate(row)

    return Node(np.asarray(score), (transitions,) + tuple(score_nodes), bw)


def crf_loss_node(score_nodes: list[Node], transitions: Node,
                  y_gold: list[int]) -> Node:
    """Training loss log Z - path_score(gold) as a graph node.

    `score_nodes` are the per-position emission vectors s_i; `transitions`
    is the raw (K+2)x(K+2) parameter (the forbidden cells are simply never
    read, so they receive no gradient and need no masking here).
    """
    K = score_nodes[0].value.shape[0]
    if len(y_gold) != len(score_nodes):
        raise MorphnerError(
            f"gold length {len(y_gold)} != sentence length {len(score_nodes)}"
        )
    for label in y_gold:
        if not 0 <= label < K:
            raise MorphnerError(f"label id {label} out of range")
    alpha = _forward_initial(transitions, score_nodes[0], K)
    for s_i in score_nodes[1:]:
        alpha = _forward_step(alpha, transitions, s_i, K)
    log_z = _forward_final(alpha, transitions, K)
    return sub(log_z, _gold_score(transitions, score_nodes, y_gold, K))
