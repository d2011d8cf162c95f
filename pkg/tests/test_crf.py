import itertools
import math

import numpy as np
import pytest

from morphner.crf import (
    NEG_INF,
    Trellis,
    crf_loss,
    crf_loss_node,
    log_partition,
    masked_transitions,
    path_score,
    start_index,
    stop_index,
    viterbi,
)
from morphner.diffnet import ModelParameters, constant, grad_check
from morphner.errors import MorphnerError


def make_trellis(scores, transitions=None):
    scores = np.asarray(scores, dtype=float)
    K = scores.shape[1]
    if transitions is None:
        transitions = np.zeros((K + 2, K + 2))
    raw = np.asarray(transitions, dtype=float)
    return Trellis(scores, masked_transitions(raw))


def random_trellis(rng, n, K):
    scores = rng.normal(scale=2.0, size=(n, K))
    transitions = rng.normal(scale=2.0, size=(K + 2, K + 2))
    return make_trellis(scores, transitions)


def enumerate_paths(trellis):
    """Oracle: every label sequence with its path score."""
    n, K = trellis.scores.shape
    return [
        (list(y), path_score(trellis, list(y)))
        for y in itertools.product(range(K), repeat=n)
    ]


class TestPathScore:
    def test_single_emission(self):
        t = make_trellis([[2.0, 5.0]])
        assert path_score(t, [1]) == pytest.approx(5.0)

    def test_hand_sum_two_positions(self):
        # K=2, n=2; hand-set transitions and scores
        A = np.zeros((4, 4))
        A[2, 0], A[2, 1] = 0.1, 0.2        # START -> label
        A[0, 0], A[0, 1] = 0.3, 0.4
        A[1, 0], A[1, 1] = 0.5, 0.6
        A[0, 3], A[1, 3] = 0.7, 0.8        # label -> STOP
        s = [[1.0, 2.0], [3.0, 4.0]]
        t = make_trellis(s, A)
        # START->1 (0.2) + s[0][1] (2.0) + 1->0 (0.5) + s[1][0] (3.0) + 0->STOP (0.7)
        assert path_score(t, [1, 0]) == pytest.approx(0.2 + 2.0 + 0.5 + 3.0 + 0.7)

    def test_shift_property(self):
        rng = np.random.default_rng(0)
        t = random_trellis(rng, 3, 3)
        c = 1.37
        shifted = Trellis(t.scores + c, t.transitions)
        for y in itertools.product(range(3), repeat=3):
            assert path_score(shifted, list(y)) == pytest.approx(
                path_score(t, list(y)) + 3 * c
            )

    def test_length_mismatch(self):
        t = make_trellis([[0.0, 0.0]])
        with pytest.raises(MorphnerError):
            path_score(t, [0, 1])


class TestLogPartition:
    def test_two_equal_paths(self):
        t = make_trellis([[0.0, 0.0]])
        assert log_partition(t) == pytest.approx(math.log(2.0))

    def test_matches_enumeration(self):
        rng = np.random.default_rng(1)
        t = random_trellis(rng, 3, 3)
        brute = math.log(sum(math.exp(s) for _, s in enumerate_paths(t)))
        assert abs(log_partition(t) - brute) < 1e-10

    def test_dominates_every_path(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            t = random_trellis(rng, rng.integers(1, 5), rng.integers(1, 5))
            log_z = log_partition(t)
            assert all(s <= log_z + 1e-9 for _, s in enumerate_paths(t))

    def test_path_probabilities_sum_to_one(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            t = random_trellis(rng, rng.integers(1, 5), rng.integers(1, 5))
            log_z = log_partition(t)
            total = sum(math.exp(s - log_z) for _, s in enumerate_paths(t))
            assert total == pytest.approx(1.0, abs=1e-9)


class TestCrfLoss:
    def test_single_label_loss_exactly_zero(self):
        rng = np.random.default_rng(4)
        t = random_trellis(rng, 4, 1)
        assert crf_loss(t, [0, 0, 0, 0]) == 0.0

    def test_margin_matches_enumeration(self):
        rng = np.random.default_rng(5)
        t = random_trellis(rng, 3, 2)
        paths = enumerate_paths(t)
        gold, _ = max(paths, key=lambda p: p[1])
        expected = math.log(sum(math.exp(s) for _, s in paths)) - path_score(t, gold)
        assert crf_loss(t, gold) == pytest.approx(expected, abs=1e-10)

    def test_nonnegative_on_random_trellises(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            n, K = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            t = random_trellis(rng, n, K)
            y = [int(v) for v in rng.integers(0, K, size=n)]
            assert crf_loss(t, y) >= -1e-12

    def test_invalid_gold_rejected(self):
        t = make_trellis([[0.0, 0.0]])
        with pytest.raises(MorphnerError):
            crf_loss(t, [2])


class TestViterbi:
    def test_single_position(self):
        t = make_trellis([[3.0, 7.0]])
        path, score = viterbi(t)
        assert path == [1] and score == pytest.approx(7.0)

    def test_matches_exhaustive_argmax(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n, K = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            t = random_trellis(rng, n, K)
            path, score = viterbi(t)
            enumerated = enumerate_paths(t)
            best_path, best_score = max(enumerated, key=lambda p: p[1])
            assert score == best_score  # same arithmetic ordering, exact
            ties = [p for p, s in enumerated if s == best_score]
            if len(ties) == 1:
                assert path == best_path

    def test_all_equal_scores_lowest_id_sequence(self):
        t = make_trellis(np.zeros((4, 3)))
        path, _ = viterbi(t)
        assert path == [0, 0, 0, 0]


class TestGraphLoss:
    def build(self, rng, n, K):
        params = ModelParameters()
        trans = params.create("crf.transitions",
                              rng.normal(scale=2.0, size=(K + 2, K + 2)))
        score_values = rng.normal(scale=2.0, size=(n, K))
        return params, trans, score_values

    def test_agrees_with_pure_loss_bitwise(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            n, K = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            params, trans, score_values = self.build(rng, n, K)
            y = [int(v) for v in rng.integers(0, K, size=n)]
            node = crf_loss_node([constant(s) for s in score_values], trans, y)
            pure = crf_loss(
                Trellis(score_values, masked_transitions(trans.value)), y
            )
            assert float(node.value) == pure

    def test_gradients_pass_finite_differences(self):
        rng = np.random.default_rng(9)
        n, K = 3, 3
        params = ModelParameters()
        trans = params.create("crf.transitions",
                              rng.normal(size=(K + 2, K + 2)))
        scores = params.create("scores", rng.normal(size=(n, K)))
        y = [2, 0, 1]

        def loss():
            from morphner.diffnet import embed
            nodes = [embed(scores, i) for i in range(n)]
            return crf_loss_node(nodes, trans, y)

        assert grad_check(loss, params, eps=1e-4) < 1e-7

    def test_forbidden_cells_get_no_gradient(self):
        rng = np.random.default_rng(10)
        n, K = 2, 2
        params, trans, score_values = self.build(rng, n, K)
        node = crf_loss_node([constant(s) for s in score_values], trans, [0, 1])
        from morphner.diffnet import backward
        backward(node)
        start, stop = start_index(K), stop_index(K)
        assert np.array_equal(trans.grad[:, start], np.zeros(K + 2))
        assert np.array_equal(trans.grad[stop, :], np.zeros(K + 2))


class TestMaskedTransitions:
    def test_sentinel_placement(self):
        raw = np.ones((5, 5))
        masked = masked_transitions(raw)
        K = 3
        assert np.all(masked[:, start_index(K)] == NEG_INF)
        assert np.all(masked[stop_index(K), :] == NEG_INF)
        assert masked[0, 1] == 1.0
        # the input is not modified
        assert np.all(raw == 1.0)
