"""Acceptance suite: one test per criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion; pytest itself marks any failure.
"""

import itertools
import math
import statistics
import time

import numpy as np
import pytest

from morphner.analysis import Vocabulary
from morphner.cli import run_gradcheck_suite
from morphner.corpus import (
    Sentence,
    filter_mismatched,
    make_token,
    validate_gold_in_candidates,
)
from morphner.crf import Trellis, log_partition, masked_transitions, path_score, viterbi
from morphner.diffnet import HyperParams
from morphner.metrics import welch_t_test
from morphner.models import Architecture, Model, count_parameters
from morphner.synth import SyntheticSpec, generate_corpora
from morphner.trainer import run_replications, train


def report(criterion: int, detail: str) -> None:
    print(f"[ACCEPTANCE] criterion {criterion}: PASS  {detail}")


# -- 1 ----------------------------------------------------------------------


def test_criterion_1_crf_oracle_equivalence():
    rng = np.random.default_rng(100)
    started = time.perf_counter()
    worst_gap = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 5))
        K = int(rng.integers(1, 5))
        trellis = Trellis(
            rng.normal(scale=2.0, size=(n, K)),
            masked_transitions(rng.normal(scale=2.0, size=(K + 2, K + 2))),
        )
        paths = [
            (list(y), path_score(trellis, list(y)))
            for y in itertools.product(range(K), repeat=n)
        ]
        brute_log_z = math.log(sum(math.exp(s) for _, s in paths))
        gap = abs(log_partition(trellis) - brute_log_z)
        worst_gap = max(worst_gap, gap)
        assert gap < 1e-9

        best_path, best_score = max(paths, key=lambda p: p[1])
        got_path, got_score = viterbi(trellis)
        assert got_score == best_score
        ties = [p for p, s in paths if s == best_score]
        if len(ties) == 1:
            assert got_path == best_path
        else:
            assert got_path in ties
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    report(1, f"200 trellises, worst log-partition gap {worst_gap:.2e}, "
              f"{elapsed:.1f}s")


# -- 2 ----------------------------------------------------------------------


def test_criterion_2_gradient_suite_every_architecture():
    started = time.perf_counter()
    errors = run_gradcheck_suite(eps=1e-4, dims=4)
    elapsed = time.perf_counter() - started
    assert set(errors) == {a.value for a in Architecture}
    for name, err in errors.items():
        assert err < 1e-4, f"{name}: max relative error {err:.3e}"
    assert elapsed < 60.0
    worst = max(errors.items(), key=lambda kv: kv[1])
    report(2, f"all six architectures < 1e-4 (worst {worst[0]} "
              f"{worst[1]:.2e}), {elapsed:.1f}s")


# -- 3 ----------------------------------------------------------------------


def overfit_fixture_vocab():
    spec = SyntheticSpec(n_train=8, n_dev=2, n_test=2, seed=21)
    train_c, _, _ = generate_corpora(spec)
    from morphner.analysis import build_vocabularies
    return train_c, build_vocabularies(train_c)


def test_criterion_3_exact_joint1_decomposition():
    train_c, vocab = overfit_fixture_vocab()
    hyper = HyperParams(word_dim=6, char_dim=6, tag_dim=6, hidden_dim=6,
                        dropout_rate=0.0, seed=17)
    joint = Model(Architecture.JOINT1, hyper, vocab)
    ner = Model(Architecture.NER, hyper, vocab)
    md = Model(Architecture.MD, hyper, vocab)
    for target in (ner, md):
        for p in target.params:
            p.value[...] = joint.params[p.name].value

    for sentence in train_c:
        parts = joint.loss_components(sentence)
        total = float(parts["total"].value)
        crf_part = float(parts["ner"].value)
        md_part = float(parts["md"].value)
        assert total == crf_part + md_part  # bit-identical decomposition
        # standalone heads on the same shared weights agree exactly
        assert float(ner.total_loss(sentence).value) == crf_part
        assert float(md.total_loss(sentence).value) == md_part

    # single-candidate corpus: the disambiguation term vanishes exactly
    single = [
        Sentence([
            make_token(t.surface, t.ner_label, t.gold_analysis.raw,
                       [t.gold_analysis.raw])
            for t in s.tokens
        ])
        for s in train_c
    ]
    for sentence in single:
        parts = joint.loss_components(sentence)
        assert float(parts["md"].value) == 0.0
        assert float(parts["total"].value) == float(parts["ner"].value)
    report(3, "joint1 loss == crf + md bitwise; md term is exactly 0 on "
              "single-candidate data")


# -- 4 ----------------------------------------------------------------------


def _train_token_ner_accuracy(model, corpus):
    hits = total = 0
    for sent in corpus:
        pred = model.predict(sent).ner_labels
        hits += sum(int(t.ner_label == p) for t, p in zip(sent.tokens, pred))
        total += len(sent.tokens)
    return hits / total


def _train_md_accuracy(model, corpus):
    hits = total = 0
    for sent in corpus:
        pred = model.predict(sent).md_indices
        hits += sum(int(t.gold_index == p) for t, p in zip(sent.tokens, pred))
        total += len(sent.tokens)
    return hits / total


@pytest.mark.parametrize("architecture", list(Architecture))
def test_criterion_4_overfit_fifty_sentences(architecture):
    spec = SyntheticSpec(n_train=50, n_dev=10, n_test=10, seed=5)
    train_c, _, _ = generate_corpora(spec)
    hyper = HyperParams(dropout_rate=0.0, learning_rate=0.01, epochs=50,
                        seed=1)  # dimension sizes default to 10
    started = time.perf_counter()
    # development set = training set: the checkpoint is the epoch that
    # memorized best, which is what this criterion measures
    model, _ = train(train_c, train_c, architecture, hyper)
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0
    details = [f"{architecture.value} {elapsed:.0f}s"]
    if architecture.has_ner:
        acc = _train_token_ner_accuracy(model, train_c)
        details.append(f"train NER token acc {acc:.4f}")
        assert acc >= 0.99
    if architecture.has_md:
        acc = _train_md_accuracy(model, train_c)
        details.append(f"train MD acc {acc:.4f}")
        assert acc >= 0.99
    report(4, "; ".join(details))


# -- 5 ----------------------------------------------------------------------


def test_criterion_5_joint_advantage_direction():
    spec = SyntheticSpec(seed=9)  # ambiguity 2, 150/30/60 sentences
    assert spec.ambiguity >= 2
    train_c, dev_c, test_c = generate_corpora(spec)
    hyper = HyperParams(dropout_rate=0.5, learning_rate=0.01, epochs=30,
                        seed=1)
    started = time.perf_counter()
    result = run_replications(
        train_c, dev_c, test_c,
        [Architecture.NER, Architecture.JOINT2], hyper, n=5,
    )
    elapsed = time.perf_counter() - started
    assert elapsed < 1800.0
    ner_mean = result.stats["ner"]["ner_f1"].mean
    joint_mean = result.stats["joint2"]["ner_f1"].mean
    outcome = result.welch["ner|joint2"]["ner_f1"]
    assert not isinstance(outcome, str), "t-test degenerated"
    assert joint_mean - ner_mean >= 0.05
    assert outcome.p < 0.05
    report(5, f"held-out F1 mean: joint2 {joint_mean:.4f} vs ner "
              f"{ner_mean:.4f} (gap {joint_mean - ner_mean:+.4f}), "
              f"Welch p = {outcome.p:.3g}, {elapsed:.0f}s")


# -- 6 ----------------------------------------------------------------------


def test_criterion_6_replication_protocol_fidelity():
    spec = SyntheticSpec(n_train=12, n_dev=4, n_test=8, seed=3)
    train_c, dev_c, test_c = generate_corpora(spec)
    hyper = HyperParams(word_dim=4, char_dim=4, tag_dim=4, hidden_dim=4,
                        dropout_rate=0.0, learning_rate=0.01, epochs=2,
                        seed=1)
    result = run_replications(
        train_c, dev_c, test_c,
        [Architecture.NER, Architecture.JOINT1], hyper, n=10,
    )
    # reporting shape: per-run values, means, pairwise Welch outcomes
    assert result.n == 10 and len(result.seeds) == 10
    for arch in ("ner", "joint1"):
        runs = result.runs[arch]
        assert len(runs) == 10
        values = [r["ner_f1"] for r in runs]
        stats = result.stats[arch]["ner_f1"]
        assert tuple(values) == stats.values
        assert stats.mean == pytest.approx(sum(values) / 10)
    pair = result.welch["ner|joint1"]["ner_f1"]
    assert isinstance(pair, str) or (math.isfinite(pair.p) and 0 <= pair.p <= 1)

    # the t-test against the hand-formula oracle on fixture samples
    a = [81.0, 81.3, 81.5, 81.2]
    b = [83.0, 83.4, 83.1, 83.3]
    mean_a, mean_b = statistics.mean(a), statistics.mean(b)
    var_a, var_b = statistics.variance(a), statistics.variance(b)
    pooled = var_a / len(a) + var_b / len(b)
    t_hand = (mean_a - mean_b) / math.sqrt(pooled)
    df_hand = pooled ** 2 / (
        (var_a / len(a)) ** 2 / (len(a) - 1)
        + (var_b / len(b)) ** 2 / (len(b) - 1)
    )
    from scipy import stats as scipy_stats
    p_hand = 2.0 * scipy_stats.t.sf(abs(t_hand), df_hand)
    got = welch_t_test(a, b)
    assert got.t == pytest.approx(t_hand, rel=1e-9)
    assert got.df == pytest.approx(df_hand, rel=1e-9)
    assert abs(got.p - p_hand) < 1e-3
    welch_note = (
        pair if isinstance(pair, str) else f"p = {pair.p:.4g}"
    )
    report(6, f"10 per-run values + means + Welch ({welch_note}); fixture "
              f"p matches the oracle within 1e-3 (|diff| = "
              f"{abs(got.p - p_hand):.2e})")


# -- 7 ----------------------------------------------------------------------


def test_criterion_7_parameter_count_footnote():
    # desk-scale stand-in for a newspaper-sized vocabulary
    vocab = Vocabulary()
    for i in range(20_000):
        vocab.word_ids.add(f"w{i}")
    for i in range(80):
        vocab.char_ids.add(chr(ord("a") + i % 26) + str(i // 26))
    for i in range(120):
        vocab.morphtag_ids.add(f"T{i}")
    for i in range(60):
        vocab.analysis_char_ids.add(f"c{i}")
    for label in ("O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG"):
        vocab.ner_label_ids.add(label)

    hyper = HyperParams()  # all dimension sizes 10
    joint2 = count_parameters(Architecture.JOINT2, hyper, vocab)
    j_multi = count_parameters(Architecture.J_MULTI, hyper, vocab)

    H = hyper.hidden_dim
    repr_len = hyper.word_dim + 2 * hyper.char_dim
    per_direction = 4 * H * (2 * H + repr_len) + 4 * H * H + 4 * H
    symbolic_extra = 2 * 2 * per_direction + H * repr_len
    assert j_multi - joint2 == symbolic_extra
    fraction = (j_multi - joint2) / joint2
    assert 0.0 < fraction < 0.10
    report(7, f"j_multi = joint2 + {symbolic_extra} parameters "
              f"({fraction:.2%} of joint2's {joint2}); derived, not "
              f"asserted equal to any published figure")


# -- 8 ----------------------------------------------------------------------


def test_criterion_8_data_tooling():
    clean_a = Sentence([
        make_token("Moda", "B-LOC", "Moda+Prop+Cs1",
                   ["Moda+Prop+Cs1", "Mod+Verb"]),
        make_token("ve", "O", "ve+Conj", ["ve+Conj"]),
    ])
    dirty = Sentence([
        make_token("Vakko'nun", "B-ORG", "Vakko+Prop+Gen",
                   ["Vakko+Prop+Nom", "Vakko'nun+X"]),
    ])
    clean_b = Sentence([make_token("ev", "O", "ev+Noun", ["ev+Noun"])])
    corpus = [clean_a, dirty, clean_b]

    record = validate_gold_in_candidates(corpus)
    assert len(record.mismatches) == 1
    assert (record.mismatches[0].sentence_index,
            record.mismatches[0].token_index) == (1, 0)

    filtered = filter_mismatched(corpus)
    assert filtered == [clean_a, clean_b]          # mismatch sentence removed
    assert filtered[0] is clean_a and filtered[1] is clean_b  # untouched
    assert filter_mismatched(filtered) == filtered  # idempotent
    assert validate_gold_in_candidates(filtered).is_clean
    report(8, "mismatch sentence removed, clean sentences untouched, "
              "filter idempotent")
