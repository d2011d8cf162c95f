import math
from collections import Counter

import pytest

from morphner.corpus import check_iob2, load_corpus
from morphner.errors import ConfigurationError
from morphner.synth import (
    SyntheticSpec,
    entity_type_of_case,
    generate_corpora,
    generate_synthetic,
)


def small_spec(**kw):
    defaults = dict(n_train=20, n_dev=5, n_test=5, seed=7)
    defaults.update(kw)
    return SyntheticSpec(**defaults)


class TestGeneration:
    def test_gold_always_among_candidates(self):
        for corpus in generate_corpora(small_spec(ambiguity=3)):
            for sentence in corpus:
                for token in sentence.tokens:
                    assert token.gold_index is not None
                    assert token.candidates[token.gold_index].raw == \
                        token.gold_analysis.raw

    def test_labels_are_valid_iob2(self):
        for corpus in generate_corpora(small_spec(two_token_prob=0.5)):
            for sentence in corpus:
                check_iob2([t.ner_label for t in sentence.tokens])

    def test_ambiguity_one_single_candidates(self):
        for corpus in generate_corpora(small_spec(ambiguity=1)):
            for sentence in corpus:
                for token in sentence.tokens:
                    assert len(token.candidates) == 1

    def test_entity_tokens_carry_requested_ambiguity(self):
        for corpus in generate_corpora(small_spec(ambiguity=3)):
            for sentence in corpus:
                for token in sentence.tokens:
                    if token.ner_label != "O":
                        assert len(token.candidates) == 3

    def test_entity_type_follows_case_tag(self):
        for corpus in generate_corpora(small_spec()):
            for sentence in corpus:
                for token in sentence.tokens:
                    if token.ner_label == "O":
                        continue
                    case = int(token.gold_analysis.tags[-1][2:])
                    assert token.ner_label[2:] == entity_type_of_case(case)

    def test_sentence_lengths_in_range(self):
        spec = small_spec(min_len=4, max_len=6)
        for corpus in generate_corpora(spec):
            for sentence in corpus:
                assert 4 <= len(sentence.tokens) <= 6

    def test_bad_specs_rejected(self):
        with pytest.raises(ConfigurationError):
            small_spec(ambiguity=0)
        with pytest.raises(ConfigurationError):
            small_spec(min_len=5, max_len=3)
        with pytest.raises(ConfigurationError):
            small_spec(n_cases=0)


class TestDeterminism:
    def test_same_seed_byte_identical_files(self, tmp_path):
        spec = small_spec()
        a = generate_synthetic(spec, str(tmp_path / "a"))
        b = generate_synthetic(spec, str(tmp_path / "b"))
        for name in ("train", "dev", "test"):
            with open(a[name], "rb") as fa, open(b[name], "rb") as fb:
                assert fa.read() == fb.read()

    def test_different_seed_different_files(self, tmp_path):
        a = generate_synthetic(small_spec(seed=1), str(tmp_path / "a"))
        b = generate_synthetic(small_spec(seed=2), str(tmp_path / "b"))
        with open(a["train"], "rb") as fa, open(b["train"], "rb") as fb:
            assert fa.read() != fb.read()

    def test_generated_files_load_cleanly(self, tmp_path):
        paths = generate_synthetic(small_spec(), str(tmp_path))
        train = load_corpus(paths["train"])
        assert len(train) == 20


def mutual_information(pairs):
    """I(X;Y) from joint frequency counts, in nats."""
    joint = Counter(pairs)
    total = sum(joint.values())
    px = Counter(x for x, _ in pairs)
    py = Counter(y for _, y in pairs)
    mi = 0.0
    for (x, y), c in joint.items():
        p_xy = c / total
        mi += p_xy * math.log(p_xy / ((px[x] / total) * (py[y] / total)))
    return mi


class TestLearnableSignal:
    def test_label_case_mutual_information_positive(self):
        train, _, _ = generate_corpora(SyntheticSpec(seed=0))
        pairs = []
        for sentence in train:
            for token in sentence.tokens:
                tags = token.gold_analysis.tags
                case = tags[-1] if tags and tags[-1].startswith("Cs") else "none"
                pairs.append((case, token.ner_label))
        assert mutual_information(pairs) > 0.5

    def test_surface_alone_does_not_determine_type(self):
        # the same capitalized stem must occur with several different
        # entity labels somewhere in a large enough sample
        train, _, _ = generate_corpora(SyntheticSpec(n_train=300, seed=0))
        by_surface = {}
        for sentence in train:
            for token in sentence.tokens:
                if token.ner_label.startswith("B-"):
                    by_surface.setdefault(token.surface, set()).add(
                        token.ner_label
                    )
        multi = [s for s, labels in by_surface.items() if len(labels) >= 2]
        assert len(multi) >= len(by_surface) * 0.9
