"""Vector representations for words and candidate analyses.

Three views of a token are combined by concatenation into the word
representation: a word embedding, a character-sequence encoding of the
surface, and (optionally) a character-sequence encoding of the gold
analysis string.  Candidate analyses are encoded separately as
tanh(root encoding + tag-sequence encoding).

All sequence encodings use the same unit: a Bi-LSTM over element
embeddings whose output is the final forward state concatenated with the
final backward state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import MorphAnalysis, Vocabulary
from .diffnet import (
    BiLstmWeights,
    Node,
    add,
    concat,
    constant,
    dropout,
    embed,
    lstm_run,
    relu,
    tanh,
)
from .errors import ConfigurationError


@dataclass(frozen=True)
class WordReprConfig:
    """Which channels make up a word representation, and their sizes."""

    word_dim: int
    char_dim: int
    tag_dim: int
    use_char: bool = True
    use_ext_morph: bool = False

    @property
    def length(self) -> int:
        size = self.word_dim
        if self.use_char:
            size += 2 * self.char_dim
        if self.use_ext_morph:
            size += 2 * self.tag_dim
        return size


def encode_unit(weights: BiLstmWeights, elements: list[Node],
                apply_relu: bool) -> Node:
    """Concat of final forward and final backward LSTM states, with an
    optional RELU on the concatenation (used for roots and tag sequences,
    not for surface or analysis characters)."""
    if not elements:
        raise ConfigurationError("encode_unit requires a non-empty sequence")
    fwd_last = lstm_run(weights.fwd, elements)[-1]
    bwd_last = lstm_run(weights.bwd, elements[::-1])[-1]
    out = concat([fwd_last, bwd_last])
    return relu(out) if apply_relu else out


class WordEncoder:
    """Builds word representation vectors from parameters and vocabulary."""

    def __init__(self, vocab: Vocabulary, config: WordReprConfig,
                 word_table: Node, char_table: Node,
                 char_weights: BiLstmWeights | None,
                 analysis_char_table: Node | None = None,
                 analysis_char_weights: BiLstmWeights | None = None):
        if config.use_char and char_weights is None:
            raise ConfigurationError("character channel enabled without weights")
        if config.use_ext_morph and (
            analysis_char_table is None or analysis_char_weights is None
        ):
            raise ConfigurationError(
                "gold-analysis channel enabled without its table/weights"
            )
        self.vocab = vocab
        self.config = config
        self.word_table = word_table
        self.char_table = char_table
        self.char_weights = char_weights
        self.analysis_char_table = analysis_char_table
        self.analysis_char_weights = analysis_char_weights

    def _char_nodes(self, text: str) -> list[Node]:
        ids = [self.vocab.char_ids.id_of(ch) for ch in text]
        return [embed(self.char_table, i) for i in ids]

    def encode(self, token, train: bool = False,
               rng: np.random.Generator | None = None,
               dropout_rate: float = 0.0,
               replace_with_unk: bool = False) -> Node:
        """Word representation for one token.

        In train mode the caller may request UNK substitution (used for
        singleton words) and dropout on the final concatenation; in eval
        mode both are off and the result is deterministic.
        """
        if replace_with_unk:
            word_id = self.vocab.word_ids.unk_id
        else:
            word_id = self.vocab.word_ids.id_of(token.surface)
        parts = [embed(self.word_table, word_id)]
        if self.config.use_char:
            parts.append(
                encode_unit(self.char_weights, self._char_nodes(token.surface),
                            apply_relu=False)
            )
        if self.config.use_ext_morph:
            ids = [
                self.vocab.analysis_char_ids.id_of(ch)
                for ch in token.gold_analysis.raw
            ]
            chars = [embed(self.analysis_char_table, i) for i in ids]
            parts.append(
                encode_unit(self.analysis_char_weights, chars, apply_relu=False)
            )
        x = concat(parts)
        if train and dropout_rate > 0.0:
            if rng is None:
                raise ConfigurationError("dropout in train mode needs an rng")
            x = dropout(x, dropout_rate, rng)
        return x


@dataclass
class AnalysisRepr:
    """Root encoding, tag-sequence encoding, and their tanh combination."""

    root: Node
    tag_seq: Node
    combined: Node


class AnalysisEncoder:
    """Encodes one candidate analysis as tanh(root + tag sequence).

    The root encoder reads surface characters through the shared character
    embedding table but has its own Bi-LSTM with cell size tag_dim, so both
    halves of the sum have length 2*tag_dim.  An empty tag sequence
    contributes a zero vector, the neutral element of the sum.
    """

    def __init__(self, vocab: Vocabulary, tag_dim: int,
                 char_table: Node, root_weights: BiLstmWeights,
                 tag_table: Node, tag_weights: BiLstmWeights):
        self.vocab = vocab
        self.tag_dim = tag_dim
        self.char_table = char_table
        self.root_weights = root_weights
        self.tag_table = tag_table
        self.tag_weights = tag_weights

    def encode(self, analysis: MorphAnalysis) -> AnalysisRepr:
        root_chars = [
            embed(self.char_table, self.vocab.char_ids.id_of(ch))
            for ch in analysis.root
        ]
        r = encode_unit(self.root_weights, root_chars, apply_relu=True)
        if analysis.tags:
            tag_nodes = [
                embed(self.tag_table, self.vocab.morphtag_ids.id_of(tag))
                for tag in analysis.tags
            ]
            ms = encode_unit(self.tag_weights, tag_nodes, apply_relu=True)
        else:
            ms = constant(np.zeros(2 * self.tag_dim))
        return AnalysisRepr(root=r, tag_seq=ms, combined=tanh(add(r, ms)))
