"""Candidate-analysis scoring head for morphological disambiguation.

Each candidate's vector is scored by a dot product with the token's
context vector; training minimizes the negative log softmax of the gold
candidate's score, and decoding picks the argmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffnet import Node, dot, neg_log_softmax_pick, stack
from .encoders import AnalysisRepr
from .errors import ConfigurationError, DataValidationError


@dataclass
class MdScores:
    """Scores over one token's candidates; gold_index is None when the
    corpus was not validated (loss then refuses, selection still works)."""

    scores: Node
    gold_index: int | None

    def __len__(self) -> int:
        return self.scores.value.shape[0]


def md_scores(h: Node, candidates: list[AnalysisRepr],
              gold_index: int | None) -> MdScores:
    """Dot product of the context vector with every candidate vector."""
    if not candidates:
        raise ConfigurationError("md_scores requires at least one candidate")
    size = h.value.shape[0]
    for cand in candidates:
        if cand.combined.value.shape[0] != size:
            raise ConfigurationError(
                f"context size {size} != analysis vector size "
                f"{cand.combined.value.shape[0]}; hidden_dim must equal tag_dim"
            )
    return MdScores(stack([dot(h, c.combined) for c in candidates]), gold_index)


def md_loss(scores: MdScores) -> Node:
    """-log softmax(scores)[gold]; exactly zero for a single candidate."""
    if scores.gold_index is None:
        raise DataValidationError(
            "token has no gold candidate; run validate-data / filter-data first"
        )
    return neg_log_softmax_pick(scores.scores, scores.gold_index)


def md_select(scores: MdScores) -> int:
    """Argmax candidate index; ties go to the lowest index."""
    return int(np.argmax(scores.scores.value))
