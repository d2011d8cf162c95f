"""The six tagger architectures assembled into forward/loss/predict.

ner        word repr -> Bi-LSTM -> tanh FC -> linear FC -> CRF
ext_m_feat ner, plus the gold-analysis character channel in the word repr
md         word repr -> Bi-LSTM -> dot-product scores over candidates
joint1     one Bi-LSTM feeding both the CRF head and the candidate scorer
joint2     joint1, plus the selected candidate's vector concatenated onto
           the context before the tanh FC
j_multi    three stacked Bi-LSTMs with the word repr shortcut-concatenated
           onto every layer input; candidate scores come from layer 1, the
           CRF head reads layer 3 plus the word repr plus the selected
           candidate's vector

Candidate selection inside joint2/j_multi is the argmax under the current
parameters; gradients flow into the selected candidate's representation
but not through the discrete choice itself.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .analysis import Vocabulary
from .corpus import Sentence
from .crf import Trellis, crf_loss_node, masked_transitions, viterbi
from .diffnet import (
    BiLstmWeights,
    HyperParams,
    LstmWeights,
    ModelParameters,
    Node,
    add,
    add_all,
    affine,
    bilstm,
    concat,
    glorot,
    lstm_bias,
)
from .encoders import AnalysisEncoder, WordEncoder, WordReprConfig
from .errors import ConfigurationError, DataValidationError, MorphnerError
from .md_head import MdScores, md_loss, md_scores, md_select


class Architecture(str, Enum):
    NER = "ner"
    MD = "md"
    EXT_M_FEAT = "ext_m_feat"
    JOINT1 = "joint1"
    JOINT2 = "joint2"
    J_MULTI = "j_multi"

    @property
    def has_ner(self) -> bool:
        return self is not Architecture.MD

    @property
    def has_md(self) -> bool:
        return self in (Architecture.MD, Architecture.JOINT1,
                        Architecture.JOINT2, Architecture.J_MULTI)

    @property
    def num_sentence_layers(self) -> int:
        return 3 if self is Architecture.J_MULTI else 1


def parse_architecture(name: str) -> Architecture:
    try:
        return Architecture(name)
    except ValueError:
        valid = "|".join(a.value for a in Architecture)
        raise ConfigurationError(f"unknown architecture {name!r}; one of {valid}")


@dataclass
class ForwardPass:
    """Everything one forward run over a sentence produces."""

    score_nodes: list[Node] | None   # per-position CRF emission vectors
    md: list[MdScores] | None        # per-token candidate scores
    selected: list[int] | None       # argmax candidate per token
    contexts: list[Node] | None = None  # first-layer h_i (feeds the MD head)


@dataclass
class Prediction:
    ner_labels: list[str] | None
    md_indices: list[int] | None


class Model:
    """One architecture instance: parameters, encoders, and heads."""

    def __init__(self, architecture: Architecture, hyper: HyperParams,
                 vocab: Vocabulary, use_char: bool = True):
        if architecture.has_md and hyper.hidden_dim != hyper.tag_dim:
            raise ConfigurationError(
                f"architecture {architecture.value!r} scores candidates with a "
                f"dot product, so hidden_dim ({hyper.hidden_dim}) must equal "
                f"tag_dim ({hyper.tag_dim})"
            )
        if len(vocab.ner_label_ids) == 0 and architecture.has_ner:
            raise ConfigurationError("vocabulary has no NER labels")
        self.architecture = architecture
        self.hyper = hyper
        self.vocab = vocab
        self.config = WordReprConfig(
            word_dim=hyper.word_dim,
            char_dim=hyper.char_dim,
            tag_dim=hyper.tag_dim,
            use_char=use_char,
            use_ext_morph=architecture is Architecture.EXT_M_FEAT,
        )
        self.params = ModelParameters()
        self._build(np.random.default_rng(hyper.seed))

    # -- construction -------------------------------------------------------

    def _lstm(self, name: str, input_size: int, hidden: int,
              rng: np.random.Generator) -> LstmWeights:
        return LstmWeights(
            W=self.params.create(f"{name}.W", glorot((4 * hidden, input_size), rng)),
            U=self.params.create(f"{name}.U", glorot((4 * hidden, hidden), rng)),
            b=self.params.create(f"{name}.b", lstm_bias(hidden)),
        )

    def _bilstm(self, name: str, input_size: int, hidden: int,
                rng: np.random.Generator) -> BiLstmWeights:
        return BiLstmWeights(
            fwd=self._lstm(f"{name}.fwd", input_size, hidden, rng),
            bwd=self._lstm(f"{name}.bwd", input_size, hidden, rng),
        )

    def _build(self, rng: np.random.Generator) -> None:
        h = self.hyper
        arch = self.architecture
        word_table = self.params.create(
            "word_embed", glorot((len(self.vocab.word_ids), h.word_dim), rng)
        )
        char_table = self.params.create(
            "char_embed", glorot((len(self.vocab.char_ids), h.char_dim), rng)
        )
        char_weights = None
        if self.config.use_char:
            char_weights = self._bilstm("char_enc", h.char_dim, h.char_dim, rng)
        ext_table = ext_weights = None
        if self.config.use_ext_morph:
            ext_table = self.params.create(
                "analysis_char_embed",
                glorot((len(self.vocab.analysis_char_ids), h.tag_dim), rng),
            )
            ext_weights = self._bilstm("analysis_char_enc", h.tag_dim, h.tag_dim, rng)
        self.word_encoder = WordEncoder(
            self.vocab, self.config, word_table, char_table, char_weights,
            ext_table, ext_weights,
        )

        self.analysis_encoder = None
        if arch.has_md:
            tag_table = self.params.create(
                "morphtag_embed", glorot((len(self.vocab.morphtag_ids), h.tag_dim), rng)
            )
            root_weights = self._bilstm("root_enc", h.char_dim, h.tag_dim, rng)
            tag_weights = self._bilstm("tag_enc", h.tag_dim, h.tag_dim, rng)
            self.analysis_encoder = AnalysisEncoder(
                self.vocab, h.tag_dim, char_table, root_weights,
                tag_table, tag_weights,
            )

        repr_len = self.config.length
        self.sentence_layers = [
            self._bilstm("sent1", repr_len, h.hidden_dim, rng)
        ]
        for layer in range(2, arch.num_sentence_layers + 1):
            self.sentence_layers.append(
                self._bilstm(f"sent{layer}", 2 * h.hidden_dim + repr_len,
                             h.hidden_dim, rng)
            )

        self.fc_last_W = self.fc_last_b = None
        self.fc_out_W = self.fc_out_b = None
        self.crf_transitions = None
        if arch.has_ner:
            fc_in = 2 * h.hidden_dim
            if arch is Architecture.JOINT2:
                fc_in += 2 * h.tag_dim
            elif arch is Architecture.J_MULTI:
                fc_in += repr_len + 2 * h.tag_dim
            K = len(self.vocab.ner_label_ids)
            self.fc_last_W = self.params.create(
                "fc_last.W", glorot((h.hidden_dim, fc_in), rng)
            )
            self.fc_last_b = self.params.create("fc_last.b", np.zeros(h.hidden_dim))
            self.fc_out_W = self.params.create(
                "fc_out.W", glorot((K, h.hidden_dim), rng)
            )
            self.fc_out_b = self.params.create("fc_out.b", np.zeros(K))
            self.crf_transitions = self.params.create(
                "crf.transitions", glorot((K + 2, K + 2), rng)
            )

    # -- forward ------------------------------------------------------------

    def _word_nodes(self, sentence: Sentence, train: bool, rng, singletons):
        nodes = []
        rate = self.hyper.dropout_rate if train else 0.0
        for token in sentence.tokens:
            replace = bool(
                train
                and singletons
                and token.surface in singletons
                and rng.random() < 0.5
            )
            nodes.append(
                self.word_encoder.encode(token, train=train, rng=rng,
                                         dropout_rate=rate,
                                         replace_with_unk=replace)
            )
        return nodes

    def _md_scores(self, sentence: Sentence, hs: list[Node]):
        per_token_scores = []
        per_token_reprs = []
        for token, h in zip(sentence.tokens, hs):
            reprs = [self.analysis_encoder.encode(c) for c in token.candidates]
            per_token_scores.append(md_scores(h, reprs, token.gold_index))
            per_token_reprs.append(reprs)
        return per_token_scores, per_token_reprs

    def _emissions(self, inputs: list[Node]) -> list[Node]:
        scores = []
        for node in inputs:
            hidden = affine(self.fc_last_W, self.fc_last_b, node, "tanh")
            scores.append(affine(self.fc_out_W, self.fc_out_b, hidden, "none"))
        return scores

    def forward(self, sentence: Sentence, train: bool = False,
                rng: np.random.Generator | None = None,
                singletons: set[str] | None = None) -> ForwardPass:
        if not sentence.tokens:
            raise MorphnerError("cannot run a model over an empty sentence")
        arch = self.architecture
        xs = self._word_nodes(sentence, train, rng, singletons)
        h1 = bilstm(self.sentence_layers[0].fwd, self.sentence_layers[0].bwd, xs)

        md_list = selected = None
        selected_reprs = None
        if arch.has_md:
            md_list, reprs = self._md_scores(sentence, h1)
            selected = [md_select(m) for m in md_list]
            selected_reprs = [reprs[i][j] for i, j in enumerate(selected)]

        score_nodes = None
        if arch.has_ner:
            if arch is Architecture.JOINT2:
                inputs = [
                    concat([h, sel.combined])
                    for h, sel in zip(h1, selected_reprs)
                ]
            elif arch is Architecture.J_MULTI:
                h2 = bilstm(self.sentence_layers[1].fwd, self.sentence_layers[1].bwd,
                            [concat([h, x]) for h, x in zip(h1, xs)])
                h3 = bilstm(self.sentence_layers[2].fwd, self.sentence_layers[2].bwd,
                            [concat([h, x]) for h, x in zip(h2, xs)])
                inputs = [
                    concat([h, x, sel.combined])
                    for h, x, sel in zip(h3, xs, selected_reprs)
                ]
            else:
                inputs = h1
            score_nodes = self._emissions(inputs)

        return ForwardPass(score_nodes=score_nodes, md=md_list,
                           selected=selected, contexts=h1)

    # -- losses and prediction ----------------------------------------------

    def _gold_label_ids(self, sentence: Sentence) -> list[int]:
        ids = []
        for token in sentence.tokens:
            if token.ner_label not in self.vocab.ner_label_ids:
                raise DataValidationError(
                    f"NER label {token.ner_label!r} was never seen in training"
                )
            ids.append(self.vocab.ner_label_ids.id_of(token.ner_label))
        return ids

    def loss_components(self, sentence: Sentence, train: bool = False,
                        rng: np.random.Generator | None = None,
                        singletons: set[str] | None = None
                        ) -> dict[str, Node | None]:
        """Per-task loss nodes plus their sum under the key 'total'."""
        fp = self.forward(sentence, train=train, rng=rng, singletons=singletons)
        ner_part = md_part = None
        if self.architecture.has_ner:
            ner_part = crf_loss_node(
                fp.score_nodes, self.crf_transitions,
                self._gold_label_ids(sentence),
            )
        if self.architecture.has_md:
            md_part = add_all([md_loss(m) for m in fp.md])
        if ner_part is not None and md_part is not None:
            total = add(ner_part, md_part)
        else:
            total = ner_part if ner_part is not None else md_part
        return {"ner": ner_part, "md": md_part, "total": total}

    def total_loss(self, sentence: Sentence, train: bool = False,
                   rng: np.random.Generator | None = None,
                   singletons: set[str] | None = None) -> Node:
        return self.loss_components(sentence, train, rng, singletons)["total"]

    def trellis(self, score_nodes: list[Node]) -> Trellis:
        return Trellis(
            np.stack([s.value for s in score_nodes]),
            masked_transitions(self.crf_transitions.value),
        )

    def predict(self, sentence: Sentence) -> Prediction:
        """Viterbi labels and/or selected candidate indices, dropout off.

        Gold NER labels are never read; gold analyses are read only by the
        ext_m_feat word representation channel.
        """
        fp = self.forward(sentence, train=False)
        labels = None
        if self.architecture.has_ner:
            path, _ = viterbi(self.trellis(fp.score_nodes))
            labels = [self.vocab.ner_label_ids.token_of(i) for i in path]
        return Prediction(ner_labels=labels, md_indices=fp.selected)

    def count_parameters(self) -> int:
        """Exact number of trainable scalars."""
        return self.params.count()


def count_parameters(architecture: Architecture, hyper: HyperParams,
                     vocab: Vocabulary) -> int:
    """Trainable scalar count without keeping the model around."""
    return Model(architecture, hyper, vocab).count_parameters()


# ---------------------------------------------------------------------------
# checkpoint io

CHECKPOINT_FORMAT = "morphner-checkpoint-v1"


def save_checkpoint(model: Model, path: str) -> None:
    """Self-describing JSON checkpoint; float64 values round-trip exactly
    through repr, so save/load is lossless."""
    data = {
        "format": CHECKPOINT_FORMAT,
        "architecture": model.architecture.value,
        "hyper": asdict(model.hyper),
        "use_char": model.config.use_char,
        "vocabulary": model.vocab.serialize(),
        "tensors": {
            p.name: {"shape": list(p.value.shape), "data": p.value.ravel().tolist()}
            for p in model.params
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh)


def load_checkpoint(path: str) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("format") != CHECKPOINT_FORMAT:
        raise ConfigurationError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    vocab = Vocabulary.deserialize(data["vocabulary"])
    hyper = HyperParams(**data["hyper"])
    model = Model(parse_architecture(data["architecture"]), hyper, vocab,
                  use_char=data["use_char"])
    tensors = data["tensors"]
    if set(tensors) != set(model.params.names()):
        raise ConfigurationError("checkpoint tensors do not match architecture")
    model.params.restore({
        name: np.array(spec["data"], dtype=float).reshape(spec["shape"])
        for name, spec in tensors.items()
    })
    return model
