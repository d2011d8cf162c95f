"""Morphological analysis strings and vocabulary construction.

An analysis string is a root followed by zero or more tags, joined by '+',
e.g. ``Moda+Noun+Prop+A3sg+Pnon+Loc`` or ``raha+[POS=NOUN]+[NUM=SG]``.
The first '+' always terminates the root, so roots containing '+' cannot
be represented.  Parsing is annotation-scheme agnostic: tags are opaque
strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import MalformedAnalysisError, MorphnerError

UNK = "<UNK>"
SEPARATOR = "+"


@dataclass(frozen=True)
class MorphAnalysis:
    """One candidate analysis: the raw string plus its root/tags split."""

    raw: str
    root: str
    tags: tuple[str, ...]


def parse_analysis(raw: str) -> MorphAnalysis:
    """Split ``raw`` at every '+' into a root and an ordered tag sequence.

    Joining root and tags back with '+' reproduces ``raw`` exactly.
    """
    if not raw or raw.startswith(SEPARATOR):
        raise MalformedAnalysisError(f"malformed analysis string: {raw!r}")
    root, *tags = raw.split(SEPARATOR)
    return MorphAnalysis(raw=raw, root=root, tags=tuple(tags))


def analysis_char_seq(raw: str) -> list[str]:
    """The analysis string as a list of characters, '+' and '=' included.

    One code point is one character; combining marks are not merged.
    """
    if not raw:
        raise MalformedAnalysisError("empty analysis string")
    return list(raw)


class IdMap:
    """Bijective token -> dense id map, ids assigned in first-seen order.

    When constructed with an UNK token, lookups of unseen tokens fall back
    to its id; otherwise they raise.
    """

    def __init__(self, unk: str | None = UNK):
        self._ids: dict[str, int] = {}
        self._tokens: list[str] = []
        self.unk_id: int | None = None
        if unk is not None:
            self.unk_id = self.add(unk)

    def add(self, token: str) -> int:
        existing = self._ids.get(token)
        if existing is not None:
            return existing
        new_id = len(self._tokens)
        self._ids[token] = new_id
        self._tokens.append(token)
        return new_id

    def id_of(self, token: str) -> int:
        found = self._ids.get(token)
        if found is not None:
            return found
        if self.unk_id is None:
            raise MorphnerError(f"unknown token with no UNK fallback: {token!r}")
        return self.unk_id

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def __len__(self) -> int:
        return len(self._tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self._tokens)

    def items(self) -> list[tuple[int, str]]:
        return list(enumerate(self._tokens))


@dataclass
class Vocabulary:
    """All id maps used by the models.

    The NER label map has no UNK on purpose: an unseen label at training or
    scoring time is a data error, not something to smooth over.
    """

    word_ids: IdMap = field(default_factory=IdMap)
    char_ids: IdMap = field(default_factory=IdMap)
    morphtag_ids: IdMap = field(default_factory=IdMap)
    ner_label_ids: IdMap = field(default_factory=lambda: IdMap(unk=None))
    analysis_char_ids: IdMap = field(default_factory=IdMap)

    _SECTIONS = ("words", "chars", "morph_tags", "ner_labels", "analysis_chars")

    def _maps(self) -> dict[str, IdMap]:
        return {
            "words": self.word_ids,
            "chars": self.char_ids,
            "morph_tags": self.morphtag_ids,
            "ner_labels": self.ner_label_ids,
            "analysis_chars": self.analysis_char_ids,
        }

    def serialize(self) -> str:
        """One `id<TAB>token` line per entry, sections introduced by
        `#SECTION <name>` lines; deterministic for a given vocabulary."""
        lines: list[str] = []
        maps = self._maps()
        for section in self._SECTIONS:
            lines.append(f"#SECTION {section}")
            for idx, token in maps[section].items():
                lines.append(f"{idx}\t{token}")
        return "\n".join(lines) + "\n"

    @classmethod
    def deserialize(cls, text: str) -> "Vocabulary":
        vocab = cls()
        maps = vocab._maps()
        for m in maps.values():
            m._ids.clear()
            m._tokens.clear()
            m.unk_id = None
        current: IdMap | None = None
        current_name = ""
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            if line.startswith("#SECTION "):
                name = line[len("#SECTION "):]
                if name not in maps:
                    raise MorphnerError(f"unknown vocabulary section {name!r}")
                current = maps[name]
                current_name = name
                continue
            if current is None:
                raise MorphnerError(f"vocabulary line {lineno} before any section")
            idx_str, sep, token = line.partition("\t")
            if not sep:
                raise MorphnerError(f"vocabulary line {lineno} is not `id<TAB>token`")
            idx = int(idx_str)
            if idx != len(current):
                raise MorphnerError(
                    f"non-contiguous id {idx} in section {current_name!r}"
                )
            current.add(token)
        for name, m in maps.items():
            if name != "ner_labels" and UNK in m:
                m.unk_id = m._ids[UNK]
        return vocab

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.serialize())

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.deserialize(fh.read())


def build_vocabularies(corpus: Iterable) -> Vocabulary:
    """Build all vocabularies from a corpus of sentences.

    Word and character maps come from surfaces; morph-tag and
    analysis-character maps from every candidate analysis (not only gold),
    so that unselected candidates can still be embedded.  Ids follow
    first-occurrence order, which makes the result deterministic.
    """
    vocab = Vocabulary()
    for sentence in corpus:
        for token in sentence.tokens:
            vocab.word_ids.add(token.surface)
            for ch in token.surface:
                vocab.char_ids.add(ch)
            vocab.ner_label_ids.add(token.ner_label)
            for cand in token.candidates:
                for tag in cand.tags:
                    vocab.morphtag_ids.add(tag)
                for ch in cand.raw:
                    vocab.analysis_char_ids.add(ch)
    return vocab
