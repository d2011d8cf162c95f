"""On-disk corpus format with candidate analyses: load, validate, filter, write.

File format (UTF-8): one token per line,

    SURFACE<TAB>NER<TAB>GOLD_ANALYSIS<TAB>CAND_1 CAND_2 ... CAND_k

with candidates single-space separated.  Sentences are separated by one
blank line; lines starting with '#' are comments.  Files produced by
``predict`` carry two extra tab-separated columns (predicted NER label,
predicted analysis string) and load back the same way.

NER labels are IOB2 over a configurable entity type set.  The gold
analysis column duplicates one of the candidates on purpose: it keeps
files self-describing and lets validation run before any training.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .analysis import MorphAnalysis, parse_analysis
from .errors import CorpusLoadError, MorphnerError

DEFAULT_ENTITY_TYPES = ("PER", "LOC", "ORG")


@dataclass
class Token:
    surface: str
    ner_label: str
    gold_analysis: MorphAnalysis
    candidates: tuple[MorphAnalysis, ...]
    gold_index: int | None
    pred_ner: str | None = None
    pred_analysis: str | None = None


@dataclass
class Sentence:
    tokens: list[Token]

    def __len__(self) -> int:
        return len(self.tokens)


def parse_ner_label(label: str, entity_types) -> tuple[str, str | None]:
    """Split an IOB2 label into (prefix, entity type); raises on bad labels."""
    if label == "O":
        return "O", None
    if len(label) > 2 and label[1] == "-" and label[0] in ("B", "I"):
        etype = label[2:]
        if entity_types is None or etype in entity_types:
            return label[0], etype
    raise MorphnerError(f"invalid NER label {label!r}")


def check_iob2(labels: list[str], entity_types=DEFAULT_ENTITY_TYPES) -> None:
    """Raise unless the label sequence is valid IOB2 (no orphan I-X)."""
    prev_prefix, prev_type = "O", None
    for label in labels:
        prefix, etype = parse_ner_label(label, entity_types)
        if prefix == "I" and not (prev_prefix in ("B", "I") and prev_type == etype):
            raise MorphnerError(f"I-{etype} without a preceding B-{etype}/I-{etype}")
        prev_prefix, prev_type = prefix, etype


def _parse_token(fields: list[str], path: str, lineno: int, entity_types) -> Token:
    surface, label, gold_raw, cand_field = fields[:4]
    if not surface:
        raise CorpusLoadError("empty surface form", path, lineno)
    try:
        parse_ner_label(label, entity_types)
    except MorphnerError as exc:
        raise CorpusLoadError(str(exc), path, lineno) from exc
    try:
        gold = parse_analysis(gold_raw)
        cand_raws = [c for c in cand_field.split(" ") if c]
        if not cand_raws:
            raise MorphnerError("empty candidate list")
        candidates = tuple(parse_analysis(c) for c in cand_raws)
    except MorphnerError as exc:
        raise CorpusLoadError(str(exc), path, lineno) from exc
    seen = set()
    for c in candidates:
        if c.raw in seen:
            raise CorpusLoadError(f"duplicate candidate {c.raw!r}", path, lineno)
        seen.add(c.raw)
    gold_index = None
    for i, c in enumerate(candidates):
        if c.raw == gold.raw:
            gold_index = i
            break
    token = Token(surface, label, gold, candidates, gold_index)
    if len(fields) == 6:
        token.pred_ner = fields[4]
        token.pred_analysis = fields[5]
    return token


def load_corpus(path: str, entity_types=DEFAULT_ENTITY_TYPES) -> list[Sentence]:
    """Load a corpus file; sentence and token order are preserved.

    Tokens whose gold analysis is absent from the candidates load with
    ``gold_index = None``; `validate_gold_in_candidates` finds them.
    """
    sentences: list[Sentence] = []
    current: list[Token] = []
    current_start = 0

    def flush() -> None:
        nonlocal current
        if current:
            labels = [t.ner_label for t in current]
            try:
                check_iob2(labels, entity_types)
            except MorphnerError as exc:
                raise CorpusLoadError(str(exc), path, current_start) from exc
            sentences.append(Sentence(current))
            current = []

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                continue
            if not line.strip():
                flush()
                continue
            fields = line.split("\t")
            if len(fields) not in (4, 6):
                raise CorpusLoadError(
                    f"expected 4 or 6 tab-separated fields, got {len(fields)}",
                    path,
                    lineno,
                )
            if not current:
                current_start = lineno
            current.append(_parse_token(fields, path, lineno, entity_types))
        flush()
    return sentences


@dataclass(frozen=True)
class Mismatch:
    sentence_index: int
    token_index: int
    surface: str
    gold_raw: str
    candidate_raws: tuple[str, ...]


@dataclass
class MismatchReport:
    """Tokens whose gold analysis is missing from their candidate list."""

    mismatches: list[Mismatch] = field(default_factory=list)

    @property
    def is_clean(self) -> bool:
        return not self.mismatches

    def grouped(self) -> list[tuple[tuple[str, str], int]]:
        """Counts grouped by identical (surface, gold) context, most
        frequent first; order of first occurrence breaks ties."""
        counts: Counter = Counter()
        first_seen: dict[tuple[str, str], int] = {}
        for i, m in enumerate(self.mismatches):
            key = (m.surface, m.gold_raw)
            counts[key] += 1
            first_seen.setdefault(key, i)
        return sorted(counts.items(), key=lambda kv: (-kv[1], first_seen[kv[0]]))


def validate_gold_in_candidates(corpus: list[Sentence]) -> MismatchReport:
    report = MismatchReport()
    for si, sentence in enumerate(corpus):
        for ti, token in enumerate(sentence.tokens):
            if token.gold_index is None:
                report.mismatches.append(
                    Mismatch(
                        si,
                        ti,
                        token.surface,
                        token.gold_analysis.raw,
                        tuple(c.raw for c in token.candidates),
                    )
                )
    return report


def filter_mismatched(corpus: list[Sentence]) -> list[Sentence]:
    """Keep only sentences whose every token has its gold among the
    candidates; order preserved, idempotent."""
    return [
        s for s in corpus if all(t.gold_index is not None for t in s.tokens)
    ]


def _check_writable(token: Token) -> None:
    if token.surface.startswith("#"):
        raise MorphnerError(
            f"surface {token.surface!r} would parse as a comment line"
        )
    for text in (token.surface, token.ner_label, token.pred_ner or ""):
        if "\t" in text or "\n" in text:
            raise MorphnerError(f"field {text!r} contains a tab or newline")
    for raw in [token.gold_analysis.raw, token.pred_analysis or ""] + [
        c.raw for c in token.candidates
    ]:
        if any(ch in raw for ch in (" ", "\t", "\n")):
            raise MorphnerError(f"analysis {raw!r} contains whitespace")


def write_corpus(corpus: list[Sentence], path: str) -> None:
    """Write the corpus format; `load_corpus` of the result round-trips."""
    has_preds = any(t.pred_ner is not None for s in corpus for t in s.tokens)
    blocks: list[str] = []
    for sentence in corpus:
        lines = []
        for token in sentence.tokens:
            _check_writable(token)
            fields = [
                token.surface,
                token.ner_label,
                token.gold_analysis.raw,
                " ".join(c.raw for c in token.candidates),
            ]
            if has_preds:
                if token.pred_ner is None or token.pred_analysis is None:
                    raise MorphnerError(
                        "mixed corpus: some tokens carry predictions, some do not"
                    )
                fields += [token.pred_ner, token.pred_analysis]
            lines.append("\t".join(fields))
        blocks.append("\n".join(lines) + "\n")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(blocks))
    except OSError as exc:
        raise MorphnerError(f"cannot write corpus to {path}: {exc}") from exc


def make_token(surface: str, ner_label: str, gold_raw: str,
               candidate_raws: list[str]) -> Token:
    """Convenience constructor used by the generator and tests."""
    gold = parse_analysis(gold_raw)
    candidates = tuple(parse_analysis(c) for c in candidate_raws)
    gold_index = None
    for i, c in enumerate(candidates):
        if c.raw == gold.raw:
            gold_index = i
            break
    return Token(surface, ner_label, gold, candidates, gold_index)
