"""Entity-level F1, disambiguation accuracy, and Welch's t-test.

F1 is corpus-pooled (micro): entities are exact (type, span) matches
collected across all sentences.  The t-test computes its two-sided p-value
from the Student-t survival function via the regularized incomplete beta,
so replication comparisons need no lookup tables.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass

from .errors import DegenerateVarianceError, MorphnerError


@dataclass(frozen=True)
class Entity:
    """A typed span; start/end are token indices, end inclusive."""

    type: str
    start: int
    end: int


def extract_entities(labels: list[str], strict: bool = False) -> set[Entity]:
    """Entities of an IOB2 sequence.

    Lenient mode (default) starts a fresh entity at an I-X with no
    compatible predecessor, which is needed for decoder output since the
    CRF is not constrained to valid IOB2.  Strict mode raises instead.
    """
    entities: set[Entity] = set()
    open_type: str | None = None
    open_start = 0

    def close(end: int) -> None:
        nonlocal open_type
        if open_type is not None:
            entities.add(Entity(open_type, open_start, end))
            open_type = None

    for i, label in enumerate(labels):
        if label == "O":
            close(i - 1)
            continue
        if len(label) > 2 and label[1] == "-" and label[0] in ("B", "I"):
            prefix, etype = label[0], label[2:]
        else:
            raise MorphnerError(f"unknown NER label {label!r}")
        if prefix == "B":
            close(i - 1)
            open_type, open_start = etype, i
        else:
            if open_type == etype:
                continue
            if strict:
                raise MorphnerError(f"orphan {label} at position {i}")
            close(i - 1)
            open_type, open_start = etype, i
    close(len(labels) - 1)
    return entities


F1Result = namedtuple("F1Result", ["precision", "recall", "f1"])


def ner_f1(gold: list[list[str]], predicted: list[list[str]]) -> F1Result:
    """Micro precision/recall/F1 over exact (type, span) matches pooled
    corpus-wide; 0/0 ratios are 0 by convention."""
    if len(gold) != len(predicted):
        raise MorphnerError(
            f"corpus shapes differ: {len(gold)} vs {len(predicted)} sentences"
        )
    gold_set: set[tuple[int, Entity]] = set()
    pred_set: set[tuple[int, Entity]] = set()
    for si, (g, p) in enumerate(zip(gold, predicted)):
        if len(g) != len(p):
            raise MorphnerError(f"sentence {si} lengths differ: {len(g)} vs {len(p)}")
        gold_set.update((si, e) for e in extract_entities(g))
        pred_set.update((si, e) for e in extract_entities(p))
    hits = len(gold_set & pred_set)
    precision = hits / len(pred_set) if pred_set else 0.0
    recall = hits / len(gold_set) if gold_set else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return F1Result(precision, recall, f1)


def md_accuracy(gold_indices: list[int], predicted_indices: list[int]) -> float:
    """Fraction of tokens whose selected analysis is the gold one."""
    if len(gold_indices) != len(predicted_indices):
        raise MorphnerError(
            f"misaligned tokens: {len(gold_indices)} vs {len(predicted_indices)}"
        )
    if not gold_indices:
        raise MorphnerError("md_accuracy of an empty token list")
    hits = sum(1 for g, p in zip(gold_indices, predicted_indices) if g == p)
    return hits / len(gold_indices)


def ambiguous_md_accuracy(gold_indices: list[int], predicted_indices: list[int],
                          num_candidates: list[int]) -> float | None:
    """Accuracy over tokens with at least two candidates; None when the
    corpus has no ambiguous token."""
    if not len(gold_indices) == len(predicted_indices) == len(num_candidates):
        raise MorphnerError("misaligned token lists")
    pairs = [
        (g, p)
        for g, p, n in zip(gold_indices, predicted_indices, num_candidates)
        if n >= 2
    ]
    if not pairs:
        return None
    return sum(1 for g, p in pairs if g == p) / len(pairs)


@dataclass(frozen=True)
class RunStats:
    """Per-replication metric values with derived mean and sample std."""

    values: tuple[float, ...]

    @property
    def mean(self) -> float:
        return sum(self.values) / len(self.values)

    @property
    def std(self) -> float | None:
        n = len(self.values)
        if n < 2:
            return None
        m = self.mean
        return math.sqrt(sum((v - m) ** 2 for v in self.values) / (n - 1))


# ---------------------------------------------------------------------------
# Welch's t-test

_BETACF_MAX_ITER = 300
_BETACF_EPS = 3e-14
_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise MorphnerError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(1.0 - x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for T Student-t with `df` degrees of freedom."""
    if df <= 0:
        raise MorphnerError("degrees of freedom must be positive")
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


WelchResult = namedtuple("WelchResult", ["t", "df", "p"])


def welch_t_test(a: list[float], b: list[float]) -> WelchResult:
    """Two-sample t-test without equal-variance assumption.

    Returns the statistic, the Welch-Satterthwaite degrees of freedom, and
    the two-sided p-value.  Requires two values per sample and at least one
    sample with nonzero variance.
    """
    n_a, n_b = len(a), len(b)
    if n_a < 2 or n_b < 2:
        raise MorphnerError("welch_t_test needs at least two values per sample")
    mean_a = sum(a) / n_a
    mean_b = sum(b) / n_b
    var_a = sum((v - mean_a) ** 2 for v in a) / (n_a - 1)
    var_b = sum((v - mean_b) ** 2 for v in b) / (n_b - 1)
    if var_a == 0.0 and var_b == 0.0:
        raise DegenerateVarianceError(
            "both samples have zero variance; t statistic is undefined"
        )
    se_a = var_a / n_a
    se_b = var_b / n_b
    pooled = se_a + se_b
    t = (mean_a - mean_b) / math.sqrt(pooled)
    df = pooled ** 2 / (
        se_a ** 2 / (n_a - 1) + se_b ** 2 / (n_b - 1)
    )
    return WelchResult(t, df, student_t_two_sided_p(t, df))


def metrics_lines(values: dict[str, float | int | str | None]) -> str:
    """`key<TAB>value` serialization for reports; None renders as 'absent'."""
    lines = []
    for key, value in values.items():
        shown = "absent" if value is None else value
        lines.append(f"{key}\t{shown}")
    return "\n".join(lines) + "\n"
