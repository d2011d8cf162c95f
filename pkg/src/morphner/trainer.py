"""Training loop and the replication experiment harness.

One training run: shuffled minibatches (default five sentences), batch
loss summed over its sentences, one Adam step per batch, dropout on word
representations, dev evaluation every epoch, and the checkpoint of the
best dev epoch returned.  Words seen exactly once in training are
replaced by UNK with probability 0.5 so the UNK embedding gets trained.

Test-set values never touch training or model selection: the experiment
harness evaluates on test only after the best-epoch parameters are
restored.  Replications are fully independent trainings under seeds
seed+0 .. seed+n-1.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import Vocabulary, build_vocabularies
from .corpus import Sentence
from .diffnet import HyperParams, add_all, adam_update, backward
from .errors import ConfigurationError, DataValidationError
from .metrics import (
    RunStats,
    WelchResult,
    ambiguous_md_accuracy,
    md_accuracy,
    ner_f1,
    welch_t_test,
)
from .models import Architecture, Model


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float            # mean per-sentence loss
    dev_ner_f1: float | None
    dev_md_acc: float | None
    wall_time: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0


SELECTION_METRICS = ("ner_f1", "md_acc", "ner_f1_then_md")


def default_selection_metric(architecture: Architecture) -> str:
    if not architecture.has_ner:
        return "md_acc"
    if not architecture.has_md:
        return "ner_f1"
    return "ner_f1_then_md"


def _selection_key(record: EpochRecord, metric: str):
    f1 = record.dev_ner_f1 if record.dev_ner_f1 is not None else float("-inf")
    md = record.dev_md_acc if record.dev_md_acc is not None else float("-inf")
    if metric == "ner_f1":
        return (f1,)
    if metric == "md_acc":
        return (md,)
    if metric == "ner_f1_then_md":
        return (f1, md)
    raise ConfigurationError(
        f"unknown selection metric {metric!r}; one of {'|'.join(SELECTION_METRICS)}"
    )


def _check_metric_compatible(metric: str, architecture: Architecture) -> None:
    if metric in ("ner_f1", "ner_f1_then_md") and not architecture.has_ner:
        raise ConfigurationError(
            f"selection metric {metric!r} needs an architecture with an NER head"
        )
    if metric == "md_acc" and not architecture.has_md:
        raise ConfigurationError(
            "selection metric 'md_acc' needs an architecture with an MD head"
        )


def select_best(history: TrainHistory | list[EpochRecord], metric: str) -> int:
    """Index of the best epoch; ties resolve to the earliest epoch."""
    records = history.records if isinstance(history, TrainHistory) else history
    if not records:
        raise ConfigurationError("empty training history")
    _selection_key(records[0], metric)  # validate the metric name
    best = 0
    for i in range(1, len(records)):
        if _selection_key(records[i], metric) > _selection_key(records[best], metric):
            best = i
    return best


def evaluate_model(model: Model, corpus: list[Sentence]) -> dict[str, float | None]:
    """Test-time metrics for whichever tasks the architecture performs."""
    arch = model.architecture
    metrics: dict[str, float | None] = {}
    gold_labels, pred_labels = [], []
    gold_idx, pred_idx, cand_counts = [], [], []
    for sentence in corpus:
        pred = model.predict(sentence)
        if arch.has_ner:
            gold_labels.append([t.ner_label for t in sentence.tokens])
            pred_labels.append(pred.ner_labels)
        if arch.has_md:
            for token, chosen in zip(sentence.tokens, pred.md_indices):
                gold_idx.append(token.gold_index)
                pred_idx.append(chosen)
                cand_counts.append(len(token.candidates))
    if arch.has_ner:
        precision, recall, f1 = ner_f1(gold_labels, pred_labels)
        metrics["ner_precision"] = precision
        metrics["ner_recall"] = recall
        metrics["ner_f1"] = f1
    if arch.has_md:
        metrics["md_acc"] = md_accuracy(gold_idx, pred_idx)
        metrics["md_acc_ambiguous"] = ambiguous_md_accuracy(
            gold_idx, pred_idx, cand_counts
        )
    return metrics


def _require_gold_candidates(corpus: list[Sentence], name: str) -> None:
    for sentence in corpus:
        for token in sentence.tokens:
            if token.gold_index is None:
                raise DataValidationError(
                    f"{name} corpus has tokens whose gold analysis is not "
                    "among the candidates; run `validate-data` and "
                    "`filter-data` first"
                )


def _singleton_words(corpus: list[Sentence]) -> set[str]:
    counts = Counter(t.surface for s in corpus for t in s.tokens)
    return {w for w, c in counts.items() if c == 1}


def train(train_corpus: list[Sentence], dev_corpus: list[Sentence],
          architecture: Architecture, hyper: HyperParams,
          vocab: Vocabulary | None = None, use_char: bool = True,
          selection_metric: str | None = None,
          log=None) -> tuple[Model, TrainHistory]:
    """Train one model; returns it restored to the best dev epoch."""
    if not train_corpus:
        raise DataValidationError("empty training corpus")
    if architecture.has_md:
        _require_gold_candidates(train_corpus, "training")
        _require_gold_candidates(dev_corpus, "development")
    if vocab is None:
        vocab = build_vocabularies(train_corpus)
    metric = selection_metric or default_selection_metric(architecture)
    _selection_key(EpochRecord(0, 0.0, None, None, 0.0), metric)  # validate name
    _check_metric_compatible(metric, architecture)

    model = Model(architecture, hyper, vocab, use_char=use_char)
    singletons = _singleton_words(train_corpus)
    rng = np.random.default_rng([hyper.seed, 1])

    history = TrainHistory()
    best_key = None
    best_snapshot = model.params.snapshot()
    for epoch in range(hyper.epochs):
        started = time.perf_counter()
        order = rng.permutation(len(train_corpus))
        total = 0.0
        for lo in range(0, len(order), hyper.batch_size):
            batch = order[lo:lo + hyper.batch_size]
            losses = [
                model.total_loss(train_corpus[i], train=True, rng=rng,
                                 singletons=singletons)
                for i in batch
            ]
            batch_loss = add_all(losses) if len(losses) > 1 else losses[0]
            backward(batch_loss)
            adam_update(model.params, hyper)
            total += float(batch_loss.value)
        dev = evaluate_model(model, dev_corpus) if dev_corpus else {}
        record = EpochRecord(
            epoch=epoch,
            train_loss=total / len(train_corpus),
            dev_ner_f1=dev.get("ner_f1"),
            dev_md_acc=dev.get("md_acc"),
            wall_time=time.perf_counter() - started,
        )
        history.records.append(record)
        key = _selection_key(record, metric)
        if best_key is None or key > best_key:
            best_key = key
            history.best_epoch = epoch
            best_snapshot = model.params.snapshot()
        if log is not None:
            log(f"epoch {epoch}: loss {record.train_loss:.4f} "
                f"dev_f1 {record.dev_ner_f1} dev_md {record.dev_md_acc}")
    model.params.restore(best_snapshot)
    return model, history


@dataclass
class ExperimentResult:
    """Per-run test metrics, aggregates, and pairwise significance."""

    n: int
    seeds: list[int]
    runs: dict[str, list[dict[str, float | None]]]
    stats: dict[str, dict[str, RunStats]]
    welch: dict[str, dict[str, WelchResult | str]]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seeds": self.seeds,
            "runs": self.runs,
            "stats": {
                arch: {
                    metric: {"values": list(rs.values), "mean": rs.mean,
                             "std": rs.std}
                    for metric, rs in by_metric.items()
                }
                for arch, by_metric in self.stats.items()
            },
            "welch": {
                pair: {
                    metric: (
                        result if isinstance(result, str)
                        else {"t": result.t, "df": result.df, "p": result.p}
                    )
                    for metric, result in by_metric.items()
                }
                for pair, by_metric in self.welch.items()
            },
        }


_COMPARED_METRICS = ("ner_f1", "md_acc")


def run_replications(train_corpus: list[Sentence], dev_corpus: list[Sentence],
                     test_corpus: list[Sentence],
                     architectures: list[Architecture], hyper: HyperParams,
                     n: int = 10, use_char: bool = True,
                     selection_metric: str | None = None,
                     log=None) -> ExperimentResult:
    """n independent trainings per architecture under seeds seed+0..n-1,
    evaluated on test, with Welch's t-test between architecture pairs."""
    if n < 2:
        raise ConfigurationError("replications need n >= 2")
    vocab = build_vocabularies(train_corpus)
    seeds = [hyper.seed + i for i in range(n)]
    runs: dict[str, list[dict[str, float | None]]] = {}
    for arch in architectures:
        arch_runs = []
        for seed in seeds:
            model, _ = train(
                train_corpus, dev_corpus, arch,
                replace(hyper, seed=seed), vocab=vocab, use_char=use_char,
                selection_metric=selection_metric,
            )
            result = evaluate_model(model, test_corpus)
            arch_runs.append(result)
            if log is not None:
                log(f"{arch.value} seed {seed}: " + " ".join(
                    f"{k}={v:.4f}" for k, v in result.items() if v is not None
                ))
        runs[arch.value] = arch_runs

    stats: dict[str, dict[str, RunStats]] = {}
    for arch in architectures:
        by_metric = {}
        for metric in _COMPARED_METRICS:
            values = [r.get(metric) for r in runs[arch.value]]
            if all(v is not None for v in values):
                by_metric[metric] = RunStats(tuple(values))
        stats[arch.value] = by_metric

    welch: dict[str, dict[str, WelchResult | str]] = {}
    for i, a in enumerate(architectures):
        for b in architectures[i + 1:]:
            pair = f"{a.value}|{b.value}"
            by_metric: dict[str, WelchResult | str] = {}
            for metric in _COMPARED_METRICS:
                if metric not in stats[a.value] or metric not in stats[b.value]:
                    continue
                va = stats[a.value][metric].values
                vb = stats[b.value][metric].values
                if RunStats(va).std == 0.0 and RunStats(vb).std == 0.0:
                    by_metric[metric] = "skipped: zero variance in both samples"
                else:
                    by_metric[metric] = welch_t_test(list(va), list(vb))
            if by_metric:
                welch[pair] = by_metric
    return ExperimentResult(n=n, seeds=seeds, runs=runs, stats=stats, welch=welch)
