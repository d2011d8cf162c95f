"""Command-line entry points for the full workflow.

Subcommands: validate-data, filter-data, synth, train, evaluate, predict,
replicate, gradcheck.  Exit codes: 0 success, 1 usage or generic error,
2 data validation failure, 3 numeric failure (gradcheck above tolerance).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import build_vocabularies
from .config import (
    KEY_TYPES,
    entity_types_from,
    hyper_from_settings,
    merge_settings,
    parse_config_file,
)
from .corpus import (
    Sentence,
    load_corpus,
    make_token,
    filter_mismatched,
    validate_gold_in_candidates,
    write_corpus,
)
from .diffnet import HyperParams, grad_check
from .errors import (
    ConfigurationError,
    CorpusLoadError,
    DataValidationError,
    DegenerateVarianceError,
    MorphnerError,
)
from .metrics import metrics_lines
from .models import (
    Architecture,
    Model,
    load_checkpoint,
    parse_architecture,
    save_checkpoint,
)
from .synth import SyntheticSpec, generate_synthetic
from .trainer import evaluate_model, run_replications, train


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_hyper_flags(parser: argparse.ArgumentParser) -> None:
    for key in ("word_dim", "char_dim", "tag_dim", "hidden_dim", "epochs",
                "batch_size", "seed", "replications"):
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, type=int)
    for key in ("dropout", "learning_rate", "beta1", "beta2", "epsilon"):
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    parser.add_argument("--use-char", dest="use_char",
                        choices=("true", "false"))
    parser.add_argument("--selection-metric", dest="selection_metric",
                        choices=("ner_f1", "md_acc", "ner_f1_then_md"))


def _add_data_flags(parser: argparse.ArgumentParser, *names: str) -> None:
    for name in names:
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name)


def _settings(args: argparse.Namespace) -> dict[str, object]:
    from .config import coerce
    cli: dict[str, object] = {}
    for key in KEY_TYPES:
        value = getattr(args, key, None)
        if value is None:
            continue
        cli[key] = coerce(key, value) if isinstance(value, str) else value
    file_settings = {}
    if getattr(args, "config", None):
        file_settings = parse_config_file(args.config)
    return merge_settings(file_settings, cli)


def _require(settings: dict[str, object], *keys: str) -> None:
    missing = [k for k in keys if k not in settings]
    if missing:
        raise ConfigurationError(
            "missing required settings: " + ", ".join(missing)
            + " (set them in the config file or pass the matching flags)"
        )


def _print(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate_data(args) -> int:
    corpus = load_corpus(args.data, entity_types_from(_settings(args)))
    report = validate_gold_in_candidates(corpus)
    if report.is_clean:
        _print(f"{args.data}: clean ({len(corpus)} sentences)")
        return 0
    for m in report.mismatches:
        _print(
            f"sentence {m.sentence_index} token {m.token_index}: "
            f"surface {m.surface!r} gold {m.gold_raw!r} not among "
            f"{list(m.candidate_raws)}"
        )
    _print("-- grouped by (surface, gold) --")
    for (surface, gold), count in report.grouped():
        _print(f"{count}\t{surface}\t{gold}")
    _print(f"{len(report.mismatches)} mismatched tokens")
    return 2


def cmd_filter_data(args) -> int:
    corpus = load_corpus(args.data, entity_types_from(_settings(args)))
    kept = filter_mismatched(corpus)
    write_corpus(kept, args.out)
    _print(f"retained {len(kept)} of {len(corpus)} sentences -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        n_train=args.n_train, n_dev=args.n_dev, n_test=args.n_test,
        n_stems=args.n_stems, n_fillers=args.n_fillers,
        min_len=args.min_len, max_len=args.max_len, n_cases=args.n_cases,
        ambiguity=args.ambiguity, entity_prob=args.entity_prob,
        two_token_prob=args.two_token_prob, seed=args.synth_seed,
    )
    paths = generate_synthetic(spec, args.out_dir)
    for name, path in paths.items():
        _print(f"{name}\t{path}")
    return 0


def _load_corpora(settings, *keys):
    types = entity_types_from(settings)
    return [load_corpus(str(settings[key]), types) for key in keys]


def cmd_train(args) -> int:
    settings = _settings(args)
    _require(settings, "architecture", "train_data", "dev_data", "out_dir")
    architecture = parse_architecture(str(settings["architecture"]))
    train_corpus, dev_corpus = _load_corpora(settings, "train_data", "dev_data")
    hyper = hyper_from_settings(settings)
    out_dir = Path(str(settings["out_dir"]))
    out_dir.mkdir(parents=True, exist_ok=True)

    log = _print if args.verbose else None
    model, history = train(
        train_corpus, dev_corpus, architecture, hyper,
        use_char=bool(settings.get("use_char", True)),
        selection_metric=settings.get("selection_metric"),
        log=log,
    )
    save_checkpoint(model, str(out_dir / "checkpoint.json"))
    with open(out_dir / "history.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "best_epoch": history.best_epoch,
                "records": [vars(r) for r in history.records],
            },
            fh, indent=2,
        )
    if settings.get("test_data"):
        (eval_corpus,) = _load_corpora(settings, "test_data")
        eval_name = "test"
    else:
        eval_corpus, eval_name = dev_corpus, "dev"
    metrics = evaluate_model(model, eval_corpus)
    report = {"split": eval_name, "best_epoch": history.best_epoch, **metrics}
    _print(metrics_lines(report))
    with open(out_dir / "metrics.tsv", "w", encoding="utf-8") as fh:
        fh.write(metrics_lines(report))
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    _print(f"checkpoint -> {out_dir / 'checkpoint.json'}")
    return 0


def cmd_evaluate(args) -> int:
    settings = _settings(args)
    model = load_checkpoint(args.checkpoint)
    corpus = load_corpus(args.data, entity_types_from(settings))
    metrics = evaluate_model(model, corpus)
    report = {"architecture": model.architecture.value, "data": args.data,
              **metrics}
    _print(metrics_lines(report))
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "metrics.tsv", "w", encoding="utf-8") as fh:
            fh.write(metrics_lines(report))
        with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
    return 0


def cmd_predict(args) -> int:
    settings = _settings(args)
    model = load_checkpoint(args.checkpoint)
    corpus = load_corpus(args.data, entity_types_from(settings))
    for sentence in corpus:
        pred = model.predict(sentence)
        for i, token in enumerate(sentence.tokens):
            token.pred_ner = pred.ner_labels[i] if pred.ner_labels else "O"
            if pred.md_indices is not None:
                token.pred_analysis = token.candidates[pred.md_indices[i]].raw
            else:
                token.pred_analysis = "-"
    write_corpus(corpus, args.out)
    _print(f"wrote predictions for {len(corpus)} sentences -> {args.out}")
    return 0


def cmd_replicate(args) -> int:
    settings = _settings(args)
    _require(settings, "architectures", "train_data", "dev_data", "test_data")
    architectures = [
        parse_architecture(name)
        for name in str(settings["architectures"]).split(",")
        if name
    ]
    if len(architectures) < 1:
        raise ConfigurationError("no architectures given")
    corpora = _load_corpora(settings, "train_data", "dev_data", "test_data")
    hyper = hyper_from_settings(settings)
    n = int(settings.get("replications", 10))
    result = run_replications(
        *corpora, architectures=architectures, hyper=hyper, n=n,
        use_char=bool(settings.get("use_char", True)),
        selection_metric=settings.get("selection_metric"),
        log=_print if args.verbose else None,
    )
    for arch in architectures:
        for seed, run in zip(result.seeds, result.runs[arch.value]):
            values = "\t".join(
                f"{k}={v:.6f}" for k, v in run.items() if v is not None
            )
            _print(f"run\t{arch.value}\tseed={seed}\t{values}")
        for metric, stats in result.stats[arch.value].items():
            _print(f"mean\t{arch.value}\t{metric}\t{stats.mean:.6f}"
                   f"\tstd={stats.std:.6f}")
    for pair, by_metric in result.welch.items():
        for metric, outcome in by_metric.items():
            if isinstance(outcome, str):
                _print(f"welch\t{pair}\t{metric}\t{outcome}")
            else:
                _print(f"welch\t{pair}\t{metric}\tt={outcome.t:.4f}"
                       f"\tdf={outcome.df:.3f}\tp={outcome.p:.6g}")
    if settings.get("out_dir"):
        out_dir = Path(str(settings["out_dir"]))
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "result.json", "w", encoding="utf-8") as fh:
            json.dump(result.to_dict(), fh, indent=2)
        _print(f"result -> {out_dir / 'result.json'}")
    return 0


def gradcheck_fixture():
    """The canonical gradient-check fixture: a three-token sentence with
    two to three candidates per token and a vocabulary built from it."""
    sentence = Sentence([
        make_token("Moda", "B-LOC", "Moda+Prop+Cs1",
                   ["Moda+Prop+Cs1", "Mod+Verb+Cs2"]),
        make_token("ve", "O", "ve+Conj", ["ve+Conj", "ev+Noun", "v+X"]),
        make_token("Ali", "B-PER", "Ali+Prop+Cs2",
                   ["Ali+Prop+Cs2", "Al+Verb"]),
    ])
    return sentence, build_vocabularies([sentence])


def run_gradcheck_suite(eps: float = 1e-4, dims: int = 4,
                        seed: int = 5) -> dict[str, float]:
    """Finite-difference check of every architecture's total loss.

    The seed pins an initialization whose relu pre-activations and
    candidate-score margins sit well away from zero: central differences
    straddling a relu kink or an argmax flip would otherwise report errors
    that say nothing about the backward implementation.
    """
    sentence, vocab = gradcheck_fixture()
    hyper = HyperParams(word_dim=dims, char_dim=dims, tag_dim=dims,
                        hidden_dim=dims, dropout_rate=0.0, seed=seed)
    errors = {}
    for architecture in Architecture:
        model = Model(architecture, hyper, vocab)
        errors[architecture.value] = grad_check(
            lambda: model.total_loss(sentence), model.params, eps=eps
        )
    return errors


def cmd_gradcheck(args) -> int:
    errors = run_gradcheck_suite(eps=args.eps, dims=args.dims)
    failed = False
    for name, err in errors.items():
        status = "ok" if err < args.tolerance else "FAIL"
        failed = failed or err >= args.tolerance
        _print(f"{name}\t{err:.3e}\t{status}")
    return 3 if failed else 0


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> _Parser:
    parser = _Parser(prog="morphner",
                     description="joint NER and morphological disambiguation")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("validate-data", parents=[],
                       help="report tokens whose gold analysis is missing "
                            "from the candidates")
    p.add_argument("--data", required=True)
    p.add_argument("--entity-types", dest="entity_types")
    p.set_defaults(func=cmd_validate_data)

    p = sub.add_parser("filter-data",
                       help="drop sentences containing gold/candidate mismatches")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--entity-types", dest="entity_types")
    p.set_defaults(func=cmd_filter_data)

    p = sub.add_parser("synth", help="generate a synthetic corpus triple")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-train", type=int, default=150)
    p.add_argument("--n-dev", type=int, default=30)
    p.add_argument("--n-test", type=int, default=60)
    p.add_argument("--n-stems", type=int, default=20)
    p.add_argument("--n-fillers", type=int, default=30)
    p.add_argument("--min-len", type=int, default=5)
    p.add_argument("--max-len", type=int, default=9)
    p.add_argument("--n-cases", type=int, default=3)
    p.add_argument("--ambiguity", type=int, default=2)
    p.add_argument("--entity-prob", type=float, default=0.35)
    p.add_argument("--two-token-prob", type=float, default=0.2)
    p.add_argument("--seed", dest="synth_seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one architecture")
    p.add_argument("--config")
    p.add_argument("--architecture", dest="architecture")
    _add_data_flags(p, "train_data", "dev_data", "test_data", "out_dir",
                    "entity_types")
    _add_hyper_flags(p)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics of a checkpoint on a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--entity-types", dest="entity_types")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict",
                       help="emit the corpus with predicted NER and analysis "
                            "columns appended")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--entity-types", dest="entity_types")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("replicate",
                       help="train n replications per architecture and "
                            "compare with Welch's t-test")
    p.add_argument("--config")
    p.add_argument("--arch", "--architectures", dest="architectures")
    p.add_argument("--n", dest="replications", type=int)
    _add_data_flags(p, "train_data", "dev_data", "test_data", "out_dir",
                    "entity_types")
    _add_hyper_flags(p)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("gradcheck",
                       help="finite-difference gradient suite over all "
                            "architectures")
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--dims", type=int, default=4)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except (CorpusLoadError, DataValidationError, DegenerateVarianceError) as exc:
        print(f"morphner: {exc}", file=sys.stderr)
        return 2
    except MorphnerError as exc:
        print(f"morphner: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
