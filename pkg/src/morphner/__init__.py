"""Joint named-entity recognition and morphological disambiguation tagger."""

__version__ = "0.1.0"

from .analysis import MorphAnalysis, Vocabulary, build_vocabularies, parse_analysis
from .corpus import (
    Sentence,
    Token,
    filter_mismatched,
    load_corpus,
    validate_gold_in_candidates,
    write_corpus,
)
from .diffnet import HyperParams
from .models import Architecture, Model

__all__ = [
    "Architecture",
    "HyperParams",
    "Model",
    "MorphAnalysis",
    "Sentence",
    "Token",
    "Vocabulary",
    "build_vocabularies",
    "filter_mismatched",
    "load_corpus",
    "parse_analysis",
    "validate_gold_in_candidates",
    "write_corpus",
    "__version__",
]
