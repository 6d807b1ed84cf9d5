"""Python bindings for the gui-tod toolkit.

Structured results come back as plain dicts and lists.
"""

import json
import os

from . import _core
from ._core import (
    CoverageError,
    Error,
    ParseError,
    ResolutionError,
    TrainingError,
    ValidationError,
    actions_equal,
    canonical_action,
    corpus_bleu,
    input_em_f1,
    split_sizes,
)

__all__ = [
    "CoverageError",
    "Error",
    "ParseError",
    "ResolutionError",
    "TrainingError",
    "ValidationError",
    "actions_equal",
    "canonical_action",
    "corpus_bleu",
    "corpus_stats",
    "evaluate_baseline",
    "evaluate_model",
    "extract_items",
    "input_em_f1",
    "pseudo_layout_items",
    "split_sizes",
    "train",
]


def extract_items(xml, parent_only=False):
    return json.loads(_core.extract_items(xml, parent_only))


def pseudo_layout_items(records, width, height):
    text = records if isinstance(records, str) else json.dumps(records)
    return json.loads(_core.pseudo_layout_items(text, width, height))


def corpus_stats(path):
    return json.loads(_core.corpus_stats(os.fspath(path)))


def evaluate_baseline(corpus, kind, seed=0, train=None):
    train = None if train is None else os.fspath(train)
    return json.loads(_core.evaluate_baseline(os.fspath(corpus), kind, seed, train))


def train(corpus, out, config=None):
    _core.train(os.fspath(corpus), json.dumps(config or {}), os.fspath(out))


def evaluate_model(corpus, model_dir):
    return json.loads(_core.evaluate_model(os.fspath(corpus), os.fspath(model_dir)))
