"""Gap-labeling Chinese word segmentation.

Segmented sentences are lists of words; raw sentences are plain strings.
"""

import json

from ._gapseg import (
    AlignmentError,
    ConfigError,
    ContractError,
    DecodeError,
    Error,
    IngestionError,
    IoError,
    LoadError,
    Model,
    ShapeError,
    TrainingError,
    decode,
    f1,
    from_gap_labels,
    hybrid_combine,
    parse_line,
    render,
    tagset_labels,
    to_gap_labels,
    validate,
)
from . import _gapseg

__all__ = [
    "AlignmentError",
    "ConfigError",
    "ContractError",
    "DecodeError",
    "Error",
    "IngestionError",
    "IoError",
    "LoadError",
    "Model",
    "ShapeError",
    "TrainingError",
    "decode",
    "default_config",
    "f1",
    "from_gap_labels",
    "hybrid_combine",
    "parse_line",
    "read_corpus",
    "render",
    "tagset_labels",
    "to_gap_labels",
    "train",
    "validate",
]


def default_config(tagset="bems"):
    """Default training configuration for a tag set, as a dict."""
    return json.loads(_gapseg.default_config_json(tagset))


def train(corpus, config=None, dev=None):
    """Train a model and return ``(model, epoch_log)``.

    ``config`` overrides the tag-set defaults; its ``tagset`` key picks the
    scheme (``"01"``, ``"be"`` or ``"bems"``). Without ``dev`` the last tenth
    of ``corpus`` is held out.
    """
    return Model.train(corpus, json.dumps(config or {}), dev)


def read_corpus(path):
    """Segmented sentences from a whitespace-separated UTF-8 file."""
    with open(path, encoding="utf-8") as f:
        return [words for words in map(parse_line, f) if words]
