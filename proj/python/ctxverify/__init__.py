"""Semantic consistency verification of segmentation label maps."""

import json

from ._core import (
    DegenerateTrainingError,
    DimensionError,
    EmptyCorpusError,
    EmptyDistributionError,
    Error,
    FormatError,
    LabelGrid,
    NotEnoughObjectsError,
    Registry,
    SchemaError,
    UnknownClassError,
    VersionError,
    analyze_scene,
    evaluate_json,
    extract_objects,
    generate_contradiction,
    mutual_information,
    octant,
    select_contexts,
    synth_corpus,
    train,
)


def evaluate(registry, corpus_dir, seed, split="val", threads=1):
    """Run report as a dict; see evaluate_json for the raw document."""
    return json.loads(evaluate_json(registry, corpus_dir, seed, split, threads))


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]
