"""Discriminative sparse candidate retrieval.

Query and candidate features are composed pairwise, a sparse log-linear model
is trained over the composed features, and the trained weights are projected
back into a weighted query that an ordinary inverted index can answer.
"""

from __future__ import annotations

from .features import Cart, Feature, Join, SparseVector, cartesian, dot, join, parse_feature, serialize
from .index import InvertedIndex, build_index, exhaustive_search, search
from .model import Model, TrainConfig, TrainingInstance, train
from .projection import ProjectionTables, build_tables

__all__ = [
    "Cart", "Feature", "Join", "SparseVector", "cartesian", "dot", "join", "parse_feature", "serialize",
    "InvertedIndex", "build_index", "exhaustive_search", "search",
    "Model", "TrainConfig", "TrainingInstance", "train",
    "ProjectionTables", "build_tables",
]

__version__ = "0.1.0"
