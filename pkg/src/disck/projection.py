"""Project query-side features through a trained model into a candidate-side query.

For a cartesian weight θ[(k,k')=(v,v')] a query feature (k=v, w) expands to
(k'=v', w·θ); for a join weight θ[(k~k')=1] it expands to (k'=v, w·θ). Dotting
the projected vector with a binary candidate vector then gives exactly the
model score of the composed pair, which turns ranking into a sparse inner
product search over an inverted index.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

from .coref import Mention, overall_features
from .errors import FeatureFormatError
from .features import Cart, Feature, Join, Key, SparseVector, serialize, namespace_of
from .model import Model
from .qa import DEFAULT_CONFIG, AnnotatedText, IdfTable, QAConfig, query_features


@dataclass(frozen=True)
class ProjectionTables:
    """Reverse index over θ.

    ``cart`` maps a left feature to its ``(right feature, θ)`` expansions;
    ``joinmap`` maps a left key to its ``(right key, θ)`` expansions.
    """

    cart: Mapping[Feature, tuple[tuple[Feature, float], ...]]
    joinmap: Mapping[Key, tuple[tuple[Key, float], ...]]
    top_m: int | None = None


def build_tables(model: Model, top_m: int | None = None) -> ProjectionTables:
    """Index the composed weights of ``model``; plain features are ignored.

    ``top_m`` keeps only the m largest-magnitude expansions per entry. That
    breaks the exact score equivalence and is off by default.
    """
    cart: dict[Feature, list[tuple[Feature, float]]] = {}
    joinmap: dict[Key, list[tuple[Key, float]]] = {}
    for feat, theta in model.weights.items():
        key, value = feat
        if isinstance(key, Cart):
            if not (isinstance(value, tuple) and len(value) == 2):
                raise FeatureFormatError(f"cartesian weight without a pair value: {feat!r}")
            left = Feature(key.left, value[0])
            cart.setdefault(left, []).append((Feature(key.right, value[1]), theta))
        elif isinstance(key, Join):
            joinmap.setdefault(key.left, []).append((key.right, theta))
        elif not isinstance(key, str):
            raise FeatureFormatError(f"malformed feature key {key!r}")

    def finish(entries, sort_key):
        if top_m is not None:
            entries = sorted(entries, key=lambda e: -abs(e[1]))[:top_m]
        return tuple(sorted(entries, key=sort_key))

    return ProjectionTables(
        cart={f: finish(e, lambda e: serialize(e[0])) for f, e in cart.items()},
        joinmap={k: finish(e, lambda e: namespace_of(e[0])) for k, e in joinmap.items()},
        top_m=top_m,
    )


def project_cartesian(tables: ProjectionTables, f: SparseVector) -> SparseVector:
    out: dict[Feature, float] = {}
    for feat, w in f.items():
        for right, theta in tables.cart.get(feat, ()):
            out[right] = out.get(right, 0.0) + w * theta
    return SparseVector._wrap(out)


def project_join(tables: ProjectionTables, f: SparseVector) -> SparseVector:
    out: dict[Feature, float] = {}
    for (key, value), w in f.items():
        for right_key, theta in tables.joinmap.get(key, ()):
            feat = Feature(right_key, value)
            out[feat] = out.get(feat, 0.0) + w * theta
    return SparseVector._wrap(out)


def project_qa_query(
    tables: ProjectionTables,
    q: AnnotatedText,
    idf: IdfTable,
    config: QAConfig = DEFAULT_CONFIG,
) -> SparseVector:
    """t(q) = t_cart(wh ⊗ lat) + t_join(ne + tfidf)."""
    qf = query_features(q, idf, config)
    return project_cartesian(tables, qf.wh_lat) + project_join(tables, qf.ne + qf.tfidf)


def project_coref_query(tables: ProjectionTables, m: Mention) -> SparseVector:
    return project_join(tables, overall_features(m))
