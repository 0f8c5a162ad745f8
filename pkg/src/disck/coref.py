"""Mention features for cross-document coreferent mention retrieval.

Each mention gets ``type ⊗ (text + acro + l3g + dc)``; a query/candidate pair
is the join of the two mentions' vectors, so query and candidate sides are
built the same way.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError
from .features import Feature, SparseVector, add_all, cartesian, join

MENTION_TYPES = frozenset({"PERSON", "LOC", "GPE", "ORG", "OTHER"})
DOC_CONTEXT_SIZE = 10


@dataclass(frozen=True)
class Mention:
    id: str
    surface: str
    ne_type: str
    doc_id: str = ""
    doc_terms: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if not self.surface:
            raise DataError(f"{self.id}: mention surface must be nonempty")
        for term, weight in self.doc_terms:
            if not weight >= 0:
                raise DataError(f"{self.id}: doc term {term!r} has negative weight {weight}")


def _require_surface(m: Mention) -> None:
    if not m.surface:
        raise DataError(f"{m.id}: mention surface must be nonempty")


def extract_mention_text(m: Mention) -> SparseVector:
    _require_surface(m)
    return SparseVector.unit([Feature("text", m.surface)])


def normalize_type(ne_type: str) -> str:
    return ne_type if ne_type in MENTION_TYPES else "OTHER"


def extract_type(m: Mention) -> SparseVector:
    return SparseVector.unit([Feature("type", normalize_type(m.ne_type))])


def acronym(surface: str) -> str | None:
    """Initials of the capitalized words; lowercase words ("of", "the") are skipped."""
    words = surface.split()
    if len(words) < 2:
        return None
    letters = "".join(w[0] for w in words if w[0].isupper())
    return letters.upper() if len(letters) >= 2 else None


def extract_acronym(m: Mention) -> SparseVector:
    acro = acronym(m.surface)
    return SparseVector.unit([Feature("acro", acro)]) if acro else SparseVector()


def letter_trigrams(surface: str) -> list[str]:
    grams = []
    for word in surface.lower().split():
        if len(word) < 3:
            grams.append(word)
        else:
            grams.extend(word[i:i + 3] for i in range(len(word) - 2))
    return grams


def extract_letter_trigrams(m: Mention) -> SparseVector:
    return SparseVector.unit(Feature("l3g", g) for g in letter_trigrams(m.surface))


def top_doc_terms(doc_terms, n: int = DOC_CONTEXT_SIZE) -> list[str]:
    ranked = sorted(doc_terms, key=lambda tw: (-tw[1], tw[0]))
    return [t for t, _ in ranked[:n]]


def extract_doc_context(m: Mention) -> SparseVector:
    return SparseVector.unit(Feature("dc", t) for t in top_doc_terms(m.doc_terms))


def overall_features(m: Mention) -> SparseVector:
    """Type-paired mention vector; also the candidate vector stored in the index."""
    body = add_all([
        extract_mention_text(m),
        extract_acronym(m),
        extract_letter_trigrams(m),
        extract_doc_context(m),
    ])
    return cartesian(extract_type(m), body)


def compose_coref(a: Mention, b: Mention) -> SparseVector:
    return join(overall_features(a), overall_features(b))
