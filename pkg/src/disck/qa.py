"""Question and passage features, and their pairwise composition for QA triage.

Query side: question word, lexical answer type, named entities, and an
L2-normalized tf-idf bag of words. Candidate side (all binary): bag of words,
NE types, named entities and the optional all-caps flag.

The pair composition is::

    (wh ⊗ lat) ⊗ ne_types  +  (wh ⊗ lat) ⊗ bow  +  ne ⋈ ne  +  tfidf ⋈ bow

Inputs arrive pre-tokenized with POS tags and NE spans; nothing here runs a
tagger or a parser.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import NamedTuple

from .errors import DataError
from .features import (
    EMPTY,
    Feature,
    SparseVector,
    add_all,
    cartesian,
    join,
    l2_normalize,
)

WH_WORDS = frozenset({"who", "whom", "whose", "what", "which", "when", "where", "why", "how"})
LAT_QWORDS = frozenset({"what", "which"})
POS_TAGS = ("NOUN", "VERB", "DET", "ADP", "OTHER")

_PTB_PREFIXES = (("NN", "NOUN"), ("VB", "VERB"), ("DT", "DET"), ("IN", "ADP"))
_UD_TAGS = {"NOUN": "NOUN", "PROPN": "NOUN", "VERB": "VERB", "AUX": "VERB",
            "DET": "DET", "ADP": "ADP"}


def coarse_pos(tag: str | None) -> str | None:
    """Map Penn Treebank or Universal Dependencies tags onto the coarse set."""
    if tag is None or tag == "":
        return None
    if tag in POS_TAGS:
        return tag
    if tag in _UD_TAGS:
        return _UD_TAGS[tag]
    for prefix, coarse in _PTB_PREFIXES:
        if tag.startswith(prefix):
            return coarse
    return "OTHER"


@dataclass(frozen=True)
class Token:
    text: str
    pos: str | None = None
    index: int = 0


@dataclass(frozen=True)
class NeSpan:
    start: int
    end: int
    ne_type: str
    surface: str


@dataclass(frozen=True)
class AnnotatedText:
    """A tokenized question or passage with its NE spans."""

    id: str
    tokens: tuple[Token, ...]
    nes: tuple[NeSpan, ...] = ()

    def __post_init__(self):
        for i, tok in enumerate(self.tokens):
            if tok.index != i:
                raise DataError(f"{self.id}: token indices must be contiguous from 0")
        prev_end = -1
        for span in sorted(self.nes, key=lambda s: s.start):
            if not 0 <= span.start < span.end <= len(self.tokens):
                raise DataError(f"{self.id}: NE span [{span.start},{span.end}) out of range")
            if span.start < prev_end:
                raise DataError(f"{self.id}: overlapping NE spans")
            surface = " ".join(t.text for t in self.tokens[span.start:span.end])
            if span.surface != surface:
                raise DataError(f"{self.id}: NE surface {span.surface!r} != {surface!r}")
            prev_end = span.end

    @classmethod
    def build(
        cls,
        id: str,
        words: Iterable[str],
        pos: Iterable[str | None] | None = None,
        nes: Iterable[tuple[int, int, str]] = (),
    ) -> AnnotatedText:
        """Construct from parallel word/tag lists and ``(start, end, type)`` spans."""
        words = list(words)
        tags = list(pos) if pos is not None else [None] * len(words)
        if len(tags) != len(words):
            raise DataError(f"{id}: {len(words)} tokens but {len(tags)} POS tags")
        tokens = tuple(Token(w, coarse_pos(t), i) for i, (w, t) in enumerate(zip(words, tags)))
        spans = []
        for start, end, ne_type in nes:
            if not 0 <= start < end <= len(tokens):
                raise DataError(f"{id}: NE span [{start},{end}) out of range")
            spans.append(NeSpan(start, end, ne_type, " ".join(words[start:end])))
        return cls(id, tokens, tuple(spans))

    @property
    def text(self) -> str:
        return " ".join(t.text for t in self.tokens)


@lru_cache(maxsize=None)
def _read_stopwords(path: str | None) -> frozenset[str]:
    if path is None:
        text = resources.files("disck").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """One lowercase token per line, UTF-8. ``None`` loads the built-in list."""
    return _read_stopwords(None if path is None else str(path))


DEFAULT_STOPWORDS = load_stopwords()


@dataclass(frozen=True)
class QAConfig:
    """Extractor toggles. ``lowercase`` and ``remove_stopwords`` apply to the
    word features only, never to NE surfaces."""

    all_caps: bool = False
    lowercase: bool = True
    remove_stopwords: bool = True
    stopwords: frozenset[str] = field(default=DEFAULT_STOPWORDS, repr=False)

    def to_dict(self) -> dict:
        return {
            "all_caps": self.all_caps,
            "lowercase": self.lowercase,
            "remove_stopwords": self.remove_stopwords,
            "stopwords": sorted(self.stopwords),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> QAConfig:
        stop = data.get("stopwords")
        return cls(
            all_caps=bool(data.get("all_caps", False)),
            lowercase=bool(data.get("lowercase", True)),
            remove_stopwords=bool(data.get("remove_stopwords", True)),
            stopwords=DEFAULT_STOPWORDS if stop is None else frozenset(stop),
        )


DEFAULT_CONFIG = QAConfig()


@dataclass(frozen=True)
class IdfTable:
    """Corpus size and document frequencies.

    idf(w) = ln((N + smoothing) / (df + smoothing)) + offset, with unseen
    terms treated as df = 0.
    """

    doc_count: int
    df: Mapping[str, int]
    smoothing: float = 1.0
    offset: float = 1.0

    def __post_init__(self):
        for term, n in self.df.items():
            if not 1 <= n <= self.doc_count:
                raise DataError(f"df[{term!r}] = {n} outside [1, {self.doc_count}]")

    def idf(self, term: str) -> float:
        s = self.smoothing
        return math.log((self.doc_count + s) / (self.df.get(term, 0) + s)) + self.offset

    def to_dict(self) -> dict:
        return {
            "doc_count": self.doc_count,
            "df": dict(sorted(self.df.items())),
            "smoothing": self.smoothing,
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> IdfTable:
        return cls(
            int(data["doc_count"]),
            {str(k): int(v) for k, v in data["df"].items()},
            float(data.get("smoothing", 1.0)),
            float(data.get("offset", 1.0)),
        )


def terms(text: AnnotatedText, config: QAConfig = DEFAULT_CONFIG) -> list[str]:
    """Word-feature terms of ``text`` in token order (repeats kept).

    Tokens without any alphanumeric character (punctuation) are dropped.
    """
    out = []
    for tok in text.tokens:
        word = tok.text.lower() if config.lowercase else tok.text
        if not any(c.isalnum() for c in word):
            continue
        if config.remove_stopwords and word.lower() in config.stopwords:
            continue
        out.append(word)
    return out


# ---------------------------------------------------------------------------
# question features
# ---------------------------------------------------------------------------


def _find_qword(q: AnnotatedText) -> tuple[str, int | None]:
    toks = q.tokens
    for i, tok in enumerate(toks):
        word = tok.text.lower()
        if word in WH_WORDS:
            if word == "how" and i + 1 < len(toks) and toks[i + 1].text.isalpha():
                return f"how {toks[i + 1].text.lower()}", i
            return word, i
    return "other", None


def extract_qword(q: AnnotatedText) -> SparseVector:
    value, _ = _find_qword(q)
    return SparseVector.unit([Feature("qword", value)])


def extract_lat(q: AnnotatedText) -> SparseVector:
    """Head of the first noun run after a what/which question word, else ∅."""
    value, at = _find_qword(q)
    head = EMPTY
    if value in LAT_QWORDS:
        run_end = None
        for tok in q.tokens[at + 1:]:
            if tok.pos == "NOUN":
                run_end = tok
            elif run_end is not None:
                break
        if run_end is not None:
            head = run_end.text.lower()
    return SparseVector.unit([Feature("lat", head)])


def extract_named_entities(t: AnnotatedText) -> SparseVector:
    return SparseVector.unit(Feature(f"ne-{s.ne_type.lower()}", s.surface) for s in t.nes)


def extract_tfidf(q: AnnotatedText, idf: IdfTable, config: QAConfig = DEFAULT_CONFIG) -> SparseVector:
    counts = Counter(terms(q, config))
    if not counts:
        return SparseVector()
    raw = SparseVector((Feature("word", w), tf * idf.idf(w)) for w, tf in counts.items())
    return l2_normalize(raw)


class QueryFeatures(NamedTuple):
    wh_lat: SparseVector
    ne: SparseVector
    tfidf: SparseVector


def query_features(q: AnnotatedText, idf: IdfTable, config: QAConfig = DEFAULT_CONFIG) -> QueryFeatures:
    return QueryFeatures(
        cartesian(extract_qword(q), extract_lat(q)),
        extract_named_entities(q),
        extract_tfidf(q, idf, config),
    )


# ---------------------------------------------------------------------------
# passage features
# ---------------------------------------------------------------------------


def extract_bow(p: AnnotatedText, config: QAConfig = DEFAULT_CONFIG) -> SparseVector:
    return SparseVector.unit(Feature("word", w) for w in terms(p, config))


def extract_ne_types(p: AnnotatedText) -> SparseVector:
    return SparseVector.unit(Feature("ne-type", s.ne_type) for s in p.nes)


def _is_all_caps(word: str) -> bool:
    core = word.strip("()[]{}\"'.,;:!?")
    return len(core) >= 2 and core.isalpha() and core.isupper()


def extract_all_caps(p: AnnotatedText) -> SparseVector:
    if any(_is_all_caps(t.text) for t in p.tokens):
        return SparseVector.unit([Feature("allCaps", "TRUE")])
    return SparseVector()


class PassageFeatures(NamedTuple):
    ne_types: SparseVector
    bow: SparseVector
    ne: SparseVector
    all_caps: SparseVector

    def combined(self) -> SparseVector:
        """The binary candidate vector stored in the index."""
        return add_all(self)


def passage_features(p: AnnotatedText, config: QAConfig = DEFAULT_CONFIG) -> PassageFeatures:
    return PassageFeatures(
        extract_ne_types(p),
        extract_bow(p, config),
        extract_named_entities(p),
        extract_all_caps(p) if config.all_caps else SparseVector(),
    )


def candidate_vector(p: AnnotatedText, config: QAConfig = DEFAULT_CONFIG) -> SparseVector:
    return passage_features(p, config).combined()


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------


def compose_parts(qf: QueryFeatures, pf: PassageFeatures, all_caps: bool = False) -> SparseVector:
    blocks = [
        cartesian(qf.wh_lat, pf.ne_types),
        cartesian(qf.wh_lat, pf.bow),
        join(qf.ne, pf.ne),
        join(qf.tfidf, pf.bow),
    ]
    if all_caps:
        blocks.append(cartesian(qf.wh_lat, pf.all_caps))
    return add_all(blocks)


def compose_qa(
    q: AnnotatedText,
    p: AnnotatedText,
    idf: IdfTable,
    config: QAConfig = DEFAULT_CONFIG,
) -> SparseVector:
    """Pairwise feature vector of a (question, passage) pair."""
    return compose_parts(query_features(q, idf, config), passage_features(p, config), config.all_caps)
