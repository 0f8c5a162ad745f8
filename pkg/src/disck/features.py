"""Sparse feature vectors and the composition algebra over them.

A feature is a ``key=value`` pair. Keys are namespaces (``word``, ``ne-type``)
or composites built by the two composition operators:

* ``Cart(k1, k2)`` with a pair value ``(v1, v2)``, produced by :func:`cartesian`;
* ``Join(k1, k2)`` with the unit value, produced by :func:`join` when the two
  operand features carry the same value.

Composites nest, e.g. ``((qword,lat),ne-type) = ((who,∅),PERSON)``.

Text form (used by model and index files)::

    word:dog                      atomic
    qword*lat:who|∅               cartesian
    (qword*lat)*ne-type:(who|∅)|PERSON
    ne-gpe~ne-gpe:1               join

Nested composites are parenthesized; the characters ``% : * | ~ ( )`` and
tab/CR/LF are percent-escaped inside values, which keeps the mapping injective.
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Union

from .errors import FeatureFormatError, NormalizationError

UNIT = 1
"""Value carried by every join-produced feature."""

EMPTY = "∅"
"""Value of the empty lexical-answer-type feature."""

_NAMESPACE_RE = re.compile(r"[A-Za-z0-9_.\-]+\Z")
_ESCAPES = {c: f"%{ord(c):02X}" for c in "%:*|~()\t\n\r"}
_ESCAPE_TABLE = str.maketrans(_ESCAPES)
_UNESCAPE_RE = re.compile(r"%([0-9A-F]{2})")


@dataclass(frozen=True, slots=True)
class Cart:
    left: Key
    right: Key


@dataclass(frozen=True, slots=True)
class Join:
    left: Key
    right: Key


Key = Union[str, Cart, Join]
Value = Union[str, tuple, int]


class Feature(NamedTuple):
    key: Key
    value: Value

    def __str__(self) -> str:
        return serialize(self)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _escape(value: str) -> str:
    return value.translate(_ESCAPE_TABLE)


def _unescape(text: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: chr(int(m.group(1), 16)), text)


def _key_text(key: Key, nested: bool) -> str:
    if isinstance(key, str):
        if not _NAMESPACE_RE.match(key):
            raise FeatureFormatError(f"invalid namespace {key!r}")
        return key
    if isinstance(key, Cart):
        op = "*"
    elif isinstance(key, Join):
        op = "~"
    else:
        raise FeatureFormatError(f"invalid feature key {key!r}")
    text = _key_text(key.left, True) + op + _key_text(key.right, True)
    return f"({text})" if nested else text


def _value_text(key: Key, value: Value, nested: bool) -> str:
    if isinstance(key, Join):
        if value != UNIT or not isinstance(value, int):
            raise FeatureFormatError(f"join feature must carry the unit value, got {value!r}")
        return "1"
    if isinstance(key, Cart):
        if not (isinstance(value, tuple) and len(value) == 2):
            raise FeatureFormatError(f"cartesian feature needs a pair value, got {value!r}")
        text = _value_text(key.left, value[0], True) + "|" + _value_text(key.right, value[1], True)
        return f"({text})" if nested else text
    if not isinstance(value, str):
        raise FeatureFormatError(f"atomic feature needs a string value, got {value!r}")
    return _escape(value)


@lru_cache(maxsize=1 << 20)
def serialize(feature: Feature) -> str:
    """Return the canonical text form of ``feature``."""
    key, value = feature
    return _key_text(key, False) + ":" + _value_text(key, value, False)


def _split_top(text: str, ops: str) -> tuple[int, str] | None:
    """Locate the single depth-0 operator in ``text``, if any."""
    depth = 0
    found = None
    for i, c in enumerate(text):
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth < 0:
                raise FeatureFormatError(f"unbalanced parentheses in {text!r}")
        elif depth == 0 and c in ops:
            if found is not None:
                raise FeatureFormatError(f"ambiguous composite {text!r}; nest with parentheses")
            found = (i, c)
    if depth != 0:
        raise FeatureFormatError(f"unbalanced parentheses in {text!r}")
    return found


def _strip_parens(text: str) -> str:
    if not (text.startswith("(") and text.endswith(")")):
        raise FeatureFormatError(f"nested composite must be parenthesized: {text!r}")
    return text[1:-1]


def _parse_key(text: str, nested: bool) -> Key:
    split = _split_top(text, "*~")
    if split is None:
        if text.startswith("("):
            inner = _strip_parens(text)
            if _split_top(inner, "*~") is None:
                raise FeatureFormatError(f"parenthesized atomic key {text!r}")
            return _parse_key(inner, False)
        if not _NAMESPACE_RE.match(text):
            raise FeatureFormatError(f"invalid namespace {text!r}")
        return text
    if nested:
        raise FeatureFormatError(f"nested composite must be parenthesized: {text!r}")
    i, op = split
    left = _parse_key(text[:i], True)
    right = _parse_key(text[i + 1:], True)
    return Cart(left, right) if op == "*" else Join(left, right)


def _parse_value(key: Key, text: str, nested: bool) -> Value:
    if isinstance(key, Join):
        if text != "1":
            raise FeatureFormatError(f"join feature must carry value 1, got {text!r}")
        return UNIT
    if isinstance(key, Cart):
        if nested:
            text = _strip_parens(text)
        split = _split_top(text, "|")
        if split is None:
            raise FeatureFormatError(f"cartesian value needs a pair: {text!r}")
        i, _ = split
        return (_parse_value(key.left, text[:i], True), _parse_value(key.right, text[i + 1:], True))
    if any(c in text for c in ":*|~()"):
        raise FeatureFormatError(f"unescaped delimiter in value {text!r}")
    return _unescape(text)


@lru_cache(maxsize=1 << 16)
def parse_feature(text: str) -> Feature:
    """Inverse of :func:`serialize`."""
    key_text, sep, value_text = text.partition(":")
    if not sep:
        raise FeatureFormatError(f"missing ':' in feature {text!r}")
    key = _parse_key(key_text, False)
    return Feature(key, _parse_value(key, value_text, False))


def namespace_of(key: Key) -> str:
    """Text form of a key, e.g. ``(qword*lat)*ne-type``."""
    return _key_text(key, False)


# ---------------------------------------------------------------------------
# sparse vectors
# ---------------------------------------------------------------------------


class SparseVector(Mapping):
    """Immutable mapping ``Feature -> float`` without zero entries.

    Constructing from an iterable of ``(feature, weight)`` pairs sums repeated
    features. Iteration is sorted by serialized feature, so every reduction
    over a vector runs in the same order regardless of how it was built.
    """

    __slots__ = ("_w", "_order")

    def __init__(self, entries: Mapping | Iterable[tuple[Feature, float]] = ()):
        acc: dict[Feature, float] = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for f, w in items:
            acc[f] = acc.get(f, 0.0) + float(w)
        self._w = {f: w for f, w in acc.items() if w != 0.0}
        self._order: tuple[Feature, ...] | None = None

    @classmethod
    def _wrap(cls, weights: dict[Feature, float]) -> SparseVector:
        # caller guarantees float weights
        vec = cls.__new__(cls)
        vec._w = {f: w for f, w in weights.items() if w != 0.0}
        vec._order = None
        return vec

    @classmethod
    def unit(cls, features: Iterable[Feature]) -> SparseVector:
        """Binary vector with weight 1 on each distinct feature."""
        return cls._wrap(dict.fromkeys(features, 1.0))

    def _sorted(self) -> tuple[Feature, ...]:
        if self._order is None:
            self._order = tuple(sorted(self._w, key=serialize))
        return self._order

    def __getitem__(self, feature: Feature) -> float:
        return self._w[feature]

    def get(self, feature, default=0.0):
        return self._w.get(feature, default)

    def __contains__(self, feature) -> bool:
        return feature in self._w

    def __iter__(self) -> Iterator[Feature]:
        return iter(self._sorted())

    def __len__(self) -> int:
        return len(self._w)

    def items(self):
        w = self._w
        return [(f, w[f]) for f in self._sorted()]

    def __eq__(self, other) -> bool:
        if isinstance(other, SparseVector):
            return self._w == other._w
        if isinstance(other, Mapping):
            return self._w == dict(other.items())
        return NotImplemented

    __hash__ = None

    def __add__(self, other: SparseVector) -> SparseVector:
        return add(self, other)

    def __repr__(self) -> str:
        body = ", ".join(f"{serialize(f)}: {w:g}" for f, w in self.items())
        return f"SparseVector({{{body}}})"

    def is_binary(self) -> bool:
        return all(w == 1.0 for w in self._w.values())

    def to_dict(self) -> dict[str, float]:
        """Serialized-feature keyed dict, sorted, for JSON output."""
        return {serialize(f): w for f, w in self.items()}

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> SparseVector:
        return cls((parse_feature(k), w) for k, w in data.items())


def vector(*pairs: tuple[Key, Value, float]) -> SparseVector:
    """Shorthand: ``vector(("word", "dog", 1.0), ...)``."""
    return SparseVector((Feature(k, v), w) for k, v, w in pairs)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def cartesian(f: SparseVector, g: SparseVector) -> SparseVector:
    """Cartesian product: pair every feature of ``f`` with every feature of ``g``.

    The output weight is ``w_f * w_g``; for binary ``g`` that is just ``w_f``.
    """
    out = {}
    for fi, wi in f._w.items():
        ki, vi = fi
        for gj, wj in g._w.items():
            out[Feature(Cart(ki, gj[0]), (vi, gj[1]))] = wi * wj
    return SparseVector._wrap(out)


def join(f: SparseVector, g: SparseVector) -> SparseVector:
    """Join: ``((k_f ~ k_g) = 1)`` for each pair of features with equal values.

    Weights are ``w_f * w_g`` and accumulate over every value match that maps
    to the same key pair.
    """
    by_value: dict[Value, list[tuple[Key, float]]] = {}
    for gj, wj in g.items():
        by_value.setdefault(gj.value, []).append((gj.key, wj))
    out: dict[Feature, float] = {}
    for fi, wi in f.items():
        for kj, wj in by_value.get(fi.value, ()):
            feat = Feature(Join(fi.key, kj), UNIT)
            out[feat] = out.get(feat, 0.0) + wi * wj
    return SparseVector._wrap(out)


def add(f: SparseVector, g: SparseVector) -> SparseVector:
    out = dict(f._w)
    for gj, wj in g._w.items():
        out[gj] = out.get(gj, 0.0) + wj
    return SparseVector._wrap(out)


def add_all(vectors: Iterable[SparseVector]) -> SparseVector:
    out: dict[Feature, float] = {}
    for vec in vectors:
        for f, w in vec.items():
            out[f] = out.get(f, 0.0) + w
    return SparseVector._wrap(out)


def scale(f: SparseVector, c: float) -> SparseVector:
    return SparseVector._wrap({k: w * c for k, w in f._w.items()})


def dot(f: SparseVector, g: SparseVector) -> float:
    """Inner product, summed over shared features in serialized order."""
    if len(f) > len(g):
        f, g = g, f
    gw = g._w
    total = 0.0
    for feat, w in f.items():
        other = gw.get(feat)
        if other is not None:
            total += w * other
    return total


def l2_norm(f: SparseVector) -> float:
    # hypot scales internally, so tiny or huge weights neither underflow nor overflow
    return math.hypot(*f._w.values())


def l2_normalize(f: SparseVector) -> SparseVector:
    if not f:
        raise NormalizationError("cannot L2-normalize an empty vector")
    norm = l2_norm(f)
    return SparseVector._wrap({k: w / norm for k, w in f._w.items()})
