"""Inverted index over binary candidate vectors with top-k inner-product search.

Scoring walks only the postings of the query's features: cursors over the
postings lists sit in a min-heap keyed by document ordinal, every document on
the frontier is scored once (document-at-a-time) and the best k are kept in a
bounded heap. Documents sharing no feature with the query are never touched.

Index file layout (little-endian)::

    b"DISCKIDX" | u16 version | u64 payload length | payload | u32 crc32

where crc32 covers everything before it, and the payload is varint-framed:
meta JSON, document ids, then per feature (serialized text order) its
postings as a count followed by delta-encoded ordinals.
"""

from __future__ import annotations

import heapq
import json
import struct
import zlib
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .errors import (
    FeatureFormatError,
    IndexBuildError,
    IndexChecksumError,
    IndexFormatError,
    IndexTruncatedError,
    IndexVersionError,
)
from .features import Feature, SparseVector, dot, parse_feature, serialize

MAGIC = b"DISCKIDX"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sHQ")
_CRC = struct.Struct("<I")


@dataclass(eq=False)
class InvertedIndex:
    postings: dict[Feature, tuple[int, ...]]
    doc_ids: list[str]
    meta: dict = field(default_factory=dict)

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, InvertedIndex):
            return NotImplemented
        return (self.doc_ids == other.doc_ids and self.postings == other.postings
                and self.meta == other.meta)


class SearchStats(NamedTuple):
    docs_scored: int
    postings_touched: int


@dataclass(frozen=True)
class SearchResult:
    ranked: list[tuple[str, float]]
    stats: SearchStats


def build_index(candidates: Iterable[tuple[str, SparseVector]], meta: Mapping | None = None) -> InvertedIndex:
    """Index binary candidate vectors; ordinals follow input order."""
    postings: dict[Feature, list[int]] = {}
    doc_ids: list[str] = []
    seen: set[str] = set()
    for ordinal, (doc_id, vec) in enumerate(candidates):
        if doc_id in seen:
            raise IndexBuildError(f"duplicate doc id {doc_id!r}")
        seen.add(doc_id)
        doc_ids.append(doc_id)
        for feat, w in vec._w.items():
            if w != 1.0:
                raise IndexBuildError(
                    f"doc {doc_id!r}: feature {serialize(feat)} has weight {w}; candidate features must be binary"
                )
            postings.setdefault(feat, []).append(ordinal)
    frozen = {f: tuple(postings[f]) for f in sorted(postings, key=serialize)}
    return InvertedIndex(frozen, doc_ids, dict(meta or {}))


class _TopK:
    """Bounded heap keeping the k best (score desc, ordinal asc)."""

    def __init__(self, k: int):
        self.k = k
        self.heap: list[tuple[float, int]] = []

    def push(self, score: float, ordinal: int) -> None:
        item = (score, -ordinal)
        if len(self.heap) < self.k:
            heapq.heappush(self.heap, item)
        elif item > self.heap[0]:
            heapq.heapreplace(self.heap, item)

    def ranked(self) -> list[tuple[int, float]]:
        return [(-neg, s) for s, neg in sorted(self.heap, reverse=True)]


def _check_k(k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")


def search(index: InvertedIndex, query: SparseVector, k: int) -> SearchResult:
    """Top-k documents by ``query · f_P(p)`` over documents sharing a feature."""
    _check_k(k)
    lists: list[tuple[int, ...]] = []
    weights: list[float] = []
    for feat, w in query.items():
        plist = index.postings.get(feat)
        if plist:
            lists.append(plist)
            weights.append(w)

    # cursor i points at lists[i][pos[i]]; the heap holds (ordinal, i)
    pos = [0] * len(lists)
    frontier = [(plist[0], i) for i, plist in enumerate(lists)]
    heapq.heapify(frontier)
    top = _TopK(k)
    docs_scored = 0
    touched = 0
    while frontier:
        doc = frontier[0][0]
        score = 0.0
        while frontier and frontier[0][0] == doc:
            _, i = frontier[0]
            score += weights[i]
            touched += 1
            p = pos[i] + 1
            pos[i] = p
            if p < len(lists[i]):
                heapq.heapreplace(frontier, (lists[i][p], i))
            else:
                heapq.heappop(frontier)
        docs_scored += 1
        top.push(score, doc)
    ranked = [(index.doc_ids[o], s) for o, s in top.ranked()]
    return SearchResult(ranked, SearchStats(docs_scored, touched))


def search_many(
    index: InvertedIndex,
    queries: Mapping[str, SparseVector],
    k: int,
    workers: int = 1,
) -> dict[str, SearchResult]:
    """Search every query; the result is keyed and ordered by query id."""
    qids = sorted(queries)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda q: search(index, queries[q], k), qids))
    else:
        results = [search(index, queries[q], k) for q in qids]
    return dict(zip(qids, results))


def exhaustive_search(
    candidates: Sequence[tuple[str, SparseVector]],
    query: SparseVector,
    k: int,
) -> SearchResult:
    """Score every candidate directly; the reference for :func:`search`."""
    _check_k(k)
    scored = []
    touched = 0
    for ordinal, (doc_id, vec) in enumerate(candidates):
        shared = sum(1 for f in query._w if f in vec._w)
        if shared:
            touched += shared
            scored.append((-dot(query, vec), ordinal, doc_id))
    scored.sort()
    ranked = [(doc_id, -neg) for neg, _, doc_id in scored[:k]]
    return SearchResult(ranked, SearchStats(len(scored), touched))


def index_stats(index: InvertedIndex) -> dict[str, int]:
    return {
        "doc_count": index.doc_count,
        "feature_count": len(index.postings),
        "total_postings": sum(len(p) for p in index.postings.values()),
    }


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def _put_varint(out: bytearray, n: int) -> None:
    while n >= 0x80:
        out.append((n & 0x7F) | 0x80)
        n >>= 7
    out.append(n)


def _put_bytes(out: bytearray, data: bytes) -> None:
    _put_varint(out, len(data))
    out += data


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def varint(self) -> int:
        data, pos = self.data, self.pos
        shift = result = 0
        while True:
            if pos >= len(data):
                raise IndexFormatError("varint runs past end of payload")
            b = data[pos]
            pos += 1
            result |= (b & 0x7F) << shift
            if b < 0x80:
                break
            shift += 7
        self.pos = pos
        return result

    def bytes(self) -> bytes:
        n = self.varint()
        end = self.pos + n
        if end > len(self.data):
            raise IndexFormatError("field runs past end of payload")
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk


def encode_index(index: InvertedIndex) -> bytes:
    payload = bytearray()
    _put_bytes(payload, json.dumps(index.meta, sort_keys=True, ensure_ascii=False).encode("utf-8"))
    _put_varint(payload, index.doc_count)
    for doc_id in index.doc_ids:
        _put_bytes(payload, doc_id.encode("utf-8"))
    items = sorted(index.postings.items(), key=lambda kv: serialize(kv[0]))
    _put_varint(payload, len(items))
    for feat, plist in items:
        _put_bytes(payload, serialize(feat).encode("utf-8"))
        _put_varint(payload, len(plist))
        prev = 0
        for o in plist:
            _put_varint(payload, o - prev)
            prev = o
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, len(payload)) + bytes(payload)
    return head + _CRC.pack(zlib.crc32(head))


def decode_index(data: bytes) -> InvertedIndex:
    if len(data) < _HEADER.size:
        raise IndexTruncatedError(f"index file is {len(data)} bytes, shorter than its header")
    magic, version, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise IndexFormatError("not a disck index (bad magic)")
    if version != FORMAT_VERSION:
        raise IndexVersionError(f"index format version {version}, expected {FORMAT_VERSION}")
    expected = _HEADER.size + length + _CRC.size
    if len(data) < expected:
        raise IndexTruncatedError(f"index file is {len(data)} bytes, expected {expected}")
    if len(data) > expected:
        raise IndexFormatError(f"{len(data) - expected} trailing bytes after checksum")
    body = data[:-_CRC.size]
    (crc,) = _CRC.unpack_from(data, len(body))
    if zlib.crc32(body) != crc:
        raise IndexChecksumError("index checksum mismatch")

    r = _Reader(body[_HEADER.size:])
    try:
        meta = json.loads(r.bytes().decode("utf-8"))
        doc_ids = [r.bytes().decode("utf-8") for _ in range(r.varint())]
        postings = {}
        for _ in range(r.varint()):
            feat = parse_feature(r.bytes().decode("utf-8"))
            ordinal = -1
            plist = []
            for j in range(r.varint()):
                delta = r.varint()
                if j and delta == 0:
                    raise IndexFormatError(f"postings of {serialize(feat)} not strictly increasing")
                ordinal = delta if j == 0 else ordinal + delta
                plist.append(ordinal)
            if plist and plist[-1] >= len(doc_ids):
                raise IndexFormatError(f"postings of {serialize(feat)} exceed doc count")
            postings[feat] = tuple(plist)
    except (UnicodeDecodeError, json.JSONDecodeError, FeatureFormatError) as exc:
        raise IndexFormatError(f"corrupt index payload: {exc}") from exc
    if r.pos != len(r.data):
        raise IndexFormatError("unread bytes at end of payload")
    return InvertedIndex(postings, doc_ids, meta)


def save_index(index: InvertedIndex, path: str | Path) -> None:
    Path(path).write_bytes(encode_index(index))


def load_index(path: str | Path) -> InvertedIndex:
    return decode_index(Path(path).read_bytes())
