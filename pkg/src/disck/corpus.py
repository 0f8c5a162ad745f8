"""Line-delimited JSON ingestion, corpus statistics and training pairs.

One record per line::

    {"id": "p1", "kind": "passage",
     "tokens": [{"text": "Cairo", "pos": "NNP"}, ...],   # or plain strings
     "nes": [{"start": 0, "end": 1, "type": "GPE"}]}

Mention records (``"kind": "mention"``) additionally carry ``ne_type`` and
``doc_id`` and, once the corpus pass has run, ``doc_terms``: a list of
``[term, tfidf]`` pairs for the surrounding document. Any external tagger can
feed the engine by emitting these fields.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .coref import Mention, compose_coref
from .errors import DataError
from .evaluation import Qrels
from .features import SparseVector
from .model import TrainingInstance, undersample_negatives
from .qa import (
    DEFAULT_CONFIG,
    AnnotatedText,
    IdfTable,
    NeSpan,
    QAConfig,
    Token,
    coarse_pos,
    compose_parts,
    passage_features,
    query_features,
    terms,
)

KINDS = ("passage", "question", "mention")
_TYPE_RE = re.compile(r"[A-Za-z0-9_.\-]+\Z")


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    kind: str
    tokens: tuple[tuple[str, str | None], ...]
    nes: tuple[tuple[int, int, str], ...] = ()
    ne_type: str | None = None
    doc_id: str | None = None
    doc_terms: tuple[tuple[str, float], ...] | None = None
    extras: Mapping = field(default_factory=dict, compare=False)

    def to_annotated(self) -> AnnotatedText:
        toks = tuple(Token(t, coarse_pos(p), i) for i, (t, p) in enumerate(self.tokens))
        spans = tuple(
            NeSpan(s, e, ty, " ".join(t for t, _ in self.tokens[s:e])) for s, e, ty in self.nes
        )
        return AnnotatedText(self.id, toks, spans)

    def to_mention(self) -> Mention:
        if self.kind != "mention":
            raise DataError(f"{self.id}: record of kind {self.kind!r} is not a mention")
        return Mention(
            self.id,
            " ".join(t for t, _ in self.tokens),
            self.ne_type or "OTHER",
            self.doc_id or "",
            tuple(self.doc_terms or ()),
        )

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "kind": self.kind,
            "tokens": [{"text": t, "pos": p} if p is not None else {"text": t} for t, p in self.tokens],
            "nes": [{"start": s, "end": e, "type": ty} for s, e, ty in self.nes],
        }
        if self.kind == "mention":
            out["ne_type"] = self.ne_type
            out["doc_id"] = self.doc_id
            if self.doc_terms is not None:
                out["doc_terms"] = [[t, w] for t, w in self.doc_terms]
        out.update(self.extras)
        return out


def _parse_record(obj) -> CorpusRecord:
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid or any(c.isspace() for c in rid):
        raise ValueError("'id' must be a nonempty string without whitespace")
    kind = obj.get("kind", "passage")
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    raw_tokens = obj.get("tokens")
    if not isinstance(raw_tokens, list):
        raise ValueError("'tokens' must be a list")
    tokens = []
    for tok in raw_tokens:
        if isinstance(tok, str):
            tokens.append((tok, None))
        elif isinstance(tok, dict) and isinstance(tok.get("text"), str):
            pos = tok.get("pos")
            if pos is not None and not isinstance(pos, str):
                raise ValueError("token 'pos' must be a string")
            tokens.append((tok["text"], pos))
        else:
            raise ValueError(f"bad token {tok!r}")
    nes = []
    for span in obj.get("nes", []):
        try:
            start, end, ne_type = int(span["start"]), int(span["end"]), str(span["type"])
        except (KeyError, TypeError, ValueError):
            raise ValueError(f"bad NE span {span!r}") from None
        if not 0 <= start < end <= len(tokens):
            raise ValueError(f"NE span [{start},{end}) invalid for {len(tokens)} tokens")
        if not _TYPE_RE.match(ne_type):
            raise ValueError(f"NE type {ne_type!r} has characters outside [A-Za-z0-9_.-]")
        nes.append((start, end, ne_type))
    nes.sort()
    for (_, e1, _), (s2, _, _) in zip(nes, nes[1:]):
        if s2 < e1:
            raise ValueError("NE spans overlap")
    ne_type = doc_id = doc_terms = None
    if kind == "mention":
        if not tokens:
            raise ValueError("mention needs at least one token")
        ne_type = str(obj.get("ne_type") or "OTHER")
        doc_id = str(obj.get("doc_id") or "")
        if obj.get("doc_terms") is not None:
            try:
                doc_terms = tuple((str(t), float(w)) for t, w in obj["doc_terms"])
            except (TypeError, ValueError):
                raise ValueError("'doc_terms' must be a list of [term, weight]") from None
            if any(not (w >= 0 and math.isfinite(w)) for _, w in doc_terms):
                raise ValueError("doc_terms weights must be finite and >= 0")
    known = {"id", "kind", "tokens", "nes", "ne_type", "doc_id", "doc_terms"}
    extras = {k: v for k, v in obj.items() if k not in known}
    return CorpusRecord(rid, kind, tuple(tokens), tuple(nes), ne_type, doc_id, doc_terms, extras)


def load_corpus(path: str | Path) -> Iterator[CorpusRecord]:
    """Yield validated records in file order; errors carry the line number."""
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = _parse_record(json.loads(line))
            except (json.JSONDecodeError, ValueError) as exc:
                raise DataError(str(exc), path=path, line=n) from None
            if record.id in seen:
                raise DataError(f"duplicate id {record.id!r}", path=path, line=n)
            seen.add(record.id)
            yield record


def write_corpus(records: Iterable[CorpusRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def compute_corpus_stats(
    corpus: Iterable[CorpusRecord | AnnotatedText],
    config: QAConfig = DEFAULT_CONFIG,
    smoothing: float = 1.0,
    offset: float = 1.0,
) -> IdfTable:
    """Document frequencies of normalized word terms (stopwords excluded)."""
    df: Counter[str] = Counter()
    n = 0
    for rec in corpus:
        text = rec.to_annotated() if isinstance(rec, CorpusRecord) else rec
        df.update(set(terms(text, config)))
        n += 1
    if n == 0:
        raise DataError("cannot compute corpus statistics of an empty corpus")
    return IdfTable(n, dict(df), smoothing, offset)


def compute_doc_terms(
    documents: Iterable[CorpusRecord],
    config: QAConfig = DEFAULT_CONFIG,
) -> dict[str, tuple[tuple[str, float], ...]]:
    """Raw tf-idf weights of every term in each document, keyed by document id."""
    docs = [d.to_annotated() for d in documents]
    idf = compute_corpus_stats(docs, config)
    out = {}
    for doc in docs:
        counts = Counter(terms(doc, config))
        out[doc.id] = tuple(sorted((t, tf * idf.idf(t)) for t, tf in counts.items()))
    return out


def attach_doc_terms(
    mentions: Iterable[CorpusRecord],
    doc_terms: Mapping[str, tuple[tuple[str, float], ...]],
) -> list[CorpusRecord]:
    out = []
    for m in mentions:
        if m.doc_id not in doc_terms:
            raise DataError(f"mention {m.id}: unknown document {m.doc_id!r}")
        out.append(CorpusRecord(m.id, m.kind, m.tokens, m.nes, m.ne_type, m.doc_id,
                                doc_terms[m.doc_id], m.extras))
    return out


# ---------------------------------------------------------------------------
# training pairs
# ---------------------------------------------------------------------------


def make_training_pairs(
    queries: Sequence[CorpusRecord],
    corpus: Sequence[CorpusRecord],
    qrels: Qrels,
    *,
    task: str = "qa",
    idf: IdfTable | None = None,
    qa_config: QAConfig = DEFAULT_CONFIG,
    neg_per_query: int = 50,
    seed: int = 0,
) -> list[TrainingInstance]:
    """One instance per judged pair plus ``neg_per_query`` sampled negatives.

    Queries are processed in id order, judged documents in id order, then the
    sampled negatives in draw order.
    """
    if task not in ("qa", "coref"):
        raise ValueError(f"unknown task {task!r}")
    if task == "qa" and idf is None:
        raise ValueError("the qa task needs an IdfTable")
    by_id = {rec.id: rec for rec in corpus}
    corpus_ids = [rec.id for rec in corpus]

    cand_cache: dict[str, object] = {}

    def candidate(doc_id: str):
        if doc_id not in cand_cache:
            rec = by_id[doc_id]
            cand_cache[doc_id] = (
                passage_features(rec.to_annotated(), qa_config) if task == "qa" else rec.to_mention()
            )
        return cand_cache[doc_id]

    instances = []
    for query in sorted(queries, key=lambda r: r.id):
        judged = qrels.judgments.get(query.id, {})
        missing = sorted(d for d in judged if d not in by_id)
        if missing:
            raise DataError(f"qrels for {query.id} reference unknown documents: {', '.join(missing[:5])}")
        if task == "qa":
            qf = query_features(query.to_annotated(), idf, qa_config)

            def compose(doc_id):
                return compose_parts(qf, candidate(doc_id), qa_config.all_caps)
        else:
            qm = query.to_mention()

            def compose(doc_id):
                return compose_coref(qm, candidate(doc_id))

        for doc_id in sorted(judged):
            instances.append(TrainingInstance(compose(doc_id), judged[doc_id], query.id, doc_id))
        if neg_per_query:
            pool = [c for c in corpus_ids if c != query.id]
            negatives = undersample_negatives(query.id, pool, qrels.relevant(query.id), neg_per_query, seed)
            for doc_id in negatives:
                instances.append(TrainingInstance(compose(doc_id), False, query.id, doc_id))
    return instances


def save_pairs(instances: Iterable[TrainingInstance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            row = {
                "query_id": inst.query_id,
                "doc_id": inst.doc_id,
                "label": int(inst.label),
                "features": inst.features.to_dict(),
            }
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_pairs(path: str | Path) -> list[TrainingInstance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                feats = SparseVector.from_dict(row["features"])
                label = row["label"]
                if label not in (0, 1):
                    raise ValueError(f"label must be 0 or 1, got {label!r}")
                out.append(TrainingInstance(feats, bool(label), str(row["query_id"]), str(row.get("doc_id", ""))))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(str(exc), path=path, line=n) from None
    return out
