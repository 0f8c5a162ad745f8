"""Retrieval metrics (R@k, b-pref, MAP, MRR) over TREC-style qrels and runs.

Conventions follow trec_eval: means are taken over every query with at least
one judged-relevant document (queries missing from the run score 0), queries
with no relevant judgments are excluded and counted, and unjudged documents
count as nonrelevant except inside b-pref, which ignores them.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import DataError

Ranking = Sequence[tuple[str, float]]


@dataclass
class Qrels:
    """``judgments[qid][doc_id]`` is True (relevant) or False (nonrelevant)."""

    judgments: dict[str, dict[str, bool]] = field(default_factory=dict)

    def add(self, qid: str, doc_id: str, relevant: bool) -> None:
        per_query = self.judgments.setdefault(qid, {})
        if doc_id in per_query:
            raise DataError(f"duplicate judgment for ({qid}, {doc_id})")
        per_query[doc_id] = bool(relevant)

    def relevant(self, qid: str) -> set[str]:
        return {d for d, r in self.judgments.get(qid, {}).items() if r}

    def nonrelevant(self, qid: str) -> set[str]:
        return {d for d, r in self.judgments.get(qid, {}).items() if not r}

    def queries(self) -> list[str]:
        return sorted(self.judgments)

    def subset(self, qids: Iterable[str]) -> Qrels:
        keep = set(qids)
        return Qrels({q: dict(j) for q, j in self.judgments.items() if q in keep})


@dataclass
class RunList:
    """Per query, a ranked list of ``(doc_id, score)``; rank = position + 1."""

    rankings: dict[str, list[tuple[str, float]]] = field(default_factory=dict)

    def __post_init__(self):
        for qid, ranking in self.rankings.items():
            _validate_ranking(qid, ranking)

    def get(self, qid: str) -> list[tuple[str, float]]:
        return self.rankings.get(qid, [])


def _validate_ranking(qid: str, ranking: Ranking) -> None:
    seen = set()
    prev = None
    for doc_id, score in ranking:
        if doc_id in seen:
            raise DataError(f"query {qid}: document {doc_id} ranked twice")
        seen.add(doc_id)
        if prev is not None and score > prev:
            raise DataError(f"query {qid}: scores increase at {doc_id}")
        prev = score


# ---------------------------------------------------------------------------
# per-query metrics
# ---------------------------------------------------------------------------


def query_recall(ranking: Ranking, relevant: set[str], k: int) -> float:
    hits = sum(1 for doc_id, _ in ranking[:k] if doc_id in relevant)
    return hits / len(relevant)


def average_precision(ranking: Ranking, relevant: set[str]) -> float:
    if not relevant:
        raise ValueError("average precision needs at least one relevant document")
    hits = 0
    # exact rational sum, rounded once, so hand-computed fixtures match exactly
    total = Fraction(0)
    for rank, (doc_id, _) in enumerate(ranking, start=1):
        if doc_id in relevant:
            hits += 1
            total += Fraction(hits, rank)
    return float(total / len(relevant))


def reciprocal_rank(ranking: Ranking, relevant: set[str]) -> float:
    for rank, (doc_id, _) in enumerate(ranking, start=1):
        if doc_id in relevant:
            return 1.0 / rank
    return 0.0


def query_bpref(ranking: Ranking, relevant: set[str], nonrelevant: set[str]) -> float:
    R, N = len(relevant), len(nonrelevant)
    cap = min(R, N)
    nonrel_above = 0
    total = 0.0
    for doc_id, _ in ranking:
        if doc_id in relevant:
            total += 1.0 if cap == 0 else 1.0 - min(nonrel_above, cap) / cap
        elif doc_id in nonrelevant:
            nonrel_above += 1
    return total / R


# ---------------------------------------------------------------------------
# aggregates
# ---------------------------------------------------------------------------


@dataclass
class _Evaluable:
    qids: list[str]
    excluded: list[str]


def _evaluable(qrels: Qrels) -> _Evaluable:
    qids, excluded = [], []
    for qid in qrels.queries():
        (qids if qrels.relevant(qid) else excluded).append(qid)
    return _Evaluable(qids, excluded)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def recall_at_k(run: RunList, qrels: Qrels, k: int) -> float:
    ev = _evaluable(qrels)
    return _mean([query_recall(run.get(q), qrels.relevant(q), k) for q in ev.qids])


def mean_average_precision(run: RunList, qrels: Qrels) -> float:
    ev = _evaluable(qrels)
    return _mean([average_precision(run.get(q), qrels.relevant(q)) for q in ev.qids])


def mrr(run: RunList, qrels: Qrels) -> float:
    ev = _evaluable(qrels)
    return _mean([reciprocal_rank(run.get(q), qrels.relevant(q)) for q in ev.qids])


def bpref(run: RunList, qrels: Qrels) -> float:
    ev = _evaluable(qrels)
    return _mean([query_bpref(run.get(q), qrels.relevant(q), qrels.nonrelevant(q)) for q in ev.qids])


@dataclass
class EvalReport:
    metrics: dict[str, float]
    num_queries: int
    excluded_queries: int
    warnings: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        width = max(len(m) for m in self.metrics) if self.metrics else 0
        lines = [f"{name:<{width}}  {value:.4f}" for name, value in self.metrics.items()]
        lines.append(f"{'queries':<{width}}  {self.num_queries}")
        if self.excluded_queries:
            lines.append(f"{'excluded':<{width}}  {self.excluded_queries}")
        return "\n".join(lines) + "\n"

    def to_lines(self) -> str:
        """trec_eval-like ``metric<TAB>all<TAB>value`` lines."""
        lines = [f"{name}\tall\t{value!r}" for name, value in self.metrics.items()]
        lines.append(f"num_q\tall\t{self.num_queries}")
        lines.append(f"num_excluded\tall\t{self.excluded_queries}")
        lines.extend(f"warning\tall\t{w}" for w in self.warnings)
        return "\n".join(lines) + "\n"


def evaluate_all(run: RunList, qrels: Qrels, ks: Iterable[int] = (1000,)) -> EvalReport:
    ev = _evaluable(qrels)
    warnings = []
    if ev.excluded:
        warnings.append(f"{len(ev.excluded)} queries without relevant judgments excluded")
    if not ev.qids:
        warnings.append("no evaluable queries; all metrics are 0")
    missing = [q for q in ev.qids if not run.get(q)]
    if missing:
        warnings.append(f"{len(missing)} evaluable queries have no retrieved documents")
    metrics = {f"R@{k}": recall_at_k(run, qrels, k) for k in ks}
    metrics["bpref"] = bpref(run, qrels)
    metrics["MAP"] = mean_average_precision(run, qrels)
    metrics["MRR"] = mrr(run, qrels)
    return EvalReport(metrics, len(ev.qids), len(ev.excluded), warnings)


# ---------------------------------------------------------------------------
# TREC files
# ---------------------------------------------------------------------------


def read_qrels(path: str | Path) -> Qrels:
    """Lines of ``qid 0 docid rel`` with rel in {0, 1}."""
    qrels = Qrels()
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4 or parts[3] not in ("0", "1"):
                raise DataError("expected 'qid 0 docid rel' with rel in {0,1}", path=path, line=n)
            try:
                qrels.add(parts[0], parts[2], parts[3] == "1")
            except DataError as exc:
                raise DataError(str(exc), path=path, line=n) from None
    return qrels


def write_qrels(qrels: Qrels, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in qrels.queries():
            for doc_id, rel in sorted(qrels.judgments[qid].items()):
                fh.write(f"{qid} 0 {doc_id} {int(rel)}\n")


def read_run(path: str | Path) -> RunList:
    """Lines of ``qid Q0 docid rank score tag``; ranks must run 1..n per query."""
    rows: dict[str, list[tuple[int, str, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise DataError("expected 'qid Q0 docid rank score tag'", path=path, line=n)
            try:
                rank, score = int(parts[3]), float(parts[4])
            except ValueError:
                raise DataError("rank and score must be numeric", path=path, line=n) from None
            rows.setdefault(parts[0], []).append((rank, parts[2], score))
    rankings = {}
    for qid, entries in rows.items():
        entries.sort()
        if [r for r, _, _ in entries] != list(range(1, len(entries) + 1)):
            raise DataError(f"query {qid}: ranks are not contiguous from 1", path=path)
        rankings[qid] = [(d, s) for _, d, s in entries]
    try:
        return RunList(rankings)
    except DataError as exc:
        raise DataError(str(exc), path=path) from None


def format_run(run: RunList, tag: str = "disck") -> str:
    lines = []
    for qid in sorted(run.rankings):
        for rank, (doc_id, score) in enumerate(run.rankings[qid], start=1):
            lines.append(f"{qid} Q0 {doc_id} {rank} {score!r} {tag}")
    return "\n".join(lines) + ("\n" if lines else "")


def write_run(run: RunList, path: str | Path, tag: str = "disck") -> None:
    Path(path).write_text(format_run(run, tag), encoding="utf-8")


def run_from_results(results: Mapping[str, object]) -> RunList:
    """Build a run from ``{qid: SearchResult}``."""
    return RunList({qid: list(res.ranked) for qid, res in results.items()})
