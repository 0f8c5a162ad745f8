"""Deterministic synthetic corpora standing in for licensed evaluation data.

QA: every question asks about a topic entity and expects an answer of one NE
type (``who`` → PERSON, ``what city`` → GPE, ...). Its relevant passages
mention the topic entity and contain an NE of the expected type. Distractors
share only question words with it, no entity; some carry a different entity
of the topic's type, and with probability ``noise`` an answer-type NE. Word
overlap alone cannot separate them from relevant passages, while a model
that pairs question type with NE type and joins shared entities can. The
remaining passages are random background text.

Coref: entities with spelling variants, acronyms and short forms, mentioned
in documents whose vocabulary is drawn from a per-entity topic.
"""

from __future__ import annotations

import random
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import CorpusRecord, attach_doc_terms, compute_doc_terms, write_corpus
from .errors import DataError
from .evaluation import Qrels, write_qrels

NE_TYPES = (
    "PERSON", "GPE", "ORG", "DATE", "LOC", "CARDINAL", "MONEY", "NORP", "LANGUAGE",
    "PERCENT", "TIME", "QUANTITY", "FAC", "PRODUCT", "EVENT", "WORK_OF_ART", "LAW", "ORDINAL",
)

# answer type -> [(question word tokens, lexical answer type or None)]
QUESTION_FORMS = {
    "PERSON": [(("Who",), None), (("Which",), "person"), (("What",), "author")],
    "GPE": [(("What",), "city"), (("Which",), "country")],
    "ORG": [(("What",), "company"), (("Which",), "organization")],
    "DATE": [(("When",), None), (("What",), "year")],
    "LOC": [(("Where",), None), (("What",), "river")],
    "CARDINAL": [(("How", "many"), None)],
    "MONEY": [(("How", "much"), None), (("What",), "price")],
    "NORP": [(("What",), "nationality")],
    "LANGUAGE": [(("What",), "language")],
    "PERCENT": [(("What",), "percentage")],
    "TIME": [(("What",), "time")],
    "QUANTITY": [(("How", "far"), None), (("What",), "distance")],
    "FAC": [(("What",), "airport"), (("Which",), "building")],
    "PRODUCT": [(("What",), "product")],
    "EVENT": [(("What",), "event")],
    "WORK_OF_ART": [(("What",), "book")],
    "LAW": [(("What",), "law")],
    "ORDINAL": [(("What",), "rank")],
}
TOPIC_TYPES = ("PERSON", "ORG", "GPE")
AUX_VERBS = ("did", "does", "is", "was")
MONTHS = ("January", "February", "March", "April", "May", "June", "July",
          "August", "September", "October", "November", "December")
SPLITS = ("train", "train", "dev", "test")

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


@dataclass(frozen=True)
class SynthParams:
    num_queries: int = 200
    corpus_size: int = 20000
    num_ne_types: int = 18
    vocab_size: int = 5000
    noise: float = 0.1

    def validate(self) -> None:
        if self.num_queries < 1 or self.corpus_size < 1 or self.vocab_size < 10:
            raise DataError("num_queries, corpus_size must be positive and vocab_size >= 10")
        if self.corpus_size < self.num_queries:
            raise DataError(f"corpus_size {self.corpus_size} < num_queries {self.num_queries}")
        if not 2 <= self.num_ne_types <= len(NE_TYPES):
            raise DataError(f"num_ne_types must be in [2, {len(NE_TYPES)}]")
        if not 0.0 <= self.noise <= 1.0:
            raise DataError("noise must be in [0, 1]")


@dataclass
class SynthData:
    corpus: list[CorpusRecord]
    questions: list[CorpusRecord]
    qrels: Qrels
    splits: dict[str, str] = field(default_factory=dict)

    def questions_in(self, split: str) -> list[CorpusRecord]:
        return [q for q in self.questions if self.splits.get(q.id) == split]

    def qrels_in(self, split: str) -> Qrels:
        return self.qrels.subset(q.id for q in self.questions_in(split))


class _Words:
    """Unique pronounceable pseudo-words, shared so vocab and names never collide."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used: set[str] = set()

    def new(self, syllables: int) -> str:
        while True:
            word = "".join(self.rng.choice(_CONSONANTS) + self.rng.choice(_VOWELS) for _ in range(syllables))
            if self.rng.random() < 0.5:
                word += self.rng.choice(_CONSONANTS)
            if word not in self.used:
                self.used.add(word)
                return word

    def name(self, parts: int) -> tuple[str, ...]:
        return tuple(self.new(self.rng.choice((2, 3))).capitalize() for _ in range(parts))


def _entity_surface(ne_type: str, words: _Words, rng: random.Random) -> tuple[str, ...]:
    if ne_type == "DATE":
        return (rng.choice(MONTHS), str(rng.randint(1800, 2020)))
    if ne_type in ("CARDINAL", "ORDINAL"):
        return (str(rng.randint(2, 99999)),)
    if ne_type == "MONEY":
        return (str(rng.randint(2, 99999)), "dollars")
    if ne_type == "PERCENT":
        return (str(rng.randint(1, 99)), "percent")
    if ne_type == "TIME":
        return (f"{rng.randint(1, 12)}:{rng.randint(0, 59):02d}", rng.choice(("am", "pm")))
    if ne_type == "QUANTITY":
        return (str(rng.randint(2, 9999)), rng.choice(("miles", "tons", "gallons")))
    return words.name(rng.choice((1, 2)))


class _Passage:
    def __init__(self):
        self.tokens: list[tuple[str, str]] = []
        self.nes: list[tuple[int, int, str]] = []

    def words(self, ws: Sequence[str]) -> None:
        self.tokens.extend((w, "OTHER") for w in ws)

    def entity(self, surface: Sequence[str], ne_type: str) -> None:
        start = len(self.tokens)
        self.tokens.extend((w, "NOUN") for w in surface)
        self.nes.append((start, len(self.tokens), ne_type))


def _shuffle_passage(parts: list, rng: random.Random) -> _Passage:
    """Assemble word runs and entities in random order."""
    rng.shuffle(parts)
    p = _Passage()
    for kind, payload, ne_type in parts:
        if kind == "w":
            p.words(payload)
        else:
            p.entity(payload, ne_type)
    p.tokens.append((".", "OTHER"))
    return p


def synth_generate(seed: int, params: SynthParams | None = None) -> SynthData:
    """Generate ``(corpus, questions, qrels)`` for the QA task."""
    params = params or SynthParams()
    params.validate()
    rng = random.Random(seed)
    words = _Words(rng)
    types = NE_TYPES[: params.num_ne_types]
    answer_types = [t for t in types if t in QUESTION_FORMS]
    vocab = [words.new(rng.choice((2, 3))) for _ in range(params.vocab_size)]
    pool_size = max(20, params.corpus_size // 50)
    pools = {t: [_entity_surface(t, words, rng) for _ in range(pool_size)] for t in types}

    # per-query passage budget: one relevant each, extras and distractors while room remains
    plans = [[rng.choice((1, 2, 2, 3)), rng.randint(8, 14)] for _ in range(params.num_queries)]
    spare = params.corpus_size - params.num_queries
    for plan in plans:
        extra = min(plan[0] - 1, spare)
        plan[0] = 1 + extra
        spare -= extra
    for plan in plans:
        plan[1] = min(plan[1], spare)
        spare -= plan[1]

    questions, passages = [], []
    labels: list[tuple[str, int, bool]] = []  # (qid, passage slot, relevant)
    for qi, (n_relevant, n_distract) in enumerate(plans):
        qid = f"q{qi:04d}"
        answer = rng.choice(answer_types)
        qword, lat = rng.choice(QUESTION_FORMS[answer])
        topic_type = rng.choice([t for t in TOPIC_TYPES if t in types and t != answer]
                                or [t for t in types if t != answer])
        topic = rng.choice(pools[topic_type])
        content = rng.sample(vocab, 4)

        q = _Passage()
        q.tokens.extend((w, "OTHER") for w in qword)
        if lat is not None:
            q.tokens.append((lat, "NOUN"))
        q.tokens.append((rng.choice(AUX_VERBS), "VERB"))
        q.entity(topic, topic_type)
        q.words(content)
        q.tokens.append(("?", "OTHER"))
        questions.append((qid, q))

        for _ in range(n_relevant):
            topic_surface, answer_type = topic, answer
            if rng.random() < params.noise:
                if rng.random() < 0.5:
                    topic_surface = rng.choice([e for e in pools[topic_type] if e != topic])
                else:
                    answer_type = rng.choice([t for t in types if t != answer])
            parts = [
                ("e", topic_surface, topic_type),
                ("e", rng.choice(pools[answer]), answer_type),
                ("w", rng.sample(content, rng.randint(0, 1)), None),
                ("w", rng.sample(vocab, rng.randint(5, 9)), None),
            ]
            labels.append((qid, len(passages), True))
            passages.append(_shuffle_passage(parts, rng))

        for _ in range(n_distract):
            # same words as the question, but no shared entity
            parts = [
                ("w", rng.sample(content, rng.randint(3, 4)), None),
                ("w", rng.sample(vocab, rng.randint(5, 9)), None),
            ]
            if rng.random() < 0.5:
                other = rng.choice([e for e in pools[topic_type] if e != topic])
                parts.append(("e", other, topic_type))
            if rng.random() < params.noise:
                parts.append(("e", rng.choice(pools[answer]), answer))
            labels.append((qid, len(passages), False))
            passages.append(_shuffle_passage(parts, rng))

    while len(passages) < params.corpus_size:
        parts = [("w", rng.sample(vocab, rng.randint(6, 12)), None)]
        if rng.random() < 0.5:
            t = rng.choice(types)
            parts.append(("e", rng.choice(pools[t]), t))
        passages.append(_shuffle_passage(parts, rng))

    order = list(range(len(passages)))
    rng.shuffle(order)
    width = max(5, len(str(len(passages) - 1)))
    slot_to_id = {slot: f"p{rank:0{width}d}" for rank, slot in enumerate(order)}
    corpus = [
        CorpusRecord(slot_to_id[slot], "passage", tuple(passages[slot].tokens), tuple(passages[slot].nes))
        for slot in order
    ]

    qrels = Qrels()
    for qid, slot, rel in labels:
        qrels.add(qid, slot_to_id[slot], rel)
    splits = {qid: SPLITS[i % len(SPLITS)] for i, (qid, _) in enumerate(questions)}
    records = [
        CorpusRecord(qid, "question", tuple(q.tokens), tuple(q.nes), extras={"split": splits[qid]})
        for qid, q in questions
    ]
    return SynthData(corpus, records, qrels, splits)


# ---------------------------------------------------------------------------
# coreference
# ---------------------------------------------------------------------------

COREF_TYPES = ("PERSON", "ORG", "GPE", "LOC")


def _respell(word: str, rng: random.Random) -> str:
    """A romanization-style variant: double a consonant or swap a vowel."""
    i = rng.randrange(1, len(word))
    c = word[i]
    if c in _VOWELS:
        return word[:i] + rng.choice([v for v in _VOWELS if v != c]) + word[i + 1:]
    return word[:i] + c + word[i:]


@dataclass
class CorefData:
    documents: list[CorpusRecord]
    mentions: list[CorpusRecord]
    queries: list[CorpusRecord]
    qrels: Qrels
    splits: dict[str, str] = field(default_factory=dict)

    def queries_in(self, split: str) -> list[CorpusRecord]:
        return [q for q in self.queries if self.splits.get(q.id) == split]

    def qrels_in(self, split: str) -> Qrels:
        return self.qrels.subset(q.id for q in self.queries_in(split))


def synth_coref(seed: int, num_entities: int = 60, docs_per_entity: int = 4, vocab_size: int = 2000) -> CorefData:
    """Entities mentioned under variant surfaces across topical documents.

    The first mention of each entity is its query; the query record is also
    part of the mention collection. Same-surface mentions of a different
    entity are judged nonrelevant.
    """
    if num_entities < 2 or docs_per_entity < 2:
        raise DataError("need at least 2 entities and 2 documents per entity")
    rng = random.Random(seed)
    words = _Words(rng)
    vocab = [words.new(rng.choice((2, 3))) for _ in range(vocab_size)]
    documents, mentions, queries = [], [], []
    qrels = Qrels()
    entity_mentions: list[tuple[str, list[str]]] = []

    entities = []
    for ei in range(num_entities):
        ne_type = rng.choice(COREF_TYPES)
        name = words.name(3 if ne_type == "ORG" else rng.choice((1, 2)))
        entities.append((ei, ne_type, name, rng.sample(vocab, 15)))
    # a few homonyms: same surface, different entity, different topic
    for ei in range(0, num_entities, 10):
        _, ne_type, name, _ = entities[ei]
        entities.append((len(entities), rng.choice(COREF_TYPES), name, rng.sample(vocab, 15)))

    doc_n = 0
    for ei, ne_type, name, topic in entities:
        ids = []
        for j in range(docs_per_entity):
            surface = list(name)
            r = rng.random()
            if j > 0 and r < 0.3:
                surface = [_respell(surface[0], rng)] + surface[1:]
            elif j > 0 and r < 0.5 and len(surface) >= 2:
                surface = ["".join(w[0] for w in surface).upper()] if ne_type == "ORG" else surface[-1:]
            doc_id = f"d{doc_n:05d}"
            doc_n += 1
            body = rng.sample(topic, 8) + rng.sample(vocab, 10)
            rng.shuffle(body)
            documents.append(CorpusRecord(doc_id, "passage", tuple((w, None) for w in body + surface)))
            mid = f"m{len(mentions):05d}"
            mentions.append(CorpusRecord(mid, "mention", tuple((w, None) for w in surface),
                                         ne_type=ne_type, doc_id=doc_id))
            ids.append(mid)
        entity_mentions.append((name, ids))
        qid = ids[0]
        queries.append(mentions[int(qid[1:])])
        for mid in ids[1:]:
            qrels.add(qid, mid, True)
    # judged negatives: identical canonical surface, other entity
    by_name: dict[tuple, list[int]] = {}
    for idx, (name, _) in enumerate(entity_mentions):
        by_name.setdefault(name, []).append(idx)
    for group in by_name.values():
        for a in group:
            for b in group:
                if a != b:
                    qrels.add(entity_mentions[a][1][0], entity_mentions[b][1][0], False)
    # the corpus pass: document tf-idf context travels with each mention
    mentions = attach_doc_terms(mentions, compute_doc_terms(documents))
    by_id = {m.id: m for m in mentions}
    queries = [by_id[q.id] for q in queries]
    splits = {q.id: SPLITS[i % len(SPLITS)] for i, q in enumerate(queries)}
    return CorefData(documents, mentions, queries, qrels, splits)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def write_synth(data: SynthData, out_dir: str | Path) -> dict[str, Path]:
    """Write passages, questions and qrels (whole and per split) to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"corpus": out / "passages.jsonl", "questions": out / "questions.jsonl", "qrels": out / "qrels.txt"}
    write_corpus(data.corpus, paths["corpus"])
    write_corpus(data.questions, paths["questions"])
    write_qrels(data.qrels, paths["qrels"])
    for split in ("train", "dev", "test"):
        paths[f"{split}_questions"] = out / f"{split}.questions.jsonl"
        paths[f"{split}_qrels"] = out / f"{split}.qrels.txt"
        write_corpus(data.questions_in(split), paths[f"{split}_questions"])
        write_qrels(data.qrels_in(split), paths[f"{split}_qrels"])
    return paths


def write_coref(data: CorefData, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"documents": out / "documents.jsonl", "corpus": out / "mentions.jsonl",
             "questions": out / "queries.jsonl", "qrels": out / "qrels.txt"}
    write_corpus(data.documents, paths["documents"])
    write_corpus(data.mentions, paths["corpus"])
    write_corpus(data.queries, paths["questions"])
    write_qrels(data.qrels, paths["qrels"])
    for split in ("train", "dev", "test"):
        paths[f"{split}_questions"] = out / f"{split}.queries.jsonl"
        paths[f"{split}_qrels"] = out / f"{split}.qrels.txt"
        write_corpus(data.queries_in(split), paths[f"{split}_questions"])
        write_qrels(data.qrels_in(split), paths[f"{split}_qrels"])
    return paths
