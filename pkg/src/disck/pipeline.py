"""Glue between ingestion, training, projection, retrieval and evaluation."""

from __future__ import annotations

import json
import logging
import math
import time
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .corpus import (
    CorpusRecord,
    compute_corpus_stats,
    load_corpus,
    make_training_pairs,
    save_pairs,
)
from .coref import overall_features
from .errors import DataError
from .evaluation import (
    EvalReport,
    Qrels,
    RunList,
    evaluate_all,
    mean_average_precision,
    read_qrels,
    write_run,
)
from .features import SparseVector
from .index import InvertedIndex, build_index, save_index, search_many
from .model import DEFAULT_GRID, Model, TrainConfig, save_model, tfidf_baseline_model, train, tune_lambda
from .projection import ProjectionTables, build_tables, project_coref_query, project_qa_query
from .qa import IdfTable, QAConfig, candidate_vector, load_stopwords

log = logging.getLogger(__name__)

TASKS = ("qa", "coref")
DEFAULT_K = {"qa": 1000, "coref": 10000}
# The trainer's grid extended downward: under the mean-normalized loss with
# ~50 sampled negatives per query, a feature that fires only on positives has
# a gradient at zero of roughly 0.5 * positives / n, often below 0.01.
PIPELINE_GRID = (1e-4, 3e-4, 1e-3, 3e-3) + DEFAULT_GRID


@dataclass(frozen=True)
class PipelineConfig:
    task: str = "qa"
    all_caps: bool = False
    stopwords_path: str | None = None
    lowercase: bool = True
    remove_stopwords: bool = True
    idf_smoothing: float = 1.0
    idf_offset: float = 1.0
    max_iters: int = 5000
    tolerance: float = 1e-8
    grid: tuple[float, ...] = PIPELINE_GRID
    k: int | None = None
    dev_k: int = 1000
    neg_per_query: int = 50
    seed: int = 0
    top_m: int | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise DataError(f"task must be one of {TASKS}, got {self.task!r}")
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                raise DataError(f"config field {f.name} must be finite")
        if any(not math.isfinite(g) or g < 0 for g in self.grid):
            raise DataError("lambda grid values must be finite and >= 0")
        if not self.grid:
            raise DataError("lambda grid is empty")

    @property
    def search_k(self) -> int:
        return self.k if self.k is not None else DEFAULT_K[self.task]

    def qa_config(self) -> QAConfig:
        return QAConfig(
            all_caps=self.all_caps,
            lowercase=self.lowercase,
            remove_stopwords=self.remove_stopwords,
            stopwords=load_stopwords(self.stopwords_path),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.max_iters, self.tolerance, self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> PipelineConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DataError(f"unknown config fields: {', '.join(sorted(unknown))}")
        data = dict(data)
        if "grid" in data:
            data["grid"] = tuple(float(g) for g in data["grid"])
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> PipelineConfig:
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (json.JSONDecodeError, TypeError) as exc:
            raise DataError(f"bad config file: {exc}", path=path) from None

    def replace(self, **changes) -> PipelineConfig:
        d = asdict(self)
        d.update({k: v for k, v in changes.items() if v is not None})
        return PipelineConfig.from_dict(d)


# ---------------------------------------------------------------------------
# index
# ---------------------------------------------------------------------------


def build_corpus_index(records: Sequence[CorpusRecord], config: PipelineConfig) -> InvertedIndex:
    """Index candidate vectors; the meta block records everything query-side
    extraction needs later (task, extractor settings, idf)."""
    meta: dict = {"task": config.task}
    if config.task == "qa":
        qa = config.qa_config()
        idf = compute_corpus_stats(records, qa, config.idf_smoothing, config.idf_offset)
        candidates = ((r.id, candidate_vector(r.to_annotated(), qa)) for r in records)
        meta["qa_config"] = qa.to_dict()
        meta["idf"] = idf.to_dict()
    else:
        candidates = ((r.id, overall_features(r.to_mention())) for r in records)
    return build_index(candidates, meta)


@dataclass(frozen=True)
class IndexSettings:
    task: str
    qa: QAConfig | None = None
    idf: IdfTable | None = None


def index_settings(index: InvertedIndex) -> IndexSettings:
    task = index.meta.get("task")
    if task not in TASKS:
        raise DataError(f"index has no valid task in its metadata: {task!r}")
    if task == "qa":
        return IndexSettings(task, QAConfig.from_dict(index.meta["qa_config"]),
                             IdfTable.from_dict(index.meta["idf"]))
    return IndexSettings(task)


# ---------------------------------------------------------------------------
# retrieval
# ---------------------------------------------------------------------------


def project_query(tables: ProjectionTables, record: CorpusRecord, settings: IndexSettings) -> SparseVector:
    if settings.task == "qa":
        return project_qa_query(tables, record.to_annotated(), settings.idf, settings.qa)
    return project_coref_query(tables, record.to_mention())


@dataclass
class RetrievalOutput:
    run: RunList
    docs_scored: dict[str, int] = field(default_factory=dict)
    seconds: float = 0.0


def retrieve(
    index: InvertedIndex,
    model: Model,
    queries: Sequence[CorpusRecord],
    k: int,
    top_m: int | None = None,
    workers: int = 1,
) -> RetrievalOutput:
    """Project and search every query; output is ordered by query id.

    For coref the query mention is itself in the collection, so it is
    dropped from its own result list.
    """
    settings = index_settings(index)
    tables = build_tables(model, top_m)
    start = time.perf_counter()
    projected = {rec.id: project_query(tables, rec, settings) for rec in queries}
    coref = settings.task == "coref"
    results = search_many(index, projected, k + 1 if coref else k, workers)
    rankings, scored = {}, {}
    for qid, res in results.items():
        ranked = res.ranked
        if coref:
            ranked = [(d, s) for d, s in ranked if d != qid][:k]
        rankings[qid] = ranked
        scored[qid] = res.stats.docs_scored
    return RetrievalOutput(RunList(rankings), scored, time.perf_counter() - start)


def dev_map_evaluator(index: InvertedIndex, k: int):
    """Evaluator for :func:`tune_lambda`: dev MAP via full project + search."""

    def evaluate(model: Model, dev: tuple[Sequence[CorpusRecord], Qrels]) -> float:
        queries, qrels = dev
        return mean_average_precision(retrieve(index, model, queries, k).run, qrels)

    return evaluate


def train_model(
    instances,
    config: PipelineConfig,
    index: InvertedIndex | None = None,
    dev_queries: Sequence[CorpusRecord] | None = None,
    dev_qrels: Qrels | None = None,
) -> Model:
    """Train at the single grid value, or tune λ over the grid by dev MAP."""
    grid = sorted(set(config.grid))
    if len(grid) == 1:
        return train(instances, grid[0], config.train_config())
    if index is None or dev_queries is None or dev_qrels is None:
        raise DataError("tuning over a lambda grid needs an index, dev queries and dev qrels")
    lam, model = tune_lambda(grid, instances, (dev_queries, dev_qrels),
                             dev_map_evaluator(index, config.dev_k), config.train_config())
    log.info("selected lambda=%g (%d nonzero weights)", lam, len(model))
    return model


# ---------------------------------------------------------------------------
# end to end
# ---------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    model: Model
    report: EvalReport
    baseline_report: EvalReport
    mean_docs_scored: float
    doc_count: int
    paths: dict[str, Path]


def run_experiment(
    data_dir: str | Path,
    out_dir: str | Path,
    config: PipelineConfig,
    ks: Sequence[int] = (10, 100, 1000),
) -> ExperimentResult:
    """Index → pairs → train (λ tuned on dev) → project → search test → evaluate.

    ``data_dir`` holds the layout written by the ``synth`` command. The
    tf-idf-only baseline model is searched and evaluated on the same index.
    """
    data, out = Path(data_dir), Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    qfile = "questions" if config.task == "qa" else "queries"
    corpus_file = "passages.jsonl" if config.task == "qa" else "mentions.jsonl"
    corpus = list(load_corpus(data / corpus_file))
    split_queries = {s: list(load_corpus(data / f"{s}.{qfile}.jsonl")) for s in ("train", "dev", "test")}
    split_qrels = {s: read_qrels(data / f"{s}.qrels.txt") for s in ("train", "dev", "test")}

    paths = {name: out / fname for name, fname in (
        ("index", "index.bin"), ("pairs", "pairs.jsonl"), ("model", "model.txt"),
        ("run", "run.txt"), ("report", "report.txt"), ("baseline_run", "baseline.run.txt"),
        ("baseline_report", "baseline.report.txt"), ("config", "config.json"))}
    paths["config"].write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    index = build_corpus_index(corpus, config)
    save_index(index, paths["index"])
    settings = index_settings(index)

    instances = make_training_pairs(
        split_queries["train"], corpus, split_qrels["train"], task=config.task, idf=settings.idf,
        qa_config=settings.qa or config.qa_config(), neg_per_query=config.neg_per_query, seed=config.seed,
    )
    save_pairs(instances, paths["pairs"])
    model = train_model(instances, config, index, split_queries["dev"], split_qrels["dev"])
    save_model(model, paths["model"])

    result = retrieve(index, model, split_queries["test"], config.search_k, config.top_m)
    write_run(result.run, paths["run"])
    report = evaluate_all(result.run, split_qrels["test"], ks)
    paths["report"].write_text(report.to_lines(), encoding="utf-8")

    base = retrieve(index, tfidf_baseline_model(), split_queries["test"], config.search_k)
    write_run(base.run, paths["baseline_run"], tag="tfidf")
    baseline_report = evaluate_all(base.run, split_qrels["test"], ks)
    paths["baseline_report"].write_text(baseline_report.to_lines(), encoding="utf-8")

    scored = list(result.docs_scored.values())
    return ExperimentResult(
        model, report, baseline_report,
        sum(scored) / len(scored) if scored else 0.0, index.doc_count, paths,
    )
