"""Command-line entry point: ``disck <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error. ``DISCK_LOG`` sets the
log level (default INFO, to stderr).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .corpus import attach_doc_terms, compute_doc_terms, load_corpus, load_pairs, make_training_pairs, save_pairs, write_corpus
from .errors import DisckError
from .evaluation import evaluate_all, read_qrels, read_run, write_run
from .index import index_stats, load_index, save_index
from .model import load_model, save_model, tfidf_baseline_model
from .pipeline import PipelineConfig, build_corpus_index, index_settings, retrieve, run_experiment, train_model
from .synth import SynthParams, synth_coref, synth_generate, write_coref, write_synth

log = logging.getLogger("disck")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _csv(cast):
    def parse(text: str):
        try:
            values = tuple(cast(v) for v in text.split(",") if v.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
        if not values:
            raise argparse.ArgumentTypeError("empty list")
        return values

    return parse


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _config(args) -> PipelineConfig:
    base = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides = {name: getattr(args, name, None)
                 for name in ("task", "seed", "grid", "k", "neg_per_query", "top_m", "max_iters", "stopwords_path")}
    if getattr(args, "all_caps", False):
        overrides["all_caps"] = True
    return base.replace(**overrides)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_build_index(args, config: PipelineConfig) -> int:
    index = build_corpus_index(list(load_corpus(args.corpus)), config)
    save_index(index, args.out)
    log.info("indexed %d documents, %d features", index.doc_count, len(index.postings))
    return 0


def cmd_pairs(args, config: PipelineConfig) -> int:
    settings = index_settings(load_index(args.index))
    kwargs = {"qa_config": settings.qa} if settings.qa else {}
    instances = make_training_pairs(
        list(load_corpus(args.queries)), list(load_corpus(args.corpus)), read_qrels(args.qrels),
        task=settings.task, idf=settings.idf, neg_per_query=config.neg_per_query, seed=config.seed, **kwargs,
    )
    save_pairs(instances, args.out)
    log.info("wrote %d training instances", len(instances))
    return 0


def cmd_train(args, config: PipelineConfig) -> int:
    instances = load_pairs(args.pairs)
    index = load_index(args.index) if args.index else None
    dev_queries = list(load_corpus(args.dev_queries)) if args.dev_queries else None
    dev_qrels = read_qrels(args.dev_qrels) if args.dev_qrels else None
    model = train_model(instances, config, index, dev_queries, dev_qrels)
    save_model(model, args.out)
    log.info("model lambda=%g with %d nonzero weights", model.lam, len(model))
    return 0


def cmd_baseline(args, config: PipelineConfig) -> int:
    save_model(tfidf_baseline_model(), args.out)
    return 0


def cmd_search(args, config: PipelineConfig) -> int:
    index = load_index(args.index)
    config = config.replace(task=index_settings(index).task)
    out = retrieve(index, load_model(args.model), list(load_corpus(args.queries)),
                   config.search_k, config.top_m, args.workers)
    write_run(out.run, args.out, tag=args.tag)
    scored = list(out.docs_scored.values())
    mean = sum(scored) / len(scored) if scored else 0.0
    log.info("searched %d queries in %.3fs; mean docs scored %.1f of %d",
             len(scored), out.seconds, mean, index.doc_count)
    return 0


def cmd_eval(args, config: PipelineConfig) -> int:
    report = evaluate_all(read_run(args.run), read_qrels(args.qrels), args.ks)
    sys.stdout.write(report.to_text())
    for w in report.warnings:
        log.warning("%s", w)
    return 0


def cmd_synth(args, config: PipelineConfig) -> int:
    if config.task == "coref":
        write_coref(synth_coref(args.seed), args.out_dir)
    else:
        params = SynthParams(args.num_queries, args.corpus_size, args.num_ne_types, args.vocab_size, args.noise)
        write_synth(synth_generate(args.seed, params), args.out_dir)
    return 0


def cmd_stats(args, config: PipelineConfig) -> int:
    index = load_index(args.index)
    stats = dict(index_stats(index), task=index.meta.get("task"))
    sys.stdout.write("".join(f"{k}\t{v}\n" for k, v in stats.items()))
    return 0


def cmd_doc_terms(args, config: PipelineConfig) -> int:
    doc_terms = compute_doc_terms(load_corpus(args.documents), config.qa_config())
    write_corpus(attach_doc_terms(load_corpus(args.mentions), doc_terms), args.out)
    return 0


def cmd_experiment(args, config: PipelineConfig) -> int:
    result = run_experiment(args.data_dir, args.out_dir, config, args.ks)
    sys.stdout.write("disck\n" + result.report.to_text())
    sys.stdout.write("baseline\n" + result.baseline_report.to_text())
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="disck", description="Discriminative sparse candidate retrieval.")
    parser.add_argument("--config", help="pipeline config JSON; flags override its fields")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    p = command("build-index", cmd_build_index, "index a corpus of passages or mentions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--task", choices=("qa", "coref"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--all-caps", action="store_true", help="add the all-caps passage extractor")
    p.add_argument("--stopwords", dest="stopwords_path")

    p = command("pairs", cmd_pairs, "compose training instances from judged queries")
    p.add_argument("--queries", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--index", required=True, help="index supplying task, extractor settings and idf")
    p.add_argument("--neg-per-query", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = command("train", cmd_train, "train a model, tuning lambda on dev MAP when the grid has several values")
    p.add_argument("--pairs", required=True)
    p.add_argument("--dev-queries")
    p.add_argument("--dev-qrels")
    p.add_argument("--index")
    p.add_argument("--grid", type=_csv(float))
    p.add_argument("--max-iters", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = command("baseline", cmd_baseline, "write the tf-idf-only baseline model")
    p.add_argument("--out", required=True)

    p = command("search", cmd_search, "project queries through a model and retrieve top k")
    p.add_argument("--index", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--top-m", type=_positive_int)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--tag", default="disck")
    p.add_argument("--out", required=True)

    p = command("eval", cmd_eval, "score a TREC run against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--ks", type=_csv(_positive_int), default=(10, 100, 1000))

    p = command("synth", cmd_synth, "generate a synthetic dataset")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--task", choices=("qa", "coref"))
    defaults = SynthParams()
    p.add_argument("--num-queries", type=_positive_int, default=defaults.num_queries)
    p.add_argument("--corpus-size", type=_positive_int, default=defaults.corpus_size)
    p.add_argument("--num-ne-types", type=_positive_int, default=defaults.num_ne_types)
    p.add_argument("--vocab-size", type=_positive_int, default=defaults.vocab_size)
    p.add_argument("--noise", type=float, default=defaults.noise)

    p = command("stats", cmd_stats, "print index statistics")
    p.add_argument("--index", required=True)

    p = command("doc-terms", cmd_doc_terms, "attach document tf-idf context to mentions")
    p.add_argument("--documents", required=True)
    p.add_argument("--mentions", required=True)
    p.add_argument("--out", required=True)

    p = command("experiment", cmd_experiment, "run the whole pipeline on a synth directory")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--task", choices=("qa", "coref"))
    p.add_argument("--grid", type=_csv(float))
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ks", type=_csv(_positive_int), default=(10, 100, 1000))
    return parser


def _setup_logging() -> None:
    level = os.environ.get("DISCK_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except DisckError as exc:
        print(f"disck: {exc}", file=sys.stderr)
        return 2
    snapshot = {k: v for k, v in vars(args).items() if k != "func"}
    log.info("command %s config %s args %s", args.command,
             json.dumps(config.to_dict(), sort_keys=True), json.dumps(snapshot, sort_keys=True, default=str))
    try:
        return args.func(args, config)
    except (DisckError, OSError, UnicodeDecodeError) as exc:
        print(f"disck: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
