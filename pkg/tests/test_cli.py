from __future__ import annotations

import hashlib
import json
import re

import pytest

from disck.cli import main
from disck.evaluation import evaluate_all, read_qrels, read_run

SYNTH_ARGS = ["--num-queries", "60", "--corpus-size", "1500", "--vocab-size", "800"]


def digest(directory) -> dict[str, str]:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir()) if p.is_file()}


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--seed", "3", "--out-dir", str(out), *SYNTH_ARGS]) == 0
    return out


@pytest.fixture
def fixture_files(tmp_path):
    (tmp_path / "qrels.txt").write_text("q1 0 a 1\nq1 0 b 0\nq2 0 c 1\n")
    (tmp_path / "run.txt").write_text("q1 Q0 b 1 2.0 t\nq1 Q0 a 2 1.0 t\nq2 Q0 c 1 5.0 t\n")
    return tmp_path


class TestEval:
    def test_prints_metrics(self, fixture_files, capsys):
        code = main(["eval", "--run", str(fixture_files / "run.txt"), "--qrels", str(fixture_files / "qrels.txt"),
                     "--ks", "1,10"])
        assert code == 0
        out = capsys.readouterr().out
        for name in ("R@1", "R@10", "bpref", "MAP", "MRR"):
            assert name in out
        assert re.search(r"^MRR\s+0\.7500$", out, re.M)

    def test_missing_flag(self, fixture_files, capsys):
        assert main(["eval", "--run", str(fixture_files / "run.txt")]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert main(["eval", "--bogus"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_no_command(self):
        assert main([]) == 1

    def test_bad_int(self):
        assert main(["eval", "--run", "r", "--qrels", "q", "--ks", "0"]) == 1

    def test_data_error(self, fixture_files, capsys):
        (fixture_files / "bad.txt").write_text("q1 Q0 a one 2.0 t\n")
        assert main(["eval", "--run", str(fixture_files / "bad.txt"), "--qrels", str(fixture_files / "qrels.txt")]) == 2
        assert "bad.txt:1" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["eval", "--run", str(tmp_path / "nope"), "--qrels", str(tmp_path / "nope")]) == 2


class TestConfig:
    def test_config_file(self, tmp_path, synth_dir, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"task": "qa", "all_caps": True}))
        out = tmp_path / "idx.bin"
        code = main(["--config", str(cfg), "build-index", "--corpus", str(synth_dir / "passages.jsonl"),
                     "--task", "qa", "--out", str(out)])
        assert code == 0
        # the config snapshot is logged on every run
        assert '"all_caps": true' in capsys.readouterr().err

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"no_such_field": 1}))
        assert main(["--config", str(cfg), "stats", "--index", "x"]) == 2


class TestPipeline:
    def test_end_to_end_beats_baseline(self, synth_dir, tmp_path, capsys):
        before = digest(synth_dir)
        d, w = str(synth_dir), tmp_path
        steps = [
            ["build-index", "--corpus", f"{d}/passages.jsonl", "--task", "qa", "--out", f"{w}/index.bin"],
            ["pairs", "--queries", f"{d}/train.questions.jsonl", "--corpus", f"{d}/passages.jsonl",
             "--qrels", f"{d}/train.qrels.txt", "--index", f"{w}/index.bin", "--out", f"{w}/pairs.jsonl"],
            ["train", "--pairs", f"{w}/pairs.jsonl", "--dev-queries", f"{d}/dev.questions.jsonl",
             "--dev-qrels", f"{d}/dev.qrels.txt", "--index", f"{w}/index.bin", "--out", f"{w}/model.txt"],
            ["baseline", "--out", f"{w}/baseline.txt"],
            ["search", "--index", f"{w}/index.bin", "--model", f"{w}/model.txt",
             "--queries", f"{d}/test.questions.jsonl", "--k", "100", "--out", f"{w}/run.txt"],
            ["search", "--index", f"{w}/index.bin", "--model", f"{w}/baseline.txt",
             "--queries", f"{d}/test.questions.jsonl", "--k", "100", "--workers", "3", "--out", f"{w}/base.run.txt"],
            ["eval", "--run", f"{w}/run.txt", "--qrels", f"{d}/test.qrels.txt"],
            ["stats", "--index", f"{w}/index.bin"],
        ]
        for argv in steps:
            assert main(argv) == 0, argv
        qrels = read_qrels(f"{d}/test.qrels.txt")
        ours = evaluate_all(read_run(w / "run.txt"), qrels, ks=(10,)).metrics
        base = evaluate_all(read_run(w / "base.run.txt"), qrels, ks=(10,)).metrics
        assert ours["R@10"] > base["R@10"]
        assert "doc_count\t1500" in capsys.readouterr().out
        assert digest(synth_dir) == before

    def test_search_reproducible(self, synth_dir, tmp_path):
        d = str(synth_dir)
        assert main(["build-index", "--corpus", f"{d}/passages.jsonl", "--task", "qa", "--out", f"{tmp_path}/i"]) == 0
        assert main(["baseline", "--out", f"{tmp_path}/m"]) == 0
        for name, workers in (("a", "1"), ("b", "4")):
            assert main(["search", "--index", f"{tmp_path}/i", "--model", f"{tmp_path}/m", "--queries",
                         f"{d}/questions.jsonl", "--workers", workers, "--out", f"{tmp_path}/{name}"]) == 0
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()

    def test_coref_synth_and_index(self, tmp_path, capsys):
        assert main(["synth", "--seed", "1", "--task", "coref", "--out-dir", str(tmp_path)]) == 0
        assert main(["build-index", "--corpus", str(tmp_path / "mentions.jsonl"), "--task", "coref",
                     "--out", str(tmp_path / "i")]) == 0
        assert main(["stats", "--index", str(tmp_path / "i")]) == 0
        assert "task\tcoref" in capsys.readouterr().out

    def test_doc_terms(self, tmp_path):
        docs = tmp_path / "docs.jsonl"
        docs.write_text(json.dumps({"id": "d1", "tokens": ["nile", "delta", "Cairo"]}) + "\n")
        mentions = tmp_path / "m.jsonl"
        mentions.write_text(json.dumps({"id": "m1", "kind": "mention", "tokens": ["Cairo"],
                                        "ne_type": "GPE", "doc_id": "d1"}) + "\n")
        assert main(["doc-terms", "--documents", str(docs), "--mentions", str(mentions),
                     "--out", str(tmp_path / "out.jsonl")]) == 0
        row = json.loads((tmp_path / "out.jsonl").read_text())
        assert {t for t, _ in row["doc_terms"]} == {"nile", "delta", "cairo"}
