import csv
import json
import os
from types import SimpleNamespace

import pytest

from mdbench.cli import main
from mdbench.config import RunConfig, config_hash, read_config_file
from mdbench.pgn import format_pgn
from tests.conftest import FAKE_ENGINE_CMD, STDIO_ADAPTER_CMD


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory, playout_games):
    """Raw corpora plus ingested datasets for every task."""
    root = tmp_path_factory.mktemp("cli")
    raw = root / "raw"
    data = root / "data"
    raw.mkdir()

    pgn_path = raw / "games.pgn"
    pgn_path.write_text("\n".join(format_pgn(g) for g in playout_games))

    eval_path = raw / "evals.csv"
    with open(eval_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["moves", "eval"])
        writer.writerow(["e4", "0.3"])
        writer.writerow(["e4 e5", "-0.1"])
        writer.writerow(["e4 e5 Nf3", "0.25"])
        writer.writerow(["f3 e5 g4", "#-1"])
        writer.writerow(["d4 d5", "0.0"])
        writer.writerow(["c4", "0.2"])
        writer.writerow(["e4 c5", "-0.3"])
        writer.writerow(["Nf3 d5", "0.1"])

    code_path = raw / "code.jsonl"
    with open(code_path, "w") as fh:
        for i in range(8):
            fh.write(json.dumps({
                "code": f"def fn{i}(x):\n    return x + {i}",
                "docstring": f"add {i} to x",
            }) + "\n")

    corpus_path = raw / "corpus.txt"
    corpus_path.write_text("e4 e5 Nf3 Nc6 Bb5 def return add to x\n" * 50)

    assert run_cli("ingest", "--task", "move-gen", "--source", str(pgn_path),
                   "--out-dir", str(data), "--min-elo", "2400", "--validate",
                   "--prompt-plies", "4", "--test-fraction", "0.25",
                   "--seed", "1") == 0
    data0 = root / "data0"
    assert run_cli("ingest", "--task", "move-gen", "--source", str(pgn_path),
                   "--out-dir", str(data0), "--test-fraction", "0.25",
                   "--seed", "1") == 0
    assert run_cli("ingest", "--task", "board-eval", "--source", str(eval_path),
                   "--out-dir", str(data), "--test-fraction", "0.5") == 0
    for task in ("code-summarize", "code-generate"):
        assert run_cli("ingest", "--task", task, "--source", str(code_path),
                       "--out-dir", str(data), "--test-fraction", "0.5") == 0

    tok_path = root / "tok.bpe"
    assert run_cli("tokenizer", "train", "--vocab-size", "300",
                   "--corpus", str(corpus_path), "--out", str(tok_path)) == 0
    model_path = root / "model.bin"
    assert run_cli("refmodel", "train",
                   "--dataset", str(data / "move-gen.train.jsonl"),
                   "--tokenizer", str(tok_path), "--out", str(model_path)) == 0

    prompts_path = raw / "prompts.txt"
    prompts_path.write_text("e4 e5 Nf3\nd4 d5 c4\n")

    return SimpleNamespace(root=root, data=data, data0=data0, tok=tok_path,
                           model=model_path, prompts=prompts_path, pgn=pgn_path)


def _run_competitor(workspace, name, adapter):
    out = workspace.root / "reports" / name
    for task, dataset in (
        ("move-gen", "move-gen.test.jsonl"),
        ("board-eval", "board-eval.test.jsonl"),
        ("code-summarize", "code-summarize.test.jsonl"),
        ("code-generate", "code-generate.test.jsonl"),
    ):
        assert run_cli("eval", "run", "--task", task, "--adapter", adapter,
                       "--dataset", str(workspace.data / dataset),
                       "--out-dir", str(out), "--max-new-tokens", "64") == 0
    for domain in ("chess", "code"):
        assert run_cli("probe", "--adapter", adapter,
                       "--prompts", str(workspace.prompts),
                       "--domain", domain, "--out-dir", str(out)) == 0
    return out


@pytest.fixture(scope="module")
def competitor_dirs(workspace):
    _run_competitor(workspace, "echo", "echo")
    _run_competitor(workspace, "refmodel", f"refmodel:{workspace.model}")
    return workspace.root / "reports"


def test_ingest_manifest(workspace):
    manifest = json.loads((workspace.data / "move-gen.manifest.json").read_text())
    assert manifest["games_parsed"] == 40
    assert manifest["train_count"] + manifest["test_count"] == 40
    assert manifest["test_count"] == 10
    assert "config_hash" in manifest and manifest["sources"]
    evals = json.loads((workspace.data / "board-eval.manifest.json").read_text())
    assert sum(evals["bin_histogram"].values()) == 7  # the mate row is non-numeric


def test_ingest_is_deterministic(workspace, tmp_path):
    again = tmp_path / "again"
    assert run_cli("ingest", "--task", "move-gen", "--source", str(workspace.pgn),
                   "--out-dir", str(again), "--min-elo", "2400", "--validate",
                   "--prompt-plies", "4", "--test-fraction", "0.25",
                   "--seed", "1") == 0
    for name in ("move-gen.train.jsonl", "move-gen.test.jsonl"):
        assert (again / name).read_bytes() == (workspace.data / name).read_bytes()


def test_refmodel_generate_cli(workspace, capsys):
    assert run_cli("refmodel", "generate", "--model", str(workspace.model),
                   "--prompt", "e4 ", "--max-new-tokens", "10", "--seed", "4") == 0
    first = capsys.readouterr().out
    assert run_cli("refmodel", "generate", "--model", str(workspace.model),
                   "--prompt", "e4 ", "--max-new-tokens", "10", "--seed", "4") == 0
    assert capsys.readouterr().out == first


def test_eval_outputs_echo(competitor_dirs):
    out = competitor_dirs / "echo"
    summary = json.loads((out / "move-gen.summary.json").read_text())
    # Echo repeats the 4-ply prompt, which is (almost always) illegal when
    # replayed from the post-prompt position.
    agg = summary["aggregates"]
    assert agg["games"] == 10 and agg["adapter_errors"] == 0
    assert agg["illegal_move_pct"] is not None
    assert 0.0 <= agg["illegal_move_pct"] <= 100.0
    assert "config_hash" in summary and summary["seed"] == 0
    lines = (out / "move-gen.reports.jsonl").read_text().splitlines()
    assert len(lines) == 10
    board = json.loads((out / "board-eval.summary.json").read_text())
    # Echoing the SAN prefix is never a numeric answer.
    assert board["aggregates"]["mse"] is None
    bleu = json.loads((out / "code-summarize.summary.json").read_text())
    assert bleu["aggregates"]["bleu"] == 0.0


def test_eval_resume_appends(workspace, tmp_path):
    out = tmp_path / "resume"
    dataset = str(workspace.data / "move-gen.test.jsonl")
    assert run_cli("eval", "run", "--task", "move-gen", "--adapter", "echo",
                   "--dataset", dataset, "--out-dir", str(out), "--limit", "4") == 0
    partial = (out / "move-gen.reports.jsonl").read_text()
    assert len(partial.splitlines()) == 4
    assert run_cli("eval", "run", "--task", "move-gen", "--adapter", "echo",
                   "--dataset", dataset, "--out-dir", str(out), "--resume") == 0
    full = (out / "move-gen.reports.jsonl").read_text()
    assert len(full.splitlines()) == 10
    assert full.startswith(partial)


def test_eval_centipawn_requires_engine(workspace, tmp_path, monkeypatch):
    monkeypatch.delenv("MDBENCH_ENGINE", raising=False)
    code = run_cli("eval", "run", "--task", "move-gen", "--adapter", "echo",
                   "--dataset", str(workspace.data / "move-gen.test.jsonl"),
                   "--out-dir", str(tmp_path / "cp"), "--centipawn")
    assert code == 2


def test_eval_centipawn_with_engine(workspace, tmp_path, monkeypatch):
    monkeypatch.setenv("MDBENCH_ENGINE", " ".join(FAKE_ENGINE_CMD))
    out = tmp_path / "cp"
    opening_adapter = " ".join(STDIO_ADAPTER_CMD + ["opening"])
    assert run_cli("eval", "run", "--task", "move-gen",
                   "--adapter", opening_adapter,
                   "--dataset", str(workspace.data0 / "move-gen.test.jsonl"),
                   "--out-dir", str(out), "--centipawn", "--limit", "2",
                   "--engine-depth", "1") == 0
    summary = json.loads((out / "move-gen.summary.json").read_text())
    assert summary["aggregates"]["avg_game_length"] == 4.0
    assert summary["aggregates"]["illegal_move_pct"] == 0.0
    assert summary["aggregates"]["avg_centipawn_loss"] is not None
    assert summary["aggregates"]["avg_centipawn_loss"] >= 0.0


def test_probe_output(competitor_dirs):
    rep = json.loads((competitor_dirs / "echo" / "probe-chess.report.json").read_text())
    # Echo returns the chess prompts verbatim: every probe succeeds.
    assert rep["successes"] == rep["attempts"] == 2
    assert rep["prompted_domain"] == "chess"


def test_rank_and_report(workspace, competitor_dirs, tmp_path):
    out = tmp_path / "leaderboard"
    assert run_cli("rank", "--reports", str(competitor_dirs), "--out", str(out)) == 0
    board = json.loads((out.with_suffix(".json")).read_text())
    assert board["competitors"] == ["echo", "refmodel"]
    for comp in board["competitors"]:
        assert "PS" in board["scores"][comp]
        assert "ES" in board["scores"][comp]
        assert "MDLS" in board["scores"][comp]
    text = out.with_suffix(".txt").read_text()
    assert text.splitlines()[0].split() == ["Metric", "echo", "refmodel"]

    # Rank output is byte-identical on rerun.
    out2 = tmp_path / "leaderboard2"
    assert run_cli("rank", "--reports", str(competitor_dirs), "--out", str(out2)) == 0
    assert out2.with_suffix(".json").read_bytes() == out.with_suffix(".json").read_bytes()

    fig_dir = tmp_path / "figures"
    assert run_cli("report", "--leaderboard", str(out.with_suffix(".json")),
                   "--out-dir", str(fig_dir)) == 0
    assert (fig_dir / "leaderboard.csv").exists()
    assert (fig_dir / "ranks.png").stat().st_size > 0
    assert (fig_dir / "ps.png").exists() and (fig_dir / "es.png").exists()
    with open(fig_dir / "leaderboard.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "competitor" and len(rows) == 3

    tsv_dir = tmp_path / "tsv"
    assert run_cli("report", "--leaderboard", str(out.with_suffix(".json")),
                   "--out-dir", str(tsv_dir), "--delimiter", "\t") == 0
    assert (tsv_dir / "leaderboard.tsv").exists()


def test_rank_needs_two_competitors(tmp_path):
    solo = tmp_path / "solo"
    (solo / "only").mkdir(parents=True)
    assert run_cli("rank", "--reports", str(solo), "--out", str(tmp_path / "x")) == 2


def test_exit_codes():
    assert run_cli("ingest", "--task", "move-gen") == 1  # missing required args
    assert run_cli("no-such-command") == 1
    assert run_cli("tokenizer", "train", "--vocab-size", "300",
                   "--corpus", "/no/such/file", "--out", "/tmp/x.bpe") == 2


def test_config_file_and_precedence(tmp_path, monkeypatch):
    cfg_path = tmp_path / "mdbench.cfg"
    cfg_path.write_text('engine = "/from/file"  # comment\njobs = 3\nseed = 9\n')
    values = read_config_file(cfg_path)
    assert values == {"engine": "/from/file", "jobs": "3", "seed": "9"}

    args = SimpleNamespace(engine=None, seed=None)
    monkeypatch.delenv("MDBENCH_ENGINE", raising=False)
    cfg = RunConfig.resolve(args, values)
    assert cfg.engine == "/from/file" and cfg.jobs == 3 and cfg.seed == 9

    monkeypatch.setenv("MDBENCH_ENGINE", "/from/env")
    cfg = RunConfig.resolve(args, values)
    assert cfg.engine == "/from/env"  # env beats file

    args = SimpleNamespace(engine="/from/flag", seed=2)
    cfg = RunConfig.resolve(args, values)
    assert cfg.engine == "/from/flag" and cfg.seed == 2  # flags beat env

    with pytest.raises(ValueError):
        read_config_file(_write(tmp_path / "bad.cfg", "just words\n"))


def test_config_hash_stability():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(config_hash({})) == 16


def _write(path, text):
    path.write_text(text)
    return path
