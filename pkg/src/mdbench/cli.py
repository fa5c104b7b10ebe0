"""Command-line entry point.

Subcommands: ingest, tokenizer, refmodel, eval, probe, rank, report.
Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from collections import Counter
from typing import List, Optional

from . import bpe, datasets, metrics, ngram, pgn, report as report_mod
from .adapter import AdapterSession, open_adapter
from .config import RunConfig, config_hash, file_sha256, read_config_file
from .leaderboard import CompetitorReports, assemble_leaderboard
from .runners import (
    EvalReport,
    GameReport,
    ProbeReport,
    TranslationReport,
    aggregate_game_reports,
    collect_output_tokens,
    run_board_eval,
    run_cross_domain_probe,
    run_move_generation,
    run_translation,
)
from .uci import AnalysisLimit, EngineSession


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdbench", description=__doc__)
    parser.add_argument("--config", help="key = value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build task datasets from raw corpora")
    p.add_argument("--task", required=True, choices=datasets.TASKS)
    p.add_argument("--source", required=True, nargs="+", help="input files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--min-elo", type=int, default=None, help="drop games below this Elo")
    p.add_argument("--validate", action="store_true", help="replay-check PGN games")
    p.add_argument("--test-fraction", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prompt-plies", type=int, default=0,
                   help="move-gen: SAN plies moved from target into the prompt")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("tokenizer", help="tokenizer operations")
    tsub = p.add_subparsers(dest="tokenizer_command", required=True)
    t = tsub.add_parser("train")
    t.add_argument("--vocab-size", type=int, required=True)
    t.add_argument("--corpus", required=True, nargs="+")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_tokenizer_train)

    p = sub.add_parser("refmodel", help="built-in n-gram reference model")
    rsub = p.add_subparsers(dest="refmodel_command", required=True)
    r = rsub.add_parser("train")
    r.add_argument("--dataset", required=True)
    r.add_argument("--tokenizer", required=True)
    r.add_argument("--order", type=int, default=4)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_refmodel_train)
    r = rsub.add_parser("generate")
    r.add_argument("--model", required=True)
    r.add_argument("--prompt", default="")
    r.add_argument("--max-new-tokens", type=int, default=128)
    r.add_argument("--seed", type=int, default=None)
    r.set_defaults(func=cmd_refmodel_generate)

    p = sub.add_parser("eval", help="run an evaluation task against an adapter")
    esub = p.add_subparsers(dest="eval_command", required=True)
    e = esub.add_parser("run")
    e.add_argument("--task", required=True, choices=datasets.TASKS)
    e.add_argument("--adapter", required=True,
                   help='"echo", "refmodel:<model file>", an http URL, or a command')
    e.add_argument("--dataset", required=True)
    e.add_argument("--out-dir", required=True)
    e.add_argument("--engine", default=None, help="UCI engine for centipawn loss")
    e.add_argument("--engine-depth", type=int, default=12)
    e.add_argument("--centipawn", action="store_true",
                   help="score centipawn loss (requires an engine)")
    e.add_argument("--move-cap", type=int, default=70, help="0 disables the cap")
    e.add_argument("--max-new-tokens", type=int, default=512)
    e.add_argument("--limit", type=int, default=None, help="evaluate at most N samples")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--resume", action="store_true",
                   help="move-gen: skip games already present in the report file")
    e.set_defaults(func=cmd_eval_run)

    p = sub.add_parser("probe", help="cross-domain recall probe")
    p.add_argument("--adapter", required=True)
    p.add_argument("--prompts", required=True, help="file with one prompt per line")
    p.add_argument("--domain", required=True, choices=("chess", "code"),
                   help="domain the prompts come from")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--max-new-tokens", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("rank", help="assemble a leaderboard from report dirs")
    p.add_argument("--reports", required=True,
                   help="directory with one subdirectory per competitor")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("report", help="render a leaderboard to CSV and figures")
    p.add_argument("--leaderboard", required=True, help="leaderboard JSON file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--delimiter", default=",")
    p.set_defaults(func=cmd_report)
    return parser


# -- ingest ----------------------------------------------------------------


def _read_eval_records(paths) -> List[datasets.EvalRecord]:
    records = []
    for path in paths:
        if path.endswith(".csv"):
            with open(path, newline="", encoding="utf-8") as fh:
                for row in csv.DictReader(fh):
                    records.append(_eval_record(row["moves"], row["eval"]))
        else:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    records.append(_eval_record(obj["moves"], obj["eval"]))
    return records


def _eval_record(moves, raw) -> datasets.EvalRecord:
    moves = tuple(moves.split()) if isinstance(moves, str) else tuple(moves)
    if isinstance(raw, (int, float)):
        return datasets.EvalRecord(moves, value=float(raw))
    try:
        return datasets.EvalRecord(moves, value=float(raw))
    except ValueError:
        return datasets.EvalRecord(moves, token=raw.strip())


def _read_code_pairs(paths) -> List[datasets.CodePair]:
    pairs = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                code = obj["code"].strip()
                doc = obj["docstring"].strip()
                if code and doc:
                    pairs.append(datasets.CodePair(code, doc))
    return pairs


def cmd_ingest(args, cfg: RunConfig) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    manifest = {
        "task": args.task,
        "seed": args.seed,
        "sources": {src: file_sha256(src) for src in args.source},
    }
    if args.task == "move-gen":
        diags = pgn.ParseDiagnostics()
        games = []
        for path in args.source:
            with open(path, encoding="utf-8", errors="replace") as fh:
                games.extend(pgn.parse_pgn_stream(fh, diags))
        manifest["games_parsed"] = diags.games_ok
        manifest["games_skipped"] = diags.games_skipped
        if args.min_elo is not None:
            games = list(pgn.filter_by_min_elo(games, args.min_elo))
            manifest["games_after_elo_filter"] = len(games)
        if args.validate:
            games = [g for g in games if pgn.validate_game(g)]
            manifest["games_valid"] = len(games)
        records = []
        for game in games:
            prompt = " ".join(game.moves[: args.prompt_plies])
            clipped = pgn.PgnGame(game.headers, game.moves[args.prompt_plies :], game.result)
            records.append((prompt, clipped))
        samples = datasets.make_task_samples("move-gen", records)
    elif args.task == "board-eval":
        records = _read_eval_records(args.source)
        samples = datasets.make_task_samples("board-eval", records)
        histogram = Counter()
        for rec in records:
            if rec.value is not None:
                histogram[datasets.bin_evaluation(rec.value)] += 1
        manifest["bin_histogram"] = {str(k): v for k, v in sorted(histogram.items())}
    else:
        pairs = _read_code_pairs(args.source)
        samples = datasets.make_task_samples(args.task, pairs)
    if not samples:
        raise RuntimeError("no samples produced from the given sources")
    train, test = datasets.split(samples, args.test_fraction, args.seed)
    manifest["train_count"] = datasets.write_dataset(
        os.path.join(args.out_dir, f"{args.task}.train.jsonl"), train
    )
    manifest["test_count"] = datasets.write_dataset(
        os.path.join(args.out_dir, f"{args.task}.test.jsonl"), test
    )
    manifest["config_hash"] = config_hash(manifest)
    _write_json(os.path.join(args.out_dir, f"{args.task}.manifest.json"), manifest)
    print(f"wrote {manifest['train_count']} train / {manifest['test_count']} test samples")
    return 0


# -- tokenizer / refmodel -----------------------------------------------------


def _iter_corpus_lines(paths):
    for path in paths:
        with open(path, encoding="utf-8", errors="replace") as fh:
            yield from fh


def cmd_tokenizer_train(args, cfg: RunConfig) -> int:
    vocab = bpe.train(_iter_corpus_lines(args.corpus), args.vocab_size)
    bpe.save(vocab, args.out)
    print(f"trained vocabulary of size {vocab.size} ({len(vocab.merges)} merges)")
    return 0


def cmd_refmodel_train(args, cfg: RunConfig) -> int:
    samples = datasets.read_dataset(args.dataset)
    vocab = bpe.load(args.tokenizer)
    model = ngram.train_ngram(samples, args.order, vocab)
    ngram.save(model, args.out)
    print(f"trained order-{args.order} model on {len(samples)} samples -> {args.out}")
    return 0


def cmd_refmodel_generate(args, cfg: RunConfig) -> int:
    model = ngram.load(args.model)
    print(ngram.generate(model, args.prompt, args.max_new_tokens, args.seed))
    return 0


# -- eval -----------------------------------------------------------------


def _open_adapter_spec(spec: str) -> AdapterSession:
    if spec.startswith("refmodel:"):
        model = ngram.load(spec.split(":", 1)[1])
        return ngram.serve_adapter(model)
    return open_adapter(spec)


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_eval_run(args, cfg: RunConfig) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    samples = datasets.read_dataset(args.dataset)
    samples = [s for s in samples if s.task == args.task]
    if args.limit is not None:
        samples = samples[: args.limit]
    if not samples:
        raise RuntimeError(f"dataset has no {args.task!r} samples")
    move_cap = args.move_cap if args.move_cap > 0 else None
    summary = {
        "task": args.task,
        "adapter": args.adapter,
        "dataset": args.dataset,
        "seed": args.seed,
        "samples": len(samples),
        "move_cap": move_cap,
    }
    summary["config_hash"] = config_hash(summary)

    engine = None
    if args.task == "move-gen" and args.centipawn:
        engine_path = args.engine or cfg.engine
        if not engine_path:
            raise RuntimeError(
                "centipawn loss requested but no engine given "
                "(use --engine or MDBENCH_ENGINE)"
            )
        engine = EngineSession(engine_path)
    session = _open_adapter_spec(args.adapter)
    try:
        if args.task == "move-gen":
            prompts = [s.input for s in samples]
            report_path = os.path.join(args.out_dir, "move-gen.reports.jsonl")
            done = 0
            if args.resume and os.path.exists(report_path):
                with open(report_path, encoding="utf-8") as fh:
                    done = sum(1 for line in fh if line.strip())
            reports = run_move_generation(
                session,
                prompts[done:],
                move_cap=move_cap,
                engine=engine,
                engine_limit=AnalysisLimit("fixed-depth", args.engine_depth),
                max_new_tokens=args.max_new_tokens,
                seed=args.seed + done,
            )
            mode = "a" if done else "w"
            with open(report_path, mode, encoding="utf-8") as fh:
                for rep in reports:
                    fh.write(json.dumps(rep.to_json(), sort_keys=True) + "\n")
            all_reports = [
                GameReport.from_json(json.loads(line))
                for line in open(report_path, encoding="utf-8")
                if line.strip()
            ]
            summary["aggregates"] = aggregate_game_reports(all_reports)
            _write_json(os.path.join(args.out_dir, "move-gen.summary.json"), summary)
        elif args.task == "board-eval":
            rep = run_board_eval(session, samples, seed=args.seed)
            payload = rep.to_json()
            payload["summary"] = summary
            _write_json(os.path.join(args.out_dir, "board-eval.report.json"), payload)
            summary["aggregates"] = {
                "ratio_numeric": rep.ratio_numeric(),
                "ratio_non_numeric": rep.ratio_non_numeric(),
                "mse": rep.mse(),
                "accuracy": rep.accuracy(),
            }
            _write_json(os.path.join(args.out_dir, "board-eval.summary.json"), summary)
        else:
            rep = run_translation(
                session, samples, args.task,
                max_new_tokens=args.max_new_tokens, seed=args.seed,
            )
            payload = rep.to_json()
            payload["summary"] = summary
            _write_json(os.path.join(args.out_dir, f"{args.task}.report.json"), payload)
            summary["aggregates"] = {
                "bleu": metrics.corpus_bleu(rep.candidates, rep.references)
            }
            _write_json(os.path.join(args.out_dir, f"{args.task}.summary.json"), summary)
    finally:
        session.close()
        if engine is not None:
            engine.close()
    print(json.dumps(summary["aggregates"], indent=2, sort_keys=True))
    return 0


def cmd_probe(args, cfg: RunConfig) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    with open(args.prompts, encoding="utf-8") as fh:
        prompts = [line.rstrip("\n") for line in fh if line.strip()]
    session = _open_adapter_spec(args.adapter)
    try:
        rep = run_cross_domain_probe(
            session, args.domain, prompts,
            success_threshold=args.threshold,
            max_new_tokens=args.max_new_tokens,
            seed=args.seed,
        )
    finally:
        session.close()
    payload = rep.to_json()
    payload["seed"] = args.seed
    payload["config_hash"] = config_hash({"domain": args.domain, "seed": args.seed})
    _write_json(os.path.join(args.out_dir, f"probe-{args.domain}.report.json"), payload)
    print(f"probe {args.domain}: {rep.successes}/{rep.attempts} successes")
    return 0


# -- rank / report -----------------------------------------------------------


def _load_competitor(dirpath) -> CompetitorReports:
    reports = CompetitorReports()
    path = os.path.join(dirpath, "move-gen.reports.jsonl")
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            reports.game_reports = [
                GameReport.from_json(json.loads(line)) for line in fh if line.strip()
            ]
    path = os.path.join(dirpath, "board-eval.report.json")
    if os.path.exists(path):
        obj = json.load(open(path, encoding="utf-8"))
        obj.pop("summary", None)
        reports.eval_report = EvalReport.from_json(obj)
    for task, attr in (
        ("code-summarize", "summarize_report"),
        ("code-generate", "generate_report"),
    ):
        path = os.path.join(dirpath, f"{task}.report.json")
        if os.path.exists(path):
            obj = json.load(open(path, encoding="utf-8"))
            obj.pop("summary", None)
            setattr(reports, attr, TranslationReport.from_json(obj))
            reports.code_output_tokens.update(
                collect_output_tokens(getattr(reports, attr).candidates)
            )
    for domain in ("chess", "code"):
        path = os.path.join(dirpath, f"probe-{domain}.report.json")
        if os.path.exists(path):
            obj = json.load(open(path, encoding="utf-8"))
            obj.pop("seed", None)
            obj.pop("config_hash", None)
            reports.probe_reports.append(ProbeReport.from_json(obj))
    return reports


def cmd_rank(args, cfg: RunConfig) -> int:
    competitors = sorted(
        name
        for name in os.listdir(args.reports)
        if os.path.isdir(os.path.join(args.reports, name))
    )
    if len(competitors) < 2:
        raise RuntimeError(
            f"ranking needs at least 2 competitors, found {len(competitors)} "
            f"in {args.reports}"
        )
    by_comp = {
        name: _load_competitor(os.path.join(args.reports, name))
        for name in competitors
    }
    board = assemble_leaderboard(
        by_comp, meta={"config_hash": config_hash({"competitors": competitors})}
    )
    with open(args.out + ".json", "w", encoding="utf-8") as fh:
        fh.write(board.to_json() + "\n")
    with open(args.out + ".txt", "w", encoding="utf-8") as fh:
        fh.write(board.to_text())
    print(board.to_text())
    return 0


def cmd_report(args, cfg: RunConfig) -> int:
    from .leaderboard import Leaderboard

    obj = json.load(open(args.leaderboard, encoding="utf-8"))
    board = Leaderboard(
        obj["competitors"], obj["sub_metrics"], obj["ranks"], obj["scores"],
        obj.get("meta", {}),
    )
    os.makedirs(args.out_dir, exist_ok=True)
    ext = "tsv" if args.delimiter == "\t" else "csv"
    table_path = os.path.join(args.out_dir, f"leaderboard.{ext}")
    report_mod.write_csv(board, table_path, delimiter=args.delimiter)
    figures = report_mod.render_figures(board, args.out_dir)
    print("\n".join([table_path] + figures))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        file_values = read_config_file(args.config) if args.config else {}
        cfg = RunConfig.resolve(args, file_values)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure contract
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
