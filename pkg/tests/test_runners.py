from collections import Counter

import pytest

from mdbench.adapter import InProcessAdapter, echo_adapter
from mdbench.datasets import TaskSample, bin_center
from mdbench.runners import (
    EvalReport,
    GameReport,
    ProbeReport,
    TranslationReport,
    aggregate_game_reports,
    classify_token_domain,
    collect_output_tokens,
    replay_generated_game,
    run_board_eval,
    run_cross_domain_probe,
    run_move_generation,
    run_translation,
)
from tests.conftest import random_playout

FOOLS_MATE = "f3 e5 g4 Qh4#"


def scripted(mapping, default=""):
    """Adapter that answers by prompt lookup."""
    return InProcessAdapter(lambda req: mapping.get(req.prompt, default))


# --- replay --------------------------------------------------------------


def test_replay_stops_at_first_illegal_token():
    report = replay_generated_game("", "e4 e5 Ke3")
    assert report.moves_accepted == 2
    assert report.illegal_move_number == 3
    assert report.illegal


def test_replay_move_numbers_are_noise():
    report = replay_generated_game("", "1. e4 1... e5 2. Nf3")
    assert report.moves_accepted == 3
    assert not report.illegal


def test_replay_result_token_ends_game():
    report = replay_generated_game("", FOOLS_MATE + " 0-1")
    assert report.termination == "0-1"
    assert not report.missed_end_state
    assert report.moves_accepted == 4


def test_replay_moves_after_terminal_is_missed_end_state():
    report = replay_generated_game("", FOOLS_MATE + " Ke2")
    assert report.missed_end_state
    assert report.moves_accepted == 4


def test_replay_terminal_prompt_detected():
    report = replay_generated_game(FOOLS_MATE, "e4")
    assert report.termination == "0-1"
    assert report.missed_end_state


def test_replay_move_cap():
    _, tokens, _ = random_playout(3, max_plies=40)
    text = " ".join(tokens)
    report = replay_generated_game("", text, move_cap=10)
    assert report.capped and report.moves_accepted == 10
    uncapped = replay_generated_game("", text, move_cap=None)
    assert not uncapped.capped and uncapped.moves_accepted == len(tokens)


def test_replay_prompt_continuation():
    report = replay_generated_game("e4 e5", "Nf3 Nc6")
    assert report.moves_accepted == 2 and not report.illegal


def test_game_report_json_roundtrip():
    report = replay_generated_game("", FOOLS_MATE + " 0-1")
    assert GameReport.from_json(report.to_json()) == report


def test_run_move_generation_records_adapter_errors():
    def fn(req):
        raise RuntimeError("down")

    reports = run_move_generation(InProcessAdapter(fn), ["", "e4"])
    assert all(r.error for r in reports)
    agg = aggregate_game_reports(reports)
    assert agg["games"] == 0 and agg["adapter_errors"] == 2


# --- aggregation ----------------------------------------------------------


def test_aggregate_game_reports_by_hand():
    reports = [
        GameReport(prompt="", moves_accepted=4, termination="0-1",
                   centipawn_losses=[0.5, 1.5]),
        GameReport(prompt="", moves_accepted=2, illegal_move_number=3),
        GameReport(prompt="", moves_accepted=4, missed_end_state=True),
        GameReport(prompt="", error="timeout"),
    ]
    agg = aggregate_game_reports(reports)
    # 11 move tokens total (10 accepted + 1 illegal attempt), 1 illegal.
    assert agg["illegal_move_pct"] == pytest.approx(100 / 11)
    assert agg["avg_illegal_move_number"] == 3.0
    assert agg["avg_centipawn_loss"] == 1.0
    assert agg["missed_end_state_pct"] == pytest.approx(100 / 3)
    assert agg["avg_game_length"] == pytest.approx(10 / 3)
    assert agg["games"] == 3 and agg["adapter_errors"] == 1


def test_aggregate_none_when_undefined():
    agg = aggregate_game_reports([GameReport(prompt="", moves_accepted=5)])
    assert agg["avg_illegal_move_number"] is None
    assert agg["avg_centipawn_loss"] is None
    assert agg["illegal_move_pct"] == 0.0


# --- board-eval ------------------------------------------------------------


def eval_samples():
    return [
        TaskSample("board-eval", "e4", f"{bin_center(25):.2f}"),
        TaskSample("board-eval", "e4 e5", f"{bin_center(18):.2f}"),
        TaskSample("board-eval", "f3 e5 g4", "#-1"),
    ]


def test_board_eval_perfect_adapter():
    samples = eval_samples()
    answers = {s.input: s.target for s in samples}
    report = run_board_eval(scripted(answers), samples)
    assert report.mse() == 0.0
    assert report.accuracy() == 1.0
    assert report.ratio_numeric() == 1.0 and report.ratio_non_numeric() == 1.0


def test_board_eval_mse_between_bins():
    samples = [TaskSample("board-eval", "e4", f"{bin_center(25):.2f}")]
    # Prediction lands one bin below: squared bin-center distance.
    report = run_board_eval(scripted({"e4": f"{bin_center(24):.2f}"}), samples)
    width = bin_center(1) - bin_center(0)
    assert report.mse() == pytest.approx(width * width)
    assert report.accuracy() is None  # no non-numeric targets


def test_board_eval_kind_mismatch_not_scored():
    samples = [TaskSample("board-eval", "e4", "1.59"),
               TaskSample("board-eval", "f3", "#-1")]
    report = run_board_eval(scripted({"e4": "#+2", "f3": "0.5"}), samples)
    assert report.ratio_numeric() == 0.0 and report.ratio_non_numeric() == 0.0
    assert report.mse() is None and report.accuracy() == 0.0


def test_board_eval_adapter_error_counts():
    def fn(req):
        raise RuntimeError("x")

    report = run_board_eval(InProcessAdapter(fn), eval_samples())
    assert report.errors == 3
    with pytest.raises(ValueError):
        run_board_eval(echo_adapter(), [])


def test_eval_report_json_roundtrip():
    report = run_board_eval(echo_adapter(), eval_samples())
    assert EvalReport.from_json(report.to_json()) == report


# --- translation ------------------------------------------------------------


def test_run_translation_collects_pairs():
    samples = [
        TaskSample("code-summarize", "summarize: def f(): pass", "does nothing"),
        TaskSample("code-summarize", "summarize: def g(): pass", "also nothing"),
    ]
    answers = {samples[0].input: "does nothing"}
    report = run_translation(scripted(answers), samples, "code-summarize")
    assert report.candidates == ["does nothing", ""]
    assert report.references == ["does nothing", "also nothing"]
    assert TranslationReport.from_json(report.to_json()) == report


# --- domain classification and probes ---------------------------------------


def test_classify_token_domain_examples():
    assert classify_token_domain("Nxe5") == "chess"
    assert classify_token_domain("a4") == "chess"
    assert classify_token_domain("O-O") == "chess"
    assert classify_token_domain("exd8=Q+") == "chess"
    assert classify_token_domain("1-0") == "chess"
    assert classify_token_domain("12.") == "chess"
    assert classify_token_domain("def") == "code"
    assert classify_token_domain("return(x)") == "code"
    assert classify_token_domain("x+=1") == "code"
    assert classify_token_domain("42") == "ambiguous"
    assert classify_token_domain("") == "ambiguous"
    assert classify_token_domain("“smart”") == "ambiguous"


def test_collect_output_tokens():
    counts = collect_output_tokens(["e4 e5", "e4 Nf3"])
    assert counts == Counter({"e4": 2, "e5": 1, "Nf3": 1})


def test_probe_success_and_failure():
    adapter = scripted({
        "play chess": "e4 e5 Nf3 Nc6",          # all chess: success
        "play more chess": "def main(): return",  # all code: failure
        "half and half": "e4 e5 def return",      # exactly 50%: success
    })
    report = run_cross_domain_probe(
        adapter, "chess", ["play chess", "play more chess", "half and half"]
    )
    assert report.attempts == 3 and report.successes == 2
    assert report.chess_tokens["e4"] == 2
    assert ProbeReport.from_json(report.to_json()) == report


def test_probe_validation():
    with pytest.raises(ValueError):
        run_cross_domain_probe(echo_adapter(), "poetry", ["x"])
    with pytest.raises(ValueError):
        run_cross_domain_probe(echo_adapter(), "chess", [])


def test_probe_all_ambiguous_output_is_failure():
    report = run_cross_domain_probe(scripted({}, default="1 2 3"), "code", ["p"])
    assert report.successes == 0 and report.attempts == 1
