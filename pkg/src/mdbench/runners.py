"""Task execution: drive an adapter over a dataset and collect raw reports.

Each runner is pure given its inputs; adapter failures are recorded per
sample and never abort a run.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field, asdict
from typing import Iterable, List, Optional, Sequence

from .adapter import AdapterSession, GenerationExchange, GenerationRequest
from .chess import (
    RESULT_TOKENS,
    SanError,
    initial_position,
    parse_san,
)
from .datasets import TaskSample, bin_center, bin_evaluation

DEFAULT_MOVE_CAP = 70
DEFAULT_BATCH = 32
DEFAULT_MAX_NEW_TOKENS = 512

_MOVE_NUMBER = re.compile(r"^\d+\.*$")

# SAN lexical grammar: piece/pawn moves with optional decorations, castling,
# results, and dotted move numbers. Used for domain classification only.
_SAN_TOKEN = re.compile(
    r"^(?:O-O(?:-O)?|0-0(?:-0)?"
    r"|(?:[KQRBN][a-h]?[1-8]?x?[a-h][1-8]|[a-h]x?[a-h]?[1-8](?:=?[QRBN])?))"
    r"[+#]?[!?]*$"
)
_RESULT_OR_MOVENUM = re.compile(r"^(?:1-0|0-1|1/2-1/2|\d+\.+)$")
_CODE_TOKEN = re.compile(r"^[A-Za-z0-9_.\(\)\[\]\{\}:;,'\"=<>+\-*/%!&|^~@#\\`]+$")
_BARE_INT = re.compile(r"^\d+$")
_HAS_LETTER = re.compile(r"[A-Za-z]")


@dataclass
class GameReport:
    """Raw measurements for one generated game."""

    prompt: str
    moves_accepted: int = 0
    illegal_move_number: Optional[int] = None  # 1-based ply of first illegal token
    missed_end_state: bool = False
    termination: Optional[str] = None  # result token when the game ended
    centipawn_losses: List[float] = field(default_factory=list)
    capped: bool = False
    error: Optional[str] = None

    @property
    def illegal(self) -> bool:
        return self.illegal_move_number is not None

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(obj: dict) -> "GameReport":
        return GameReport(**obj)


@dataclass
class EvalReport:
    """Kind-match counts and squared error over a board-eval run."""

    true_numeric: int = 0
    pred_numeric_when_true_numeric: int = 0
    true_non_numeric: int = 0
    pred_non_numeric_when_true_non_numeric: int = 0
    correct_non_numeric: int = 0
    squared_error_sum: float = 0.0
    squared_error_count: int = 0
    errors: int = 0

    def ratio_numeric(self) -> Optional[float]:
        if self.true_numeric == 0:
            return None
        return self.pred_numeric_when_true_numeric / self.true_numeric

    def ratio_non_numeric(self) -> Optional[float]:
        if self.true_non_numeric == 0:
            return None
        return self.pred_non_numeric_when_true_non_numeric / self.true_non_numeric

    def mse(self) -> Optional[float]:
        if self.squared_error_count == 0:
            return None
        return self.squared_error_sum / self.squared_error_count

    def accuracy(self) -> Optional[float]:
        if self.true_non_numeric == 0:
            return None
        return self.correct_non_numeric / self.true_non_numeric

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(obj: dict) -> "EvalReport":
        return EvalReport(**obj)


@dataclass
class TranslationReport:
    direction: str  # "code-summarize" | "code-generate"
    candidates: List[str] = field(default_factory=list)
    references: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(obj: dict) -> "TranslationReport":
        return TranslationReport(**obj)


@dataclass
class ProbeReport:
    """Cross-domain probe outcomes plus per-domain output token multisets."""

    prompted_domain: str  # "chess" | "code"
    successes: int = 0
    attempts: int = 0
    chess_tokens: Counter = field(default_factory=Counter)
    code_tokens: Counter = field(default_factory=Counter)

    def to_json(self) -> dict:
        return {
            "prompted_domain": self.prompted_domain,
            "successes": self.successes,
            "attempts": self.attempts,
            "chess_tokens": dict(self.chess_tokens),
            "code_tokens": dict(self.code_tokens),
        }

    @staticmethod
    def from_json(obj: dict) -> "ProbeReport":
        return ProbeReport(
            obj["prompted_domain"],
            obj["successes"],
            obj["attempts"],
            Counter(obj.get("chess_tokens", {})),
            Counter(obj.get("code_tokens", {})),
        )


def _run_requests(
    session: AdapterSession,
    prompts: Sequence[str],
    task: str,
    max_new_tokens: int,
    seed: Optional[int],
    batch: int = DEFAULT_BATCH,
) -> List[GenerationExchange]:
    exchanges: List[GenerationExchange] = []
    for start in range(0, len(prompts), batch):
        requests = [
            GenerationRequest(
                id=f"{task}-{start + i:06d}",
                task=task,
                prompt=p,
                max_new_tokens=max_new_tokens,
                seed=None if seed is None else seed + start + i,
            )
            for i, p in enumerate(prompts[start : start + batch])
        ]
        exchanges.extend(session.generate_batch(requests))
    return exchanges


def replay_generated_game(
    prompt: str,
    output: str,
    move_cap: Optional[int] = DEFAULT_MOVE_CAP,
    engine=None,
    engine_limit=None,
) -> GameReport:
    """Adjudicate one generated game continuation.

    Output is whitespace-split; move-number tokens are notation noise and
    skipped; result tokens are end-of-game markers. Replay stops at the first
    illegal token, at a missed end state, or at the move cap.
    """
    report = GameReport(prompt=prompt)
    pos = initial_position()
    for tok in prompt.split():
        pos = pos.apply_move(parse_san(pos, tok))
    terminal = pos.terminal_state()
    if terminal is not None:
        report.termination = terminal.token
    for tok in output.split():
        if _MOVE_NUMBER.match(tok):
            continue
        if tok in RESULT_TOKENS:
            break
        if report.termination is not None:
            report.missed_end_state = True
            break
        if move_cap is not None and report.moves_accepted >= move_cap:
            report.capped = True
            break
        try:
            move = parse_san(pos, tok)
        except SanError:
            report.illegal_move_number = report.moves_accepted + 1
            break
        if engine is not None:
            report.centipawn_losses.append(
                engine.centipawn_loss(pos, move, engine_limit)
            )
        pos = pos.apply_move(move)
        report.moves_accepted += 1
        terminal = pos.terminal_state()
        if terminal is not None:
            report.termination = terminal.token
    return report


def run_move_generation(
    session: AdapterSession,
    prompts: Sequence[str],
    move_cap: Optional[int] = DEFAULT_MOVE_CAP,
    engine=None,
    engine_limit=None,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    seed: Optional[int] = 0,
) -> List[GameReport]:
    """Generate and adjudicate one game per prompt."""
    exchanges = _run_requests(session, prompts, "move-gen", max_new_tokens, seed)
    reports = []
    for ex in exchanges:
        if not ex.ok:
            reports.append(GameReport(prompt=ex.request.prompt, error=ex.error))
            continue
        reports.append(
            replay_generated_game(
                ex.request.prompt, ex.output, move_cap, engine, engine_limit
            )
        )
    return reports


def is_numeric_text(text: str) -> bool:
    try:
        float(text.strip())
        return True
    except ValueError:
        return False


def run_board_eval(
    session: AdapterSession,
    samples: Sequence[TaskSample],
    max_new_tokens: int = 16,
    seed: Optional[int] = 0,
) -> EvalReport:
    """Score predicted evaluations against targets by kind, bin, and match."""
    if not samples:
        raise ValueError("empty board-eval sample list")
    report = EvalReport()
    exchanges = _run_requests(
        session, [s.input for s in samples], "board-eval", max_new_tokens, seed
    )
    for sample, ex in zip(samples, exchanges):
        true_text = sample.target.strip()
        true_numeric = is_numeric_text(true_text)
        if true_numeric:
            report.true_numeric += 1
        else:
            report.true_non_numeric += 1
        if not ex.ok:
            report.errors += 1
            continue  # counts as wrong kind
        pred_text = ex.output.strip()
        pred_numeric = is_numeric_text(pred_text)
        if true_numeric and pred_numeric:
            report.pred_numeric_when_true_numeric += 1
            diff = bin_center(bin_evaluation(float(pred_text))) - bin_center(
                bin_evaluation(float(true_text))
            )
            report.squared_error_sum += diff * diff
            report.squared_error_count += 1
        elif not true_numeric and not pred_numeric:
            report.pred_non_numeric_when_true_non_numeric += 1
            if pred_text == true_text:
                report.correct_non_numeric += 1
    return report


def run_translation(
    session: AdapterSession,
    samples: Sequence[TaskSample],
    direction: str,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    seed: Optional[int] = 0,
) -> TranslationReport:
    """Collect aligned (candidate, reference) pairs; scoring happens later."""
    if not samples:
        raise ValueError("empty translation sample list")
    exchanges = _run_requests(
        session, [s.input for s in samples], direction, max_new_tokens, seed
    )
    report = TranslationReport(direction=direction)
    for sample, ex in zip(samples, exchanges):
        report.candidates.append(ex.output if ex.ok else "")
        report.references.append(sample.target)
    return report


def classify_token_domain(token: str) -> str:
    """Classify a whitespace token as "chess", "code", or "ambiguous".

    SAN wins over the code lexicon (SAN's grammar is far more restrictive
    than identifiers, so e.g. "a4" is chess). Bare integers occur freely in
    both domains and stay ambiguous.
    """
    if not token:
        return "ambiguous"
    if _RESULT_OR_MOVENUM.match(token) or _SAN_TOKEN.match(token):
        return "chess"
    if _BARE_INT.match(token):
        return "ambiguous"
    if _CODE_TOKEN.match(token):
        return "code"
    return "ambiguous"


def collect_output_tokens(texts: Iterable[str]) -> Counter:
    """Whitespace-token multiset over a collection of generated texts."""
    out: Counter = Counter()
    for text in texts:
        out.update(text.split())
    return out


def run_cross_domain_probe(
    session: AdapterSession,
    prompted_domain: str,
    prompts: Sequence[str],
    success_threshold: float = 0.5,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    seed: Optional[int] = 0,
) -> ProbeReport:
    """Prompt with the domain the model was NOT tuned on and count recalls.

    A response succeeds when at least `success_threshold` of its
    non-ambiguous tokens classify as the prompted domain. Response tokens
    accumulate into the prompted domain's output multiset.
    """
    if prompted_domain not in ("chess", "code"):
        raise ValueError(f"bad domain: {prompted_domain!r}")
    if not prompts:
        raise ValueError("empty probe prompt list")
    report = ProbeReport(prompted_domain=prompted_domain)
    exchanges = _run_requests(session, prompts, "probe", max_new_tokens, seed)
    target_multiset = (
        report.chess_tokens if prompted_domain == "chess" else report.code_tokens
    )
    for ex in exchanges:
        report.attempts += 1
        if not ex.ok:
            continue
        tokens = ex.output.split()
        target_multiset.update(tokens)
        classed = [classify_token_domain(t) for t in tokens]
        relevant = [c for c in classed if c != "ambiguous"]
        if not relevant:
            continue
        hits = sum(1 for c in relevant if c == prompted_domain)
        if hits / len(relevant) >= success_threshold:
            report.successes += 1
    return report


def aggregate_game_reports(reports: Sequence[GameReport]) -> dict:
    """Play-Score sub-metrics from raw game reports.

    Games with adapter errors are excluded. Percentages are 0-100. The
    average illegal move number is None when no game had an illegal move
    (such games are excluded from that average).
    """
    usable = [r for r in reports if r.error is None]
    total_tokens = sum(r.moves_accepted + (1 if r.illegal else 0) for r in usable)
    illegal_count = sum(1 for r in usable if r.illegal)
    losses = [loss for r in usable for loss in r.centipawn_losses]
    illegal_numbers = [r.illegal_move_number for r in usable if r.illegal]
    return {
        "games": len(usable),
        "adapter_errors": len(reports) - len(usable),
        "illegal_move_pct": (
            100.0 * illegal_count / total_tokens if total_tokens else None
        ),
        "avg_illegal_move_number": (
            sum(illegal_numbers) / len(illegal_numbers) if illegal_numbers else None
        ),
        "avg_centipawn_loss": sum(losses) / len(losses) if losses else None,
        "missed_end_state_pct": (
            100.0 * sum(1 for r in usable if r.missed_end_state) / len(usable)
            if usable
            else None
        ),
        "avg_game_length": (
            sum(r.moves_accepted for r in usable) / len(usable) if usable else None
        ),
    }
