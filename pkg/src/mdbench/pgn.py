"""Streaming PGN parsing and game-level filters.

The parser tolerates real-world exports: multi-line comments, nested
variations, NAGs, missing headers, and junk between games. Malformed games
are skipped and counted, never abort the stream.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Optional

from .chess import SanError, initial_position, parse_san

RESULT_TOKENS = ("1-0", "0-1", "1/2-1/2", "*")

_TAG_RE = re.compile(r'^\s*\[(\w+)\s+"(.*)"\]\s*$')
_MOVE_NUMBER_RE = re.compile(r"^\d+\.*$")
_NAG_RE = re.compile(r"^\$\d+$")


@dataclass
class PgnGame:
    headers: dict
    moves: list  # SAN tokens, stripped of numbers/comments/variations/NAGs
    result: str  # "1-0" | "0-1" | "1/2-1/2" | "*"

    def elo(self, color: str) -> Optional[int]:
        raw = self.headers.get(f"{color}Elo", "")
        try:
            return int(raw)
        except ValueError:
            return None


@dataclass
class ParseDiagnostics:
    games_ok: int = 0
    games_skipped: int = 0
    problems: list = field(default_factory=list)  # (approx line, message)


def _split_movetext(text: str) -> list:
    """Strip comments, variations, and NAGs; return raw tokens."""
    out = []
    depth = 0
    in_comment = False
    token = []
    for ch in text:
        if in_comment:
            if ch == "}":
                in_comment = False
            continue
        if ch == "{":
            in_comment = True
            if token:
                out.append("".join(token))
                token = []
            continue
        if ch == "(":
            depth += 1
            if token:
                out.append("".join(token))
                token = []
            continue
        if ch == ")":
            depth = max(0, depth - 1)
            continue
        if depth > 0:
            continue
        if ch.isspace():
            if token:
                out.append("".join(token))
                token = []
        else:
            token.append(ch)
    if token:
        out.append("".join(token))
    return out


def parse_pgn_stream(
    stream: IO, diagnostics: Optional[ParseDiagnostics] = None
) -> Iterator[PgnGame]:
    """Yield games from a PGN text stream in order.

    `stream` is any iterable of text lines. Variations, comments, NAGs, and
    move numbers are removed from the movetext.
    """
    diags = diagnostics if diagnostics is not None else ParseDiagnostics()
    headers: dict = {}
    movetext_lines: list = []
    seen_moves = False
    lineno = 0

    def flush() -> Optional[PgnGame]:
        nonlocal headers, movetext_lines, seen_moves
        if not headers and not movetext_lines:
            return None
        game = _finish_game(headers, movetext_lines, diags, lineno)
        headers, movetext_lines, seen_moves = {}, [], False
        return game

    for line in stream:
        lineno += 1
        tag = _TAG_RE.match(line)
        if tag:
            if seen_moves:
                game = flush()
                if game:
                    yield game
            headers[tag.group(1)] = tag.group(2)
            continue
        if line.strip():
            movetext_lines.append(line)
            seen_moves = True
    game = flush()
    if game:
        yield game


def _finish_game(headers, movetext_lines, diags, lineno) -> Optional[PgnGame]:
    tokens = _split_movetext("\n".join(movetext_lines))
    moves = []
    result = headers.get("Result", "*")
    for tok in tokens:
        if tok in RESULT_TOKENS:
            result = tok
            break
        if _MOVE_NUMBER_RE.match(tok) or _NAG_RE.match(tok):
            continue
        moves.append(tok)
    if not moves and not headers:
        diags.games_skipped += 1
        diags.problems.append((lineno, "empty game"))
        return None
    if result not in RESULT_TOKENS:
        diags.games_skipped += 1
        diags.problems.append((lineno, f"bad result token {result!r}"))
        return None
    diags.games_ok += 1
    return PgnGame(headers=headers, moves=moves, result=result)


def validate_game(game: PgnGame) -> bool:
    """True if the game's SAN moves replay legally from the start."""
    pos = initial_position()
    try:
        for tok in game.moves:
            pos = pos.apply_move(parse_san(pos, tok))
    except SanError:
        return False
    return True


def filter_by_min_elo(games: Iterable[PgnGame], min_elo: int) -> Iterator[PgnGame]:
    """Keep games where both players have a parsed Elo >= min_elo.

    Games lacking Elo headers are dropped: an unknown rating cannot satisfy
    the rating floor.
    """
    for game in games:
        white, black = game.elo("White"), game.elo("Black")
        if white is not None and black is not None and white >= min_elo and black >= min_elo:
            yield game


def format_pgn(game: PgnGame) -> str:
    """Render a game back to PGN text (headers + numbered movetext)."""
    lines = [f'[{k} "{v}"]' for k, v in game.headers.items()]
    lines.append("")
    parts = []
    for i, tok in enumerate(game.moves):
        if i % 2 == 0:
            parts.append(f"{i // 2 + 1}.")
        parts.append(tok)
    parts.append(game.result)
    lines.append(" ".join(parts))
    lines.append("")
    return "\n".join(lines)
