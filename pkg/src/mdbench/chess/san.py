"""Standard Algebraic Notation parsing and minimal-disambiguation formatting.

Parsing is lenient about decorations: check/mate marks, annotation glyphs
(!?, ??, N) and leading move numbers are stripped before the move identity
is resolved. A token that survives stripping but denotes no legal move is an
illegal-move error; a token that is not SAN-shaped at all is a syntax error.
"""
from __future__ import annotations

import re
from typing import Optional

from .board import Move, Position, square_name

SAN_PATTERN = re.compile(
    r"^(?:(?P<castle>O-O-O|O-O|0-0-0|0-0)"
    r"|(?:(?P<piece>[KQRBN])?(?P<dfile>[a-h])?(?P<drank>[1-8])?"
    r"(?P<capture>x)?(?P<dest>[a-h][1-8])(?:=?(?P<promo>[QRBN]))?))$"
)

# Not stripped: a trailing "N" (novelty glyph) — it collides with knight
# promotions like "exd8=N".
_SUFFIX = re.compile(r"[+#!?]+$")


class SanError(ValueError):
    """Base error for SAN handling."""


class InvalidSanError(SanError):
    """The token is not SAN-shaped."""


class IllegalSanError(SanError):
    """SAN-shaped, but denotes no legal move in this position."""


class AmbiguousSanError(SanError):
    """SAN underdetermined among several legal moves."""


def strip_san_token(text: str) -> str:
    token = text.strip()
    # Annotation suffixes are noise for move identity ("Qh4#!?" -> "Qh4").
    while True:
        stripped = _SUFFIX.sub("", token)
        if stripped == token:
            break
        token = stripped
    return token


def parse_san(pos: Position, text: str) -> Move:
    """The unique legal move denoted by `text` in `pos`."""
    token = strip_san_token(text)
    m = SAN_PATTERN.match(token)
    if not m or not token:
        raise InvalidSanError(f"not a SAN token: {text!r}")
    legal = pos.legal_moves()
    if m.group("castle"):
        side = "Q" if m.group("castle") in ("O-O-O", "0-0-0") else "K"
        matches = [mv for mv in legal if mv.castle == side]
    else:
        piece = m.group("piece")
        dfile = m.group("dfile")
        drank = m.group("drank")
        dest = m.group("dest")
        promo = m.group("promo")
        matches = []
        for mv in legal:
            if mv.castle:
                continue
            if square_name(mv.to_square) != dest:
                continue
            mover = _piece_letter(pos, mv)
            if (piece or None) != (mover if mover != "P" else None):
                continue
            frm = square_name(mv.from_square)
            if dfile and frm[0] != dfile:
                continue
            if drank and frm[1] != drank:
                continue
            if (mv.promotion or None) != (promo or None):
                continue
            # Pawn captures must name the origin file ("exd5", never "xd5").
            if mover == "P" and mv.is_capture and not dfile:
                continue
            matches.append(mv)
    if not matches:
        raise IllegalSanError(f"{text!r} is not legal in this position")
    if len(matches) > 1:
        raise AmbiguousSanError(f"{text!r} is ambiguous: {[mv.uci() for mv in matches]}")
    return matches[0]


def _piece_letter(pos: Position, mv: Move) -> str:
    from .board import PIECE_LETTERS, sq64_to_88

    return PIECE_LETTERS[abs(pos.board[sq64_to_88(mv.from_square)])]


def format_san(pos: Position, move: Move) -> str:
    """Minimal-disambiguation SAN for a legal move, with +/# suffix."""
    move = pos.find_legal(move)
    if move.castle:
        core = "O-O" if move.castle == "K" else "O-O-O"
    else:
        piece = _piece_letter(pos, move)
        dest = square_name(move.to_square)
        frm = square_name(move.from_square)
        if piece == "P":
            core = (frm[0] + "x" + dest) if move.is_capture else dest
            if move.promotion:
                core += "=" + move.promotion
        else:
            others = [
                mv
                for mv in pos.legal_moves()
                if mv.to_square == move.to_square
                and mv.from_square != move.from_square
                and _piece_letter(pos, mv) == piece
            ]
            disambig = ""
            if others:
                same_file = any(
                    square_name(mv.from_square)[0] == frm[0] for mv in others
                )
                same_rank = any(
                    square_name(mv.from_square)[1] == frm[1] for mv in others
                )
                if not same_file:
                    disambig = frm[0]
                elif not same_rank:
                    disambig = frm[1]
                else:
                    disambig = frm
            core = piece + disambig + ("x" if move.is_capture else "") + dest
    child = pos.apply_move(move)
    if child.in_check():
        core += "#" if not child.legal_moves() else "+"
    return core


def replay_san(pos: Position, tokens) -> Position:
    """Apply a sequence of SAN tokens; raises SanError on the first bad one."""
    for tok in tokens:
        pos = pos.apply_move(parse_san(pos, tok))
    return pos
