"""Chess rules engine: position representation, legal move generation,
FEN import/export, terminal-state adjudication, and perft.

Board layout is 0x88 (16 files x 8 ranks, half of them off-board), which
makes off-board detection a single bitwise test. Positions are immutable
values; applying a move returns a new position.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

# Piece kinds (sign encodes color: positive = white, negative = black).
PAWN, KNIGHT, BISHOP, ROOK, QUEEN, KING = 1, 2, 3, 4, 5, 6

PIECE_LETTERS = {PAWN: "P", KNIGHT: "N", BISHOP: "B", ROOK: "R", QUEEN: "Q", KING: "K"}
LETTER_PIECES = {v: k for k, v in PIECE_LETTERS.items()}

WHITE, BLACK = 1, -1

# Castling-right flags.
CASTLE_WK, CASTLE_WQ, CASTLE_BK, CASTLE_BQ = 1, 2, 4, 8

KNIGHT_OFFSETS = (33, 31, 18, 14, -33, -31, -18, -14)
KING_OFFSETS = (16, -16, 1, -1, 17, 15, -17, -15)
BISHOP_DIRS = (17, 15, -17, -15)
ROOK_DIRS = (16, -16, 1, -1)
QUEEN_DIRS = BISHOP_DIRS + ROOK_DIRS

RESULT_WHITE_WIN = "1-0"
RESULT_BLACK_WIN = "0-1"
RESULT_DRAW = "1/2-1/2"
RESULT_TOKENS = (RESULT_WHITE_WIN, RESULT_BLACK_WIN, RESULT_DRAW)

MAX_PERFT_DEPTH = 6


class IllegalMoveError(ValueError):
    """Raised when a move is not legal in the given position."""


def sq88(file: int, rank: int) -> int:
    return rank * 16 + file


def sq88_to_64(s: int) -> int:
    return (s >> 4) * 8 + (s & 7)


def sq64_to_88(s: int) -> int:
    return (s >> 3) * 16 + (s & 7)


def square_name(sq64: int) -> str:
    return "abcdefgh"[sq64 & 7] + "12345678"[sq64 >> 3]


def parse_square(name: str) -> int:
    if len(name) != 2 or name[0] not in "abcdefgh" or name[1] not in "12345678":
        raise ValueError(f"bad square name: {name!r}")
    return ("12345678".index(name[1])) * 8 + "abcdefgh".index(name[0])


@dataclass(frozen=True, order=True)
class Move:
    """A chess move in from/to (0..63) coordinates plus derived flags."""

    from_square: int
    to_square: int
    promotion: Optional[str] = None  # "Q", "R", "B", "N"
    is_capture: bool = field(default=False, compare=False)
    is_en_passant: bool = field(default=False, compare=False)
    castle: Optional[str] = field(default=None, compare=False)  # "K" or "Q"

    def uci(self) -> str:
        s = square_name(self.from_square) + square_name(self.to_square)
        if self.promotion:
            s += self.promotion.lower()
        return s

    def __repr__(self) -> str:
        return f"Move({self.uci()})"


def _empty_board() -> tuple:
    return tuple([0] * 128)


_START_BACK_RANK = (ROOK, KNIGHT, BISHOP, QUEEN, KING, BISHOP, KNIGHT, ROOK)


@dataclass(frozen=True)
class Position:
    """Immutable full game state.

    `history` holds (board, side, castling, ep) snapshots of every position
    since the last irreversible move, including this one; it backs threefold
    repetition detection exactly (no hashing).
    """

    board: tuple  # 128 entries, 0x88 layout
    side: int  # WHITE or BLACK
    castling: int  # bitmask of CASTLE_* flags
    ep: Optional[int]  # en-passant target square (0x88) or None
    halfmove: int
    fullmove: int
    history: tuple = ()

    # -- construction -----------------------------------------------------

    @staticmethod
    def initial() -> "Position":
        board = [0] * 128
        for f in range(8):
            board[sq88(f, 0)] = _START_BACK_RANK[f]
            board[sq88(f, 1)] = PAWN
            board[sq88(f, 6)] = -PAWN
            board[sq88(f, 7)] = -_START_BACK_RANK[f]
        pos = Position(tuple(board), WHITE, 15, None, 0, 1)
        return pos._with_history(())

    def _with_history(self, prev: tuple) -> "Position":
        snap = (self.board, self.side, self.castling, self.ep)
        object.__setattr__(self, "history", prev + (snap,))
        return self

    # -- attacks ----------------------------------------------------------

    def is_attacked(self, sq: int, by: int) -> bool:
        """True if square `sq` (0x88) is attacked by side `by`."""
        board = self.board
        # Pawns: a white pawn on s attacks s+15 and s+17.
        if by == WHITE:
            for d in (-15, -17):
                s = sq + d
                if not (s & 0x88) and board[s] == PAWN:
                    return True
        else:
            for d in (15, 17):
                s = sq + d
                if not (s & 0x88) and board[s] == -PAWN:
                    return True
        knight = KNIGHT * by
        for d in KNIGHT_OFFSETS:
            s = sq + d
            if not (s & 0x88) and board[s] == knight:
                return True
        king = KING * by
        for d in KING_OFFSETS:
            s = sq + d
            if not (s & 0x88) and board[s] == king:
                return True
        bishop, rook, queen = BISHOP * by, ROOK * by, QUEEN * by
        for d in BISHOP_DIRS:
            s = sq + d
            while not (s & 0x88):
                pc = board[s]
                if pc:
                    if pc == bishop or pc == queen:
                        return True
                    break
                s += d
        for d in ROOK_DIRS:
            s = sq + d
            while not (s & 0x88):
                pc = board[s]
                if pc:
                    if pc == rook or pc == queen:
                        return True
                    break
                s += d
        return False

    def king_square(self, color: int) -> int:
        target = KING * color
        board = self.board
        for s in range(128):
            if not (s & 0x88) and board[s] == target:
                return s
        raise ValueError("no king on board")

    def in_check(self, color: Optional[int] = None) -> bool:
        color = self.side if color is None else color
        return self.is_attacked(self.king_square(color), -color)

    # -- move generation --------------------------------------------------

    def _pseudo_moves(self) -> Iterator[tuple]:
        """Yields (frm88, to88, promo, is_capture, is_ep, castle)."""
        board, side = self.board, self.side
        ep = self.ep
        fwd = 16 * side
        promo_rank = 7 if side == WHITE else 0
        start_rank = 1 if side == WHITE else 6
        for frm in range(128):
            if frm & 0x88:
                continue
            pc = board[frm]
            if pc == 0 or (pc > 0) != (side == WHITE):
                continue
            kind = abs(pc)
            if kind == PAWN:
                to = frm + fwd
                if not (to & 0x88) and board[to] == 0:
                    if to >> 4 == promo_rank:
                        for pr in ("Q", "R", "B", "N"):
                            yield (frm, to, pr, False, False, None)
                    else:
                        yield (frm, to, None, False, False, None)
                        if frm >> 4 == start_rank:
                            to2 = to + fwd
                            if board[to2] == 0:
                                yield (frm, to2, None, False, False, None)
                for d in (fwd + 1, fwd - 1):
                    to = frm + d
                    if to & 0x88:
                        continue
                    tgt = board[to]
                    if tgt and (tgt > 0) != (side == WHITE):
                        if to >> 4 == promo_rank:
                            for pr in ("Q", "R", "B", "N"):
                                yield (frm, to, pr, True, False, None)
                        else:
                            yield (frm, to, None, True, False, None)
                    elif ep is not None and to == ep:
                        yield (frm, to, None, True, True, None)
            elif kind == KNIGHT or kind == KING:
                offsets = KNIGHT_OFFSETS if kind == KNIGHT else KING_OFFSETS
                for d in offsets:
                    to = frm + d
                    if to & 0x88:
                        continue
                    tgt = board[to]
                    if tgt == 0:
                        yield (frm, to, None, False, False, None)
                    elif (tgt > 0) != (side == WHITE):
                        yield (frm, to, None, True, False, None)
            else:
                dirs = (
                    BISHOP_DIRS
                    if kind == BISHOP
                    else ROOK_DIRS if kind == ROOK else QUEEN_DIRS
                )
                for d in dirs:
                    to = frm + d
                    while not (to & 0x88):
                        tgt = board[to]
                        if tgt == 0:
                            yield (frm, to, None, False, False, None)
                        else:
                            if (tgt > 0) != (side == WHITE):
                                yield (frm, to, None, True, False, None)
                            break
                        to += d
        # Castling.
        rank = 0 if side == WHITE else 7
        ksq = sq88(4, rank)
        if board[ksq] == KING * side and not self.is_attacked(ksq, -side):
            kflag = CASTLE_WK if side == WHITE else CASTLE_BK
            qflag = CASTLE_WQ if side == WHITE else CASTLE_BQ
            if (
                self.castling & kflag
                and board[sq88(7, rank)] == ROOK * side
                and board[sq88(5, rank)] == 0
                and board[sq88(6, rank)] == 0
                and not self.is_attacked(sq88(5, rank), -side)
            ):
                yield (ksq, sq88(6, rank), None, False, False, "K")
            if (
                self.castling & qflag
                and board[sq88(0, rank)] == ROOK * side
                and board[sq88(1, rank)] == 0
                and board[sq88(2, rank)] == 0
                and board[sq88(3, rank)] == 0
                and not self.is_attacked(sq88(3, rank), -side)
            ):
                yield (ksq, sq88(2, rank), None, False, False, "Q")

    def _board_after(self, pm: tuple) -> list:
        """Board list after making pseudo-move `pm` (no clocks/rights)."""
        frm, to, promo, _cap, is_ep, castle = pm
        board = list(self.board)
        pc = board[frm]
        board[frm] = 0
        board[to] = LETTER_PIECES[promo] * self.side if promo else pc
        if is_ep:
            board[to - 16 * self.side] = 0
        if castle:
            rank16 = to & 0x70
            if castle == "K":
                board[rank16 + 7] = 0
                board[rank16 + 5] = ROOK * self.side
            else:
                board[rank16] = 0
                board[rank16 + 3] = ROOK * self.side
        return board

    def legal_moves(self) -> list:
        """All legal moves, sorted by (origin, destination, promotion)."""
        cached = getattr(self, "_legal_cache", None)
        if cached is not None:
            return cached
        moves = []
        side = self.side
        for pm in self._pseudo_moves():
            board = self._board_after(pm)
            ktarget = KING * side
            ksq = -1
            for s in range(128):
                if not (s & 0x88) and board[s] == ktarget:
                    ksq = s
                    break
            if ksq >= 0 and not _attacked_on(board, ksq, -side):
                frm, to, promo, cap, is_ep, castle = pm
                moves.append(
                    Move(
                        sq88_to_64(frm),
                        sq88_to_64(to),
                        promo,
                        is_capture=cap,
                        is_en_passant=is_ep,
                        castle=castle,
                    )
                )
        moves.sort(key=lambda m: (m.from_square, m.to_square, m.promotion or ""))
        object.__setattr__(self, "_legal_cache", moves)
        return moves

    # -- applying moves ---------------------------------------------------

    def find_legal(self, move: Move) -> Move:
        """Return the generator's version of `move` (with correct flags)."""
        for m in self.legal_moves():
            if (
                m.from_square == move.from_square
                and m.to_square == move.to_square
                and m.promotion == move.promotion
            ):
                return m
        raise IllegalMoveError(f"{move.uci()} is not legal here")

    def apply_move(self, move: Move) -> "Position":
        """New position after `move` (which must be legal)."""
        move = self.find_legal(move)
        frm = sq64_to_88(move.from_square)
        to = sq64_to_88(move.to_square)
        pm = (frm, to, move.promotion, move.is_capture, move.is_en_passant, move.castle)
        board = self._board_after(pm)
        moved = abs(self.board[frm])

        castling = self.castling
        for sq, flags in (
            (sq88(4, 0), CASTLE_WK | CASTLE_WQ),
            (sq88(0, 0), CASTLE_WQ),
            (sq88(7, 0), CASTLE_WK),
            (sq88(4, 7), CASTLE_BK | CASTLE_BQ),
            (sq88(0, 7), CASTLE_BQ),
            (sq88(7, 7), CASTLE_BK),
        ):
            if frm == sq or to == sq:
                castling &= ~flags

        ep = None
        if moved == PAWN and abs(to - frm) == 32:
            ep = (frm + to) // 2

        irreversible = moved == PAWN or move.is_capture
        halfmove = 0 if irreversible else self.halfmove + 1
        fullmove = self.fullmove + (1 if self.side == BLACK else 0)
        pos = Position(tuple(board), -self.side, castling, ep, halfmove, fullmove)
        return pos._with_history(() if irreversible else self.history)

    def apply_uci(self, uci: str) -> "Position":
        if len(uci) not in (4, 5):
            raise IllegalMoveError(f"bad UCI move: {uci!r}")
        promo = uci[4].upper() if len(uci) == 5 else None
        return self.apply_move(Move(parse_square(uci[:2]), parse_square(uci[2:4]), promo))

    # -- terminal states ---------------------------------------------------

    def insufficient_material(self) -> bool:
        """K vs K, K+B vs K, K+N vs K, K+B vs K+B same-color bishops."""
        minors = []  # (kind, square-color) of non-king material
        for s in range(128):
            if s & 0x88:
                continue
            pc = self.board[s]
            if pc == 0 or abs(pc) == KING:
                continue
            kind = abs(pc)
            if kind in (PAWN, ROOK, QUEEN):
                return False
            minors.append((pc, ((s >> 4) + (s & 7)) & 1))
        if len(minors) <= 1:
            return True
        if len(minors) == 2:
            (p1, c1), (p2, c2) = minors
            return (
                abs(p1) == BISHOP
                and abs(p2) == BISHOP
                and (p1 > 0) != (p2 > 0)
                and c1 == c2
            )
        return False

    def repetition_count(self) -> int:
        snap = (self.board, self.side, self.castling, self.ep)
        return self.history.count(snap)

    def terminal_state(self) -> Optional["GameTermination"]:
        if not self.legal_moves():
            if self.in_check():
                winner = -self.side
                return GameTermination(
                    kind="white-win" if winner == WHITE else "black-win",
                    cause="checkmate",
                    token=RESULT_WHITE_WIN if winner == WHITE else RESULT_BLACK_WIN,
                )
            return GameTermination("draw", "stalemate", RESULT_DRAW)
        if self.insufficient_material():
            return GameTermination("draw", "insufficient-material", RESULT_DRAW)
        if self.halfmove >= 100:
            return GameTermination("draw", "fifty-move", RESULT_DRAW)
        if self.repetition_count() >= 3:
            return GameTermination("draw", "threefold-repetition", RESULT_DRAW)
        return None

    # -- FEN ----------------------------------------------------------------

    def fen(self) -> str:
        rows = []
        for rank in range(7, -1, -1):
            row, empties = "", 0
            for f in range(8):
                pc = self.board[sq88(f, rank)]
                if pc == 0:
                    empties += 1
                    continue
                if empties:
                    row += str(empties)
                    empties = 0
                letter = PIECE_LETTERS[abs(pc)]
                row += letter if pc > 0 else letter.lower()
            if empties:
                row += str(empties)
            rows.append(row)
        castle = ""
        for flag, ch in ((CASTLE_WK, "K"), (CASTLE_WQ, "Q"), (CASTLE_BK, "k"), (CASTLE_BQ, "q")):
            if self.castling & flag:
                castle += ch
        ep = square_name(sq88_to_64(self.ep)) if self.ep is not None else "-"
        return " ".join(
            [
                "/".join(rows),
                "w" if self.side == WHITE else "b",
                castle or "-",
                ep,
                str(self.halfmove),
                str(self.fullmove),
            ]
        )

    @staticmethod
    def from_fen(fen: str) -> "Position":
        parts = fen.split()
        if len(parts) < 4:
            raise ValueError(f"bad FEN: {fen!r}")
        if len(parts) == 4:
            parts += ["0", "1"]
        placement, stm, castle, ep_s, half, full = parts[:6]
        board = [0] * 128
        ranks = placement.split("/")
        if len(ranks) != 8:
            raise ValueError(f"bad FEN placement: {placement!r}")
        for i, row in enumerate(ranks):
            rank, f = 7 - i, 0
            for ch in row:
                if ch.isdigit():
                    f += int(ch)
                elif ch.upper() in LETTER_PIECES:
                    if f > 7:
                        raise ValueError(f"bad FEN rank: {row!r}")
                    sign = 1 if ch.isupper() else -1
                    board[sq88(f, rank)] = LETTER_PIECES[ch.upper()] * sign
                    f += 1
                else:
                    raise ValueError(f"bad FEN char: {ch!r}")
            if f != 8:
                raise ValueError(f"bad FEN rank: {row!r}")
        side = WHITE if stm == "w" else BLACK
        castling = 0
        for ch, flag in (("K", CASTLE_WK), ("Q", CASTLE_WQ), ("k", CASTLE_BK), ("q", CASTLE_BQ)):
            if ch in castle:
                castling |= flag
        ep = None if ep_s == "-" else sq64_to_88(parse_square(ep_s))
        pos = Position(tuple(board), side, castling, ep, int(half), int(full))
        if sum(1 for s in range(128) if not s & 0x88 and pos.board[s] == KING) != 1:
            raise ValueError("FEN must have exactly one white king")
        if sum(1 for s in range(128) if not s & 0x88 and pos.board[s] == -KING) != 1:
            raise ValueError("FEN must have exactly one black king")
        if pos.in_check(-side):
            raise ValueError("side not to move is in check")
        return pos._with_history(())

    def piece_count(self) -> int:
        return sum(1 for s in range(128) if not s & 0x88 and self.board[s])


@dataclass(frozen=True)
class GameTermination:
    kind: str  # white-win | black-win | draw
    cause: str  # checkmate | stalemate | insufficient-material | fifty-move | threefold-repetition
    token: str  # "1-0" | "0-1" | "1/2-1/2"


def _attacked_on(board: list, sq: int, by: int) -> bool:
    """is_attacked over a raw board list (used inside legality filtering)."""
    if by == WHITE:
        for d in (-15, -17):
            s = sq + d
            if not (s & 0x88) and board[s] == PAWN:
                return True
    else:
        for d in (15, 17):
            s = sq + d
            if not (s & 0x88) and board[s] == -PAWN:
                return True
    knight = KNIGHT * by
    for d in KNIGHT_OFFSETS:
        s = sq + d
        if not (s & 0x88) and board[s] == knight:
            return True
    king = KING * by
    for d in KING_OFFSETS:
        s = sq + d
        if not (s & 0x88) and board[s] == king:
            return True
    bishop, rook, queen = BISHOP * by, ROOK * by, QUEEN * by
    for d in BISHOP_DIRS:
        s = sq + d
        while not (s & 0x88):
            pc = board[s]
            if pc:
                if pc == bishop or pc == queen:
                    return True
                break
            s += d
    for d in ROOK_DIRS:
        s = sq + d
        while not (s & 0x88):
            pc = board[s]
            if pc:
                if pc == rook or pc == queen:
                    return True
                break
            s += d
    return False


def initial_position() -> Position:
    return Position.initial()


def perft(pos: Position, depth: int) -> int:
    """Leaf count of the legal-move tree at exactly `depth`."""
    if depth < 0 or depth > MAX_PERFT_DEPTH:
        raise ValueError(f"perft depth must be in [0, {MAX_PERFT_DEPTH}]")
    return _perft(pos, depth)


def _perft(pos: Position, depth: int) -> int:
    if depth == 0:
        return 1
    moves = pos.legal_moves()
    if depth == 1:
        return len(moves)
    return sum(_perft(pos.apply_move(m), depth - 1) for m in moves)
