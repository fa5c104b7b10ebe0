"""Deterministic fake UCI engine for tests.

Evaluation: one-ply material search. score(pos) = max over legal moves of
(mover material - opponent material) after the move, in centipawns. If some
move delivers mate, reports "score mate 1" with that move.
"""
import sys

sys.path.insert(0, "")  # run from the repo; mdbench must be importable

from mdbench.chess import Position, initial_position

VALUES = {1: 100, 2: 300, 3: 300, 4: 500, 5: 900, 6: 0}


def material(pos, color):
    total = 0
    for s in range(128):
        if s & 0x88:
            continue
        pc = pos.board[s]
        if pc and (pc > 0) == (color > 0):
            total += VALUES[abs(pc)]
    return total


def evaluate(pos):
    """Returns (kind, value, best_uci) from the side to move's view."""
    side = pos.side
    best_score, best_move, mate_move = None, None, None
    for move in pos.legal_moves():
        child = pos.apply_move(move)
        terminal = child.terminal_state()
        if terminal is not None and terminal.cause == "checkmate":
            mate_move = move
            break
        score = material(child, side) - material(child, -side)
        if best_score is None or score > best_score:
            best_score, best_move = score, move
    if mate_move is not None:
        return "mate", 1, mate_move.uci()
    if best_move is None:
        return "mate", 0, "(none)"
    return "cp", best_score, best_move.uci()


def main():
    pos = initial_position()
    for line in sys.stdin:
        parts = line.split()
        if not parts:
            continue
        cmd = parts[0]
        if cmd == "uci":
            print("id name FakeFish 1.0")
            print("id author mdbench tests")
            print("uciok", flush=True)
        elif cmd == "isready":
            print("readyok", flush=True)
        elif cmd == "setoption":
            pass
        elif cmd == "position":
            if parts[1] == "startpos":
                pos = initial_position()
                moves = parts[3:] if len(parts) > 3 and parts[2] == "moves" else []
            else:
                idx = parts.index("moves") if "moves" in parts else len(parts)
                pos = Position.from_fen(" ".join(parts[2:idx]))
                moves = parts[idx + 1:] if idx < len(parts) else []
            for uci in moves:
                pos = pos.apply_uci(uci)
        elif cmd == "go":
            kind, value, best = evaluate(pos)
            print(f"info depth 1 score {kind} {value} pv {best}")
            print(f"bestmove {best}", flush=True)
        elif cmd == "quit":
            return


if __name__ == "__main__":
    main()
