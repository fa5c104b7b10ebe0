import random
import sys
from pathlib import Path

import pytest

from mdbench.chess import format_san, initial_position
from mdbench.pgn import PgnGame

FIXTURES = Path(__file__).parent / "fixtures"

FAKE_ENGINE_CMD = [sys.executable, str(FIXTURES / "fake_engine.py")]
STDIO_ADAPTER_CMD = [sys.executable, str(FIXTURES / "stdio_adapter.py")]


def random_playout(seed, max_plies=120):
    """(positions, san_tokens, result_token) of a random legal game."""
    rng = random.Random(seed)
    pos = initial_position()
    positions, tokens = [pos], []
    for _ in range(max_plies):
        terminal = pos.terminal_state()
        if terminal is not None:
            return positions, tokens, terminal.token
        move = rng.choice(pos.legal_moves())
        tokens.append(format_san(pos, move))
        pos = pos.apply_move(move)
        positions.append(pos)
    terminal = pos.terminal_state()
    return positions, tokens, terminal.token if terminal else "*"


def playout_game(seed, max_plies=120) -> PgnGame:
    _, tokens, result = random_playout(seed, max_plies)
    if result == "*":
        result = "1/2-1/2"
    return PgnGame(
        headers={
            "White": f"rand{seed}w",
            "Black": f"rand{seed}b",
            "WhiteElo": "2500",
            "BlackElo": "2500",
            "Result": result,
        },
        moves=tokens,
        result=result,
    )


@pytest.fixture(scope="session")
def playout_games():
    return [playout_game(seed, max_plies=60) for seed in range(40)]
