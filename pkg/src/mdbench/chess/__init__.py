from .board import (
    BLACK,
    WHITE,
    GameTermination,
    IllegalMoveError,
    Move,
    Position,
    RESULT_TOKENS,
    initial_position,
    parse_square,
    perft,
    square_name,
)
from .san import (
    AmbiguousSanError,
    IllegalSanError,
    InvalidSanError,
    SanError,
    format_san,
    parse_san,
    replay_san,
    strip_san_token,
)

__all__ = [
    "BLACK",
    "WHITE",
    "GameTermination",
    "IllegalMoveError",
    "Move",
    "Position",
    "RESULT_TOKENS",
    "initial_position",
    "parse_square",
    "perft",
    "square_name",
    "AmbiguousSanError",
    "IllegalSanError",
    "InvalidSanError",
    "SanError",
    "format_san",
    "parse_san",
    "replay_san",
    "strip_san_token",
]
