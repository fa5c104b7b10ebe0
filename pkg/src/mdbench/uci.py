"""UCI chess engine client: handshake, position analysis, centipawn loss.

One in-flight request per session. Scores are kept from the side-to-move's
perspective, as UCI engines report them; centipawn losses are computed in
centipawns and returned in pawn units.
"""
from __future__ import annotations

import os
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Union

from .chess import Move, Position

MATE_CAP_CP = 10000  # mate scores become +/-100 pawns before differencing
ENGINE_ENV_VAR = "MDBENCH_ENGINE"


class EngineError(RuntimeError):
    """Engine spawn, protocol, or timeout failure."""


@dataclass(frozen=True)
class ScoreInfo:
    kind: str  # "centipawns" | "mate-in"
    value: int  # from the side-to-move's perspective
    depth: int
    best_move: str  # UCI long algebraic

    def centipawns(self) -> int:
        """Score in centipawns with mate scores capped at +/-100 pawns."""
        if self.kind == "centipawns":
            return self.value
        return MATE_CAP_CP if self.value > 0 else -MATE_CAP_CP


@dataclass(frozen=True)
class AnalysisLimit:
    mode: str = "fixed-depth"  # or "fixed-time"
    value: int = 12  # plies, or milliseconds for fixed-time

    def __post_init__(self):
        if self.mode not in ("fixed-depth", "fixed-time"):
            raise ValueError(f"bad limit mode: {self.mode!r}")
        if self.value <= 0:
            raise ValueError("analysis limit must be positive")

    def go_command(self) -> str:
        if self.mode == "fixed-depth":
            return f"go depth {self.value}"
        return f"go movetime {self.value}"


DEFAULT_LIMIT = AnalysisLimit("fixed-depth", 12)
DEFAULT_OPTIONS = {"Threads": "1"}


class EngineSession:
    """A running UCI engine child process."""

    def __init__(
        self,
        path: Union[str, Sequence[str]],
        options: Optional[Dict[str, str]] = None,
        handshake_timeout: float = 10.0,
        move_timeout: float = 120.0,
    ):
        argv = shlex.split(path) if isinstance(path, str) else list(path)
        self.move_timeout = move_timeout
        self.name = ""
        try:
            self.proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise EngineError(f"cannot spawn engine {argv!r}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        threading.Thread(target=self._read_loop, daemon=True).start()
        self._send("uci")
        if not self._wait_for("uciok", handshake_timeout):
            self.close()
            raise EngineError("UCI handshake timed out")
        merged = dict(DEFAULT_OPTIONS)
        merged.update(options or {})
        for key, value in merged.items():
            self._send(f"setoption name {key} value {value}")
        self._send("isready")
        if not self._wait_for("readyok", handshake_timeout):
            self.close()
            raise EngineError("engine never became ready")

    def _read_loop(self):
        for line in self.proc.stdout:
            self._lines.put(line.rstrip("\n"))
        self._lines.put(None)

    def _send(self, command: str):
        try:
            self.proc.stdin.write(command + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EngineError(f"engine died: {exc}") from exc

    def _wait_for(self, token: str, timeout: float) -> bool:
        while True:
            try:
                line = self._lines.get(timeout=timeout)
            except queue.Empty:
                return False
            if line is None:
                return False
            if line.startswith("id name ") and not self.name:
                self.name = line[len("id name "):]
            if line.split() and line.split()[0] == token:
                return True

    def analyse(self, pos: Position, limit: AnalysisLimit = DEFAULT_LIMIT) -> ScoreInfo:
        """Score `pos` from the side-to-move's perspective."""
        self._send(f"position fen {pos.fen()}")
        self._send(limit.go_command())
        kind, value, depth = "centipawns", 0, 1
        while True:
            try:
                line = self._lines.get(timeout=self.move_timeout)
            except queue.Empty:
                raise EngineError("engine analysis timed out")
            if line is None:
                raise EngineError("engine died mid-analysis")
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "info":
                try:
                    if "depth" in parts:
                        depth = int(parts[parts.index("depth") + 1])
                    if "score" in parts:
                        i = parts.index("score")
                        if parts[i + 1] == "cp":
                            kind, value = "centipawns", int(parts[i + 2])
                        elif parts[i + 1] == "mate":
                            kind, value = "mate-in", int(parts[i + 2])
                except (ValueError, IndexError):
                    continue  # junk info lines never crash parsing
            elif parts[0] == "bestmove":
                if len(parts) < 2:
                    raise EngineError(f"malformed bestmove line: {line!r}")
                return ScoreInfo(kind, value, max(depth, 1), parts[1])

    def centipawn_loss(
        self, pos: Position, played: Move, limit: Optional[AnalysisLimit] = None
    ) -> float:
        """Pawn-unit loss of `played` versus the engine's best move.

        eval(best) and the negated eval of the position after `played` are
        differenced in centipawns and clamped at zero.
        """
        limit = limit or DEFAULT_LIMIT
        best = self.analyse(pos, limit)
        after = pos.apply_move(played)
        terminal = after.terminal_state()
        if terminal is not None and terminal.cause == "checkmate":
            played_score = MATE_CAP_CP  # mover delivered mate
        elif terminal is not None:
            played_score = 0  # drawn on the spot
        else:
            played_score = -self.analyse(after, limit).centipawns()
        return max(0, best.centipawns() - played_score) / 100.0

    def close(self):
        try:
            if self.proc.stdin and not self.proc.stdin.closed:
                self.proc.stdin.write("quit\n")
                self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            pass
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def spawn(
    path: Optional[str] = None, options: Optional[Dict[str, str]] = None, **kwargs
) -> EngineSession:
    """Open an engine session; falls back to the MDBENCH_ENGINE env var."""
    path = path or os.environ.get(ENGINE_ENV_VAR)
    if not path:
        raise EngineError(
            f"no engine path given and {ENGINE_ENV_VAR} is not set"
        )
    return EngineSession(path, options, **kwargs)
