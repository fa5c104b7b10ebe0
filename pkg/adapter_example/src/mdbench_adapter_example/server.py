"""Single-threaded stdio request loop for the adapter wire protocol."""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from typing import Callable, Optional

BANNER = "mdbench-adapter v1"

MODES = ("echo", "replay-file", "neural")


@dataclass(frozen=True)
class AdapterConfig:
    mode: str = "echo"
    model: Optional[str] = None  # neural: model identifier
    replay: Optional[str] = None  # replay-file: path to a line-per-response file
    device: str = "cpu"
    max_batch: int = 8

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode: {self.mode!r}")
        if self.mode == "replay-file" and not self.replay:
            raise ValueError("replay-file mode needs --replay")
        if self.mode == "neural" and not self.model:
            raise ValueError("neural mode needs --model")
        if self.max_batch < 1:
            raise ValueError("max batch size must be >= 1")


def _echo_backend(config: AdapterConfig) -> Callable[[dict], str]:
    return lambda request: request["prompt"]


def _replay_backend(config: AdapterConfig) -> Callable[[dict], str]:
    with open(config.replay, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines:
        raise ValueError(f"replay file is empty: {config.replay}")
    state = {"next": 0}

    def answer(request: dict) -> str:
        # Cycles so long prompt streams can replay a short transcript.
        line = lines[state["next"] % len(lines)]
        state["next"] += 1
        return line

    return answer


def _neural_backend(config: AdapterConfig) -> Callable[[dict], str]:
    # Imported lazily: echo and replay modes must work without torch.
    import transformers

    pipe = transformers.pipeline(
        "text2text-generation", model=config.model, device=config.device
    )

    def answer(request: dict) -> str:
        if request.get("seed") is not None:
            transformers.set_seed(request["seed"] % (2 ** 32))
        result = pipe(
            request["prompt"],
            max_new_tokens=request["max_new_tokens"],
            num_return_sequences=1,
        )
        return result[0]["generated_text"]

    return answer


_BACKENDS = {
    "echo": _echo_backend,
    "replay-file": _replay_backend,
    "neural": _neural_backend,
}


def parse_request(line: str) -> dict:
    """Validate one request line; raises ValueError with a reason."""
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("request must be a JSON object")
    if not isinstance(obj.get("id"), str):
        raise ValueError("request id must be a string")
    if not isinstance(obj.get("prompt"), str):
        raise ValueError("request prompt must be a string")
    if not isinstance(obj.get("max_new_tokens"), int) or obj["max_new_tokens"] < 1:
        raise ValueError("max_new_tokens must be a positive integer")
    if obj.get("seed") is not None and not isinstance(obj["seed"], int):
        raise ValueError("seed must be an integer or null")
    return obj


def serve_stdio(config: AdapterConfig, stdin=None, stdout=None, stderr=None) -> int:
    """Answer requests until stdin closes. Returns a process exit code."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    backend = _BACKENDS[config.mode](config)
    print(BANNER, file=stdout, flush=True)
    for line in stdin:
        if not line.strip():
            continue
        try:
            request = parse_request(line)
        except (json.JSONDecodeError, ValueError) as exc:
            rid = _salvage_id(line)
            if rid is not None:
                print(
                    json.dumps({"id": rid, "error": str(exc)}, ensure_ascii=False),
                    file=stdout,
                    flush=True,
                )
            else:
                print(f"malformed request line: {exc}", file=stderr, flush=True)
            continue
        try:
            output = backend(request)
        except Exception as exc:  # one bad request never kills the server
            print(
                json.dumps({"id": request["id"], "error": str(exc)}, ensure_ascii=False),
                file=stdout,
                flush=True,
            )
            continue
        print(
            json.dumps({"id": request["id"], "output": output}, ensure_ascii=False),
            file=stdout,
            flush=True,
        )
    return 0


def _salvage_id(line: str) -> Optional[str]:
    """Best-effort id extraction from a malformed request line."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        return None
    if isinstance(obj, dict) and isinstance(obj.get("id"), str):
        return obj["id"]
    return None
