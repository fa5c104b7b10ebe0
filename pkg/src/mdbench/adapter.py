"""Neutral adapter protocol for models under test.

Wire format (newline-delimited JSON over the adapter's stdio):
  request:  {"id": s, "task": s, "prompt": s, "max_new_tokens": n, "seed": n|null}
  response: {"id": s, "output": s}
HTTP variant: POST /generate with a JSON array of request objects returns an
array of response objects; GET /healthz must return 200. Subprocess adapters
announce themselves with the banner line "mdbench-adapter v1".

Responses may arrive in any order; the session demultiplexes by id.
"""
from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

BANNER = "mdbench-adapter v1"
DEFAULT_REQUEST_TIMEOUT = 120.0
DEFAULT_MAX_IN_FLIGHT = 32


class AdapterError(RuntimeError):
    """Session-level adapter failure (spawn, banner, connect)."""


@dataclass(frozen=True)
class GenerationRequest:
    id: str
    task: str
    prompt: str
    max_new_tokens: int
    seed: Optional[int] = None

    def __post_init__(self):
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")

    def to_wire(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "task": self.task,
                "prompt": self.prompt,
                "max_new_tokens": self.max_new_tokens,
                "seed": self.seed,
            },
            ensure_ascii=False,
        )


@dataclass(frozen=True)
class GenerationResponse:
    id: str
    output: str
    diagnostics: Optional[dict] = None


@dataclass
class GenerationExchange:
    """Terminal outcome for one request: a response or an error, never both."""

    request: GenerationRequest
    response: Optional[GenerationResponse] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.response is not None

    @property
    def output(self) -> str:
        return self.response.output if self.response else ""


class AdapterSession:
    """Base session: generate_batch + close."""

    def generate_batch(
        self, requests: Sequence[GenerationRequest]
    ) -> List[GenerationExchange]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class InProcessAdapter(AdapterSession):
    """Adapter backed by a Python callable (request -> output text)."""

    def __init__(self, fn: Callable[[GenerationRequest], str], name: str = "in-process"):
        self.fn = fn
        self.name = name

    def generate_batch(self, requests):
        _check_unique_ids(requests)
        out = []
        for req in requests:
            try:
                out.append(GenerationExchange(req, GenerationResponse(req.id, self.fn(req))))
            except Exception as exc:  # per-request isolation
                out.append(GenerationExchange(req, error=f"adapter error: {exc}"))
        return out


def echo_adapter() -> InProcessAdapter:
    return InProcessAdapter(lambda req: req.prompt, name="echo")


class SubprocessAdapter(AdapterSession):
    """Adapter over a child process speaking the NDJSON wire format."""

    def __init__(
        self,
        command: Union[str, Sequence[str]],
        request_timeout: float = DEFAULT_REQUEST_TIMEOUT,
        banner_timeout: float = 10.0,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    ):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.request_timeout = request_timeout
        self.max_in_flight = max_in_flight
        self._closed = False
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
            raise AdapterError(f"cannot spawn adapter {argv!r}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        banner = self._next_line(banner_timeout)
        if banner is None or banner.strip() != BANNER:
            self.close()
            raise AdapterError(f"bad adapter banner: {banner!r}")

    def _read_loop(self):
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _next_line(self, timeout: float) -> Optional[str]:
        try:
            return self._lines.get(timeout=timeout)
        except queue.Empty:
            return None

    def generate_batch(self, requests):
        if self._closed:
            return [
                GenerationExchange(r, error="session closed") for r in requests
            ]
        _check_unique_ids(requests)
        pending: Dict[str, GenerationRequest] = {r.id: r for r in requests}
        outcomes: Dict[str, GenerationExchange] = {}
        todo = list(requests)
        sent = 0
        try:
            for req in todo[: self.max_in_flight]:
                self.proc.stdin.write(req.to_wire() + "\n")
                sent += 1
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            for req in requests:
                outcomes[req.id] = GenerationExchange(req, error=f"adapter died: {exc}")
            return [outcomes[r.id] for r in requests]

        deadline = time.monotonic() + self.request_timeout
        while len(outcomes) < len(requests):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            line = self._next_line(remaining)
            if line is None:
                break  # EOF or timeout: unanswered requests error out below
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rid = obj["id"]
                output = obj["output"]
                if not isinstance(rid, str) or not isinstance(output, str):
                    raise ValueError("id/output must be strings")
            except (json.JSONDecodeError, KeyError, ValueError, TypeError):
                # A malformed line cannot be attributed to a request; it only
                # costs the adapter one eventual timeout slot.
                continue
            if rid not in pending or rid in outcomes:
                continue
            outcomes[rid] = GenerationExchange(
                pending[rid],
                GenerationResponse(rid, output, diagnostics=obj.get("diagnostics")),
            )
            deadline = time.monotonic() + self.request_timeout
            if sent < len(todo):
                try:
                    self.proc.stdin.write(todo[sent].to_wire() + "\n")
                    self.proc.stdin.flush()
                    sent += 1
                except (BrokenPipeError, OSError):
                    pass
        for req in requests:
            if req.id not in outcomes:
                reason = "timeout" if sent > 0 else "adapter unavailable"
                outcomes[req.id] = GenerationExchange(req, error=reason)
        return [outcomes[r.id] for r in requests]

    def close(self):
        if self._closed:
            return
        self._closed = True
        try:
            if self.proc.stdin:
                self.proc.stdin.close()
        except OSError:
            pass
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()


class HttpAdapter(AdapterSession):
    """Adapter over the HTTP variant of the protocol."""

    def __init__(self, base_url: str, request_timeout: float = DEFAULT_REQUEST_TIMEOUT):
        import requests

        self._requests = requests
        self.base_url = base_url.rstrip("/")
        self.request_timeout = request_timeout
        try:
            resp = requests.get(self.base_url + "/healthz", timeout=10)
        except requests.RequestException as exc:
            raise AdapterError(f"cannot reach adapter at {base_url}: {exc}") from exc
        if resp.status_code != 200:
            raise AdapterError(f"healthz returned {resp.status_code}")

    def generate_batch(self, requests):
        _check_unique_ids(requests)
        body = [json.loads(r.to_wire()) for r in requests]
        try:
            resp = self._requests.post(
                self.base_url + "/generate", json=body, timeout=self.request_timeout
            )
            resp.raise_for_status()
            objs = resp.json()
        except Exception as exc:
            return [GenerationExchange(r, error=f"http error: {exc}") for r in requests]
        by_id = {}
        if isinstance(objs, list):
            for obj in objs:
                if isinstance(obj, dict) and isinstance(obj.get("id"), str) and isinstance(
                    obj.get("output"), str
                ):
                    by_id[obj["id"]] = obj
        out = []
        for req in requests:
            obj = by_id.get(req.id)
            if obj is None:
                out.append(GenerationExchange(req, error="missing response"))
            else:
                out.append(
                    GenerationExchange(
                        req,
                        GenerationResponse(req.id, obj["output"], obj.get("diagnostics")),
                    )
                )
        return out


def open_adapter(spec: Union[str, Sequence[str]], **kwargs) -> AdapterSession:
    """Open a session from an adapter spec.

    Specs: "echo" (in-process), an http(s) URL, or a subprocess command line.
    """
    if not isinstance(spec, str):
        return SubprocessAdapter(spec, **kwargs)
    if spec == "echo":
        return echo_adapter()
    if spec.startswith("http://") or spec.startswith("https://"):
        return HttpAdapter(spec, **{k: v for k, v in kwargs.items() if k == "request_timeout"})
    return SubprocessAdapter(spec, **kwargs)


def _check_unique_ids(requests: Sequence[GenerationRequest]) -> None:
    ids = [r.id for r in requests]
    if len(set(ids)) != len(ids):
        raise ValueError("request ids must be unique within a batch")
