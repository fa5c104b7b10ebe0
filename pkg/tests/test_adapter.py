import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from mdbench.adapter import (
    BANNER,
    AdapterError,
    GenerationRequest,
    HttpAdapter,
    InProcessAdapter,
    SubprocessAdapter,
    echo_adapter,
    open_adapter,
)
from tests.conftest import STDIO_ADAPTER_CMD


def req(rid, prompt="hello", task="move-gen", seed=None):
    return GenerationRequest(rid, task, prompt, max_new_tokens=64, seed=seed)


def test_request_wire_format():
    wire = json.loads(req("r1", "e4 e5", seed=7).to_wire())
    assert wire == {
        "id": "r1",
        "task": "move-gen",
        "prompt": "e4 e5",
        "max_new_tokens": 64,
        "seed": 7,
    }


def test_request_validates_max_new_tokens():
    with pytest.raises(ValueError):
        GenerationRequest("r", "t", "p", max_new_tokens=0)


def test_echo_adapter():
    with echo_adapter() as session:
        (ex,) = session.generate_batch([req("a", "ping")])
    assert ex.ok and ex.output == "ping"


def test_in_process_error_isolation():
    def fn(r):
        if r.prompt == "boom":
            raise RuntimeError("nope")
        return r.prompt

    with InProcessAdapter(fn) as session:
        good, bad = session.generate_batch([req("1", "fine"), req("2", "boom")])
    assert good.ok and good.output == "fine"
    assert not bad.ok and "nope" in bad.error and bad.output == ""


def test_duplicate_ids_rejected():
    with echo_adapter() as session:
        with pytest.raises(ValueError):
            session.generate_batch([req("x"), req("x")])


def test_subprocess_echo_roundtrip():
    with SubprocessAdapter(STDIO_ADAPTER_CMD + ["echo"]) as session:
        exchanges = session.generate_batch([req(f"r{i}", f"p{i}") for i in range(5)])
    assert [e.output for e in exchanges] == [f"p{i}" for i in range(5)]


def test_subprocess_utf8_roundtrip():
    with SubprocessAdapter(STDIO_ADAPTER_CMD + ["echo"]) as session:
        (ex,) = session.generate_batch([req("u", "♞ héllo “quotes”")])
    assert ex.output == "♞ héllo “quotes”"


def test_out_of_order_responses_demuxed():
    with SubprocessAdapter(STDIO_ADAPTER_CMD + ["reverse"]) as session:
        exchanges = session.generate_batch([req(f"r{i}", f"p{i}") for i in range(6)])
    # Responses arrive newest-first in blocks of 3 but map back correctly.
    assert all(e.ok for e in exchanges)
    assert [e.output for e in exchanges] == [f"p{i}" for i in range(6)]


def test_malformed_line_isolated_to_one_request():
    with SubprocessAdapter(
        STDIO_ADAPTER_CMD + ["malformed"], request_timeout=2.0
    ) as session:
        exchanges = session.generate_batch(
            [req("ok1"), req("bad"), req("ok2", "later")]
        )
    by_id = {e.request.id: e for e in exchanges}
    assert by_id["ok1"].ok and by_id["ok2"].ok
    assert not by_id["bad"].ok and by_id["bad"].error == "timeout"


def test_bad_banner_raises():
    with pytest.raises(AdapterError, match="banner"):
        SubprocessAdapter(STDIO_ADAPTER_CMD + ["badbanner"])


def test_mute_adapter_times_out_per_request():
    with SubprocessAdapter(
        STDIO_ADAPTER_CMD + ["mute"], request_timeout=1.0
    ) as session:
        exchanges = session.generate_batch([req("a"), req("b")])
    assert all(not e.ok for e in exchanges)


def test_missing_command_raises():
    with pytest.raises(AdapterError):
        SubprocessAdapter(["/no/such/binary"])


def test_closed_session_errors_cleanly():
    session = SubprocessAdapter(STDIO_ADAPTER_CMD + ["echo"])
    session.close()
    session.close()  # idempotent
    (ex,) = session.generate_batch([req("z")])
    assert not ex.ok and "closed" in ex.error


def test_large_batch_respects_in_flight_window():
    n = 100  # exceeds the in-flight window
    with SubprocessAdapter(STDIO_ADAPTER_CMD + ["echo"]) as session:
        exchanges = session.generate_batch([req(f"r{i}", str(i)) for i in range(n)])
    assert [e.output for e in exchanges] == [str(i) for i in range(n)]


# --- HTTP variant ---------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_GET(self):
        if self.path == "/healthz":
            self.send_response(200)
            self.end_headers()
            self.wfile.write(b"ok")
        else:
            self.send_response(404)
            self.end_headers()

    def do_POST(self):
        if self.path != "/generate":
            self.send_response(404)
            self.end_headers()
            return
        length = int(self.headers["Content-Length"])
        reqs = json.loads(self.rfile.read(length))
        body = json.dumps(
            [{"id": r["id"], "output": r["prompt"]} for r in reqs if r["id"] != "skip"]
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)


@pytest.fixture()
def http_adapter_url():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def test_http_adapter_roundtrip(http_adapter_url):
    with HttpAdapter(http_adapter_url) as session:
        exchanges = session.generate_batch([req("a", "x"), req("b", "y")])
    assert [e.output for e in exchanges] == ["x", "y"]


def test_http_adapter_missing_response(http_adapter_url):
    with HttpAdapter(http_adapter_url) as session:
        good, missing = session.generate_batch([req("a"), req("skip")])
    assert good.ok
    assert not missing.ok and "missing" in missing.error


def test_http_adapter_unreachable():
    with pytest.raises(AdapterError):
        HttpAdapter("http://127.0.0.1:1")


def test_open_adapter_dispatch(http_adapter_url):
    assert isinstance(open_adapter("echo"), InProcessAdapter)
    session = open_adapter(http_adapter_url)
    assert isinstance(session, HttpAdapter)
    session = open_adapter(STDIO_ADAPTER_CMD + ["echo"])
    assert isinstance(session, SubprocessAdapter)
    session.close()
