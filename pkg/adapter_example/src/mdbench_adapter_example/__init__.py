"""Reference implementation of the mdbench adapter wire protocol.

Speaks newline-delimited JSON over stdio: the banner "mdbench-adapter v1"
followed by one {"id", "output"} response per {"id", "task", "prompt",
"max_new_tokens", "seed"} request. Three backends: echo, replay-file, and an
optional neural model.
"""

from .server import AdapterConfig, serve_stdio

__version__ = "0.1.0"
__all__ = ["AdapterConfig", "serve_stdio"]
