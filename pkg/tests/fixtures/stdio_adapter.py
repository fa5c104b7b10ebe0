"""Minimal stdio adapters for protocol tests.

Modes:
  echo        answer each request with its prompt
  reverse     buffer all pending requests, answer newest-first
  malformed   emit one junk line instead of the response for id "bad"
  badbanner   print the wrong banner and exit
  mute        print the banner, answer nothing
  opening     always answer with a fixed legal opening line
"""
import json
import sys

BANNER = "mdbench-adapter v1"


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "echo"
    if mode == "badbanner":
        print("hello", flush=True)
        return
    print(BANNER, flush=True)
    if mode == "mute":
        for _ in sys.stdin:
            pass
        return
    buffered = []
    for line in sys.stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        if mode == "reverse":
            buffered.append(req)
            if len(buffered) >= 3:
                for r in reversed(buffered):
                    _respond(r)
                buffered = []
            continue
        if mode == "malformed" and req["id"] == "bad":
            print("this is not json", flush=True)
            continue
        if mode == "opening":
            print(json.dumps({"id": req["id"], "output": "e4 e5 Nf3 Nc6"}), flush=True)
            continue
        _respond(req)
    for r in reversed(buffered):
        _respond(r)


def _respond(req):
    print(json.dumps({"id": req["id"], "output": req["prompt"]}), flush=True)


if __name__ == "__main__":
    main()
