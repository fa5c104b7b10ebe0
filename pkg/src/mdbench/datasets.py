"""Task dataset construction: evaluation binning, prefixing, splits, JSONL IO.

Four tasks: move-gen, board-eval, code-summarize, code-generate. Samples are
{task, input, target} triples persisted one-per-line as JSON.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

TASKS = ("move-gen", "board-eval", "code-summarize", "code-generate")

SUMMARIZE_PREFIX = "summarize: "
GENERATE_PREFIX = "generate: "

EVAL_MIN, EVAL_MAX = -10.0, 10.0
EVAL_BINS = 44
_BIN_WIDTH = (EVAL_MAX - EVAL_MIN) / EVAL_BINS


@dataclass(frozen=True)
class TaskSample:
    task: str
    input: str
    target: str


@dataclass(frozen=True)
class EvalRecord:
    """A SAN move prefix plus a raw engine evaluation.

    Exactly one of `value` (pawns) and `token` (mate/draw string like "#+3")
    is set.
    """

    moves: tuple
    value: Optional[float] = None
    token: Optional[str] = None

    def __post_init__(self):
        if (self.value is None) == (self.token is None):
            raise ValueError("exactly one of value/token must be set")
        if self.value is not None and not math.isfinite(self.value):
            raise ValueError("numeric evaluation must be finite")


@dataclass(frozen=True)
class EvalTarget:
    kind: str  # "numeric-bin" | "non-numeric"
    bin_index: Optional[int] = None
    token: Optional[str] = None


@dataclass(frozen=True)
class CodePair:
    code: str
    docstring: str


def bin_evaluation(value: float) -> int:
    """Bin index in [0, 43] for a pawn-unit evaluation.

    Values are clamped to [-10, +10]; bins are uniform half-open intervals
    with +10 folded into the top bin.
    """
    if not math.isfinite(value):
        raise ValueError(f"evaluation must be finite, got {value!r}")
    clamped = min(max(value, EVAL_MIN), EVAL_MAX)
    idx = int((clamped - EVAL_MIN) / _BIN_WIDTH)
    return min(idx, EVAL_BINS - 1)


def bin_center(index: int) -> float:
    """Midpoint of bin `index`, in pawns."""
    if not 0 <= index < EVAL_BINS:
        raise ValueError(f"bin index out of range: {index}")
    return EVAL_MIN + (index + 0.5) * _BIN_WIDTH


def make_eval_target(raw: Union[float, int, str]) -> EvalTarget:
    """Numeric evaluations become bins; mate/draw tokens pass through."""
    if isinstance(raw, (int, float)):
        return EvalTarget("numeric-bin", bin_index=bin_evaluation(float(raw)))
    text = raw.strip()
    try:
        value = float(text)
    except ValueError:
        if not text:
            raise ValueError("empty evaluation token")
        return EvalTarget("non-numeric", token=text)
    return EvalTarget("numeric-bin", bin_index=bin_evaluation(value))


def make_task_samples(task: str, records: Iterable) -> List[TaskSample]:
    """Build prefixed input/target pairs for one task.

    move-gen records are (prompt SAN prefix, PgnGame); board-eval records are
    EvalRecord; code tasks take CodePair.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task: {task!r}")
    samples = []
    for rec in records:
        if task == "move-gen":
            prompt, game = rec
            target = " ".join(list(game.moves) + [game.result])
            samples.append(TaskSample(task, prompt, target))
        elif task == "board-eval":
            target = make_eval_target(rec.token if rec.token is not None else rec.value)
            if target.kind == "numeric-bin":
                text = f"{bin_center(target.bin_index):.2f}"
            else:
                text = target.token
            samples.append(TaskSample(task, " ".join(rec.moves), text))
        elif task == "code-summarize":
            samples.append(TaskSample(task, SUMMARIZE_PREFIX + rec.code, rec.docstring))
        else:
            samples.append(TaskSample(task, GENERATE_PREFIX + rec.docstring, rec.code))
    return samples


def split(
    records: Sequence, test_fraction: float, seed: int
) -> Tuple[list, list]:
    """Deterministic shuffle under `seed`, then partition.

    |test| = round(test_fraction * N); train and test are disjoint and
    exhaustive.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test fraction must be in (0, 1)")
    if not records:
        raise ValueError("cannot split an empty record list")
    order = list(records)
    random.Random(seed).shuffle(order)
    n_test = round(test_fraction * len(order))
    return order[n_test:], order[:n_test]


def write_dataset(path, samples: Iterable[TaskSample]) -> int:
    """Write samples as JSONL; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(
                json.dumps(
                    {"task": s.task, "input": s.input, "target": s.target},
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )
            fh.write("\n")
            count += 1
    return count


def read_dataset(path) -> List[TaskSample]:
    """Exact inverse of write_dataset. Reports malformed lines by number."""
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                samples.append(TaskSample(obj["task"], obj["input"], obj["target"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed dataset line: {exc}") from exc
    return samples
