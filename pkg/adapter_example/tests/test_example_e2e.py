"""End-to-end: the example adapter matches the in-process echo adapter."""
import json
import sys

import pytest

from mdbench.cli import main as mdbench_main
from mdbench.datasets import TaskSample, bin_center, write_dataset

CMD = " ".join([sys.executable, "-m", "mdbench_adapter_example.cli"])


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    """100 board-eval samples whose input equals the target, so a faithful
    echo adapter scores perfectly."""
    root = tmp_path_factory.mktemp("e2e")
    samples = []
    for i in range(100):
        if i % 5 == 0:
            target = "#+1" if i % 2 else "1-0"
        else:
            target = f"{bin_center(i % 44):.2f}"
        samples.append(TaskSample("board-eval", target, target))
    path = root / "board-eval.jsonl"
    write_dataset(path, samples)
    return path


def _run_eval(dataset, adapter, out_dir):
    code = mdbench_main([
        "eval", "run", "--task", "board-eval",
        "--adapter", adapter,
        "--dataset", str(dataset),
        "--out-dir", str(out_dir),
    ])
    assert code == 0
    return json.loads((out_dir / "board-eval.summary.json").read_text())


def test_stdio_echo_matches_in_process_echo(dataset, tmp_path):
    subprocess_summary = _run_eval(dataset, CMD + " --mode echo", tmp_path / "sub")
    in_process_summary = _run_eval(dataset, "echo", tmp_path / "inproc")
    assert subprocess_summary["aggregates"] == in_process_summary["aggregates"]
    # And the values are the perfect-echo ones, not vacuously equal Nones.
    assert in_process_summary["aggregates"]["mse"] == 0.0
    assert in_process_summary["aggregates"]["accuracy"] == 1.0
    assert in_process_summary["aggregates"]["ratio_numeric"] == 1.0
    assert in_process_summary["aggregates"]["ratio_non_numeric"] == 1.0
    print("PASS example adapter end-to-end equality with in-process echo (100 samples)")


def test_replay_mode_through_full_pipeline(dataset, tmp_path):
    # Feed the targets through replay mode: same perfect metrics, no model.
    transcript = tmp_path / "transcript.txt"
    with open(dataset, encoding="utf-8") as fh:
        lines = [json.loads(line)["target"] for line in fh]
    transcript.write_text("\n".join(lines) + "\n")
    replay_summary = _run_eval(
        dataset, CMD + f" --mode replay-file --replay {transcript}", tmp_path / "replay"
    )
    assert replay_summary["aggregates"]["mse"] == 0.0
    assert replay_summary["aggregates"]["accuracy"] == 1.0
    print("PASS replay-file transcript through the full metric pipeline")
