"""Leaderboard rendering: delimited tables plus matplotlib figures."""
from __future__ import annotations

import csv
import os
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .leaderboard import Leaderboard

SCORE_LABELS = {
    "PS": "Play Score",
    "ES": "Eval Score",
    "CS_BLEU": "Code-summarization BLEU",
    "CG_BLEU": "Code-generation BLEU",
    "MDLS": "Multi-Domain Learning Score",
}


def write_csv(board: Leaderboard, path, delimiter: str = ",") -> None:
    """Full-precision delimited dump: one row per competitor."""
    score_names = sorted({n for per in board.scores.values() for n in per})
    metric_names = sorted({n for per in board.sub_metrics.values() for n in per})
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(["competitor"] + score_names + metric_names)
        for comp in board.competitors:
            row = [comp]
            row += [_cell(board.scores[comp].get(n)) for n in score_names]
            row += [_cell(board.sub_metrics[comp].get(n)) for n in metric_names]
            writer.writerow(row)


def _cell(v):
    return "" if v is None else repr(v)


def render_figures(board: Leaderboard, out_dir) -> List[str]:
    """One bar chart per aggregate score; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    score_names = sorted({n for per in board.scores.values() for n in per})
    for name in score_names:
        values = [board.scores[c].get(name) for c in board.competitors]
        pairs = [(c, v) for c, v in zip(board.competitors, values) if v is not None]
        if not pairs:
            continue
        fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(pairs)), 3.2))
        ax.bar([p[0] for p in pairs], [p[1] for p in pairs], color="#4878a8")
        ax.set_ylabel(SCORE_LABELS.get(name, name))
        ax.set_title(SCORE_LABELS.get(name, name))
        ax.tick_params(axis="x", rotation=20)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{name.lower()}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    # Rank heat map over all ranked sub-metrics.
    metric_names = sorted({n for per in board.ranks.values() for n in per})
    if metric_names:
        grid = [
            [board.ranks[c].get(n, float("nan")) for n in metric_names]
            for c in board.competitors
        ]
        fig, ax = plt.subplots(
            figsize=(max(4, 0.9 * len(metric_names)), max(3, 0.6 * len(board.competitors)))
        )
        im = ax.imshow(grid, cmap="viridis", aspect="auto")
        ax.set_xticks(range(len(metric_names)), metric_names, rotation=30, ha="right")
        ax.set_yticks(range(len(board.competitors)), board.competitors)
        for i in range(len(board.competitors)):
            for j in range(len(metric_names)):
                ax.text(j, i, f"{grid[i][j]:.1f}", ha="center", va="center", color="w")
        fig.colorbar(im, ax=ax, label="rank (higher = better)")
        fig.tight_layout()
        path = os.path.join(out_dir, "ranks.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
