"""Scalar metrics and rank aggregation.

Ranking convention: with m competitors the best performer on a sub-metric
receives rank m and the worst rank 1; ties get the average of their rank
positions; missing values rank below every present value. Play Score and
Eval Score are means of such ranks.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Union

LOWER_BETTER = "lower-better"
HIGHER_BETTER = "higher-better"

# (column, direction) pairs feeding Play Score, in report order.
PLAY_SCORE_COLUMNS = (
    ("illegal_move_pct", LOWER_BETTER),
    ("avg_illegal_move_number", HIGHER_BETTER),
    ("avg_centipawn_loss", LOWER_BETTER),
    ("missed_end_state_pct", LOWER_BETTER),
    ("avg_game_length", HIGHER_BETTER),
)

EVAL_SCORE_COLUMNS = (
    ("mse", LOWER_BETTER),
    ("accuracy", HIGHER_BETTER),
)


@dataclass
class SubMetricTable:
    """Per-competitor sub-metric values; None marks a missing value."""

    competitors: List[str]
    columns: Dict[str, List[Optional[float]]] = field(default_factory=dict)
    directions: Dict[str, str] = field(default_factory=dict)

    def add_column(self, name: str, direction: str, values: Sequence[Optional[float]]):
        if len(values) != len(self.competitors):
            raise ValueError(f"column {name!r} has {len(values)} values for "
                             f"{len(self.competitors)} competitors")
        if direction not in (LOWER_BETTER, HIGHER_BETTER):
            raise ValueError(f"bad direction: {direction!r}")
        self.columns[name] = list(values)
        self.directions[name] = direction


def rank_competitors(
    values: Sequence[Optional[float]], direction: str
) -> List[float]:
    """Ranks 1..m with best performance receiving m; ties averaged."""
    m = len(values)
    if m < 2:
        raise ValueError("ranking needs at least 2 competitors")
    if direction not in (LOWER_BETTER, HIGHER_BETTER):
        raise ValueError(f"bad direction: {direction!r}")

    def goodness(v):
        if v is None:
            return -math.inf
        return -v if direction == LOWER_BETTER else v

    scored = sorted(range(m), key=lambda i: goodness(values[i]))
    ranks = [0.0] * m
    pos = 0
    while pos < m:
        end = pos
        while (
            end + 1 < m
            and goodness(values[scored[end + 1]]) == goodness(values[scored[pos]])
        ):
            end += 1
        avg = (pos + 1 + end + 1) / 2.0
        for j in range(pos, end + 1):
            ranks[scored[j]] = avg
        pos = end + 1
    return ranks


def _mean_of_ranks(table: SubMetricTable, required) -> Dict[str, float]:
    rank_sets = []
    for name, direction in required:
        if name not in table.columns:
            raise ValueError(f"missing required sub-metric column: {name!r}")
        rank_sets.append(rank_competitors(table.columns[name], direction))
    scores = {}
    for i, comp in enumerate(table.competitors):
        scores[comp] = sum(r[i] for r in rank_sets) / len(rank_sets)
    return scores


def play_score(table: SubMetricTable) -> Dict[str, float]:
    """Mean rank over the five gameplay sub-metrics."""
    return _mean_of_ranks(table, PLAY_SCORE_COLUMNS)


def eval_score(table: SubMetricTable) -> Dict[str, float]:
    """Mean of the MSE rank and the accuracy rank."""
    return _mean_of_ranks(table, EVAL_SCORE_COLUMNS)


def _ngrams(tokens: Sequence[str], n: int):
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def corpus_bleu(
    candidates: Sequence[Union[str, Sequence[str]]],
    references: Sequence,
    max_order: int = 4,
) -> float:
    """Corpus-level BLEU on a 0-100 scale.

    Tokenization is whitespace split (case-sensitive). Each reference entry
    may be a single text or a list of alternatives; the brevity penalty uses
    the closest-length reference per candidate. Any zero n-gram precision
    zeroes the score (no smoothing).
    """
    if len(candidates) != len(references):
        raise ValueError("candidates and references must align")
    if not candidates:
        raise ValueError("empty corpus")

    def toks(x):
        return x.split() if isinstance(x, str) else list(x)

    clipped = [0] * max_order
    totals = [0] * max_order
    cand_len = 0
    ref_len = 0
    for cand, refs in zip(candidates, references):
        cand_tokens = toks(cand)
        ref_lists = [toks(refs)] if isinstance(refs, str) else [toks(r) for r in refs]
        cand_len += len(cand_tokens)
        ref_len += min(
            (len(r) for r in ref_lists),
            key=lambda L: (abs(L - len(cand_tokens)), L),
        )
        for n in range(1, max_order + 1):
            counts = Counter(_ngrams(cand_tokens, n))
            if not counts:
                continue
            max_ref: Counter = Counter()
            for r in ref_lists:
                rc = Counter(_ngrams(r, n))
                for gram in counts:
                    if rc[gram] > max_ref[gram]:
                        max_ref[gram] = rc[gram]
            totals[n - 1] += sum(counts.values())
            clipped[n - 1] += sum(min(c, max_ref[g]) for g, c in counts.items())

    if cand_len == 0:
        return 0.0
    log_sum = 0.0
    for n in range(max_order):
        if totals[n] == 0 or clipped[n] == 0:
            return 0.0
        log_sum += math.log(clipped[n] / totals[n]) / max_order
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return 100.0 * bp * math.exp(log_sum)


def nmr(chess_tokens: Iterable[str], code_tokens: Iterable[str]) -> float:
    """1 - Jaccard overlap between the two distinct-token sets."""
    a, b = set(chess_tokens), set(code_tokens)
    union = a | b
    if not union:
        return 1.0
    return 1.0 - len(a & b) / len(union)


def crr(successes: int, attempts: int) -> float:
    """Cross-domain recall ratio."""
    if attempts <= 0:
        raise ValueError("crr needs at least one attempt")
    if not 0 <= successes <= attempts:
        raise ValueError("successes must be in [0, attempts]")
    return successes / attempts


def mdls(nmr_value: float, crr_value: float) -> float:
    """100 x harmonic mean of NMR and CRR."""
    for v in (nmr_value, crr_value):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"component out of [0, 1]: {v!r}")
    if nmr_value + crr_value == 0.0:
        return 0.0
    return 100.0 * 2.0 * nmr_value * crr_value / (nmr_value + crr_value)
