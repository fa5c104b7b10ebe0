"""Leaderboard assembly: raw reports -> sub-metrics -> ranks -> aggregates."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from . import metrics
from .runners import (
    EvalReport,
    GameReport,
    ProbeReport,
    TranslationReport,
    aggregate_game_reports,
)


@dataclass
class CompetitorReports:
    """All raw reports collected for one competitor."""

    game_reports: Optional[List[GameReport]] = None
    eval_report: Optional[EvalReport] = None
    summarize_report: Optional[TranslationReport] = None
    generate_report: Optional[TranslationReport] = None
    probe_reports: List[ProbeReport] = field(default_factory=list)
    # Extra generated-output token multisets (from the main task runs) that
    # feed NMR alongside the probe outputs.
    chess_output_tokens: Counter = field(default_factory=Counter)
    code_output_tokens: Counter = field(default_factory=Counter)


@dataclass
class Leaderboard:
    competitors: List[str]
    sub_metrics: Dict[str, Dict[str, Optional[float]]]  # competitor -> column -> value
    ranks: Dict[str, Dict[str, float]]  # competitor -> column -> rank
    scores: Dict[str, Dict[str, Optional[float]]]  # competitor -> {PS, ES, ...}
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "competitors": self.competitors,
                "sub_metrics": self.sub_metrics,
                "ranks": self.ranks,
                "scores": self.scores,
                "meta": self.meta,
            },
            indent=2,
            sort_keys=True,
        )

    def to_text(self) -> str:
        """Aligned 2-decimal table, metrics as rows, competitors as columns."""
        rows = []
        score_names = sorted(
            {name for per in self.scores.values() for name in per}
        )
        metric_names = sorted(
            {name for per in self.sub_metrics.values() for name in per}
        )
        header = ["Metric"] + self.competitors
        for name in score_names:
            rows.append(
                [name]
                + [_fmt(self.scores[c].get(name)) for c in self.competitors]
            )
        for name in metric_names:
            rows.append(
                [name]
                + [_fmt(self.sub_metrics[c].get(name)) for c in self.competitors]
            )
        widths = [
            max(len(row[i]) for row in [header] + rows) for i in range(len(header))
        ]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for row in rows:
            lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.2f}"


def competitor_sub_metrics(reports: CompetitorReports) -> Dict[str, Optional[float]]:
    """Flatten one competitor's raw reports into named sub-metric values."""
    out: Dict[str, Optional[float]] = {}
    if reports.game_reports is not None:
        out.update(
            {
                k: v
                for k, v in aggregate_game_reports(reports.game_reports).items()
                if k not in ("games", "adapter_errors")
            }
        )
    if reports.eval_report is not None:
        ev = reports.eval_report
        out["ratio_numeric"] = ev.ratio_numeric()
        out["ratio_non_numeric"] = ev.ratio_non_numeric()
        out["mse"] = ev.mse()
        out["accuracy"] = ev.accuracy()
    if reports.summarize_report is not None:
        out["cs_bleu"] = metrics.corpus_bleu(
            reports.summarize_report.candidates, reports.summarize_report.references
        )
    if reports.generate_report is not None:
        out["cg_bleu"] = metrics.corpus_bleu(
            reports.generate_report.candidates, reports.generate_report.references
        )
    chess_tokens = Counter(reports.chess_output_tokens)
    code_tokens = Counter(reports.code_output_tokens)
    successes = attempts = 0
    for probe in reports.probe_reports:
        chess_tokens.update(probe.chess_tokens)
        code_tokens.update(probe.code_tokens)
        successes += probe.successes
        attempts += probe.attempts
    if chess_tokens or code_tokens or attempts:
        out["nmr"] = metrics.nmr(chess_tokens, code_tokens)
        out["crr"] = metrics.crr(successes, attempts) if attempts else None
        out["mdls"] = (
            metrics.mdls(out["nmr"], out["crr"]) if out["crr"] is not None else None
        )
    return out


def assemble_leaderboard(
    reports_by_competitor: Dict[str, CompetitorReports], meta: Optional[dict] = None
) -> Leaderboard:
    """Compute sub-metrics, rank them, and aggregate PS/ES/BLEU/MDLS."""
    competitors = list(reports_by_competitor)
    if len(competitors) < 2:
        raise ValueError("a leaderboard needs at least 2 competitors")
    sub = {c: competitor_sub_metrics(reports_by_competitor[c]) for c in competitors}

    families = {
        "PS": metrics.PLAY_SCORE_COLUMNS,
        "ES": metrics.EVAL_SCORE_COLUMNS,
    }
    present = {
        name: direction
        for family in families.values()
        for name, direction in family
        if any(name in sub[c] for c in competitors)
    }
    table = metrics.SubMetricTable(competitors)
    for name, direction in present.items():
        missing = [c for c in competitors if name not in sub[c]]
        if missing:
            raise ValueError(
                f"competitors {missing} are missing reports for {name!r}"
            )
        table.add_column(name, direction, [sub[c][name] for c in competitors])

    ranks: Dict[str, Dict[str, float]] = {c: {} for c in competitors}
    for name in table.columns:
        col_ranks = metrics.rank_competitors(table.columns[name], table.directions[name])
        for c, r in zip(competitors, col_ranks):
            ranks[c][name] = r

    scores: Dict[str, Dict[str, Optional[float]]] = {c: {} for c in competitors}
    if all(name in table.columns for name, _ in metrics.PLAY_SCORE_COLUMNS):
        for c, v in metrics.play_score(table).items():
            scores[c]["PS"] = v
    if all(name in table.columns for name, _ in metrics.EVAL_SCORE_COLUMNS):
        for c, v in metrics.eval_score(table).items():
            scores[c]["ES"] = v
    for c in competitors:
        for name, label in (("cs_bleu", "CS_BLEU"), ("cg_bleu", "CG_BLEU"), ("mdls", "MDLS")):
            if name in sub[c] and sub[c][name] is not None:
                scores[c][label] = sub[c][name]
    return Leaderboard(competitors, sub, ranks, scores, meta or {})
