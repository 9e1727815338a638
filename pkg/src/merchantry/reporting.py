"""Report rendering: JSON documents and aligned plain-text tables."""

from __future__ import annotations

import json

from .metrics import AppraisalReport, NegotiationReport
from .stats import AnovaResult, PairwiseComparison


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [
        max(len(headers[i]), *(len(row[i]) for row in rows)) if rows else len(headers[i])
        for i in range(len(headers))
    ]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)


def render_appraisal_table(report: AppraisalReport, label: str = "appraiser") -> str:
    headers = ["", "MAPE", "Std. Dev.", "Skewness", "UOR"]
    row = [
        label,
        f"{report.mape:.2f}",
        f"{report.std_dev:.2f}",
        f"{report.skewness:.2f}",
        f"{report.uor:.2f}",
    ]
    return _table(headers, [row])


def render_negotiation_table(report: NegotiationReport, label: str = "negotiator") -> str:
    headers = ["", "Persuasiveness", "Dominance", "Agreement"]
    row = [
        label,
        f"{report.persuasiveness_mean:.2f} ± {report.persuasiveness_std:.2f}",
        f"{report.dominance_mean:.2f} ± {report.dominance_std:.2f}",
        f"{report.agreement:.2f}%",
    ]
    return _table(headers, [row])


def render_stats(anova: AnovaResult, pairwise: list[PairwiseComparison],
                 labels: list[str] | None = None) -> str:
    name = labels.__getitem__ if labels else str
    header = (
        f"One-way ANOVA: F({anova.df_between},{anova.df_within}) = "
        f"{anova.f_statistic:.2f}, p = {anova.p_value:.4g}"
    )
    rows = [
        [f"{name(c.group_a)} vs {name(c.group_b)}", f"{c.mean_diff:.3f}", f"{c.adjusted_p:.4g}"]
        for c in pairwise
    ]
    return header + "\n" + _table(["Pair", "Mean Diff.", "Adj. p"], rows)


def report_json(report: AppraisalReport | NegotiationReport,
                stats: dict | None = None) -> str:
    doc = report.to_dict()
    if stats:
        doc["stats"] = stats
    return json.dumps(doc, sort_keys=True, indent=2)
