"""Score tables (Real/Den per algorithm), gap CSVs and SVG bar charts."""

from __future__ import annotations

import csv
import io
from html import escape
from pathlib import Path
from typing import Sequence

from .experiment import ALGORITHMS, DENOISED, REAL, ScenarioResult, pair_gaps

DECIMALS = {"mae": 1, "nde": 2}
PALETTE = ["#4C72B0", "#DD8452", "#55A868", "#C44E52", "#8172B3"]


def _algorithms(results: Sequence[ScenarioResult]) -> list[str]:
    present = {r.algorithm for r in results}
    return [a for a in ALGORITHMS if a in present] + sorted(present - set(ALGORITHMS))


def _rows(results: Sequence[ScenarioResult]) -> list[tuple[str, str]]:
    seen = []
    for r in results:
        key = (r.household, r.appliance)
        if key not in seen:
            seen.append(key)
    return sorted(seen)


def fmt(value: float | None, metric: str) -> str:
    return "-" if value is None else f"{value:.{DECIMALS[metric]}f}"


def score_table_text(results: Sequence[ScenarioResult], metric: str) -> str:
    if not results:
        raise ValueError("no results to tabulate")
    algs = _algorithms(results)
    cell = {(r.household, r.appliance, r.algorithm, r.variant): getattr(r.score, metric) for r in results}
    rows = _rows(results)
    name_w = max(len("Appliance"), *(len(a) for _, a in rows))
    col_w = 8
    title = "Mean Absolute Error (MAE) [W]" if metric == "mae" else "Normalised Disaggregation Error (NDE)"
    lines = [title]
    head1 = " " * name_w + "".join(f" | {a:^{2 * col_w + 1}}" for a in algs)
    head2 = f"{'Appliance':<{name_w}}" + "".join(f" | {'Real':>{col_w}} {'Den':>{col_w}}" for _ in algs)
    lines += [head1, head2, "-" * len(head2)]
    households = sorted({h for h, _ in rows})
    for hh in households:
        if len(households) > 1:
            lines.append(f"[{hh}]")
        for h, app in rows:
            if h != hh:
                continue
            cells = "".join(
                f" | {fmt(cell.get((h, app, a, REAL)), metric):>{col_w}} {fmt(cell.get((h, app, a, DENOISED)), metric):>{col_w}}"
                for a in algs
            )
            lines.append(f"{app:<{name_w}}{cells}")
    return "\n".join(lines) + "\n"


def score_table_csv(results: Sequence[ScenarioResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["household", "appliance", "metric", "algorithm", "real", "denoised"])
    cell = {(r.household, r.appliance, r.algorithm, r.variant): r.score for r in results}
    for metric in ("mae", "nde"):
        for hh, app in _rows(results):
            for alg in _algorithms(results):
                real, den = cell.get((hh, app, alg, REAL)), cell.get((hh, app, alg, DENOISED))
                if real is None and den is None:
                    continue
                w.writerow(
                    [hh, app, metric, alg]
                    + ["" if s is None else repr(getattr(s, metric)) for s in (real, den)]
                )
    return buf.getvalue()


def emit_score_table(results: Sequence[ScenarioResult]) -> tuple[str, str]:
    """Pretty MAE and NDE tables, plus the full-precision CSV mirror."""
    text = score_table_text(results, "mae") + "\n" + score_table_text(results, "nde")
    return text, score_table_csv(results)


def gap_rows(results: Sequence[ScenarioResult], metric: str) -> list[tuple[str, str, float]]:
    """(appliance, algorithm, delta) per pair; raises UnpairedScenario on a lone variant."""
    multi = len({r.household for r in results}) > 1
    order = {a: i for i, a in enumerate(_algorithms(results))}
    rows = []
    for g in pair_gaps(results):
        app = f"{g.household}/{g.appliance}" if multi else g.appliance
        delta = g.gap.delta_mae if metric == "mae" else g.gap.delta_nde
        rows.append((app, g.algorithm, delta))
    rows.sort(key=lambda r: (r[0], order[r[1]]))
    return rows


def gap_csv(rows: Sequence[tuple[str, str, float]], metric: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["appliance", "algorithm", "metric", "delta"])
    for app, alg, delta in rows:
        w.writerow([app, alg, metric, repr(delta)])
    return buf.getvalue()


def gap_svg(rows: Sequence[tuple[str, str, float]], metric: str, title: str | None = None) -> str:
    """Grouped bar chart: one group per appliance, one bar per algorithm.

    Bars grow up from the zero line for positive gaps and down for negative ones.
    """
    apps = list(dict.fromkeys(r[0] for r in rows))
    algs = list(dict.fromkeys(r[1] for r in rows))
    value = {(a, g): d for a, g, d in rows}
    bar_w, gap_w, margin_l, margin_r, top, plot_h, bottom = 18, 24, 60, 130, 40, 260, 70
    group_w = len(algs) * bar_w + gap_w
    width = margin_l + max(1, len(apps)) * group_w + margin_r
    height = top + plot_h + bottom
    lo = min([0.0, *value.values()])
    hi = max([0.0, *value.values()])
    if hi == lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = (lo - pad if lo < 0 else lo), hi + pad

    def y(v):
        return top + (hi - v) / (hi - lo) * plot_h

    label = "ΔMAE [W]" if metric == "mae" else "ΔNDE"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">'
        f"{escape(title or 'Performance gap (' + label + ')')}</text>",
        f'<text transform="translate(14,{top + plot_h / 2:.1f}) rotate(-90)" text-anchor="middle">{escape(label)}</text>',
    ]
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        out.append(
            f'<line x1="{margin_l - 4}" x2="{width - margin_r}" y1="{y(v):.2f}" y2="{y(v):.2f}" stroke="#e0e0e0"/>'
            f'<text x="{margin_l - 6}" y="{y(v) + 4:.2f}" text-anchor="end">{v:.3g}</text>'
        )
    for i, app in enumerate(apps):
        x0 = margin_l + i * group_w + gap_w / 2
        for j, alg in enumerate(algs):
            if (app, alg) not in value:
                continue
            d = value[(app, alg)]
            y0, y1 = sorted((y(0.0), y(d)))
            cls = "bar negative" if d < 0 else "bar"
            out.append(
                f'<rect class="{cls}" data-appliance="{escape(app)}" data-algorithm="{escape(alg)}" '
                f'data-delta="{d!r}" x="{x0 + j * bar_w:.2f}" y="{y0:.2f}" width="{bar_w - 2}" '
                f'height="{y1 - y0:.2f}" fill="{PALETTE[j % len(PALETTE)]}"/>'
            )
        cx = x0 + len(algs) * bar_w / 2
        out.append(
            f'<text x="{cx:.2f}" y="{top + plot_h + 16}" text-anchor="end" '
            f'transform="rotate(-30 {cx:.2f} {top + plot_h + 16})">{escape(app)}</text>'
        )
    out.append(
        f'<line class="axis" x1="{margin_l}" x2="{width - margin_r}" y1="{y(0.0):.2f}" y2="{y(0.0):.2f}" stroke="black"/>'
    )
    for j, alg in enumerate(algs):
        ly = top + 10 + 18 * j
        lx = width - margin_r + 16
        out.append(
            f'<rect x="{lx}" y="{ly - 9}" width="12" height="12" fill="{PALETTE[j % len(PALETTE)]}"/>'
            f'<text x="{lx + 18}" y="{ly + 1}">{escape(alg)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_gap_chart(results: Sequence[ScenarioResult], metric: str = "mae") -> tuple[str, str]:
    """Gap CSV (appliance, algorithm, metric, delta) and the matching SVG."""
    if metric not in DECIMALS:
        raise ValueError("metric must be 'mae' or 'nde'")
    rows = gap_rows(results, metric)
    return gap_csv(rows, metric), gap_svg(rows, metric)


def write_report(results: Sequence[ScenarioResult], out_dir: str | Path, metric: str = "mae") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    text, table_csv = emit_score_table(results)
    chart_csv, svg = emit_gap_chart(results, metric)
    files = {
        "score_table.txt": text,
        "score_table.csv": table_csv,
        f"gap_{metric}.csv": chart_csv,
        f"gap_{metric}.svg": svg,
    }
    for name, content in files.items():
        (out / name).write_text(content, encoding="utf-8")
    return [out / n for n in files]
