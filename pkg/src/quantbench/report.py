"""Comparison table, chart data files and a self-contained SVG bar chart.

Rendering is pure: the same results always give byte-identical output.
Accuracies are printed as percentages with 2 decimals, times in seconds with
4 decimals.
"""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from .bench import BenchResult, Technique
from .core import Precision
from .errors import ReportError

TABLE_COLUMNS = ("Dataset", "Technique", "Accuracy Before", "Accuracy F32", "Accuracy I32",
                 "Time Before", "Time F32", "Time I32")

FOOTER = (
    "Time reduction = 100 x (1 - t_cell / t_before), computed from the median fit times above.\n"
    "Reference check: the reported QuantileTransformer / Float32 breast-cancer times "
    "(0.0258 s -> 0.0142 s) give 45.0%;\n"
    "the 92.1% decrease quoted for that cell does not follow from those times "
    "(0.0258 s -> 0.0025 s, the Int32 cell, gives 90.3%)."
)

BAR_COLUMNS = ("dataset", "technique", "precision", "accuracy_pct", "fit_time_s",
               "baseline_accuracy_pct", "baseline_fit_time_s")
SWEEP_COLUMNS = ("parameter", "value", "precision", "accuracy_pct", "fit_time_s")

_PREC_COLORS = {"F32": "#4C72B0", "I32": "#DD8452", "F64": "#55A868"}


def fmt_acc(acc) -> str:
    return "" if acc is None else f"{100.0 * acc:.2f}"


def fmt_time(t) -> str:
    return "" if t is None else f"{t:.4f}"


def fmt_pct(p) -> str:
    return "" if p is None else f"{p:.2f}"


def _blocks(results) -> dict:
    blocks: dict[str, list] = {}
    for r in results:
        blocks.setdefault(r.dataset, []).append(r)
    return blocks


def _baseline(block, name) -> BenchResult:
    for r in block:
        if r.is_baseline:
            return r
    raise ReportError(f"no baseline (None, F64) result for dataset {name!r}")


def table_rows(results) -> list[list[str]]:
    if not results:
        raise ReportError("cannot render an empty result list")
    rows = []
    for name, block in _blocks(results).items():
        base = _baseline(block, name)
        cells: dict[Technique, dict[Precision, BenchResult]] = {}
        for r in block:
            if not r.is_baseline:
                cells.setdefault(r.technique, {})[r.precision] = r
        techs = list(cells) or [None]
        for k, tech in enumerate(techs):
            first = k == 0
            row = [name if first else "", tech.label if tech else "",
                   fmt_acc(base.accuracy) if first else ""]
            by_prec = cells.get(tech, {})
            for prec in (Precision.F32, Precision.I32):
                r = by_prec.get(prec)
                row.append("ERR" if r is not None and not r.ok else fmt_acc(r.accuracy if r else None))
            row.append(fmt_time(base.fit_time_s) if first else "")
            for prec in (Precision.F32, Precision.I32):
                r = by_prec.get(prec)
                row.append("ERR" if r is not None and not r.ok else fmt_time(r.fit_time_s if r else None))
            rows.append(row)
    return rows


def _reduction_lines(results) -> list[str]:
    lines = []
    for r in results:
        if r.is_baseline or not r.ok or r.time_reduction_pct is None:
            continue
        lines.append(f"  {r.dataset} / {r.technique.label} / {r.precision.value}: "
                     f"{fmt_pct(r.time_reduction_pct)}%")
    return lines


def render_table(results, footer: bool = True) -> str:
    """Fixed-layout text table; baseline cells appear once per dataset block."""
    rows = table_rows(results)
    widths = [max(len(TABLE_COLUMNS[i]), *(len(r[i]) for r in rows))
              for i in range(len(TABLE_COLUMNS))]

    def line(cells):
        out = []
        for i, c in enumerate(cells):
            out.append(c.ljust(widths[i]) if i < 2 else c.rjust(widths[i]))
        return " | ".join(out).rstrip()

    sep = "-+-".join("-" * w for w in widths)
    text = [line(TABLE_COLUMNS), sep]
    prev = None
    for r in rows:
        if r[0] and prev is not None:
            text.append(sep)
        text.append(line(r))
        prev = r
    text.append("")
    text.append("Accuracy in %, times are median fit seconds.")
    reductions = _reduction_lines(results)
    if reductions:
        text.append("Time reduction vs Before (%):")
        text.extend(reductions)
    if footer:
        text.append("")
        text.append(FOOTER)
    return "\n".join(text) + "\n"


# -- chart data ------------------------------------------------------------------


def bar_rows(results) -> list[dict]:
    """One bar per non-baseline cell, with the baseline as a reference value."""
    if not results:
        raise ReportError("cannot build bar data from an empty result list")
    out = []
    for name, block in _blocks(results).items():
        base = _baseline(block, name)
        for r in block:
            if r.is_baseline or not r.ok:
                continue
            out.append({
                "dataset": name,
                "technique": r.technique.label,
                "precision": r.precision.value,
                "accuracy_pct": fmt_acc(r.accuracy),
                "fit_time_s": fmt_time(r.fit_time_s),
                "baseline_accuracy_pct": fmt_acc(base.accuracy),
                "baseline_fit_time_s": fmt_time(base.fit_time_s),
            })
    return out


def sweep_rows(parameter: str, sweep) -> list[dict]:
    """Rows of an accuracy-vs-parameter sweep, grouped by precision."""
    if not sweep:
        raise ReportError("empty sweep grid")
    return [{"parameter": parameter, "value": str(v), "precision": r.precision.value,
             "accuracy_pct": fmt_acc(r.accuracy), "fit_time_s": fmt_time(r.fit_time_s)}
            for v, r in sweep]


def rows_to_csv(rows, columns) -> str:
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def render_svg(rows, title: str = "Accuracy and fit time by technique and precision") -> str:
    """Grouped bar chart: per dataset an accuracy panel and a fit-time panel.

    Each bar's ``<title>`` carries the exact CSV strings it was drawn from;
    dashed lines mark the baseline.
    """
    if not rows:
        raise ReportError("no bars to draw")
    datasets = list(dict.fromkeys(r["dataset"] for r in rows))
    panel_w, panel_h, pad, top = 420, 220, 60, 50
    width = 2 * panel_w + 3 * pad
    height = top + len(datasets) * (panel_h + 2 * pad)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]
    for di, ds in enumerate(datasets):
        drows = [r for r in rows if r["dataset"] == ds]
        y0 = top + di * (panel_h + 2 * pad) + pad
        for pi, (metric, base_key, unit) in enumerate((
                ("accuracy_pct", "baseline_accuracy_pct", "%"),
                ("fit_time_s", "baseline_fit_time_s", "s"))):
            x0 = pad + pi * (panel_w + pad)
            out.extend(_panel(drows, ds, metric, base_key, unit, x0, y0, panel_w, panel_h))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _panel(rows, dataset, metric, base_key, unit, x0, y0, w, h) -> list[str]:
    base = float(rows[0][base_key])
    vmax = max([float(r[metric]) for r in rows] + [base]) or 1.0
    vmax *= 1.1
    techs = list(dict.fromkeys(r["technique"] for r in rows))
    precs = list(dict.fromkeys(r["precision"] for r in rows))
    group_w = w / len(techs)
    bar_w = group_w * 0.8 / len(precs)

    def ypos(v):
        return y0 + h - h * v / vmax

    label = "Accuracy (%)" if metric == "accuracy_pct" else "Fit time (s)"
    out = [
        f'<g class="panel" data-dataset={quoteattr(dataset)} data-metric="{metric}">',
        f'<text x="{x0 + w / 2:.1f}" y="{y0 - 12:.1f}" text-anchor="middle" font-size="13">'
        f'{escape(dataset)}: {label}</text>',
        f'<line x1="{x0}" y1="{y0 + h}" x2="{x0 + w}" y2="{y0 + h}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y0 + h}" stroke="black"/>',
    ]
    for ti, tech in enumerate(techs):
        gx = x0 + ti * group_w + group_w * 0.1
        out.append(f'<text x="{x0 + (ti + 0.5) * group_w:.1f}" y="{y0 + h + 16:.1f}" '
                   f'text-anchor="middle">{escape(tech)}</text>')
        for pi, prec in enumerate(precs):
            r = next((r for r in rows if r["technique"] == tech and r["precision"] == prec), None)
            if r is None:
                continue
            v = float(r[metric])
            bx, by = gx + pi * bar_w, ypos(v)
            tip = f"{dataset} {tech} {prec} {metric}={r[metric]}"
            out.append(
                f'<rect class="bar" x="{bx:.2f}" y="{by:.2f}" width="{bar_w * 0.92:.2f}" '
                f'height="{y0 + h - by:.2f}" fill="{_PREC_COLORS.get(prec, "#999999")}">'
                f'<title>{escape(tip)}</title></rect>')
    by = ypos(base)
    out.append(
        f'<line class="baseline" x1="{x0}" y1="{by:.2f}" x2="{x0 + w}" y2="{by:.2f}" '
        f'stroke="#C44E52" stroke-dasharray="6,4"><title>'
        f'{escape(f"{dataset} Before {metric}={rows[0][base_key]}")}</title></line>')
    for pi, prec in enumerate(precs):
        lx = x0 + w - 70
        ly = y0 + 4 + pi * 14
        out.append(f'<rect x="{lx}" y="{ly}" width="10" height="10" '
                   f'fill="{_PREC_COLORS.get(prec, "#999999")}"/>')
        out.append(f'<text x="{lx + 14}" y="{ly + 9}">{escape(prec)}</text>')
    out.append(f'<text x="{x0 + 4}" y="{by - 4:.2f}" fill="#C44E52">Before {unit}</text>')
    out.append("</g>")
    return out


def write_report(results, out_dir, config=None, sweeps=None) -> dict:
    """Write results.csv, results.json, table.txt, comparison.csv/.svg and
    one sweep_<technique>.csv per entry of ``sweeps``
    (``{technique: (parameter, sweep)}``). Returns the written paths."""
    from .io import write_results

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "results.csv": out / "results.csv",
        "results.json": out / "results.json",
        "table.txt": out / "table.txt",
    }
    write_results(results, paths["results.csv"], "csv")
    write_results(results, paths["results.json"], "json", config=config)
    paths["table.txt"].write_text(render_table(results), encoding="utf-8")
    bars = bar_rows(results)
    if bars:
        paths["comparison.csv"] = out / "comparison.csv"
        paths["comparison.csv"].write_text(rows_to_csv(bars, BAR_COLUMNS), encoding="utf-8")
        paths["comparison.svg"] = out / "comparison.svg"
        paths["comparison.svg"].write_text(render_svg(bars), encoding="utf-8")
    for tech, (parameter, sw) in (sweeps or {}).items():
        name = f"sweep_{Technique.parse(tech).label}.csv"
        paths[name] = out / name
        paths[name].write_text(rows_to_csv(sweep_rows(parameter, sw), SWEEP_COLUMNS),
                               encoding="utf-8")
    return paths
