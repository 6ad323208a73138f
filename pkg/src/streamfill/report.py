"""Run artifacts: results.csv, summary.md, SVG infill plots, model dumps, manifest.

Scores in ``results.csv`` carry 6 significant digits. The summary tables
are computed from those printed values (not the unrounded floats), so they
can be re-derived exactly from the CSV.
"""
from __future__ import annotations

import csv
import json
from html import escape
from pathlib import Path

import numpy as np

from .errors import ParseError, StreamfillError
from .metrics import MetricsReport, Record, ScoreTriple

RESULTS_HEADER = ("method", "rate", "seed", "station", "kge", "nse", "rmse")

PALETTE = {
    "gess-lookup": "#d62728",
    "qm": "#2ca02c",
    "enet": "#1f77b4",
    "gp": "#9467bd",
    "knn": "#ff7f0e",
    "rf": "#8c564b",
}


def fmt_score(v: float) -> str:
    return f"{v:.6g}"


def fmt_rate(r: float) -> str:
    return repr(float(r))


def fmt_table(v: float) -> str:
    return f"{v:.12g}"


def results_rows(report: MetricsReport):
    for r in report.records:
        yield (r.method, fmt_rate(r.rate), str(int(r.seed)), r.station,
               fmt_score(r.scores.kge), fmt_score(r.scores.nse), fmt_score(r.scores.rmse))


def format_results_csv(report: MetricsReport) -> str:
    lines = [",".join(RESULTS_HEADER)]
    lines += [",".join(row) for row in results_rows(report)]
    return "\n".join(lines) + "\n"


def read_results_csv(path) -> MetricsReport:
    report = MetricsReport()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RESULTS_HEADER:
            raise ParseError(1, 1, f"expected header {','.join(RESULTS_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RESULTS_HEADER):
                raise ParseError(line_no, len(row), "wrong field count")
            try:
                scores = ScoreTriple(float(row[4]), float(row[5]), float(row[6]))
                report.records.append(Record(row[0], float(row[1]), int(row[2]), row[3], scores))
            except ValueError as exc:
                raise ParseError(line_no, 1, str(exc)) from None
    return report


def rounded(report: MetricsReport) -> MetricsReport:
    """Copy of ``report`` with scores rounded exactly as results.csv prints them."""
    out = MetricsReport(skipped=list(report.skipped), failures=list(report.failures))
    for r in report.records:
        s = ScoreTriple(*(float(fmt_score(v)) for v in r.scores))
        out.records.append(Record(r.method, r.rate, r.seed, r.station, s))
    return out


def format_summary(report: MetricsReport, table2_rate: float = 0.2, title: str = "Imputation results") -> str:
    report = rounded(report)
    agg = report.aggregates
    methods, rates = report.methods, report.rates
    pct = [f"{r * 100:g}%" for r in rates]
    out = [f"# {title}", ""]
    out.append("## Mean scores by method and missingness rate")
    out.append("")
    out.append("Unweighted mean over stations, then over seeds, at the masked cells.")
    out.append("")
    head = ["Method"] + [f"{m} {p}" for m in ("KGE", "NSE", "RMSE") for p in pct]
    out.append("| " + " | ".join(head) + " |")
    out.append("|" + "---|" * len(head))
    for method in methods:
        cells = [method]
        for k in range(3):
            for rate in rates:
                t = agg.get((method, rate))
                cells.append(fmt_table(t[k]) if t is not None else "n/a")
        out.append("| " + " | ".join(cells) + " |")
    out.append("")
    if rates:
        rate = min(rates, key=lambda r: abs(r - table2_rate))
        per_station = report.station_means(rate)
        stations = report.stations
        out.append(f"## KGE per station at {rate * 100:g}% missingness")
        out.append("")
        out.append("Mean over seeds.")
        out.append("")
        out.append("| Method | " + " | ".join(stations) + " |")
        out.append("|" + "---|" * (len(stations) + 1))
        for method in methods:
            cells = [method]
            for s in stations:
                t = per_station.get((method, s))
                cells.append(fmt_table(t.kge) if t is not None else "n/a")
            out.append("| " + " | ".join(cells) + " |")
        out.append("")
    if report.skipped:
        out.append(f"Skipped (method, rate, seed, station) cells: {len(report.skipped)}")
        out.append("")
    if report.failures:
        out.append("## Failures")
        out.append("")
        for method, rate, seed, station, reason in report.failures:
            out.append(f"- {method} rate={rate:g} seed={seed} station={station}: {reason}")
        out.append("")
    return "\n".join(out)


def parse_summary_table1(text: str) -> dict:
    """``{(method, metric, rate_label): value}`` from the first summary table."""
    lines = [ln for ln in text.splitlines() if ln.startswith("|")]
    head = [c.strip() for c in lines[0].strip("|").split("|")]
    out = {}
    for ln in lines[2:]:
        cells = [c.strip() for c in ln.strip("|").split("|")]
        if len(cells) != len(head):
            break
        for h, c in zip(head[1:], cells[1:]):
            metric, label = h.split(" ")
            if c != "n/a":
                out[(cells[0], metric, label)] = float(c)
    return out


def _scale(lo, hi, a, b):
    span = (hi - lo) or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _path(xs, ys):
    parts, pen = [], False
    for x, y in zip(xs, ys):
        if np.isfinite(y):
            parts.append(f"{'L' if pen else 'M'}{x:.2f},{y:.2f}")
            pen = True
        else:
            pen = False
    return " ".join(parts)


def infill_svg(station, dates, truth, degraded_mask, masked_rows, imputed: dict, title="") -> str:
    """Line plot of truth and observed values with each method's fills as markers."""
    W, H, ml, mr, mt, mb = 900, 360, 70, 150, 40, 50
    n = len(dates)
    stack = [truth[np.isfinite(truth)]] + [v[masked_rows] for v in imputed.values()]
    parts = [s[np.isfinite(s)] for s in stack]
    allv = np.concatenate(parts + [np.array([0.0, 1.0])])
    lo, hi = float(allv.min()), float(allv.max())
    fx = _scale(0, max(n - 1, 1), ml, W - mr)
    fy = _scale(lo, hi, H - mb, mt)
    xs = [fx(i) for i in range(n)]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{ml}" y="22" font-size="14">{escape(title or station)}</text>',
        f'<line x1="{ml}" y1="{H - mb}" x2="{W - mr}" y2="{H - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{H - mb}" stroke="black"/>',
    ]
    for k in range(6):
        v = lo + (hi - lo) * k / 5
        y = fy(v)
        out.append(f'<line x1="{ml - 4}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" text-anchor="end">{v:.4g}</text>')
    for i in sorted({0, n // 2, n - 1}):
        out.append(f'<text x="{xs[i]:.2f}" y="{H - mb + 16}" text-anchor="middle">{dates[i]}</text>')
    out.append(f'<text x="14" y="{(mt + H - mb) / 2:.0f}" transform="rotate(-90 14 {(mt + H - mb) / 2:.0f})" text-anchor="middle">discharge (m3/s)</text>')
    ys_truth = [fy(v) if np.isfinite(v) else np.nan for v in truth]
    out.append(f'<path d="{_path(xs, ys_truth)}" fill="none" stroke="#bbbbbb" stroke-width="2"/>')
    ys_obs = [fy(v) if m else np.nan for v, m in zip(truth, degraded_mask)]
    out.append(f'<path d="{_path(xs, ys_obs)}" fill="none" stroke="black" stroke-width="1"/>')
    legend = [("truth", "#bbbbbb"), ("observed (degraded)", "black")]
    for method, values in imputed.items():
        colour = PALETTE.get(method, "#333333")
        legend.append((method, colour))
        for i in masked_rows:
            out.append(f'<circle cx="{xs[i]:.2f}" cy="{fy(values[i]):.2f}" r="2" fill="{colour}"/>')
    for k, (label, colour) in enumerate(legend):
        y = mt + 14 * k
        out.append(f'<rect x="{W - mr + 10}" y="{y - 8}" width="10" height="10" fill="{colour}"/>')
        out.append(f'<text x="{W - mr + 24}" y="{y + 1}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name) or "station"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise StreamfillError(f"cannot write {path}: {exc}") from exc


def emit_report(report: MetricsReport, out_dir, run=None, table2_rate: float | None = None) -> dict:
    """Write the run artifacts; ``run`` (an ExperimentRun) adds plots, models and manifest.

    Returns ``{artifact name: path}``.
    """
    if not report.records and not report.failures:
        raise StreamfillError("report is empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if table2_rate is None:
        table2_rate = run.plan.report.table2_rate if run is not None else 0.2
    paths = {"results": out / "results.csv", "summary": out / "summary.md"}
    _write(paths["results"], format_results_csv(report))
    _write(paths["summary"], format_summary(report, table2_rate))
    if run is None:
        return paths
    paths["manifest"] = out / "manifest.json"
    _write(paths["manifest"], json.dumps(run.manifest, indent=1, sort_keys=True, default=str) + "\n")
    for method, model in run.models.items():
        text = model.dumps() if hasattr(model, "dumps") else json.dumps(
            run.manifest["models"].get(method, {}), indent=1, sort_keys=True, default=str)
        p = out / "models" / f"{method}.json"
        _write(p, text + "\n")
        paths[f"model:{method}"] = p
    snap = run.snapshot
    if snap:
        window = slice(0, min(run.plan.report.plot_window, len(run.test.dates)))
        truth = run.test.observed
        hidden = snap["mask"].to_bool(truth.shape)
        for j, station in enumerate(truth.stations):
            rows = np.flatnonzero(hidden[window, j])
            svg = infill_svg(
                station,
                [str(d) for d in truth.dates[window]],
                truth.values[window, j],
                truth.mask[window, j] & ~hidden[window, j],
                rows,
                {m: sm.values[window, j] for m, sm in snap["imputed"].items()},
                title=f"{station}: infilled at {snap['rate'] * 100:g}% missingness (seed {snap['seed']})",
            )
            p = out / "plots" / f"{_safe_name(station)}.svg"
            _write(p, svg)
            paths[f"plot:{station}"] = p
    return paths
