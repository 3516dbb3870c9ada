"""Run records, comparison tables and static chart output.

All emitters are deterministic: fixed column/key order, full-precision
``repr`` numbers, LF line endings, no timestamps. Identical inputs produce
byte-identical documents.
"""

import csv
import hashlib
import io
import json
from dataclasses import dataclass

from .errors import SimError
from .scenario import InferenceMetrics

# The six chart panels, in figure order. Direction says which way is better.
PANEL_METRICS = (
    ("ttft_s", "lower"),
    ("prefill_energy_j", "lower"),
    ("tokens_per_s", "higher"),
    ("energy_per_token_j", "lower"),
    ("qps", "higher"),
    ("epq_j", "lower"),
)

CSV_COLUMNS = (
    "scenario", "model", "format_bits", "batch", "n_input", "n_output", "deployment",
    "ttft_s", "tokens_per_s", "energy_per_token_j", "qps", "epq_j", "avg_power_w",
    "tco_per_qps_usd",
)
_NUMERIC_COLUMNS = frozenset(
    ("batch", "n_input", "n_output", "ttft_s", "tokens_per_s", "energy_per_token_j",
     "qps", "epq_j", "avg_power_w", "tco_per_qps_usd"))


@dataclass(frozen=True)
class CompareRow:
    scenario: str
    metric: str
    baseline_value: float
    candidate_value: float
    ratio: float                      # candidate / baseline
    higher_is_better: bool
    improvement_pct: float | None     # (ratio - 1) * 100, higher-is-better metrics only

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "metric": self.metric,
            "baseline_value": self.baseline_value,
            "candidate_value": self.candidate_value,
            "ratio": self.ratio,
            "higher_is_better": self.higher_is_better,
            "improvement_pct": self.improvement_pct,
        }


@dataclass(frozen=True)
class ComparisonReport:
    baseline: str
    rows: tuple
    meta: dict

    def value(self, scenario: str, metric: str) -> CompareRow:
        for row in self.rows:
            if row.scenario == scenario and row.metric == metric:
                return row
        raise SimError(f"no comparison row for {scenario!r} / {metric!r}")

    def to_dict(self) -> dict:
        return {"baseline": self.baseline, "meta": dict(self.meta),
                "rows": [r.to_dict() for r in self.rows]}


def compare(runs: "list[tuple[str, InferenceMetrics]]", baseline: str) -> ComparisonReport:
    """Ratio table of every run against the named baseline run.

    Ratios are candidate/baseline for every panel metric; orientation is
    carried per row. Requires congruent metric sets (a run without decode
    metrics cannot be compared against one that has them).
    """
    by_label = dict(runs)
    if len(by_label) != len(runs):
        raise SimError("duplicate run labels in comparison input")
    if baseline not in by_label:
        raise SimError(f"baseline {baseline!r} not among runs: {sorted(by_label)}")
    base = by_label[baseline]
    rows = []
    for label, metrics in runs:
        if label == baseline:
            continue
        for metric, direction in PANEL_METRICS:
            b = getattr(base, metric)
            c = getattr(metrics, metric)
            if (b is None) != (c is None):
                raise SimError(f"mismatched metrics: {metric!r} present in only one of "
                               f"{baseline!r} and {label!r}")
            if b is None:
                continue
            ratio = c / b
            rows.append(CompareRow(
                scenario=label,
                metric=metric,
                baseline_value=b,
                candidate_value=c,
                ratio=ratio,
                higher_is_better=direction == "higher",
                improvement_pct=(ratio - 1.0) * 100.0 if direction == "higher" else None,
            ))
    from . import __version__
    digest = hashlib.sha256(
        json.dumps([(label, m.to_dict()) for label, m in runs], sort_keys=True).encode()
    ).hexdigest()
    return ComparisonReport(
        baseline=baseline,
        rows=tuple(rows),
        meta={"tool": "llmsim", "version": __version__, "runs_digest": digest},
    )


def report_from_dict(doc: dict) -> ComparisonReport:
    rows = tuple(CompareRow(**row) for row in doc["rows"])
    return ComparisonReport(baseline=doc["baseline"], rows=rows, meta=dict(doc["meta"]))


def run_record(scenario_label: str, model_name: str, fmt, workload, deployment_desc: str,
               metrics: InferenceMetrics, tco_usd: float | None = None) -> dict:
    """Flat record for one run; the CSV columns plus full metric detail."""
    return {
        "scenario": scenario_label,
        "model": model_name,
        "format_bits": fmt.label,
        "batch": workload.batch,
        "n_input": workload.n_input,
        "n_output": workload.n_output,
        "deployment": deployment_desc,
        "ttft_s": metrics.ttft_s,
        "tokens_per_s": metrics.tokens_per_s,
        "energy_per_token_j": metrics.energy_per_token_j,
        "qps": metrics.qps,
        "epq_j": metrics.epq_j,
        "avg_power_w": metrics.avg_power_w,
        "tco_per_qps_usd": tco_usd,
        "detail": metrics.to_dict(),
    }


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_records(records: "list[dict]", format: str = "csv") -> str:
    """Serialize run records; stable order, full precision, LF endings."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow([_csv_cell(record.get(col)) for col in CSV_COLUMNS])
        return buf.getvalue()
    if format == "json":
        from . import __version__
        doc = {
            "meta": {"tool": "llmsim", "version": __version__},
            "runs": [{key: record.get(key) for key in (*CSV_COLUMNS, "detail")} for record in records],
        }
        return json.dumps(doc, indent=2) + "\n"
    raise SimError(f"unknown record format {format!r}; expected csv or json")


def parse_records(text: str, format: str = "csv") -> "list[dict]":
    """Inverse of ``emit_records`` (CSV loses the detail block)."""
    if format == "csv":
        reader = csv.reader(io.StringIO(text))
        rows = list(reader)
        if not rows or tuple(rows[0]) != CSV_COLUMNS:
            raise SimError("not a run-record CSV: header mismatch")
        out = []
        for row in rows[1:]:
            record = {}
            for col, cell in zip(CSV_COLUMNS, row):
                if col in _NUMERIC_COLUMNS:
                    record[col] = None if cell == "" else (int(cell) if cell.isdigit() else float(cell))
                else:
                    record[col] = cell
            out.append(record)
        return out
    if format == "json":
        doc = json.loads(text)
        return list(doc["runs"])
    raise SimError(f"unknown record format {format!r}; expected csv or json")


def runs_from_records(records: "list[dict]") -> "list[tuple[str, InferenceMetrics]]":
    """Rebuild (label, metrics) pairs from JSON-format records."""
    out = []
    for record in records:
        detail = record.get("detail")
        if detail is None:
            raise SimError(f"record {record.get('scenario')!r} has no detail block "
                           "(JSON records are required to rebuild metrics)")
        out.append((record["scenario"], InferenceMetrics.from_dict(detail)))
    return out


# ---------------------------------------------------------------------------
# Charts: self-contained grouped-bar SVGs, one file per metric panel.

_SVG_W, _SVG_H = 640, 400
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 40, 90
_BAR_FILL = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860")


def _fmt_num(x: float) -> str:
    return f"{x:.6g}"


def emit_chart_svg(title: str, labels: "list[str]", values: "list[float]") -> str:
    """One grouped-bar panel as a deterministic standalone SVG document."""
    if not values:
        raise SimError("cannot chart an empty value list")
    vmax = max(values)
    if vmax <= 0:
        vmax = 1.0
    plot_w = _SVG_W - _MARGIN_L - _MARGIN_R
    plot_h = _SVG_H - _MARGIN_T - _MARGIN_B
    n = len(values)
    slot = plot_w / n
    bar_w = slot * 0.6

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W / 2:g}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{title}</text>',
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T + plot_h}" x2="{_SVG_W - _MARGIN_R}" '
        f'y2="{_MARGIN_T + plot_h}" stroke="black"/>',
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{_MARGIN_T + plot_h}" stroke="black"/>',
    ]
    for i in range(5):
        frac = i / 4
        y = _MARGIN_T + plot_h * (1 - frac)
        parts.append(f'<text x="{_MARGIN_L - 6}" y="{y + 4:g}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{_fmt_num(vmax * frac)}</text>')
        if i:
            parts.append(f'<line x1="{_MARGIN_L}" y1="{y:g}" x2="{_SVG_W - _MARGIN_R}" '
                         f'y2="{y:g}" stroke="#dddddd"/>')
    for i, (label, value) in enumerate(zip(labels, values)):
        h = plot_h * (value / vmax)
        x = _MARGIN_L + slot * i + (slot - bar_w) / 2
        y = _MARGIN_T + plot_h - h
        color = _BAR_FILL[i % len(_BAR_FILL)]
        parts.append(f'<rect class="bar" x="{x:g}" y="{y:g}" width="{bar_w:g}" height="{h:g}" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{x + bar_w / 2:g}" y="{y - 4:g}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{_fmt_num(value)}</text>')
        cx = _MARGIN_L + slot * i + slot / 2
        ty = _MARGIN_T + plot_h + 14
        parts.append(f'<text x="{cx:g}" y="{ty}" text-anchor="end" font-family="sans-serif" '
                     f'font-size="11" transform="rotate(-30 {cx:g} {ty})">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_charts(report: ComparisonReport, out_dir) -> "list[str]":
    """One SVG per panel metric: baseline bar plus one bar per candidate."""
    import os

    if not report.rows:
        raise SimError("cannot chart an empty comparison report")
    os.makedirs(out_dir, exist_ok=True)
    candidates = []
    for row in report.rows:
        if row.scenario not in candidates:
            candidates.append(row.scenario)
    written = []
    for metric, _direction in PANEL_METRICS:
        rows = [r for r in report.rows if r.metric == metric]
        if not rows:
            continue
        labels = [report.baseline] + [r.scenario for r in rows]
        values = [rows[0].baseline_value] + [r.candidate_value for r in rows]
        svg = emit_chart_svg(metric, labels, values)
        path = os.path.join(out_dir, f"{metric}.svg")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
        written.append(path)
    return written
