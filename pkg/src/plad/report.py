"""Experiment reports and their JSON / CSV / markdown renderings."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

FORMAT_VERSION = 1

# aggregate metrics exported per (cell, method), in order
_CSV_METRICS = ("mean_sq_err", "median_sq_err", "mean_l2_err", "mean_type_I", "mean_type_II", "count")


@dataclass
class ExperimentReport:
    format_version: int = FORMAT_VERSION
    table_id: int | None = None
    config: dict = field(default_factory=dict)
    cells: list = field(default_factory=list)
    replications: list = field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def completed(self) -> bool:
        """True when no replication or method fit recorded an error."""
        return all(c.get("failed", 0) == 0 for c in self.cells)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**d)


def _fmt(x, digits=3) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return "0" if x == 0 else f"{x:.{digits}f}"
    return str(x)


def _get(cell, method, metric):
    return cell.get("methods", {}).get(method, {}).get(metric)


def _markdown_grid(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def _table1(report) -> str:
    cols = list(dict.fromkeys(c["col"] for c in report.cells))
    rows = list(dict.fromkeys(c["row"] for c in report.cells))
    at = {(c["row"], c["col"]): c for c in report.cells}
    body = []
    for r in rows:
        line = [r]
        for col in cols:
            c = at.get((r, col))
            if c is None:
                line.append("-")
                continue
            line.append(f"{_fmt(_get(c, 'PLAD', 'mean_sq_err'))} ({_fmt(_get(c, 'PLAD+refit', 'median_sq_err'))})")
        body.append(line)
    return _markdown_grid([""] + cols, body)


def _table2(report) -> str:
    cols = [c["col"] for c in report.cells]
    spec = [
        ("PLAD", "mean_sq_err", "L1 PLAD: average squared l2 error"),
        ("PLAD", "mean_type_I", "L1 PLAD: average type I error"),
        ("PLAD", "mean_type_II", "L1 PLAD: average type II error"),
        ("Lasso", "mean_sq_err", "Lasso: average squared l2 error"),
        ("Lasso", "mean_type_I", "Lasso: average type I error"),
        ("Lasso", "mean_type_II", "Lasso: average type II error"),
    ]
    body = [[label] + [_fmt(_get(c, m, k)) for c in report.cells] for m, k, label in spec]
    return _markdown_grid(["Value of sigma"] + cols, body)


def _table3(report) -> str:
    cols = [c["col"] for c in report.cells]
    body = [
        ["Average squared l2 error (median post-refit)"]
        + [f"{_fmt(_get(c, 'PLAD', 'mean_sq_err'))} ({_fmt(_get(c, 'PLAD+refit', 'median_sq_err'))})"
           for c in report.cells],
        ["Average type I error"] + [_fmt(_get(c, "PLAD", "mean_type_I")) for c in report.cells],
        ["Average type II error"] + [_fmt(_get(c, "PLAD", "mean_type_II")) for c in report.cells],
    ]
    return _markdown_grid([""] + cols, body)


def _generic(report) -> str:
    body = []
    for c in report.cells:
        for m, agg in c.get("methods", {}).items():
            body.append([str(c["cell_id"]), c.get("row", ""), c.get("col", ""), m]
                        + [_fmt(agg.get(k)) for k in _CSV_METRICS])
    return _markdown_grid(["cell", "row", "col", "method", *_CSV_METRICS], body)


def to_markdown(report: ExperimentReport) -> str:
    if not report.cells:
        return _generic(report)
    shaper = {1: _table1, 2: _table2, 3: _table3}.get(report.table_id, _generic)
    return shaper(report)


def to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cell_id", "row", "col", "method", "metric", "value"])
    for c in report.cells:
        for m, agg in c.get("methods", {}).items():
            for k in _CSV_METRICS:
                if k in agg:
                    w.writerow([c["cell_id"], c.get("row", ""), c.get("col", ""), m, k, repr(agg[k])])
    return buf.getvalue()


def to_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=1, allow_nan=True)


def from_json(text: str) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(text))


def render_report(report: ExperimentReport, fmt: str = "json", path=None) -> str:
    """Render ``report`` as ``json``, ``csv`` or ``markdown``; write to ``path`` if given.

    Write failures surface as ``OSError``.
    """
    renderers = {"json": to_json, "csv": to_csv, "markdown": to_markdown, "md": to_markdown}
    if fmt not in renderers:
        raise ValueError(f"unknown format {fmt!r}")
    text = renderers[fmt](report)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
