"""Deterministic CSV/JSON report emission."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields

FIELDS = ("experiment_id", "system", "x_id", "y_id", "L", "m_count", "sup_cost", "inf_cost",
          "tail_sup", "tail_inf", "solver_tag", "gap_bound")


@dataclass(frozen=True)
class ReportRow:
    experiment_id: str
    system: str
    x_id: str
    y_id: str
    L: int
    m_count: int
    sup_cost: float
    inf_cost: float
    tail_sup: float
    tail_inf: float
    solver_tag: str
    gap_bound: float


def fmt_number(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if not math.isfinite(v):
        raise ValueError(f"refusing to serialise non-finite value {v}")
    return format(v, ".12g")


def rounded(obj):
    """Recursively round floats to 12 significant digits (for JSON documents)."""
    if isinstance(obj, float):
        return float(fmt_number(obj))
    if isinstance(obj, dict):
        return {str(k): rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return rounded(obj.item())
    return obj


def sort_rows(rows) -> list:
    # stable: rows that tie on (experiment_id, L) keep their input order
    return sorted(rows, key=lambda r: (r.experiment_id, r.L))


def render_table(rows, columns, fmt: str, meta: dict | None = None) -> str:
    """Render rows (dataclasses or dicts) with the given column order."""
    dicts = [asdict(r) if hasattr(r, "__dataclass_fields__") else dict(r) for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for d in dicts:
            w.writerow([fmt_number(d[c]) if isinstance(d[c], (int, float)) else d[c] for c in columns])
        return buf.getvalue()
    if fmt == "json":
        doc = {"rows": [{c: d[c] for c in columns} for d in dicts]}
        if meta is not None:
            doc["config"] = meta
        return render_document(doc)
    raise ValueError(f"unknown report format {fmt!r}")


def render_document(doc: dict) -> str:
    return json.dumps(rounded(doc), indent=2, allow_nan=False) + "\n"


def emit_report(rows, fmt: str = "csv", path=None, meta: dict | None = None) -> str:
    """Write ``ReportRow``s as CSV (exact header) or JSON, returning the text.

    Rows are sorted by (experiment_id, L). JSON embeds ``meta`` under
    ``config``; for CSV with a path, ``meta`` goes to ``<path>.meta.json`` so
    the table itself stays plain.
    """
    text = render_table(sort_rows(rows), FIELDS, fmt, meta)
    if path is not None:
        write_text(path, text)
        if fmt == "csv" and meta is not None:
            write_text(f"{path}.meta.json", render_document(meta))
    return text


def write_text(path, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc


def row_fields() -> tuple:
    return tuple(f.name for f in fields(ReportRow))
