"""JSON/CSV report writers shared by the CLI subcommands."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

METRIC_KEYS = ("e", "r_bar", "sigma", "alpha_dc", "beta_hl")


def clean_number(v):
    """Undefined (nan/inf) numbers become ``None`` so they serialize as null."""
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return clean_number(obj)


def dumps_json(payload: dict) -> str:
    return json.dumps(_clean(payload), indent=2) + "\n"


def dumps_csv(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if clean_number(row.get(k)) is None else row.get(k)) for k in header})
    return buf.getvalue()


def read_csv_numbers(text: str) -> list[dict]:
    """Parse a report CSV back, turning numeric cells into floats and blanks into ``None``."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        parsed = {}
        for k, v in row.items():
            if v == "":
                parsed[k] = None
                continue
            try:
                parsed[k] = float(v)
            except ValueError:
                parsed[k] = v
        out.append(parsed)
    return out


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    return path


def format_table(columns: dict[str, dict[str, float]], title: str = "") -> str:
    """Metric-by-method text table, one column per dehazed result."""
    names = list(columns)
    width = max([12] + [len(n) + 2 for n in names])
    lines = []
    if title:
        lines.append(title)
    lines.append("metric".ljust(10) + "".join(n.rjust(width) for n in names))
    for key in METRIC_KEYS:
        cells = []
        for n in names:
            v = clean_number(columns[n].get(key))
            cells.append(("undefined" if v is None else f"{v:.5g}").rjust(width))
        lines.append(key.ljust(10) + "".join(cells))
    return "\n".join(lines) + "\n"
