"""Result rows and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

COLUMNS = ("experiment", "m", "snr_db", "target_ier", "mode", "metric", "value", "n", "seed")


@dataclass(frozen=True)
class Row:
    experiment: str
    m: int
    snr_db: float
    target_ier: Optional[float]
    mode: str
    metric: str
    value: float
    n: int
    seed: int


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def render(rows, fmt: str = "csv", reproducible: bool = False) -> str:
    """Serialize rows; a timestamp header is added unless ``reproducible``."""
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if fmt == "csv":
        buf = io.StringIO()
        if not reproducible:
            buf.write(f"# generated {stamp}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        doc = {"columns": list(COLUMNS),
               "rows": [{k: _json_value(v) for k, v in asdict(r).items()} for r in rows]}
        if not reproducible:
            doc["generated"] = stamp
        return json.dumps(doc, indent=1) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit(rows, fmt: str = "csv", path=None, reproducible: bool = False) -> str:
    """Write rows to ``path`` (or return the text when ``path`` is None)."""
    text = render(rows, fmt, reproducible)
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write results to {path}: {exc}") from exc
    return text


def _parse_field(name, raw):
    if name in ("experiment", "mode", "metric"):
        return raw
    if raw in ("", None):
        return None
    if name in ("m", "n", "seed"):
        return int(raw)
    return float(raw)


def parse(text: str, fmt: str = "csv") -> list:
    """Inverse of :func:`render` (the timestamp line is skipped)."""
    if fmt == "csv":
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        reader = csv.DictReader(lines)
        return [Row(**{c: _parse_field(c, d[c]) for c in COLUMNS}) for d in reader]
    doc = json.loads(text)
    out = []
    for d in doc["rows"]:
        v = d["value"]
        d = dict(d, value=float("nan") if v is None else float(v))
        out.append(Row(**d))
    return out
