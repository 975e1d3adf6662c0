"""CSV ingestion and atomic output writing."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path

from .errors import BadStatus, NegativeTime, ParseError
from .survcore import TwoSampleData, ingest

REQUIRED_COLUMNS = ("time", "status", "group")


def parse_csv(text: str, source: str = "<input>") -> TwoSampleData:
    """Parse ``time,status,group`` CSV text; errors name the offending line."""
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"{source}:1: missing column(s) {', '.join(missing)}; expected header time,status,group")
    reader.fieldnames = header
    records = []
    for row in reader:
        line = reader.line_num
        if None in row or any(row.get(c) is None for c in REQUIRED_COLUMNS):
            raise ParseError(f"{source}:{line}: wrong number of fields")
        raw_t = row["time"].strip()
        try:
            t = float(raw_t)
        except ValueError:
            raise ParseError(f"{source}:{line}: time {raw_t!r} is not a number") from None
        if not math.isfinite(t) or t < 0:
            raise NegativeTime(f"{source}:{line}: time {raw_t!r} must be finite and nonnegative")
        s = row["status"].strip()
        if s not in ("0", "1"):
            raise BadStatus(f"{source}:{line}: status {s!r} must be 0 or 1")
        g = row["group"].strip()
        if not g:
            raise ParseError(f"{source}:{line}: empty group label")
        records.append((t, int(s), g))
    return ingest(records)


def read_csv(path: str | Path) -> TwoSampleData:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from None
    return parse_csv(text, str(path))


def write_atomic(path: str | Path, content: str | bytes) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    data = content.encode() if isinstance(content, str) else content
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
