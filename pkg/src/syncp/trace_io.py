"""Text trace format, rf-poset JSON and race-report serialization.

Trace lines look like ``thread|op|target[|loc]``; ``#`` starts a comment line
and blank lines are skipped.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import IO, Iterable

from .trace_model import NO_LOC, OP_TOKENS, TOKEN_KIND, Kind, Trace, TraceError, check_valid


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line, self.path = line, path
        where = f"line {line}: " if line is not None else ""
        where = f"{path}: {where}" if path else where
        super().__init__(where + message)


def _lines(src) -> Iterable[str]:
    if isinstance(src, Path):
        with open(src, encoding="utf-8") as fh:
            yield from fh
    elif isinstance(src, bytes):
        yield from src.decode("utf-8").splitlines()
    elif isinstance(src, str):
        yield from src.splitlines()
    else:
        for line in src:
            yield line.decode("utf-8") if isinstance(line, bytes) else line


def parse_trace(src, validate: bool = True) -> Trace:
    """Parse text (str, bytes, Path or an iterable of lines) into a Trace."""
    tids: dict[str, int] = {}
    vids: dict[str, int] = {}
    lids: dict[str, int] = {}
    th, kd, tg, lc = [], [], [], []
    for lineno, raw in enumerate(_lines(src), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) not in (3, 4) or not all(parts[:3]):
            raise ParseError(f"expected thread|op|target[|loc], got {line!r}", lineno)
        kind = TOKEN_KIND.get(parts[1])
        if kind is None:
            raise ParseError(f"unknown op {parts[1]!r}", lineno)
        loc = NO_LOC
        if len(parts) == 4 and parts[3] != "":
            try:
                loc = int(parts[3])
            except ValueError:
                raise ParseError(f"location must be an integer, got {parts[3]!r}", lineno) from None
            if loc < 0:
                raise ParseError("location must be nonnegative", lineno)
        th.append(tids.setdefault(parts[0], len(tids)))
        if kind <= Kind.WRITE:
            tg.append(vids.setdefault(parts[2], len(vids)))
        elif kind <= Kind.RELEASE:
            tg.append(lids.setdefault(parts[2], len(lids)))
        else:
            tg.append(tids.setdefault(parts[2], len(tids)))
        kd.append(int(kind))
        lc.append(loc)
    trace = Trace(th, kd, tg, lc, list(tids), list(vids), list(lids))
    if validate:
        check_valid(trace)
    return trace


def read_trace(path, validate: bool = True) -> Trace:
    try:
        return parse_trace(Path(path), validate)
    except ParseError as exc:
        raise ParseError(str(exc), path=str(path)) from None


def emit_trace(trace: Trace, out: IO[str] | None = None) -> str | None:
    """Canonical text; returns the text when ``out`` is None."""
    buf = io.StringIO() if out is None else out
    for thread, op, target, loc in trace.records():
        if loc is None:
            buf.write(f"{thread}|{op}|{target}\n")
        else:
            buf.write(f"{thread}|{op}|{target}|{loc}\n")
    return buf.getvalue() if out is None else None


def write_trace(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        emit_trace(trace, fh)


# -- rf-posets ------------------------------------------------------------


class SchemaError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def parse_rfposet(src):
    """Parse the rf-poset JSON document into an :class:`~syncp.rfposet.RfPoset`."""
    from .rfposet import RfPoset, RfEvent

    if isinstance(src, Path):
        src = src.read_text(encoding="utf-8")
    if isinstance(src, bytes):
        src = src.decode("utf-8")
    doc = json.loads(src) if isinstance(src, str) else src
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected an object")
    for key in ("events", "order", "rf"):
        if key not in doc:
            raise SchemaError("$", f"missing key {key!r}")
    events = []
    seen = set()
    if not isinstance(doc["events"], list):
        raise SchemaError("$.events", "expected a list")
    for i, ev in enumerate(doc["events"]):
        p = f"$.events[{i}]"
        if not isinstance(ev, dict):
            raise SchemaError(p, "expected an object")
        for key, typ in (("id", int), ("thread", str), ("op", str), ("var", str)):
            if not isinstance(ev.get(key), typ) or isinstance(ev.get(key), bool):
                raise SchemaError(f"{p}.{key}", f"expected {typ.__name__}")
        if ev["op"] not in ("r", "w"):
            raise SchemaError(f"{p}.op", "expected 'r' or 'w'")
        if ev["id"] in seen:
            raise SchemaError(f"{p}.id", f"duplicate id {ev['id']}")
        seen.add(ev["id"])
        events.append(RfEvent(ev["id"], ev["thread"], ev["op"], ev["var"]))
    order = []
    if not isinstance(doc["order"], list):
        raise SchemaError("$.order", "expected a list")
    for i, pair in enumerate(doc["order"]):
        p = f"$.order[{i}]"
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair)):
            raise SchemaError(p, "expected [int, int]")
        for j, v in enumerate(pair):
            if v not in seen:
                raise SchemaError(f"{p}[{j}]", f"unknown event id {v}")
        order.append((pair[0], pair[1]))
    if not isinstance(doc["rf"], dict):
        raise SchemaError("$.rf", "expected an object")
    rf = {}
    for k, v in doc["rf"].items():
        p = f"$.rf[{k!r}]"
        try:
            r = int(k)
        except ValueError:
            raise SchemaError(p, "read id must be an integer") from None
        if r not in seen or not isinstance(v, int) or v not in seen:
            raise SchemaError(p, "unknown event id")
        rf[r] = v
    lam = doc.get("distinguished")
    if lam is not None:
        if not (isinstance(lam, list) and len(lam) == 3 and all(v in seen for v in lam)):
            raise SchemaError("$.distinguished", "expected [w, r, w'] of known ids")
        lam = tuple(lam)
    try:
        return RfPoset(events, order, rf, lam)
    except ValueError as exc:
        raise SchemaError("$", str(exc)) from None


def emit_rfposet(poset) -> str:
    doc = {
        "events": [{"id": e.id, "thread": e.thread, "op": e.op, "var": e.var} for e in poset.events],
        "order": [list(p) for p in poset.order],
        "rf": {str(r): w for r, w in sorted(poset.rf.items())},
        "distinguished": list(poset.distinguished) if poset.distinguished else None,
    }
    return json.dumps(doc, indent=1) + "\n"


# -- race reports -----------------------------------------------------------


def _race_rows(reports, trace: Trace):
    for r in reports:
        yield {
            "e1": trace.source_idx(r.e1),
            "e2": trace.source_idx(r.e2),
            "var": trace.var_names[r.var],
            "threads": [trace.thread_names[r.threads[0]], trace.thread_names[r.threads[1]]],
            "locs": list(r.locs),
        }


def emit_report(reports, trace: Trace, algo: str, fmt: str = "text", summary=None) -> str:
    """Serialize reports as text, json or csv; event numbers refer to the source trace."""
    from .cli import summarize

    if summary is None:
        summary = summarize(reports, trace)
    rows = list(_race_rows(reports, trace))
    if fmt == "json":
        doc = {"algo": algo, "races": rows, "summary": summary.as_dict()}
        return json.dumps(doc, indent=1) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["e1", "e2", "var", "thread1", "thread2", "loc1", "loc2"])
        for row in rows:
            wr.writerow([row["e1"], row["e2"], row["var"], *row["threads"],
                         *("" if v is None else v for v in row["locs"])])
        return buf.getvalue()
    if fmt == "text":
        lines = [f"algo: {algo}"]
        for row in rows:
            locs = ",".join("-" if v is None else str(v) for v in row["locs"])
            lines.append(f"race e1={row['e1']} e2={row['e2']} var={row['var']} "
                         f"threads={','.join(row['threads'])} locs={locs}")
        s = summary.as_dict()
        lines.append("summary: " + " ".join(f"{k}={v}" for k, v in s.items()))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


__all__ = [
    "ParseError", "SchemaError", "TraceError", "parse_trace", "read_trace", "emit_trace",
    "write_trace", "parse_rfposet", "emit_rfposet", "emit_report", "OP_TOKENS",
]
