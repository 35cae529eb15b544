"""Command-line entry point: detect, gen, oracle, reduce, validate, stats.

Exit codes: 0 = nothing found, 1 = race(s) found (or an invalid trace for
``validate``), 2 = usage, input or size-cap error.  ``RACE_LOG`` sets the
log level (error, info, debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import baselines, oracle_bf, syncp_engine
from .generators import GenConfig, gen_equality, gen_random
from .oracle_bf import OracleLimitError
from .preprocess import filter_ordered_variables
from .rfposet import (ReverseInstance, build_race_instance, build_reverse_instance,
                      NormalizationError)
from .trace_io import (ParseError, SchemaError, emit_report, emit_rfposet, emit_trace,
                       parse_rfposet, read_trace)
from .trace_model import Trace, TraceError, validate

log = logging.getLogger("syncp")

EXIT_CLEAN, EXIT_FOUND, EXIT_ERROR = 0, 1, 2


@dataclass
class Summary:
    racy_events: int = 0
    racy_lines: int = 0
    racy_vars: int = 0
    max_distance: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        # wall time stays out so that emitted reports are byte-stable
        return {"racy_events": self.racy_events, "racy_lines": self.racy_lines,
                "racy_vars": self.racy_vars, "max_distance": self.max_distance}


def summarize(reports, trace: Trace, wall_time: float = 0.0) -> Summary:
    """Aggregate counts; distance is the index gap in the source trace."""
    if not reports:
        return Summary(wall_time=wall_time)
    lines = set()
    for r in reports:
        # events without a location count as their own line
        lines.add(("loc", r.locs[1]) if r.locs[1] is not None else ("event", trace.source_idx(r.e2)))
    return Summary(
        racy_events=len({r.e2 for r in reports}),
        racy_lines=len(lines),
        racy_vars=len({trace.var_names[r.var] for r in reports}),
        max_distance=max(trace.source_idx(r.e2) - trace.source_idx(r.e1) for r in reports),
        wall_time=wall_time,
    )


DETECTORS = {
    "syncp": lambda t, engine: syncp_engine.run(t, engine=engine, validate=False).reports,
    "hb": lambda t, engine: baselines.hb_run(t, validate=False),
    "shb": lambda t, engine: baselines.shb_run(t, validate=False),
}


def _detect_one(path: str, algo: str, fmt: str, use_filter: bool, engine: str):
    """(exit code, report text or error message) for one input file."""
    import time

    try:
        trace = read_trace(path)
    except (OSError, ParseError, TraceError) as exc:
        return EXIT_ERROR, f"{path}: {exc}"
    t0 = time.perf_counter()
    work = trace
    if use_filter:
        res = filter_ordered_variables(trace)
        work = res.trace
        log.info("%s: filter dropped %d accesses on %d variables", path, res.n_dropped,
                 len(res.dropped_vars))
    reports = DETECTORS[algo](work, engine)
    dt = time.perf_counter() - t0
    log.info("%s: %s found %d racy events in %.3fs", path, algo, len(reports), dt)
    text = emit_report(reports, work, algo, fmt, summarize(reports, work, dt))
    return (EXIT_FOUND if reports else EXIT_CLEAN), text


def cmd_detect(args) -> int:
    jobs = [(p, args.algo, args.format, not args.no_filter, args.engine) for p in args.input]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_detect_one, *zip(*jobs)))
    else:
        results = [_detect_one(*j) for j in jobs]
    out_parts = []
    code = EXIT_CLEAN
    for (path, *_), (rc, text) in zip(jobs, results):
        if rc == EXIT_ERROR:
            print(f"error: {text}", file=sys.stderr)
            code = EXIT_ERROR
            continue
        if code != EXIT_ERROR:
            code = max(code, rc)
        if len(jobs) > 1 and args.format == "text":
            text = f"# input: {path}\n{text}"
        out_parts.append(text)
    _write("".join(out_parts), args.out)
    return code


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    if args.kind == "random":
        mix = [float(p) for p in args.mix.split(",")]
        if len(mix) != 4:
            raise ValueError("--mix needs four comma-separated probabilities (r,w,acq,rel)")
        cfg = GenConfig(n_events=args.events, n_threads=args.threads, n_locks=args.locks,
                        n_vars=args.vars, p_read=mix[0], p_write=mix[1], p_acquire=mix[2],
                        p_release=mix[3], seed=args.seed, fork_join=args.fork_join,
                        n_locs=args.locs)
        trace = gen_random(cfg)
    else:
        if args.u is None or args.v is None:
            raise ValueError("gen equality needs --u and --v")
        trace = gen_equality(args.u, args.v, layout=args.layout)
    _write(emit_trace(trace), args.out)
    return EXIT_CLEAN


def cmd_oracle(args) -> int:
    trace = read_trace(args.input)
    if args.filter:
        trace = filter_ordered_variables(trace).trace
    enum = args.mode == "syncp-enum"
    cap = args.max_events or (oracle_bf.ENUM_DEFAULT_CAP if enum else oracle_bf.RACE_DEFAULT_CAP)
    if args.query == "pair":
        if args.e1 is None or args.e2 is None:
            raise ValueError("oracle pair needs --e1 and --e2")
        e1, e2 = sorted((args.e1, args.e2))
        if not (1 <= e1 and e2 <= len(trace)):
            raise ValueError(f"event index out of range 1..{len(trace)}")
        if enum:
            found = (e1, e2) in oracle_bf.race_pairs_enum(trace, True, cap)
        elif args.mode == "syncp":
            found = oracle_bf.is_syncp_race_bf(trace, e1, e2, cap)
        else:
            found = oracle_bf.is_predictable_race_bf(trace, e1, e2, cap)
        print("true" if found else "false")
        return EXIT_FOUND if found else EXIT_CLEAN
    if enum:
        partners = oracle_bf.racy_partners_enum(trace, True, cap)
    else:
        partners = oracle_bf.racy_partners_bf(trace, args.mode == "syncp", cap)
    for e2, e1 in partners.items():
        print(f"race e1={trace.source_idx(e1)} e2={trace.source_idx(e2)}")
    return EXIT_FOUND if partners else EXIT_CLEAN


def cmd_reduce(args) -> int:
    doc = json.loads(Path(args.input).read_text(encoding="utf-8"))
    poset = parse_rfposet(doc)
    if args.step == "build-reverse":
        inst = build_reverse_instance(poset, gadget_layout=args.gadget_layout)
        out = json.loads(emit_rfposet(inst.poset))
        out["witness"] = inst.witness
        _write(json.dumps(out, indent=1) + "\n", args.out)
        return EXIT_CLEAN
    witness = doc.get("witness")
    if not isinstance(witness, list):
        raise SchemaError("$.witness", "reverse instance needs a witness list")
    trace, (a, b) = build_race_instance(ReverseInstance(poset, witness, []))
    _write(emit_trace(trace), args.out)
    print(f"target e1={a} e2={b}", file=sys.stderr)
    return EXIT_CLEAN


def cmd_validate(args) -> int:
    trace = read_trace(args.input, validate=False)
    problems = validate(trace)
    for v in problems:
        print(v)
    if not problems:
        print("ok")
    return EXIT_FOUND if problems else EXIT_CLEAN


def cmd_stats(args) -> int:
    trace = read_trace(args.input)
    res = filter_ordered_variables(trace)
    print(f"N={trace.N} T={trace.T} L={trace.L} V={trace.V} A={trace.A}")
    dropped = ",".join(res.dropped_vars) if res.dropped_vars else "-"
    print(f"filtered_vars={dropped} filtered_events={res.n_dropped}")
    return EXIT_CLEAN


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="syncp", description="Sync-preserving race prediction.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    d = sub.add_parser("detect", help="run a race detector over trace files")
    d.add_argument("--algo", choices=sorted(DETECTORS), default="syncp")
    d.add_argument("--input", action="append", required=True, help="trace file (repeatable)")
    d.add_argument("--format", choices=("text", "json", "csv"), default="text")
    d.add_argument("--no-filter", action="store_true", help="keep accesses to ordered variables")
    d.add_argument("--out")
    d.add_argument("--engine", choices=("auto", "python", "compiled"), default="auto")
    d.add_argument("--jobs", type=int, default=1, help="parallel processes for several inputs")
    d.set_defaults(func=cmd_detect)

    g = sub.add_parser("gen", help="write a generated trace")
    g.add_argument("kind", choices=("random", "equality"))
    g.add_argument("--events", type=int, default=12)
    g.add_argument("--threads", type=int, default=3)
    g.add_argument("--locks", type=int, default=2)
    g.add_argument("--vars", type=int, default=2)
    g.add_argument("--mix", default="0.3,0.3,0.2,0.2", help="r,w,acq,rel probabilities")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--fork-join", action="store_true")
    g.add_argument("--locs", type=int, default=0, help="random location ids below this")
    g.add_argument("--u")
    g.add_argument("--v")
    g.add_argument("--layout", choices=("serial", "interleaved"), default="serial")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    o = sub.add_parser("oracle", help="brute-force race queries on small traces")
    o.add_argument("query", choices=("pair", "all"))
    o.add_argument("--input", required=True)
    o.add_argument("--mode", choices=("syncp", "general", "syncp-enum"), default="syncp")
    o.add_argument("--max-events", type=int, default=0, help="size cap (0 = mode default)")
    o.add_argument("--e1", type=int)
    o.add_argument("--e2", type=int)
    o.add_argument("--filter", action="store_true", help="drop ordered variables first")
    o.set_defaults(func=cmd_oracle)

    r = sub.add_parser("reduce", help="hardness reductions on rf-poset JSON")
    r.add_argument("step", choices=("build-reverse", "to-trace"))
    r.add_argument("--input", required=True)
    r.add_argument("--out")
    r.add_argument("--gadget-layout", choices=("split", "chained"), default="split")
    r.set_defaults(func=cmd_reduce)

    v = sub.add_parser("validate", help="check lock and fork/join semantics")
    v.add_argument("--input", required=True)
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("stats", help="N, T, L, V, A counts and filter summary")
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("RACE_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_CLEAN
    try:
        return args.func(args)
    except (OSError, ParseError, SchemaError, TraceError, OracleLimitError,
            NormalizationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
