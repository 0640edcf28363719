"""Command-line toolchain: compile, sim, cost, oracle, fuzz, compare."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .cost import DEFAULT_PARAMS, CostParams, cost_report
from .encoder import UnmappableAlphabetError, compile_nfa, dump_codebook
from .fabric import InfeasibleTransitionError, PortOverflowError, TileMode
from .fuzz import fuzz
from .mapper import MappingError, Placement, place
from .nfa import NfaError, StartKind, load_any
from .regex import RegexSyntaxError
from .simulator import ActivityTrace, TraceMismatchError, run_oracle_compare, simulate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MAPPING = 3
EXIT_DIVERGENCE = 4


class InputError(Exception):
    pass


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _manifest(args, inputs: dict[str, bytes], **extra) -> dict:
    doc = {
        "tool": "cama",
        "version": __version__,
        "inputs": {os.path.basename(k): _sha256(v) for k, v in sorted(inputs.items())},
        "seed": args.seed,
    }
    doc.update(extra)
    return doc


def _load_params(args) -> tuple[CostParams, bytes | None]:
    if not getattr(args, "params", None):
        return DEFAULT_PARAMS, None
    raw = _read_bytes(args.params)
    try:
        return CostParams.loads(raw.decode()), raw
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad cost parameters in {args.params}: {exc}") from exc


def _load_placement(path: str) -> tuple[Placement, bytes]:
    raw = _read_bytes(path)
    try:
        return Placement.loads(raw.decode()), raw
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path} is not a placement file: {exc}") from exc


def _load_nfa(args, raw: bytes):
    start = StartKind(args.start)
    return load_any(raw.decode("latin-1"), args.alphabet, start)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text)


def _kv_table(rows: list[tuple[str, object]]) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_compile(args) -> int:
    raw = _read_bytes(args.input)
    nfa = _load_nfa(args, raw)
    compiled = compile_nfa(nfa)
    placement = place(compiled, force_mode=args.force_mode)
    scheme = compiled.codebook.scheme
    manifest = _manifest(args, {args.input: raw}, scheme=scheme.to_dict(),
                         modes=placement.stats.to_dict(), start=args.start)
    placement.manifest = manifest
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "codebook.json").write_text(dump_codebook(compiled, manifest) + "\n")
    (out / "placement.json").write_text(placement.dumps() + "\n")
    if args.dump_placement:
        _write(args.dump_placement, placement.dumps() + "\n")
    s = placement.stats
    summary = {
        "states": len(nfa),
        "scheme": scheme.kind.value,
        "code_length": scheme.code_length,
        "avg_class_size_no": float(compiled.stats.avg_class_size_no),
        "entries": compiled.total_entries,
        "rcb_tiles": s.rcb_tiles,
        "fcb_tiles": s.fcb_tiles,
        "mode32_tiles": s.mode32_tiles,
        "arrays": s.arrays,
        "global_switches": s.global_switches,
    }
    if args.dump_placement != "-":
        if args.format == "json":
            sys.stdout.write(json.dumps(summary, indent=1) + "\n")
        elif args.format == "csv":
            sys.stdout.write(",".join(summary) + "\n" + ",".join(str(v) for v in summary.values()) + "\n")
        else:
            sys.stdout.write(_kv_table(list(summary.items())))
    return EXIT_OK


def _format_reports(reports, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cycle", "state", "partition", "symbol"])
        for r in reports:
            w.writerow([r.cycle, r.state_id, r.partition_id, r.input_symbol])
        return buf.getvalue()
    if fmt == "table":
        lines = [f"{'cycle':>8} {'state':>6} {'partition':>9} {'symbol':>6}"]
        lines += [f"{r.cycle:>8} {r.state_id:>6} {r.partition_id:>9} {r.input_symbol:>6}" for r in reports]
        return "\n".join(lines) + "\n"
    return "".join(
        json.dumps({"cycle": r.cycle, "state": r.state_id, "partition": r.partition_id,
                    "symbol": r.input_symbol}) + "\n"
        for r in reports
    )


def cmd_sim(args) -> int:
    placement, praw = _load_placement(args.placement)
    data = _read_bytes(args.input)
    result = simulate(placement, data, args.version)
    _write(args.output, _format_reports(result.reports, args.format))
    if args.trace:
        text = result.trace.to_csv()
        manifest = _manifest(args, {args.placement: praw, args.input: data}, version_run=args.version,
                             buffers={"input_interrupts": result.machine.input_interrupts,
                                      "output_interrupts": result.machine.output_interrupts})
        Path(args.trace).write_text("# manifest " + json.dumps(manifest, sort_keys=True) + "\n" + text)
    return EXIT_OK


def _read_trace(path: str) -> tuple[ActivityTrace, bytes]:
    raw = _read_bytes(path)
    lines = raw.decode().splitlines(keepends=True)
    body = "".join(l for l in lines if not l.startswith("# manifest "))
    try:
        return ActivityTrace.from_csv(body), raw
    except (ValueError, KeyError) as exc:
        raise InputError(f"{path} is not a trace file: {exc}") from exc


def _params_delta(params: CostParams) -> dict:
    base, cur = DEFAULT_PARAMS.to_dict(), params.to_dict()
    return {k: v for k, v in cur.items() if base.get(k) != v}


def cmd_cost(args) -> int:
    placement, praw = _load_placement(args.placement)
    trace, traw = _read_trace(args.trace_file)
    params, params_raw = _load_params(args)
    report = cost_report(trace, placement, params)
    inputs = {args.placement: praw, args.trace_file: traw}
    if params_raw is not None:
        inputs[args.params] = params_raw
    manifest = _manifest(args, inputs, params_override=_params_delta(params))
    if args.format == "table":
        sys.stdout.write(report.table() + "\n")
    else:
        sys.stdout.write(json.dumps({"manifest": manifest, "report": report.to_dict()}, indent=1) + "\n")
    return EXIT_OK


def cmd_oracle(args) -> int:
    raw = _read_bytes(args.input)
    data = _read_bytes(args.data)
    nfa = _load_nfa(args, raw)
    placement = place(compile_nfa(nfa), force_mode=args.force_mode)
    versions = ("e", "t") if args.version == "both" else (args.version,)
    verdict = run_oracle_compare(nfa, placement, data, versions)
    if verdict.ok:
        sys.stdout.write(f"ok: {len(data)} symbols, CAMA-{'/'.join(v.upper() for v in versions)} "
                         f"match the interpreter\n")
        return EXIT_OK
    sys.stderr.write(f"divergence: {verdict.detail}\n")
    return EXIT_DIVERGENCE


def cmd_fuzz(args) -> int:
    t0 = time.perf_counter()
    summary = fuzz(args.seed, args.n, inject_fault=args.inject_fault, graph_every=args.graph_every)
    elapsed = time.perf_counter() - t0
    doc = summary.to_dict()
    if summary.counterexample is not None and args.counterexample:
        Path(args.counterexample).write_text(json.dumps(doc["counterexample"], indent=1) + "\n")
    if args.format == "json":
        sys.stdout.write(json.dumps(doc, indent=1) + "\n")
    else:
        rows = [(k, v) for k, v in doc.items() if k != "counterexample"] + [("seconds", f"{elapsed:.2f}")]
        sys.stdout.write(_kv_table(rows))
    return EXIT_OK if summary.ok else EXIT_DIVERGENCE


def cmd_compare(args) -> int:
    placement, praw = _load_placement(args.placement)
    data = _read_bytes(args.input)
    params, _ = _load_params(args)
    reports = {}
    costs = {}
    for v in ("e", "t"):
        res = simulate(placement, data, v)
        reports[v] = [(r.cycle, r.state_id, r.input_symbol) for r in res.reports]
        costs[v] = cost_report(res.trace, placement, params)
    same = reports["e"] == reports["t"]
    if args.format == "json":
        sys.stdout.write(json.dumps({
            "manifest": _manifest(args, {args.placement: praw, args.input: data}),
            "reports_identical": same,
            "e": costs["e"].to_dict(),
            "t": costs["t"].to_dict(),
        }, indent=1) + "\n")
    else:
        e, t = costs["e"], costs["t"]
        rows = [
            ("metric", f"{'CAMA-E':>14} {'CAMA-T':>14}"),
            ("energy (J)", f"{e.total_energy_j:>14.6e} {t.total_energy_j:>14.6e}"),
            ("energy/symbol (nJ)", f"{e.energy_per_symbol_nj:>14.6f} {t.energy_per_symbol_nj:>14.6f}"),
            ("average power (W)", f"{e.average_power_w:>14.6e} {t.average_power_w:>14.6e}"),
            ("throughput (Gbps)", f"{e.throughput_gbps:>14.2f} {t.throughput_gbps:>14.2f}"),
            ("density (Gbps/mm^2)", f"{e.compute_density_gbps_mm2:>14.3f} {t.compute_density_gbps_mm2:>14.3f}"),
            ("reports identical", str(same)),
        ]
        sys.stdout.write(_kv_table(rows))
    return EXIT_OK if same else EXIT_DIVERGENCE


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed recorded in manifests (fuzz: case seed)")
    common.add_argument("--format", choices=("json", "csv", "table"), default=None)
    common.add_argument("--params", help="JSON cost-parameter overrides")

    nfa_opts = argparse.ArgumentParser(add_help=False)
    nfa_opts.add_argument("--alphabet", type=int, default=None,
                          help="alphabet size for regex input (default 256; JSON files declare their own)")
    nfa_opts.add_argument("--start", choices=[k.value for k in StartKind if k is not StartKind.NONE],
                          default=StartKind.START_OF_DATA.value, help="start kind for regex first positions")
    nfa_opts.add_argument("--force-mode", choices=[m.value for m in TileMode], default=None)

    p = argparse.ArgumentParser(prog="cama", description="CAM-based automata compiler and simulator")
    p.add_argument("--version", action="version", version=f"cama {__version__}")
    p.add_argument("--dump-default-config", action="store_true", help="print default cost parameters")
    sub = p.add_subparsers(dest="command")

    c = sub.add_parser("compile", parents=[common, nfa_opts], help="NFA/regex -> codebook + placement")
    c.add_argument("input")
    c.add_argument("-o", "--output", default=".", help="directory for codebook.json and placement.json")
    c.add_argument("--dump-placement", metavar="PATH", help="also write the placement here ('-' = stdout)")
    c.set_defaults(func=cmd_compile, fmt_default="table")

    s = sub.add_parser("sim", parents=[common], help="run a placement on a byte stream")
    s.add_argument("placement")
    s.add_argument("input")
    s.add_argument("--version", dest="version", choices=("e", "t"), default="e")
    s.add_argument("--trace", metavar="CSV", help="write the per-cycle activity trace")
    s.add_argument("-o", "--output", default=None, help="report file (default stdout)")
    s.set_defaults(func=cmd_sim, fmt_default="json")

    k = sub.add_parser("cost", parents=[common], help="energy/area/throughput from placement + trace")
    k.add_argument("placement")
    k.add_argument("trace_file", metavar="trace")
    k.set_defaults(func=cmd_cost, fmt_default="json")

    o = sub.add_parser("oracle", parents=[common, nfa_opts], help="compare simulation with the interpreter")
    o.add_argument("input")
    o.add_argument("data")
    o.add_argument("--version", dest="version", choices=("e", "t", "both"), default="both")
    o.set_defaults(func=cmd_oracle, fmt_default="table")

    f = sub.add_parser("fuzz", parents=[common], help="random compile/sim/oracle campaign")
    f.add_argument("-n", type=int, default=100)
    f.add_argument("--counterexample", metavar="PATH", default="counterexample.json")
    f.add_argument("--graph-every", type=int, default=10, help="every k-th case is a random graph NFA")
    f.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    f.set_defaults(func=cmd_fuzz, fmt_default="table")

    m = sub.add_parser("compare", parents=[common], help="CAMA-E vs CAMA-T on one input")
    m.add_argument("placement")
    m.add_argument("input")
    m.set_defaults(func=cmd_compare, fmt_default="table")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dump_default_config:
        sys.stdout.write(DEFAULT_PARAMS.dumps() + "\n")
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INPUT
    if args.format is None:
        args.format = args.fmt_default
    try:
        return args.func(args)
    except (InputError, NfaError, RegexSyntaxError, TraceMismatchError, UnicodeDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (MappingError, UnmappableAlphabetError, PortOverflowError, InfeasibleTransitionError) as exc:
        sys.stderr.write(f"mapping failed: {exc}\n")
        return EXIT_MAPPING


if __name__ == "__main__":
    sys.exit(main())
