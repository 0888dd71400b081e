"""Command-line entry point: ``cbdbell {simulate,pair,analyze,scan}``.

Exit codes: 0 success, 2 configuration or usage error, 3 invalid data,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import RunConfig, load_run_config
from .errors import (
    CbdError,
    ConfigError,
    EmptyScanError,
    InvalidSpecError,
    ProtocolMismatchError,
    ResourceError,
)
from .formats import atomic_write_text, read_paired, read_stream, write_paired, write_stream
from .inequalities import cbd_statistics
from .model import ExpectationTable, eprb_spec
from .pairing import SCAN_COLUMNS, estimate_table, optimal_window, pair_streams, scan, scan_rows
from .simulator import simulate_run
from .stats import assess, delta_interval, term_levels

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_IO = 0, 2, 3, 4

SIG_DIGITS = 12


def round_sig(value):
    """Round every float in a JSON-like structure to 12 significant digits."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        return float(f"{value:.{SIG_DIGITS}g}")
    if isinstance(value, dict):
        return {k: round_sig(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_sig(v) for v in value]
    return value


def fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def dump_json(data) -> str:
    return json.dumps(round_sig(data), indent=2, sort_keys=False) + "\n"


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, EmptyScanError, ResourceError)):
        return EXIT_CONFIG
    if isinstance(exc, CbdError):
        return EXIT_DATA
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


def stream_paths(out_dir, context_id: str) -> tuple[Path, Path]:
    out = Path(out_dir)
    return out / f"stream_{context_id}_A.txt", out / f"stream_{context_id}_B.txt"


def simulate_contexts(cfg: RunConfig, only: str | None = None) -> dict:
    runs = [cfg.context(only)] if only else list(cfg.contexts)
    return {c.id: simulate_run(cfg.model_for(c), (c.a, c.b)) for c in runs}


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config)
    out = args.out or cfg.out_dir
    streams = simulate_contexts(cfg, args.context)
    for cid, (sa, sb) in streams.items():
        pa, pb = stream_paths(out, cid)
        write_stream(sa, pa)
        write_stream(sb, pb)
        print(f"context {cid}: {len(sa)} clicks on A -> {pa}; {len(sb)} clicks on B -> {pb}")
    return EXIT_OK


_EPRB_LABEL = re.compile(r"^[AB](\w+)$")


def _default_context(setting_a: str, setting_b: str) -> str:
    ma, mb = _EPRB_LABEL.match(setting_a), _EPRB_LABEL.match(setting_b)
    if ma and mb:
        return ma.group(1) + mb.group(1)
    return f"{setting_a}-{setting_b}"


def cmd_pair(args) -> int:
    sa, sb = read_stream(args.in_a), read_stream(args.in_b)
    if sa.side != "A" or sb.side != "B":
        raise ProtocolMismatchError(f"expected an A stream and a B stream, got {sa.side} and {sb.side}")
    context = args.context or _default_context(sa.setting, sb.setting)
    wa, wb, paired = pair_streams(sa, sb, args.window_ns, args.shift_ns, context)
    write_paired(paired, args.out)
    print(f"context={context} N_x={wa.kept_windows} N_y={wb.kept_windows} N_xy={paired.N} "
          f"clicks_x={wa.clicks} clicks_y={wb.clicks}")
    return EXIT_OK


def _load_table(args) -> ExpectationTable:
    if args.counts:
        try:
            text = Path(args.counts).read_text(encoding="utf-8")
            return ExpectationTable.from_json(text)
        except json.JSONDecodeError as exc:
            raise InvalidSpecError(f"{args.counts}: invalid JSON at line {exc.lineno}") from None
    samples = [read_paired(p) for p in args.tables]
    spec = eprb_spec()
    ids = sorted(s.context for s in samples)
    if ids != sorted(spec.context_ids):
        raise InvalidSpecError(f"paired files cover contexts {ids}, expected {sorted(spec.context_ids)}")
    protocols = {(s.W_ns, s.shift_ns) for s in samples}
    if len(protocols) > 1:
        raise ProtocolMismatchError(f"paired files use different (W, shift): {sorted(protocols)}")
    return estimate_table(samples, spec)


def analysis_report(table: ExpectationTable, alpha: float, variant: str, gamma: str) -> dict:
    table.require_valid()
    stats = cbd_statistics(table, variant)
    report = assess(table, alpha, variant, gamma)
    d_ci = delta_interval(table, alpha)
    n = table.spec.n
    notes = {"term_error_rates": term_levels(n, alpha)}
    if n == 4:
        notes["alternative_error_rates"] = {"products": [alpha / 8] * 4, "delta_total": alpha / 2}
        notes["alternative_delta_pairing"] = "|A11-A22| + |B11-B12| + |A12-A21| + |B21-B22|"
    return {
        "statistics": stats.to_dict(),
        "verdict": report.to_dict(),
        "delta_interval": [d_ci.lo, d_ci.hi],
        "table": table.to_dict(),
        "notes": notes,
    }


def summary_line(result: dict) -> str:
    s, v = result["statistics"], result["verdict"]
    return (
        f"verdict: {v['verdict']} ({v['variant']} in [{fmt(v['s_lo'])}, {fmt(v['s_hi'])}] "
        f"vs bound {v['bound']}, alpha={fmt(v['alpha'])}, gamma={v['gamma']}"
        f"{' post-hoc' if v['post_hoc_gamma'] else ''})\n"
        f"s_odd={fmt(s['s_odd'])} delta={fmt(s['delta'])} "
        f"s_cbd={fmt(s['s_cbd'])} s_printed={fmt(s['s_printed'])}"
    )


def cmd_analyze(args) -> int:
    table = _load_table(args)
    result = analysis_report(table, args.alpha, args.variant, args.gamma)
    text = dump_json(result)
    summary = summary_line(round_sig(result))
    if args.out:
        atomic_write_text(args.out, text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return EXIT_OK


def _parse_int_list(text: str | None, what: str) -> tuple[int, ...] | None:
    if text is None:
        return None
    parts = [p for p in text.split(",") if p.strip()]
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{what} must be a comma-separated list of integers, got {text!r}") from None


def scan_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCAN_COLUMNS)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in SCAN_COLUMNS])
    return buf.getvalue()


def cmd_scan(args) -> int:
    cfg = load_run_config(args.config)
    windows = _parse_int_list(args.windows, "--windows")
    shifts = _parse_int_list(args.shifts, "--shifts")
    windows = cfg.windows_ns if windows is None else windows
    shifts = cfg.shifts_ns if shifts is None else shifts
    if not windows:
        raise ConfigError("window list is empty")
    if not shifts:
        raise ConfigError("shift list is empty")
    if any(w < 1 for w in windows):
        raise ConfigError("window widths must be >= 1 ns")
    streams = simulate_contexts(cfg)
    result = scan(streams, cfg.spec, windows, shifts, cfg.alpha, cfg.variant, cfg.gamma)
    text = scan_csv(scan_rows(result))
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    W, d = optimal_window(result)
    best = next(p for p in result if (p.W_ns, p.shift_ns) == (W, d))
    print(
        f"optimal window: W_ns={W} shift_ns={d} coincidences={best.total_coincidences} "
        f"s_cbd={fmt(best.statistics.s_cbd)} verdict={best.verdict}",
        file=sys.stderr if not args.out else sys.stdout,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbdbell", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write raw time-tagged streams for each context")
    p.add_argument("config")
    p.add_argument("--context", help="simulate only this context id")
    p.add_argument("--out", help="output directory (default: config out_dir)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pair", help="window two streams and write their coincidences")
    p.add_argument("--in-a", required=True)
    p.add_argument("--in-b", required=True)
    p.add_argument("--window-ns", required=True, type=int)
    p.add_argument("--shift-ns", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--context", help="context id (default: derived from setting labels)")
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("analyze", help="statistics, confidence interval and verdict")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--tables", nargs=4, metavar="PAIRED", help="four paired-sample files")
    src.add_argument("--counts", metavar="JSON", help="expectation table JSON")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--variant", choices=("s_cbd", "s_printed"), default="s_cbd")
    p.add_argument("--gamma", choices=("max", "fixed"), default="max")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("scan", help="simulate, then scan window width and shift")
    p.add_argument("config")
    p.add_argument("--windows", help="comma-separated window widths in ns")
    p.add_argument("--shifts", help="comma-separated shifts in ns")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "alpha", None) is not None and not 0 < args.alpha < 1:
        print("config-error: --alpha must lie in (0, 1)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (CbdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
