"""Command-line entry point: ``mempix run | inspect | stats``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import format_milli
from .engine import Engine
from .errors import ScenarioError, SnapshotFormatError
from .harness import format_log, load_scenario, log_stats, parse_log, run

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mempix", description="Memory-pixel engine scenario runner.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("--scenario", required=True, type=Path)
    p.add_argument("--log", type=Path, help="write the event log here")
    p.add_argument("--snapshot-out", type=Path, help="write the final snapshot here")
    p.add_argument("--ticks", type=int, help="override run_ticks")

    p = sub.add_parser("inspect", help="dump a snapshot in readable form")
    p.add_argument("--snapshot", required=True, type=Path)

    p = sub.add_parser("stats", help="summarize an event log")
    p.add_argument("--log", required=True, type=Path)
    return parser


def _show(datum: bytes) -> str:
    try:
        text = datum.decode("ascii")
    except UnicodeDecodeError:
        return "0x" + datum.hex()
    return repr(text) if text.isprintable() else "0x" + datum.hex()


def describe(engine: Engine) -> str:
    st, cfg = engine.state, engine.config
    lines = [
        f"tick {st.tick}  next_seq {st.next_seq}  next_color {st.next_color}",
        f"config: C={cfg.capacity} I_max={format_milli(cfg.max_intensity)} "
        f"I={format_milli(cfg.known_intensity)} r={format_milli(cfg.reinforcement)} "
        f"W={cfg.decay_period} P={cfg.ingest_period}",
        f"pixel pool: {st.pixel_pool.free_count}/{st.pixel_pool.capacity} free",
        f"color table ({len(st.color_table)} entries):",
    ]
    for e in st.color_table:
        lines.append(f"  c{e.color:<4} screen {e.screen_no:<5} {_show(e.datum)}")
    lines.append(f"screen pool ({len(st.screen_pool)} screens):")
    for s in sorted(st.screen_pool, key=lambda s: s.seq):
        tag = " root" if s.is_root else ""
        lines.append(f"  #{s.seq} t={s.tick} c{s.color} {_show(s.datum)}{tag}")
        for p in s.pixels:
            lines.append(f"    dev {p.device_id:<4} c{p.color:<4} {format_milli(p.intensity):>8}  {_show(p.datum)}")
    return "\n".join(lines)


def _cmd_run(args) -> int:
    try:
        spec = load_scenario(args.scenario)
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_IO
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.ticks is not None and args.ticks < 1:
        print("error: --ticks must be positive", file=sys.stderr)
        return EXIT_INVALID
    result = run(spec, args.ticks)
    try:
        if args.log:
            args.log.write_text(format_log(result.log), encoding="ascii")
        if args.snapshot_out:
            args.snapshot_out.write_bytes(result.snapshot)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    actions = sum(len(v) for v in result.transcripts.values())
    print(f"ran {args.ticks or spec.run_ticks} ticks: {len(result.log)} events, {actions} actions")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    try:
        blob = args.snapshot.read_bytes()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        engine = Engine.restore(blob)
    except SnapshotFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(describe(engine))
    return EXIT_OK


def _cmd_stats(args) -> int:
    try:
        text = args.log.read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        stats = log_stats(parse_log(text))
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print("event counts:")
    for kind, n in stats["counts"].items():
        print(f"  {kind:<16} {n}")
    print(f"screens removed: {len(stats['lifetimes'])}  still alive: {len(stats['alive'])}")
    for seq, life in sorted(stats["lifetimes"].items()):
        print(f"  screen {seq}: lived {life} ticks")
    print("forgetting histogram (lifetime ticks: screens):")
    for life, n in stats["histogram"].items():
        print(f"  {life:>5}: {'#' * n} {n}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return {"run": _cmd_run, "inspect": _cmd_inspect, "stats": _cmd_stats}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
