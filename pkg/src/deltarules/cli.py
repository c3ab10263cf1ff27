"""Command-line driver: ``deltarules run <file>`` and ``deltarules bench <name> <size>``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .algebra.terms import dump
from .bench import BENCHES, report, run_bench
from .differentiation import differentiate
from .engine.demons import DEFAULT_DEPTH, compile_rules, dump_demons, run_deep
from .errors import Contradiction, DeltaRulesError, DSLError
from .frontend import parse_program
from .interp import Session

EXIT_OK, EXIT_DIAG, EXIT_CONTRADICTION = 0, 1, 2


@dataclass
class RunConfig:
    path: str
    trace: str | None = None  # "rules" | "worlds"
    dumps: list[str] = field(default_factory=list)  # "algebra" | "demons" | "store"
    depth: int = DEFAULT_DEPTH
    seed: int = 0


def dump_algebra(table) -> str:
    lines = []
    for name, tr in table.translations.items():
        lines.append(f"rule {name}: {dump(tr.term)}")
        for rel in sorted({r for d in table.demons.values() for f in d.fragments
                           if f.rule.name == name for r in [d.relation]}):
            lines.append(f"  d/{rel}: {dump(differentiate(tr.term, rel))}")
    return "\n".join(lines)


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr

    def say(line: str) -> None:
        out.write(line + "\n")

    try:
        text = Path(cfg.path).read_text()
    except OSError as exc:
        err.write(f"{cfg.path}: error: {exc.strerror}\n")
        return EXIT_DIAG
    try:
        prog = parse_program(text, cfg.path)
        table = compile_rules(prog)
    except DSLError as exc:
        err.write(exc.render(cfg.path) + "\n")
        return EXIT_DIAG
    for w in table.warnings:
        err.write(w.render(cfg.path) + "\n")
    if "algebra" in cfg.dumps and table.translations:
        say(dump_algebra(table))
    if "demons" in cfg.dumps and table.demons:
        say(dump_demons(table).rstrip("\n"))
    try:
        s = Session(prog, trace=say if cfg.trace == "rules" else None, depth_limit=cfg.depth,
                    out=say, table=table)
        if cfg.trace == "worlds":
            s.store.trail.listener = lambda op, n: say(f"world {op} -> {n}")
        run_deep(s.run)
    except Contradiction as exc:
        err.write(f"{cfg.path}: error: contradiction escaped every branch ({exc})\n")
        return EXIT_CONTRADICTION
    except DSLError as exc:
        err.write(exc.render(cfg.path) + "\n")
        return EXIT_DIAG
    except DeltaRulesError as exc:
        err.write(f"{cfg.path}: error: {exc}\n")
        return EXIT_DIAG
    for w in s.store.warnings:
        err.write(f"{cfg.path}: warning: {w}\n")
    if "store" in cfg.dumps:
        out.write(s.store.snapshot())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deltarules", description="Incremental rule engine")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="load a program and execute its statements")
    r.add_argument("file")
    r.add_argument("--trace", choices=["rules", "worlds"])
    r.add_argument("--dump", action="append", default=[], choices=["algebra", "demons", "store"])
    r.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    r.add_argument("--seed", type=int, default=0)
    b = sub.add_parser("bench", help="run a bundled benchmark")
    b.add_argument("name", choices=sorted(BENCHES))
    b.add_argument("size", type=int)
    b.add_argument("--reps", type=int, default=1)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "run":
        cfg = RunConfig(args.file, args.trace, args.dump, args.depth, args.seed)
        return run(cfg)
    results = run_bench(args.name, args.size, args.reps)
    print(report(args.name, args.size, results))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
