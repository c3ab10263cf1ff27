"""Bundled benchmarks: n queens, graph closure and a zebra-style puzzle."""

from __future__ import annotations

import random
import re
import time
from dataclasses import dataclass
from importlib import resources
from typing import Callable

from .engine.demons import run_deep
from .frontend import parse_program
from .interp import Session


@dataclass
class BenchResult:
    name: str
    size: int
    result: object
    firings: int
    seconds: float

    @property
    def rate(self) -> float:
        return self.firings / self.seconds if self.seconds > 0 else float("inf")

    def row(self, rep: int) -> str:
        return (f"rep {rep}: result {self.result} firings {self.firings} "
                f"time {self.seconds:.4f}s rate {self.rate:.0f}/s")


def corpus(name: str) -> str:
    return resources.files("deltarules.corpus").joinpath(f"{name}.dr").read_text()


def _set_const(text: str, name: str, value: int) -> str:
    return re.sub(rf"^{name} :: \d+", f"{name} :: {value}", text, count=1, flags=re.M)


def _timed(name: str, size: int, s: Session, body: Callable[[], object]) -> BenchResult:
    t0 = time.perf_counter()
    result = run_deep(body)
    dt = time.perf_counter() - t0
    return BenchResult(name, size, result, len(s.log), dt)


def queens(size: int) -> BenchResult:
    s = Session(parse_program(_set_const(corpus("queens"), "SIZE", size)))
    return _timed("queens", size, s, lambda: s.exec("queens(SIZE)"))


def zebra(size: int) -> BenchResult:
    s = Session(parse_program(_set_const(corpus("zebra"), "N", size)))
    return _timed("zebra", size, s, lambda: s.exec("colors(N)"))


def _closure(name: str, n: int, edges: list[tuple[int, int]]) -> BenchResult:
    s = Session(parse_program(corpus("closure")))
    nodes = [s.runtime.create("point", name=f"p{i}") for i in range(n)]
    rt = s.runtime

    def body():
        for a, b in edges:
            rt.add("edge", nodes[a], nodes[b])
        return sum(len(v) for v in s.store.extents["path"].values())

    return _timed(name, n, s, body)


def closure_chain(n: int) -> BenchResult:
    """Chain p0 -> p1 -> ... ; the closure has n(n-1)/2 pairs."""
    return _closure("closure", n, [(i, i + 1) for i in range(n - 1)])


def random_edges(n: int, m: int, seed: int = 0) -> list[tuple[int, int]]:
    rng = random.Random(seed)
    edges: dict[tuple[int, int], None] = {}
    while len(edges) < min(m, n * n):
        edges.setdefault((rng.randrange(n), rng.randrange(n)))
    return list(edges)


def closure_random(n: int, seed: int = 0, degree: float = 1.5) -> BenchResult:
    return _closure("closure-random", n, random_edges(n, int(n * degree), seed))


BENCHES: dict[str, Callable[[int], BenchResult]] = {
    "queens": queens,
    "closure": closure_chain,
    "closure-random": closure_random,
    "zebra": zebra,
}


def run_bench(name: str, size: int, reps: int = 1) -> list[BenchResult]:
    try:
        fn = BENCHES[name]
    except KeyError:
        raise ValueError(f"unknown benchmark '{name}' (choose from {', '.join(BENCHES)})") from None
    return [fn(size) for _ in range(reps)]


def report(name: str, size: int, results: list[BenchResult]) -> str:
    lines = [f"bench {name} size {size} reps {len(results)}"]
    lines += [r.row(i + 1) for i, r in enumerate(results)]
    return "\n".join(lines)


__all__ = ["BENCHES", "BenchResult", "closure_chain", "closure_random", "queens", "report", "run_bench", "zebra"]
