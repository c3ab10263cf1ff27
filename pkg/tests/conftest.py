import itertools

import pytest

from deltarules.bench import corpus
from deltarules.engine.demons import run_deep
from deltarules.frontend import parse_program
from deltarules.interp import Session


def program(name_or_text):
    text = corpus(name_or_text) if "\n" not in name_or_text else name_or_text
    return parse_program(text)


def session(name_or_text, **kw):
    return Session(program(name_or_text), **kw)


def run_script(prog, script, **kw):
    """Execute statement texts on the incremental engine; returns the session."""
    s = Session(prog, **kw)

    def body():
        for text in script:
            s.exec(text)
    run_deep(body)
    return s


def warshall(n, edges):
    reach = [[False] * n for _ in range(n)]
    for a, b in edges:
        reach[a][b] = True
    for k, i, j in itertools.product(range(n), repeat=3):
        if reach[i][k] and reach[k][j]:
            reach[i][j] = True
    return {(i, j) for i in range(n) for j in range(n) if reach[i][j]}


def brute_queens(n):
    """Whether an n x n board admits n non-attacking queens."""
    for perm in itertools.permutations(range(n)):
        if len({r + c for r, c in enumerate(perm)}) == n and len({r - c for r, c in enumerate(perm)}) == n:
            return True
    return n == 0


@pytest.fixture
def closure_session():
    return session("closure")


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record(criterion, ok, detail, warn_only=False):
    status = "PASS" if ok else ("WARN" if warn_only else "FAIL")
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion}: {status} {detail}"
    print(ACCEPTANCE_LINES[criterion])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
