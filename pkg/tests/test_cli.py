import io

import pytest

from deltarules.bench import corpus, run_bench
from deltarules.cli import EXIT_CONTRADICTION, EXIT_DIAG, EXIT_OK, RunConfig, main, run

from conftest import warshall

EDGES = [(0, 1), (1, 2), (2, 0), (2, 3)]


def graph_program():
    lets = " ".join(f"let p{i} := point() in" for i in range(4))
    body = ", ".join(f"p{a}.edge :add p{b}" for a, b in EDGES)
    return corpus("closure") + f"{lets} ({body})\n"


def call(tmp_path, text, **kw):
    f = tmp_path / "prog.dr"
    f.write_text(text)
    out, err = io.StringIO(), io.StringIO()
    code = run(RunConfig(str(f), **kw), out, err)
    return code, out.getvalue(), err.getvalue()


def test_run_ok_with_store_dump(tmp_path):
    code, out, err = call(tmp_path, graph_program(), dumps=["store"])
    assert code == EXIT_OK
    assert err == ""
    assert "path[point1] = {point1, point2, point3, point4}" in out


def test_trace_covers_the_closure(tmp_path):
    code, out, _ = call(tmp_path, graph_program(), trace="rules")
    firings = [ln for ln in out.splitlines() if ln.startswith("fire closure")]
    assert code == EXIT_OK
    expected = {f"fire closure (point{a + 1},point{b + 1}) @world 0" for a, b in warshall(4, EDGES)}
    assert set(firings) == expected
    # a cyclic graph derives some pairs twice, each firing at most once per write
    assert len(expected) <= len(firings) <= 2 * len(expected)


def test_algebra_dump(tmp_path):
    code, out, _ = call(tmp_path, corpus("closure"), dumps=["algebra"])
    assert code == EXIT_OK
    assert out.splitlines() == [
        "rule closure: edge U (path o edge)",
        "  d/edge: I U (path o I)",
        "  d/path: I o edge",
    ]


def test_demon_dump_precedes_execution(tmp_path):
    code, out, _ = call(tmp_path, corpus("closure") + "print(1)\n", dumps=["demons"])
    assert code == EXIT_OK
    assert out.startswith("if_write[edge](x, y)")
    assert out.rstrip().endswith("1")


def test_empty_program(tmp_path):
    assert call(tmp_path, "") == (EXIT_OK, "", "")


def test_syntax_error_exits_one(tmp_path):
    code, _, err = call(tmp_path, "point <: object(\n")
    assert code == EXIT_DIAG
    assert "prog.dr:" in err and "error" in err


def test_missing_file_exits_one(tmp_path):
    out, err = io.StringIO(), io.StringIO()
    assert run(RunConfig(str(tmp_path / "nope.dr")), out, err) == EXIT_DIAG


def test_escaped_contradiction_exits_two(tmp_path):
    code, _, err = call(tmp_path, "contradiction()\n")
    assert code == EXIT_CONTRADICTION
    assert "contradiction" in err


def test_world_trace(tmp_path):
    text = "branch(print(world?()), false)\n"
    code, out, _ = call(tmp_path, text, trace="worlds")
    assert code == EXIT_OK
    assert out.splitlines() == ["world choice -> 1", "1", "world backtrack -> 0"]


def test_bench_reports_rows(capsys):
    assert main(["bench", "queens", "5", "--reps", "2"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "bench queens size 5 reps 2"
    assert len(lines) == 3 and lines[1].startswith("rep 1: result True firings ")


def test_bench_zero_reps(capsys):
    assert main(["bench", "closure", "10", "--reps", "0"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["bench closure size 10 reps 0"]


def test_bench_closure_chain_size():
    (r,) = run_bench("closure", 20)
    assert r.result == 20 * 19 // 2


def test_unknown_bench_is_rejected():
    with pytest.raises(SystemExit):
        main(["bench", "nosuch", "3"])
    with pytest.raises(ValueError):
        run_bench("nosuch", 3)
