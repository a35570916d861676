import io
import json
import subprocess
import sys

import pytest

from mlq.cli import main, run_suite, strip_timing
from mlq.equivalence import Budget
from mlq.generators import load_manifest

OMEGA = "apply (fun f/0() -> apply f/0())()"


@pytest.fixture
def src(tmp_path):
    def write(text, name="prog.mlq"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_parse(capsys, src):
    code, out = run(capsys, "parse", src("let X = 1 in X + 2"))
    assert code == 0
    assert json.loads(out)["kind"] == "let"


def test_parse_stdin(capsys, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO("[1|[]]"))
    code, out = run(capsys, "parse", "-")
    assert code == 0 and json.loads(out)


def test_parse_error(capsys, src):
    assert main(["parse", src("let X = \n 1 in")]) == 3
    err = capsys.readouterr().err
    diag = json.loads(err[err.index("{"):])
    assert diag["line"] == 2 and diag["col"] == 6
    assert diag["expected"] == ["expression"]


def test_eval(capsys, src):
    code, out = run(capsys, "eval", src("1+2"))
    assert code == 0
    assert json.loads(out) == {"outcome": "terminated", "value": "3", "steps": 3}


def test_eval_diverges(capsys, src):
    code, out = run(capsys, "eval", "--certify-divergence", src(OMEGA))
    assert json.loads(out)["outcome"] == "diverges"


def test_eval_out_of_fuel(capsys, src):
    code, out = run(capsys, "eval", "--fuel", "40", src(OMEGA))
    assert json.loads(out)["outcome"] == "out_of_fuel"


def test_eval_open_term(capsys, src):
    code, _ = run(capsys, "eval", src("X"))
    assert code == 3


def test_eval_trace_and_stack(capsys, src):
    stack = src("case □ of 3 then 10 else 20", "k.mlqs")
    code, out = run(capsys, "eval", "--trace", "--stack", stack, src("1 + 2"))
    lines = [json.loads(s) for s in out.splitlines()]
    assert lines[-1]["value"] == "10"
    assert [d["n"] for d in lines[:-1]] == list(range(len(lines) - 1))


def test_scope(capsys, src):
    code, out = run(capsys, "scope", "--gamma", "X,f/1", src("apply f/1(X)"))
    assert code == 0 and json.loads(out)["scoped"]
    code, out = run(capsys, "scope", src("apply f/1(X)"))
    assert code == 1
    assert json.loads(out)["missing"] == ["X", "f/1"]


def test_equiv_fun_pair(capsys, src):
    a, b = src("fun f/1(X) -> X + 2", "a.mlq"), src("fun f/1(X) -> (X + 1) + 1", "b.mlq")
    code, out = run(capsys, "equiv", "--method", "naive", a, b)
    assert code == 1 and json.loads(out)["verdict"] == "counterexample"
    code, out = run(capsys, "equiv", "--method", "ciu", a, b)
    assert code == 0 and json.loads(out)["verdict"] == "consistent"


def test_equiv_witness(capsys, src):
    code, out = run(capsys, "equiv", src("1", "a.mlq"), src("2", "b.mlq"))
    d = json.loads(out)
    assert code == 1
    assert d["witness"]["stack"] == f"case □ of 1 then 0 else {OMEGA}"
    assert d["witness"]["rhs"]["outcome"] == "diverges"
    assert set(d) >= {"method", "verdict", "budget", "elapsed_ms"}


def test_equiv_open(capsys, src):
    a, b = src("X + 1 + 1", "a.mlq"), src("X + 2", "b.mlq")
    code, _ = run(capsys, "equiv", "--gamma", "X", a, b)
    assert code == 0
    code, _ = run(capsys, "equiv", a, b)
    assert code == 3
    code, _ = run(capsys, "equiv", "--method", "naive", "--gamma", "X", a, b)
    assert code == 3


def test_equiv_inconclusive(capsys, src):
    slow = "letrec f/1(N) = apply f/1(N + 1) in apply f/1(0)"
    code, out = run(capsys, "equiv", "--samples", "20", "--fuel", "500", "--probe-fuel", "500",
                    src("0", "a.mlq"), src(slow, "b.mlq"))
    assert code == 2 and json.loads(out)["verdict"] == "inconclusive"


def test_equiv_seed_from_environment(capsys, src, monkeypatch):
    monkeypatch.setenv("MLQ_SEED", "7")
    _, out = run(capsys, "equiv", src("1", "a.mlq"), src("1", "b.mlq"))
    assert json.loads(out)["budget"]["seed"] == 7


def test_usage_errors(capsys, src):
    with pytest.raises(SystemExit) as ei:
        main(["frobnicate"])
    assert ei.value.code == 3
    code, _ = run(capsys, "equiv", "--fuel", "-1", src("1", "a.mlq"), src("1", "b.mlq"))
    assert code == 3
    code, _ = run(capsys, "parse", "/nonexistent/file.mlq")
    assert code == 3


def test_human_output(capsys, src):
    code, out = run(capsys, "eval", "--human", src("1+2"))
    assert code == 0 and "3" in out and not out.startswith("{")


def test_suite_subset(capsys):
    code, out = run(capsys, "suite", "--no-generated", "--method", "naive", "--samples", "50")
    rep = json.loads(out)
    assert code == 0
    assert rep["summary"]["mismatched"] == 0
    assert rep["summary"]["total"] == len(rep["rows"])
    fun_pair = [r for r in rep["rows"] if r["name"] == "fun-pair"]
    assert fun_pair[0]["verdict"] == "counterexample"


def test_suite_reproducible_in_parallel():
    entries = load_manifest()[:6]
    b = Budget(samples=60)
    a = strip_timing(run_suite(entries, b, ["ciu", "ctx"]))
    c = strip_timing(run_suite(entries, b, ["ciu", "ctx"], jobs=2))
    assert json.dumps(a, sort_keys=True) == json.dumps(c, sort_keys=True)


def test_module_entry_point(tmp_path):
    f = tmp_path / "p.mlq"
    f.write_text("1 + 2")
    out = subprocess.run([sys.executable, "-m", "mlq", "eval", str(f)],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["value"] == "3"
