import json
import subprocess
import sys
from pathlib import Path

import pytest

from keysub.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_normalize(capsys):
    code, out, _ = run(capsys, "normalize", "ver(a, sig(a, sk(b)), pk(b))", "--theory", "dsks")
    assert code == 0 and out.strip() == "1"


def test_normalize_syntax_error(capsys):
    code, _, err = run(capsys, "normalize", "sig(a")
    assert code == 2
    assert "line 1, column 4" in err


def test_saturate_lists_forging_rule(capsys):
    code, out, _ = run(capsys, "saturate", "dsks")
    lines = out.strip().splitlines()
    assert code == 0
    assert "?x, skp(pk(?y), sig(?x, sk(?y))) -> sig(?x, sk(?y))" in lines
    assert "?x, ?y -> sig(?x, ?y)" in lines
    assert "-> 0" in lines and "-> 1" in lines


def test_saturate_deo(capsys):
    code, out, _ = run(capsys, "saturate", "deo")
    assert code == 0
    assert "f(pk(?x), sig(?y, sk(?x))), sskp(pk(?x), sig(?y, sk(?x))) -> sig(?y, sk(?x))" in out


def test_solve_kap_hy(capsys):
    code, out, _ = run(capsys, "solve", str(SCENARIOS / "kap_hy.cstr"), "--theory", "dsks")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "SAT"
    assert "?ske := skp(pk(b), sig(ua, sk(b)))" in lines
    assert any(line.startswith("# witness") for line in lines)


def test_solve_unsat_exit_code(capsys):
    code, out, _ = run(capsys, "solve", str(SCENARIOS / "private_key.cstr"))
    assert code == 1 and out.strip() == "UNSAT"


def test_solve_protocol(capsys):
    code, out, _ = run(capsys, "solve", str(SCENARIOS / "kap_hy.proto"))
    assert code == 0
    assert "# interleaving: A.1 B.1 B.2 A.2 A.3 B.3" in out


def test_solve_with_custom_theory_file(capsys):
    code, out, _ = run(
        capsys, "solve", str(SCENARIOS / "kap_hy.cstr"), "--theory", str(SCENARIOS / "dsks_custom.theory")
    )
    assert code == 0 and out.startswith("SAT")


def test_budget_exhaustion_is_inconclusive(capsys):
    code, out, err = run(capsys, "solve", str(SCENARIOS / "kap_hy.cstr"), "--budget", "5")
    assert code == 2
    assert out.strip() == "INCONCLUSIVE"
    assert "budget" in err


def test_trace_file(capsys, tmp_path):
    trace = tmp_path / "log.jsonl"
    code, _, _ = run(capsys, "solve", str(SCENARIOS / "forged_verification.cstr"), "--trace", str(trace))
    assert code == 0
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert records[-1]["event"] == "sat"
    assert all("event" in r and "node" in r for r in records)


def test_unify(capsys):
    code, out, _ = run(capsys, "unify", "ver(a, ?y, pk(b))", "1")
    assert code == 0 and "?y := sig(a, sk(b))" in out
    code, out, _ = run(capsys, "unify", "pk(?y)", "sk(?z)")
    assert code == 1 and "not unifiable" in out


def test_check(capsys):
    code, out, _ = run(capsys, "check", str(SCENARIOS / "kap_hy_forge.deriv"))
    assert code == 0 and out.strip() == "valid"
    code, out, _ = run(capsys, "check", str(SCENARIOS / "bad_private_key.deriv"))
    assert code == 1 and out.startswith("invalid at step 0")


def test_convergence(capsys):
    code, out, _ = run(capsys, "convergence", "deo")
    assert code == 0
    assert out.splitlines()[0] == "terminating: yes, locally_confluent: yes"


@pytest.mark.parametrize("argv", [["solve", "/nonexistent.cstr"], ["normalize", "a", "--theory", "nope"]])
def test_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("keysub: error:")


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "keysub", "normalize", "sig(a, skp(pk(b), sig(a, sk(b))))"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "sig(a, sk(b))"
