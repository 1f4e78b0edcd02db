import io
import subprocess
import sys

import pytest

from slentail.cli import main, split_batch

LIST_EXAMPLE = "Arr(1,2) * 3 -> (10,0) * ls(10,20) |- Arr(1,3) * ls(10,20)"


def run(argv, text):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdin=io.StringIO(text), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_valid_example():
    code, out, _ = run(["--pt", "1"], "Arr(x,x) |- x -> (0) , Ex y . y > 0 & x -> (y)")
    assert (code, out) == (0, "valid\n")


def test_condition_violated_example():
    code, out, _ = run([], "Arr(1,5) |- Ex y . Arr(1,1+y) * Arr(2+y,5)")
    assert code == 2
    assert out.startswith("condition-violated: Arr(1, 1 + y)")


def test_empty_succedent_invalid():
    assert run([], "Emp |-")[:2] == (1, "invalid\n")


def test_list_input_uses_proof_search():
    assert run([], LIST_EXAMPLE)[:2] == (0, "valid\n")
    assert run(["--mode", "slal"], "x -> (a,b) |- ls(x,x)")[:2] == (1, "invalid\n")


def test_sla_mode_rejects_lists():
    code, out, err = run(["--mode", "sla"], LIST_EXAMPLE)
    assert code == 3 and out == ""
    assert "usage error" in err


def test_parse_error_exit_code():
    code, out, err = run([], "Arr(1,) |- Emp")
    assert code == 3 and out == ""
    assert err.startswith("parse error")


def test_bad_flag_is_usage_error():
    assert run(["--no-such-flag"], "Emp |- Emp")[0] == 3


def test_lists_need_arity_two():
    assert run(["--pt", "1"], "ls(x,y) |- ls(x,y)")[0] == 3


def test_batch_mode():
    text = "Emp |- Emp\n\nx -> (0) |- Emp\n\n  \nArr(1,5) |- Ex y . Arr(1,1+y) * Arr(2+y,5)\n"
    code, out, _ = run(["--batch"], text)
    lines = out.splitlines()
    assert lines[:2] == ["valid", "invalid"]
    assert lines[2].startswith("condition-violated")
    assert code == 2


def test_split_batch():
    assert split_batch("a\n\n\nb\n \nc") == ["a", "b", "c"]
    assert split_batch("\n\n") == []


def test_proof_for_lists():
    code, out, _ = run(["--proof"], LIST_EXAMPLE)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "valid"
    assert lines[1].startswith("UnsatL: ")
    assert any(line.startswith("MapsToLs: ") for line in lines)


def test_proof_for_arrays():
    code, out, _ = run(["--proof", "--pt", "1"], "x -> (1) |- Arr(x,x)")
    lines = out.splitlines()
    assert lines[0] == "valid"
    assert lines[1].startswith("case 1: x -> (1)")
    assert len(lines) == 3


def test_emit_smt_to_stdout():
    code, out, _ = run(["--emit-smt", "-"], "x -> (1) |- Arr(x,x)")
    assert code == 0
    assert "(check-sat)" in out


def test_emit_smt_to_file(tmp_path):
    path = tmp_path / "out.smt2"
    code, out, _ = run(["--emit-smt", str(path)], LIST_EXAMPLE)
    assert code == 0 and out == "valid\n"
    assert "(check-sat)" in path.read_text()


def test_smtlib_export_only_backend():
    code, out, _ = run(["--backend", "smtlib-export-only"], "x -> (1) |- Arr(x,x)")
    assert code == 0 and "(check-sat)" in out
    assert run(["--backend", "smtlib-export-only"], LIST_EXAMPLE)[0] == 3


@pytest.mark.parametrize("text,note", [
    ("x -> (0) |- Emp", "agrees (countermodel"),
    ("Emp |- Emp", "agrees (no countermodel"),
    ("Arr(1,5) |- Ex y . Arr(1,1+y) * Arr(2+y,5)", "skipped"),
])
def test_oracle_check(text, note):
    _, out, _ = run(["--oracle-check", "4,3"], text)
    assert out.splitlines()[1].startswith("oracle: " + note)


def test_trace_goes_to_diagnostics():
    code, out, err = run(["--trace"], "x -> (1) |- Arr(x,x)")
    assert out == "valid\n"
    assert err.startswith("trace: ")


def test_input_file(tmp_path):
    path = tmp_path / "e.sl"
    path.write_text("Emp |- Emp\n")
    assert run([str(path)], "")[:2] == (0, "valid\n")
    assert run([str(tmp_path / "missing.sl")], "")[0] == 3


def test_console_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "slentail"], input="x -> (0) |- Emp",
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 1
    assert proc.stdout == "invalid\n"
