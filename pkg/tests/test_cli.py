import json
import subprocess
import sys

import pytest

from gadgetlattice.cli import EXIT_FAIL, EXIT_IO, EXIT_OK, EXIT_USAGE, main, parse_range
from gadgetlattice.pauli import read_ham

SUBCOMMANDS = {
    ("compile",): "W-chain",
    ("verify",): "gentle measurement",
    ("gadget", "apply"): "perturbation gadget",
    ("wstate", "gap"): "uncle Hamiltonian",
    ("wstate", "constants"): "long-range gadget",
    ("code", "build"): "CSS stabilizer",
    ("layout", "render"): "comb-routed",
    ("nogo",): "W chain",
}


@pytest.fixture
def rep3(tmp_path):
    path = tmp_path / "rep3.ham"
    assert main(["code", "build", "--type", "repetition", "--n", "3", "-o", str(path)]) == 0
    return path


@pytest.mark.parametrize("cmd", list(SUBCOMMANDS))
def test_help_names_construct(cmd, capsys):
    assert main([*cmd, "--help"]) == EXIT_OK
    assert SUBCOMMANDS[cmd] in " ".join(capsys.readouterr().out.split())


def test_parse_range():
    assert parse_range("2..5") == [2, 3, 4, 5]
    assert parse_range("3,7") == [3, 7]


def test_code_build_steane_has_six_terms(tmp_path):
    out = tmp_path / "steane.ham"
    assert main(["code", "build", "--type", "steane", "-o", str(out)]) == EXIT_OK
    H = read_ham(out)
    assert H.n_qubits == 7 and len(H.terms) == 6


def test_compile_writes_four_artifacts(rep3, tmp_path):
    out = tmp_path / "out"
    assert main(["compile", str(rep3), "--epsilon", "0.1", "--eta", "0.1",
                 "-o", str(out)]) == EXIT_OK
    names = sorted(p.name for p in out.iterdir())
    assert names == ["rep3.cert.json", "rep3.layout.json", "rep3.report.json", "rep3.sim.ham"]
    assert json.loads((out / "rep3.report.json").read_text())["passed"]


def test_compile_is_byte_identical_across_runs_and_jobs(rep3, tmp_path):
    other = tmp_path / "toy.ham"
    other.write_text("qubits 3\n1.0 X0 X1\n1.0 Z1 Z2\n")
    dirs = []
    for jobs in ("1", "1", "2"):
        d = tmp_path / f"run{len(dirs)}"
        assert main(["compile", str(rep3), str(other), "--jobs", jobs, "-o", str(d)]) == 0
        dirs.append(d)
    for p in dirs[0].iterdir():
        for d in dirs[1:]:
            assert (d / p.name).read_bytes() == p.read_bytes()


def test_failed_bound_exits_one(rep3, tmp_path):
    assert main(["compile", str(rep3), "--c-N", "1e-6", "-o", str(tmp_path)]) == EXIT_FAIL


def test_wstate_gap_csv(tmp_path, capsys):
    csv = tmp_path / "gap.csv"
    assert main(["wstate", "gap", "--n", "2..8", "--csv", str(csv)]) == EXIT_OK
    lines = csv.read_text().splitlines()
    assert lines[0] == "n,lambda2,lambda3,gap" and len(lines) == 8
    assert "slope=" in capsys.readouterr().out


def test_wstate_constants(tmp_path):
    csv = tmp_path / "c.csv"
    assert main(["wstate", "constants", "--n", "2..4", "--csv", str(csv)]) == EXIT_OK
    rows = csv.read_text().splitlines()[1:]
    assert len(rows) == 3 and all(r.endswith("True,True") for r in rows)


def test_nogo_csv(tmp_path):
    csv = tmp_path / "nogo.csv"
    assert main(["nogo", "--n", "2..5", "--csv", str(csv)]) == EXIT_OK
    for line in csv.read_text().splitlines()[1:]:
        n, corr = line.split(",")[:2]
        assert abs(float(corr) - 2 / int(n)) < 1e-10
    assert main(["nogo", "--n", "3", "--family", "product", "--csv", str(csv)]) == EXIT_OK
    assert abs(float(csv.read_text().splitlines()[1].split(",")[1])) < 1e-12


def test_gadget_apply_with_check(tmp_path):
    out, man = tmp_path / "g.ham", tmp_path / "g.json"
    assert main(["gadget", "apply", "subdivision", "-o", str(out), "--manifest", str(man),
                 "--check"]) == EXIT_OK
    assert read_ham(out).n_qubits >= 3
    assert json.loads(man.read_text())


def test_gadget_apply_on_input_term(tmp_path):
    src = tmp_path / "w4.ham"
    src.write_text("qubits 4\n1.0 X0 Z1 Y2 X3\n0.5 Z0\n")
    out = tmp_path / "s.ham"
    weights = [t.weight for t in read_ham(src).terms]
    heavy, light = weights.index(4), weights.index(1)
    assert main(["gadget", "apply", "subdivision", "--input", str(src), "--term", str(heavy),
                 "-o", str(out)]) == EXIT_OK
    assert read_ham(out).n_qubits == 5
    assert main(["gadget", "apply", "subdivision", "--input", str(src), "--term", str(light),
                 "-o", str(out)]) == EXIT_USAGE
    assert main(["gadget", "apply", "three_to_two", "--input", str(src), "--term", str(heavy),
                 "-o", str(out)]) == EXIT_USAGE


def test_layout_render_svg_and_dot(rep3, tmp_path):
    svg, dot = tmp_path / "l.svg", tmp_path / "l.dot"
    assert main(["layout", "render", str(rep3), "-o", str(svg)]) == EXIT_OK
    assert main(["layout", "render", str(rep3), "--format", "dot", "-o", str(dot)]) == EXIT_OK
    assert svg.read_text().startswith("<svg") and dot.read_text().startswith("graph")


def test_layout_render_compiled_layout(rep3, tmp_path):
    out = tmp_path / "out"
    assert main(["compile", str(rep3), "-o", str(out)]) == EXIT_OK
    svg = tmp_path / "c.svg"
    assert main(["layout", "render", str(out / "rep3.layout.json"), "--hamiltonian",
                 str(out / "rep3.sim.ham"), "-o", str(svg)]) == EXIT_OK
    assert "<svg" in svg.read_text()


def test_verify_toy_writes_json(tmp_path, capsys):
    assert main(["verify", "toy", "gentle", "-o", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "toy.json").read_text())
    assert rep["passed"]
    out = capsys.readouterr().out
    assert "toy" in out and "PASS" in out


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["compile"],
    ["verify", "nonsense"],
    ["compile", "x.ham", "--epsilon", "0"],
    ["compile", "x.ham", "--eta", "2"],
    ["wstate", "gap", "--n", "a..b"],
    ["gadget", "apply", "no_such_gadget"],
])
def test_usage_errors_exit_two(argv):
    assert main(argv) == EXIT_USAGE


def test_missing_input_exits_three(tmp_path):
    assert main(["compile", str(tmp_path / "absent.ham"), "-o", str(tmp_path)]) == EXIT_IO


def test_malformed_input_exits_three(tmp_path):
    bad = tmp_path / "bad.ham"
    bad.write_text("qubits 2\n1.0 Q0\n")
    assert main(["compile", str(bad), "-o", str(tmp_path)]) == EXIT_IO


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "gadgetlattice", "code", "build", "--type",
                        "repetition", "--n", "4"], capture_output=True, text=True)
    assert r.returncode == 0 and "qubits 4" in r.stdout
