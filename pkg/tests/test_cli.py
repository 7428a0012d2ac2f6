import csv
import io
import json
import subprocess
import sys

import pytest

from wittenpoly import cli
from wittenpoly.polyring import parse, polynomial_to_json

SMALL = ["--grid", "16,32", "--scan-c", "1,2", "--scan-R", "4,8"]


def write_poly(tmp_path, expr, names=("x", "y"), name="h.json"):
    path = tmp_path / name
    path.write_text(polynomial_to_json(parse(expr, list(names)), list(names)))
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


# -- exit codes -------------------------------------------------------------------------


def test_analyze_case_a(tmp_path, capsys):
    code, rep = run(capsys, "analyze", "--input", write_poly(tmp_path, "x^2 - y^2"))
    assert code == 0
    cls = rep["classification"]
    assert cls["case"] == "A" and cls["weights"] == [1, 1] and not cls["case_C_flag"]
    assert rep["schema_version"] == cli.SCHEMA_VERSION and rep["command"] == "analyze"


def test_analyze_case_b(tmp_path, capsys):
    code, rep = run(capsys, "analyze", "--input", write_poly(tmp_path, "x^3 - 3*x*y^2 + x + 1"))
    assert code == 0
    assert rep["classification"]["case"] == "B"
    assert rep["classification"]["face"] == {"weights": [1, 1], "degree": 3}


def test_analyze_degenerate_face(tmp_path, capsys):
    code, rep = run(capsys, "analyze", "--input", write_poly(tmp_path, "x^2*y^2 + x"))
    assert code == 2
    assert rep["classification"]["case"] == "unclassified"
    assert not rep["classification"]["case_B_certificate"]["passed"]


@pytest.mark.parametrize(
    "text",
    ['{"vars": ["x"], "terms": [{"exp": [1], "coeff": "a"}]}', "not json", '{"vars": ["x"], "terms": [}'],
)
def test_malformed_input_is_usage_error(tmp_path, capsys, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert cli.main(["analyze", "--input", str(path)]) == 3
    assert "error" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert cli.main(["analyze"]) == 3
    assert cli.main(["analyze", "--input", str(tmp_path / "missing.json")]) == 3
    assert cli.main(["fiber", "--input", write_poly(tmp_path, "x^2 - y^2"), "--tol", "-1"]) == 3
    assert cli.main(["fiber", "--grid", "a,b"]) == 3
    assert cli.main(["nonsense"]) == 3
    assert cli.main(["develop", "--input", write_poly(tmp_path, "x^3 + x + y")]) == 3
    assert cli.main(["conjugate", "--input", write_poly(tmp_path, "x^2 - y^2")]) == 3


def test_global_flags_before_or_after_subcommand(tmp_path, capsys):
    _, a = run(capsys, "--seed", "7", "gronwall", "--cases", "1")
    _, b = run(capsys, "gronwall", "--cases", "1", "--seed", "7")
    assert a["provenance"]["seed"] == b["provenance"]["seed"] == 7
    assert a == b


# -- subcommands --------------------------------------------------------------------------


def test_develop(tmp_path, capsys):
    code, rep = run(capsys, "develop", "--input", write_poly(tmp_path, "x^3 + y^2"))
    assert code == 0
    assert all(rep["development"]["identities"].values())


def test_fiber_with_csv(tmp_path, capsys):
    out_csv = tmp_path / "scan.csv"
    code, rep = run(capsys, "fiber", "--input", write_poly(tmp_path, "x^2 - y^2"), *SMALL, "--csv", str(out_csv))
    assert code == 0
    topo = rep["topology"]
    assert topo["scan"]["betti"] == [0, 1, 0]
    assert topo["fiber"]["fiber_reduced_betti"][0] == 1 and topo["fiber"]["les_consistent"]
    rows = list(csv.reader(io.StringIO(out_csv.read_text())))
    assert rows[0] == ["c", "R", "m", "b0", "b1", "b2"] and len(rows) == 1 + 8


def test_fiber_without_plateau(tmp_path, capsys):
    argv = ["fiber", "--input", write_poly(tmp_path, "x^2 - y^2"), "--grid", "16,32", "--scan-c", "20,50",
            "--scan-R", "4,8"]
    code, rep = run(capsys, *argv)
    assert code == 2
    assert rep["topology"]["verdict"] == "unstable"


def test_conjugate_with_rows(tmp_path, capsys):
    out_csv = tmp_path / "seeds.csv"
    argv = ["conjugate", "--input", write_poly(tmp_path, "x^3 - 3*x*y^2 + x + 1"), "--seeds", "4", "--csv", str(out_csv)]
    code, rep = run(capsys, *argv)
    assert code == 0
    worst = rep["conjugation"]["worst"]
    assert worst["conjugacy"] <= 1e-6 and worst["roundtrip"] <= 1e-5
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    assert len(rows) == 4
    assert {"seed", "drift", "displacement", "conjugacy_residual"} <= set(rows[0])


def test_conjugate_with_derivative_probe(tmp_path, capsys):
    argv = ["conjugate", "--input", write_poly(tmp_path, "x^4 + y^4 + x^2"), "--seeds", "2", "--order", "1"]
    code, rep = run(capsys, *argv)
    assert code == 0
    assert rep["conjugation"]["derivative_probe"]["order"] == 1


def test_gronwall_and_forms(capsys):
    code, rep = run(capsys, "gronwall", "--cases", "2")
    assert code == 0 and rep["gronwall"]["verdict"] == "verified"
    code, rep = run(capsys, "forms-check", "--cases", "2")
    assert code == 0 and rep["forms"]["verdict"] == "verified"


def test_pipeline_case_a_and_bounded_below(tmp_path, capsys):
    code, rep = run(capsys, "verify-all", "--input", write_poly(tmp_path, "x^2 - y^2"), *SMALL)
    assert code == 0
    assert rep["pipeline"]["development"]["verdict"] == "verified"
    code, rep = run(capsys, "verify-all", "--input", write_poly(tmp_path, "x^2 + y^2"), *SMALL)
    # a bounded-below h is reported, but only as a certificate
    assert code == 2
    assert rep["pipeline"]["case_C"]["verdict"] == "certificate-only"


def test_forced_case(tmp_path, capsys):
    path = write_poly(tmp_path, "x^3 - 3*x*y^2 + x + 1")
    assert cli.main(["verify-all", "--input", path, "--case", "A", *SMALL]) == 3
    assert "quasi-homogeneous" in capsys.readouterr().err


def test_forced_case_b_on_quasi_homogeneous(tmp_path, capsys):
    code, rep = run(capsys, "verify-all", "--input", write_poly(tmp_path, "x^3 - 3*x*y^2"), "--case", "B", *SMALL)
    cls = rep["pipeline"]["classification"]
    assert cls["forced"] and cls["detected_case"] == "A" and cls["case"] == "B"
    assert code in (0, 2)


# -- determinism and cache ------------------------------------------------------------------


def _bytes(tmp_path, name, *argv):
    out = tmp_path / name
    assert cli.main([*argv, "--out", str(out)]) in (0, 2)
    return out.read_bytes()


def test_reports_are_byte_identical(tmp_path):
    path = write_poly(tmp_path, "x^3 - 3*x*y^2")
    base = ["fiber", "--input", path, *SMALL]
    a = _bytes(tmp_path, "a.json", *base)
    b = _bytes(tmp_path, "b.json", *base)
    c = _bytes(tmp_path, "c.json", *base, "--cache-dir", str(tmp_path / "cache"))
    d = _bytes(tmp_path, "d.json", *base, "--cache-dir", str(tmp_path / "cache"))
    e = _bytes(tmp_path, "e.json", *base, "--jobs", "2")
    assert a == b == c == d == e


def test_cache_is_reused_and_sound(tmp_path, capsys):
    path = write_poly(tmp_path, "x^2 - y^2")
    cache = tmp_path / "cache"
    base = ["fiber", "--input", path, *SMALL, "--cache-dir", str(cache), "--verbose"]
    cli.main(base)
    first = capsys.readouterr()
    assert "hits=0 misses=8" in first.err
    cli.main(base)
    second = capsys.readouterr()
    assert "hits=8 misses=0" in second.err
    assert first.out == second.out
    # a different polynomial never reads the saddle entries
    cli.main(["fiber", "--input", write_poly(tmp_path, "x^2 + y^2", name="p.json"), *SMALL, "--cache-dir", str(cache),
              "--verbose"])
    third = capsys.readouterr()
    assert "hits=0" in third.err


def test_seed_changes_config_hash(capsys):
    _, a = run(capsys, "gronwall", "--cases", "1", "--seed", "1")
    _, b = run(capsys, "gronwall", "--cases", "1", "--seed", "2")
    assert a["provenance"]["config_hash"] != b["provenance"]["config_hash"]


def test_module_entry_point(tmp_path):
    path = write_poly(tmp_path, "x^2 - y^2")
    proc = subprocess.run([sys.executable, "-m", "wittenpoly.cli", "analyze", "--input", path],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["classification"]["case"] == "A"
