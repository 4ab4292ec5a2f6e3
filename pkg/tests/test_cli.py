import json

import pytest

from bchaos.chaos import ChaosVector, riesz
from bchaos.cli import main
from bchaos.gamma import GammaIndex, weight_series_envelope, weight_series_sum


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gamma_sum(capsys):
    code, out, _ = run(["gamma", "sum", "--r", "2", "--level", "20"], capsys)
    assert code == 0
    assert f"sum={weight_series_sum(2, 20):.17g}" in out
    assert f"envelope={weight_series_envelope(2):.17g}" in out


def test_gamma_list(capsys):
    code, out, _ = run(["gamma", "list", "--level", "1"], capsys)
    assert code == 0
    assert out.splitlines()[3] == "3\t{0,1}\t2"


def test_bad_r_is_reported(capsys):
    code, _, err = run(["gamma", "sum", "--r", "1"], capsys)
    assert code == 2 and "r > 1" in err


def test_verify_axioms(capsys, tmp_path):
    out_file = tmp_path / "r.json"
    code, out, _ = run(["verify", "--suite", "axioms", "--level", "2", "--cylinder-level", "3",
                        "--out", str(out_file)], capsys)
    assert code == 0 and "all checks passed" in out
    doc = json.loads(out_file.read_text())
    assert doc["passed"] and doc["config"]["seed"] == 0
    assert all(r["max_residual"] < 1e-12 for r in doc["reports"])
    assert all(r["config"]["seed"] == 0 for r in doc["reports"])


def test_reports_are_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        run(["verify", "--suite", "linearity", "--seed", "7", "--trials", "5", "--out", str(path)], capsys)
    assert a.read_bytes() == b.read_bytes()
    run(["verify", "--suite", "linearity", "--seed", "8", "--trials", "5", "--out", str(b)], capsys)
    assert a.read_bytes() != b.read_bytes()


def test_q_must_exceed_p_plus_half(capsys):
    code, _, err = run(["verify", "--suite", "bounds", "--p", "1", "--q", "1.5"], capsys)
    assert code == 2 and "q > p + 1/2" in err


def test_level_cap(capsys, monkeypatch):
    monkeypatch.setenv("BC_MAX_LEVEL", "3")
    code, _, err = run(["verify", "--suite", "axioms", "--level", "4"], capsys)
    assert code == 2 and "BC_MAX_LEVEL" in err


def test_failing_suite_exits_nonzero(capsys):
    # the damped convergence fixture cannot reach 1e-8 at n = 64 (see the decisions ledger)
    code, out, _ = run(["verify", "--suite", "convergence"], capsys)
    assert code == 1 and "[FAIL]" in out


def test_integral_build(capsys, tmp_path):
    phi = tmp_path / "phi.json"
    phi.write_text(json.dumps(riesz(ChaosVector.basis(GammaIndex.of(1)), 2).to_json()))
    out, csv = tmp_path / "k.json", tmp_path / "k.csv"
    code, _, _ = run(["integral", "build", "--phi", str(phi), "--measure", "pi0", "--level", "1",
                      "--out", str(out), "--csv", str(csv), "--q", "1"], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["provenance"]["measure"] == "pi0"
    entries = {(s, t) for s, t, _, _ in doc["kernel"]["entries"]}
    assert entries == {(s, t) for s in range(4) for t in range(4) if s ^ t == 2}
    assert csv.read_text().startswith("tau,sigma,re,im")


def test_integral_build_errors(capsys, tmp_path):
    code, _, err = run(["integral", "build", "--phi", str(tmp_path / "missing.json")], capsys)
    assert code == 2 and "cannot read" in err
    phi = tmp_path / "phi.json"
    phi.write_text(json.dumps(riesz(ChaosVector.basis(GammaIndex.of(1)), 1).to_json()))
    code, _, err = run(["integral", "build", "--phi", str(phi), "--measure", "other"], capsys)
    assert code == 2 and "unknown measure" in err
    code, _, err = run(["integral", "build", "--phi", str(phi), "--level", "3"], capsys)
    assert code == 2 and "level" in err


def test_integral_verify(capsys, tmp_path):
    code, out, _ = run(["integral", "verify", "--suite", "factorization", "--seed", "3", "--trials", "10"], capsys)
    assert code == 0 and "convolution-factorization" in out


def test_spectral_verify(capsys, tmp_path):
    out_file = tmp_path / "s.json"
    code, out, _ = run(["spectral", "verify", "--measure", "pi0", "--level", "2", "--cylinder-level", "3",
                        "--out", str(out_file)], capsys)
    assert code == 0
    code, out, _ = run(["report", "show", str(out_file)], capsys)
    assert code == 0 and "canonical-density" in out


def test_theta_file(capsys, tmp_path):
    theta = tmp_path / "theta.json"
    theta.write_text(json.dumps([0.3, 0.6, 0.2, 0.7, 0.4, 0.5]))
    code, out, _ = run(["space", "gram", "--level", "4", "--cylinder-level", "5", "--theta", str(theta)], capsys)
    assert code == 0 and "Gamma_4" in out
    theta.write_text("{not json")
    code, _, err = run(["space", "gram", "--theta", str(theta)], capsys)
    assert code == 2 and "theta" in err


def test_space_sample_is_seeded(capsys):
    _, a, _ = run(["space", "sample", "--level", "3", "--count", "4", "--seed", "1"], capsys)
    _, b, _ = run(["space", "sample", "--level", "3", "--count", "4", "--seed", "1"], capsys)
    assert a == b and len(a.splitlines()) == 4


def test_report_table(capsys):
    code, out, _ = run(["report", "table"], capsys)
    assert code == 0 and "| `positivity` |" in out


def test_unknown_verb_exits():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
