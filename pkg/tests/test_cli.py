import json
import math
import os
import subprocess
import sys

import pytest

from qsu11.cli import VERIFY_NAMES, main, read_config_file, thread_count


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def report(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------- spectrum

def test_spectrum_i1_json(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, stdout, _ = run(["spectrum", "--op", "I1", "--q", "0.5", "--l", "1", "--dim", "300",
                           "--format", "json", "--out", str(out)], capsys)
    assert code == 0
    rep = report(out)
    lo, hi = rep["prediction"]["interval"]
    assert lo == 0 and hi == pytest.approx(2 * math.sqrt(0.5) / 0.5, abs=1e-12)
    assert len(rep["eigenvalues"]) == 300
    assert all(c["pass"] for c in rep["checks"])
    assert {"name", "value", "tol", "pass"} <= set(rep["checks"][0])
    assert "PASS" in stdout and "FAIL" not in stdout


def test_spectrum_i2_matches_ladder(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, _, _ = run(["spectrum", "--op", "I2", "--q", "0.5", "--l", "1", "--dim", "200",
                      "--out", str(out)], capsys)
    assert code == 0
    pts = report(out)["prediction"]["points"]
    assert pts[:8] == [0.5 ** n / (1 - 2) for n in range(8)]


def test_spectrum_report_on_stdout_without_out(capsys):
    code, stdout, stderr = run(["spectrum", "--op", "I1", "--dim", "300"], capsys)
    assert code == 0
    assert json.loads(stdout)["dim"] == 300
    assert stderr.startswith("PASS")


def test_spectrum_csv(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(["spectrum", "--op", "I2", "--dim", "50", "--format", "csv", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "index,eigenvalue,predicted,abs_error"
    assert len(lines) == 51


@pytest.mark.parametrize("argv", [
    ["spectrum", "--op", "I1", "--q", "1.5"],
    ["spectrum", "--op", "I1", "--q", "0"],
    ["spectrum", "--op", "I1", "--l", "-1"],
    ["spectrum", "--op", "I1", "--dim", "8"],
    ["spectrum", "--op", "I9"],
    ["ortho", "--relation", "nope"],
])
def test_invalid_configuration_exit_2(argv, capsys):
    code, _, stderr = run(argv, capsys)
    assert code == 2
    assert stderr.startswith("error:")


def test_q_message(capsys):
    _, _, stderr = run(["spectrum", "--op", "I1", "--q", "1.5"], capsys)
    assert "q must lie in (0,1)" in stderr


def test_oversized_unbounded_section_is_config_error(capsys):
    code, _, stderr = run(["spectrum", "--op", "I3", "--dim", "400"], capsys)
    assert code == 2 and "error:" in stderr


# ---------------------------------------------------------------- ortho

def test_ortho_continuous(tmp_path, capsys):
    out = tmp_path / "g.json"
    code, _, _ = run(["ortho", "--relation", "cont_qL_313", "--q", "0.5", "--l", "1", "--nmax", "8",
                      "--out", str(out)], capsys)
    assert code == 0
    rep = report(out)
    assert rep["max_offdiag"] < 1e-8
    assert len(rep["gram"]) == 9


def test_ortho_single_entry(tmp_path, capsys):
    out = tmp_path / "g.json"
    code, _, _ = run(["ortho", "--relation", "little_qL_510", "--nmax", "0", "--out", str(out)], capsys)
    assert code == 0
    assert len(report(out)["gram"]) == 1


def test_ortho_fk(tmp_path, capsys):
    out = tmp_path / "g.json"
    code, _, _ = run(["ortho", "--relation", "fk_719", "--q", "0.5", "--l", "1", "--c", "1",
                      "--nmax", "6", "--out", str(out)], capsys)
    assert code == 0


def test_failed_check_exit_1(tmp_path, capsys):
    # An impossible tolerance turns a healthy report into a failure.
    out = tmp_path / "g.json"
    code, stdout, stderr = run(["ortho", "--relation", "little_qL_510", "--nmax", "4", "--tol-gram",
                                "1e-300", "--out", str(out)], capsys)
    assert code == 1
    assert "FAIL max_offdiag" in stdout and stderr.startswith("failed:")
    assert not all(c["pass"] for c in report(out)["checks"])


# ---------------------------------------------------------------- deficiency / limits

def test_deficiency_i4(tmp_path, capsys):
    out = tmp_path / "d.json"
    code, _, _ = run(["deficiency", "--op", "I4", "--q", "0.5", "--l", "1", "--kmax", "200",
                      "--out", str(out)], capsys)
    assert code == 0
    assert report(out)["verdict"] == "indices_1_1"


def test_deficiency_i1(tmp_path, capsys):
    out = tmp_path / "d.json"
    code, _, _ = run(["deficiency", "--op", "I1", "--out", str(out)], capsys)
    assert code == 0
    assert report(out)["verdict"] == "bounded_selfadjoint"


def test_limits_eigenvalue_map(tmp_path, capsys):
    out = tmp_path / "l.json"
    code, _, _ = run(["limits", "--check", "eigenvalue-map", "--mu", "1.0", "--q-seq", "0.9,0.99,0.999",
                      "--out", str(out)], capsys)
    assert code == 0
    errs = [row["abs_error"] for row in report(out)["table"]]
    assert len(errs) == 3 and errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("which", ["matrix", "eigenvalue-map", "cont-q-laguerre"])
def test_limits_default_sequence(which, tmp_path, capsys):
    out = tmp_path / "l.json"
    code, _, _ = run(["limits", "--check", which, "--out", str(out)], capsys)
    assert code == 0


# ---------------------------------------------------------------- verify-all

def test_verify_all(tmp_path, capsys):
    out = tmp_path / "v.json"
    code, stdout, _ = run(["verify-all", "--q", "0.5", "--l", "1", "--out", str(out)], capsys)
    lines = [ln for ln in stdout.splitlines() if ln.startswith(("PASS", "FAIL"))]
    assert [ln.split()[1] for ln in lines] == list(VERIFY_NAMES)
    assert all(ln.startswith("PASS") for ln in lines)
    assert code == 0


def test_exit_status_tracks_check_lines(tmp_path, capsys):
    out = tmp_path / "v.json"
    code, _, _ = run(["verify-all", "--out", str(out)], capsys)
    checks = report(out)["checks"]
    assert (code == 0) == all(c["pass"] for c in checks)


# ---------------------------------------------------------------- config, determinism, threads

def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults for this run\nop = I2\nq = 0.4\ndim = 60  # trailing comment\n")
    out = tmp_path / "s.json"
    code, _, _ = run(["spectrum", "--config", str(cfg), "--q", "0.5", "--out", str(out)], capsys)
    assert code == 0
    rep = report(out)
    assert rep["op"] == "I2_psi" and rep["dim"] == 60 and rep["params"]["q"] == 0.5


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("\n# comment\nq = 0.3\nrelation = fk_719\n")
    assert read_config_file(str(cfg)) == {"q": "0.3", "relation": "fk_719"}


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("this line has no equals sign\n")
    code, _, _ = run(["spectrum", "--config", str(cfg)], capsys)
    assert code == 2
    code, _, _ = run(["spectrum", "--config", str(tmp_path / "missing.cfg")], capsys)
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["spectrum", "--op", "I2", "--dim", "120"],
    ["spectrum", "--op", "I1", "--dim", "80", "--format", "csv"],
    ["ortho", "--relation", "qLaguerre_712", "--nmax", "5"],
    ["verify-all"],
])
def test_reports_byte_identical(argv, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    main(argv + ["--out", str(a)])
    main(argv + ["--out", str(b)])
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_atomic_write_leaves_no_temporaries(tmp_path, capsys):
    out = tmp_path / "s.json"
    out.write_text("old contents")
    run(["spectrum", "--op", "I1", "--dim", "20", "--out", str(out)], capsys)
    assert json.loads(out.read_text())["dim"] == 20
    assert sorted(os.listdir(tmp_path)) == ["s.json"]


def test_thread_count(monkeypatch):
    monkeypatch.setenv("QSU11_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.delenv("QSU11_THREADS")
    assert thread_count() >= 1
    monkeypatch.setenv("QSU11_THREADS", "zero")
    with pytest.raises(ValueError):
        thread_count()


def test_threads_do_not_change_report(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("QSU11_THREADS", "1")
    main(["verify-all", "--out", str(tmp_path / "one")])
    monkeypatch.setenv("QSU11_THREADS", "4")
    main(["verify-all", "--out", str(tmp_path / "four")])
    capsys.readouterr()
    assert (tmp_path / "one").read_bytes() == (tmp_path / "four").read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qsu11", "spectrum", "--op", "I1", "--q", "1.5"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "q must lie in (0,1)" in proc.stderr
