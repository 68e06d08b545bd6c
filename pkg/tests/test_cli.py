import json

import pytest

from polynorm.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_norms_report(tmp_path, capsys):
    path = tmp_path / "s.poly"
    assert run(capsys, "construct", "spread", "--m", 2, "--n", 4, "--out", path)[0] == 0
    code, out, _ = run(capsys, "norms", path, "--p", 2, "--r", 1)
    assert code == 0
    assert "[0.5, 0.5]" in out and "exact-spread" in out


def test_norms_zero_and_errors(tmp_path, capsys):
    z = tmp_path / "z.poly"
    z.write_text("2 3\n")
    code, out, _ = run(capsys, "norms", z, "--p", 2, "--r", 2)
    assert code == 0 and "= 0.0" in out
    bad = tmp_path / "bad.poly"
    bad.write_text("2 x\n")
    code, _, err = run(capsys, "norms", bad, "--p", 2, "--r", 2)
    assert code == 2 and "line 1" in err
    code, _, _ = run(capsys, "norms", tmp_path / "missing.poly", "--p", 2, "--r", 2)
    assert code == 2
    code, _, _ = run(capsys, "norms", z, "--p", 0.5, "--r", 2)
    assert code == 2


def test_construct_outputs(tmp_path, capsys):
    code, out, err = run(capsys, "construct", "steiner-system", "--m", 2, "--n", 8)
    assert code == 0 and len(out.splitlines()) == 1 + 4 and "valid=True" in err
    code, out, _ = run(capsys, "construct", "unimodular", "--m", 2, "--n", 3, "--seed", 3)
    lines = out.splitlines()[1:]
    assert len(lines) == 6 and all(abs(float(l.split()[3])) == 1 for l in lines)
    a, b = tmp_path / "a.poly", tmp_path / "b.poly"
    run(capsys, "construct", "steiner", "--m", 3, "--n", 7, "--p", 2, "--rounds", 2, "--out", a)
    run(capsys, "construct", "steiner", "--m", 3, "--n", 7, "--p", 2, "--rounds", 2, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.poly.meta.json").exists()


def test_capacity_env(monkeypatch, capsys):
    monkeypatch.setenv("POLYNORM_CAP", "10")
    code, _, err = run(capsys, "construct", "ones", "--m", 3, "--n", 5)
    assert code == 2 and "capacity" in err


def test_regions_grid(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run(capsys, "regions", "--m", 2, "--grid", 101, "--out", out)[0] == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 1 + 101 * 101
    for row in rows[1:]:
        labels = row.split(",")[2]
        assert labels == "UNKNOWN" or "UNKNOWN" not in labels
    assert run(capsys, "regions", "--m", 3, "--grid", 11, "--kind", "chi")[0] == 0


def test_fit_synthetic_and_gate(tmp_path, capsys):
    data = tmp_path / "sq.csv"
    data.write_text("n,value\n" + "".join(f"{n},{n * n}\n" for n in (2, 4, 8, 16)))
    code, out, err = run(capsys, "fit", data, "--predicted", 2, "--tol", 0.01, "--gate")
    res = json.loads(out)
    assert code == 0 and res["status"] == "PASS" and res["slope"] == pytest.approx(2)
    assert set(res) >= {"slope", "intercept", "r2", "predicted", "status"}
    code, _, _ = run(capsys, "fit", data, "--predicted", 1, "--tol", 0.01, "--gate")
    assert code == 1
    code, _, _ = run(capsys, "fit", data, "--predicted", 1, "--tol", 0.01)
    assert code == 0


def test_sweep_then_fit(tmp_path, capsys):
    out = tmp_path / "sw.csv"
    code, _, _ = run(capsys, "sweep", "A", "--m", 2, "--p", 3, "--r", 1, "--family", "spread",
                     "--n-list", "6,12,24,48", "--out", out)
    assert code == 0
    code, res, _ = run(capsys, "fit", out)
    assert json.loads(res)["slope"] == pytest.approx(2 / 3, abs=0.05)


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[sweep]\nkind = A\nm = 2\np = 3\nr = 1\nn-list = 6,12,24\nfamily = spread\n")
    code, out, _ = run(capsys, "--config", cfg, "sweep")
    assert code == 0 and len(out.splitlines()) == 4
    code, out2, _ = run(capsys, "--config", cfg, "sweep", "--n-list", "6,12")
    assert code == 0 and len(out2.splitlines()) == 3
    assert out2.splitlines()[1] == out.splitlines()[1]
    bad = tmp_path / "bad.ini"
    bad.write_text("[sweep]\nbogus = 3\n")
    assert run(capsys, "--config", bad, "sweep")[0] == 2
    bad.write_text("[sweep]\nm = two\n")
    assert run(capsys, "--config", bad, "sweep")[0] == 2
    bad.write_text("[fit]\ntol = 1\n")
    assert run(capsys, "--config", bad, "sweep")[0] == 2


def test_missing_option_is_config_error(capsys):
    code, _, err = run(capsys, "sweep", "A", "--m", 2)
    assert code == 2 and "--n-list" in err
    assert run(capsys, "bogus-command")[0] == 2


def test_estimate_kinds(capsys):
    code, out, _ = run(capsys, "estimate", "B", "--m", 2, "--n", 4, "--p", "inf", "--r", "inf")
    row = out.splitlines()[1].split(",")
    assert code == 0 and float(row[6]) == pytest.approx(10)
    code, out, _ = run(capsys, "estimate", "chi", "--m", 2, "--n", 3, "--p", 2, "--q", 2,
                       "--rounds", 1, "--trials", 1, "--starts", 8)
    rec = json.loads(out)
    assert code == 0 and rec["chi_lower"] <= rec["bridge_upper"]


def test_vn_and_bayart(tmp_path, capsys):
    out = tmp_path / "vn.csv"
    for fam in ("nilpotent", "diagonal", "shiftpoly"):
        code, _, _ = run(capsys, "vn", "--family", fam, "--m", 2, "--n", 3, "--p", 2, "--q", 2,
                         "--count", 2, "--starts", 8, "--out", out)
        assert code == 0
        assert len(out.read_text().splitlines()) == 3
    code, out, err = run(capsys, "bayart", "--m", 2, "--n", 3, "--count", 2, "--samples", 2000, "--gate")
    assert code == 0 and "2/2 pass" in err


def test_reruns_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "B", "--m", 2, "--p", "inf", "--r", 1, "--n-list", "3,4,5", "--starts", 8]
    run(capsys, *args, "--out", a)
    run(capsys, "--threads", 3, *args, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert "created" in meta and meta["command"] == "sweep"
