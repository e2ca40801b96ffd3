import json

import pytest

from yulebst import cli


def run(capsys, *args):
    code = cli.main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constants(capsys):
    code, out, _ = run(capsys, "constants", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["summary"]["c_prime"] == pytest.approx(0.3733, abs=1e-3)
    assert doc["summary"]["c"] == pytest.approx(4.31107, abs=1e-4)
    lo, hi = doc["summary"]["real_interval"]["2.0"]
    assert lo == pytest.approx(1 - 2**-0.5) and hi == pytest.approx(1 + 2**-0.5)


def test_bad_flag_exits_nonzero(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["constants", "--nope"])
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_invalid_value_exits_nonzero(capsys):
    code, _, err = run(capsys, "spine", "--two-z", "-1")
    assert code == 2 and "two-z" in err


def test_simulate_bst_is_deterministic(capsys):
    _, a, _ = run(capsys, "simulate", "bst", "--n", "10", "--seed", "4")
    _, b, _ = run(capsys, "simulate", "bst", "--n", "10", "--seed", "4")
    assert a == b
    assert "# seed=4" in a and "n,d_n,h_n,H_n" in a
    assert len([l for l in a.splitlines() if not l.startswith("#")]) == 11


def test_simulate_yule_reports_xi(capsys, tmp_path):
    out = tmp_path / "yule.csv"
    code, _, _ = run(capsys, "simulate", "yule", "--n", "100000", "--output", str(out))
    text = out.read_text()
    assert code == 0 and "# result.xi_estimate=" in text
    assert text.splitlines()[-1].startswith("99999,")


def test_simulate_biased(capsys):
    _, out, _ = run(capsys, "simulate", "biased", "--two-z", "3", "--n", "20")
    assert "n,s_n" in out and "# two_z=3.0" in out


def test_profile_table(capsys):
    _, out, _ = run(capsys, "profile", "--n", "3", "--seed", "2", "--format", "json")
    doc = json.loads(out)
    cols = doc["columns"]
    rows = {r[0]: dict(zip(cols, r)) for r in doc["rows"]}
    assert rows[1]["E_U_k"] == pytest.approx(2 / 3) and rows[2]["E_U_k"] == 2 and rows[3]["E_U_k"] == pytest.approx(4 / 3)
    assert sum(r["U_k"] for r in rows.values()) == 4
    assert doc["config"]["seed"] == 2 and doc["config"]["n"] == 3


def test_martingale_grid_and_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nseed=5\nn=40\nz=0.5:1.5:0.5\n")
    _, out, _ = run(capsys, "martingale", "--config", str(cfg), "--n", "30")
    lines = out.splitlines()
    assert "# seed=5" in lines and "# n=30" in lines
    body = [l for l in lines if not l.startswith("#")][1:]
    assert [l.split(",")[0] for l in body] == ["0.5", "1.0", "1.5"]
    assert float(body[0].split(",")[1]) == pytest.approx(1.0)
    assert float(body[1].split(",")[1]) == pytest.approx(1.0)


def test_parse_z():
    assert cli.parse_z("0.1:0.3:0.1") == pytest.approx([0.1, 0.2, 0.3])
    assert cli.parse_z("0.5,0.2") == [complex(0.5, 0.2)]
    assert cli.parse_z("1;2") == [1.0, 2.0]
    with pytest.raises(ValueError):
        cli.parse_z("1:0:0.1")


def test_quicksort_spine_tilted(capsys):
    code, out, _ = run(capsys, "quicksort", "--n", "50", "--replicates", "20", "--format", "json")
    assert code == 0 and len(json.loads(out)["rows"]) == 20
    code, out, _ = run(capsys, "spine", "--n", "1000", "--two-z", "2", "--replicates", "50")
    assert code == 0 and "# result.lln=" in out
    code, out, _ = run(capsys, "tilted", "--t", "1", "--two-z", "3", "--replicates", "10")
    assert code == 0 and "t,N_t,s_t" in out


def test_verify_fast_reports_each_criterion(capsys, tmp_path):
    out = tmp_path / "reports.jsonl"
    code = cli.main(["verify", "fast", "--output", str(out)])
    reports = [json.loads(l) for l in out.read_text().splitlines()]
    assert [r["name"][:3] for r in reports] == ["C01", "C02", "C05", "C07"]
    assert code == (0 if all(r["passed"] for r in reports) else 1)
