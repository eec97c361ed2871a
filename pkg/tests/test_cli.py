import csv
import io
import json
import math
import subprocess
import sys

import pytest

from treedim import growth
from treedim.cli import main

from conftest import GOLDEN_H, GOLDEN_LAMBDA


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_solve_json(capsys):
    code, out, _ = run(capsys, "solve", "--w", "1,1", "--a", "0.5")
    assert code == 0
    d = json.loads(out)
    assert d["lambda_star"] == pytest.approx(GOLDEN_LAMBDA, abs=1e-9)
    assert d["h"] == pytest.approx(GOLDEN_H, abs=1e-9)
    assert d["dimension"] == pytest.approx(0.7615468, abs=1e-6)


def test_solve_csv(capsys):
    code, out, _ = run(capsys, "solve", "--w", "1,1,1", "--format", "csv")
    r = rows(out)[0]
    assert code == 0 and float(r["lambda_star"]) == pytest.approx(0.8392867552, abs=1e-9)


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--w", "1,0"],
        ["solve", "--w", "1,-1"],
        ["solve", "--w", "1"],
        ["solve", "--w", "1,x"],
        ["solve", "--w", "1,1", "--k", "3"],
        ["solve", "--w", "1,1", "--a", "1.5"],
        ["solve"],
        ["grow", "--w", "1,1", "--n", "10"],
        ["grow", "--w", "1,1", "--seed", "1"],
        ["entropy", "--w", "1,1", "--seed", "1", "--n", "100", "--levels", "0"],
        ["leafwalk", "--w", "1,1", "--seed", "1", "--n", "100", "--level", "0"],
        ["oracle-check", "--w", "1,1", "--seed", "1", "--n", "10"],
        ["grow", "--w", "1,1", "--seed", "1", "--n", "5", "--config", "/nonexistent.json"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_weights_positive_message(capsys):
    _, _, err = run(capsys, "solve", "--w", "1,0")
    assert "weights must be positive" in err


def test_grow_csv_and_summary(capsys, tmp_path):
    summ = tmp_path / "s.json"
    code, out, _ = run(capsys, "grow", "--w", "1,2", "--n", "200", "--seed", "7", "--summary", str(summ))
    assert code == 0
    assert out.splitlines()[0] == ",".join(growth.CSV_HEADER)
    G = growth.read_tree_csv(io.StringIO(out), (1, 2))
    growth.check_invariants(G)
    s = json.loads(summ.read_text())
    assert s["size"] == 200 == G.size
    assert s["total_weight"] == pytest.approx(growth.total_weight(G))


def test_grow_matches_library(capsys):
    _, out, _ = run(capsys, "grow", "--w", "1,1", "--n", "50", "--seed", "3")
    assert out == growth.write_tree_csv(growth.grow_continuous((1, 1), max_size=50, seed=growth.SeedSpec(3, 0)))


@pytest.mark.parametrize("extra", [["--discrete", "--n", "30"], ["--recursive", "--t", "3"], ["--t", "3"]])
def test_grow_variants(capsys, extra):
    code, out, err = run(capsys, "grow", "--w", "1,1", "--seed", "2", *extra)
    assert code == 0
    growth.check_invariants(growth.read_tree_csv(io.StringIO(out), (1, 1)))
    assert "size" in json.loads(err)


def test_grow_to_file(capsys, tmp_path):
    f = tmp_path / "t.csv"
    code, out, _ = run(capsys, "grow", "--w", "1,1", "--n", "20", "--seed", "1", "--out", str(f))
    assert code == 0 and out == ""
    assert len(f.read_text().splitlines()) == 21


def test_entropy_table(capsys):
    code, out, _ = run(capsys, "entropy", "--w", "1,1", "--seed", "5", "--n", "20000", "--replicas", "3", "--levels", "3,5")
    assert code == 0
    r = rows(out)
    assert list(r[0]) == ["replica", "n", "H_n", "h_hat", "coverage", "flagged", "se", "h_closed_form"]
    agg = [x for x in r if x["replica"] == "aggregate"]
    assert [x["n"] for x in agg] == ["3", "5"]
    assert float(agg[0]["h_closed_form"]) == pytest.approx(GOLDEN_H, abs=1e-9)
    per = [x for x in r if x["replica"] != "aggregate"]
    assert len(per) == 6
    assert all(0 < float(x["h_hat"]) <= math.log(2) + 1e-12 for x in per)


def test_entropy_json(capsys):
    code, out, _ = run(capsys, "entropy", "--w", "1,1", "--seed", "5", "--n", "5000", "--replicas", "2", "--levels", "3", "--format", "json")
    d = json.loads(out)
    assert code == 0 and len(d["rows"]) == 2 and len(d["aggregate"]) == 1


def test_entropy_selftest_uniform(capsys):
    code, out, _ = run(capsys, "entropy", "--w", "1,1", "--levels", "1,4,8", "--selftest-uniform")
    assert code == 0
    for x in rows(out):
        assert float(x["h_hat"]) == pytest.approx(math.log(2), abs=1e-11)


def test_entropy_coverage_flag(capsys):
    # a tiny tree has poor level coverage at n=5: flagged and excluded from the aggregate
    _, out, _ = run(capsys, "entropy", "--w", "1,1", "--seed", "1", "--n", "100", "--replicas", "2", "--levels", "5")
    r = rows(out)
    assert all(x["flagged"] == "1" for x in r if x["replica"] != "aggregate")
    assert r[-1]["flagged"] == "2" and r[-1]["h_hat"] == ""


def test_leafwalk_outputs(capsys, tmp_path):
    summ = tmp_path / "s.json"
    code, out, _ = run(capsys, "leafwalk", "--w", "1,1", "--seed", "4", "--n", "20000", "--replicas", "2",
                       "--level", "5", "--paths", "50", "--summary", str(summ))
    assert code == 0
    r = rows(out)
    assert len(r) == 100
    for x in r:
        assert float(x["local_dim"]) == pytest.approx(float(x["neg_log_delta_over_n"]))  # a = 1/e
    s = json.loads(summ.read_text())
    assert s["h_closed_form"] == pytest.approx(GOLDEN_H, abs=1e-9)
    assert len(s["theta_chain_mean_by_depth"]) == 6
    assert 0 <= s["theta_chain_ks_early_vs_late"]["p_value"] <= 1


def test_leafwalk_selftest_uniform(capsys):
    code, out, _ = run(capsys, "leafwalk", "--w", "1,1", "--seed", "1", "--level", "6", "--paths", "20", "--a", "0.5", "--selftest-uniform")
    assert code == 0
    for x in rows(out):
        assert float(x["neg_log_delta_over_n"]) == pytest.approx(math.log(2), abs=1e-12)
        assert float(x["local_dim"]) == pytest.approx(1.0, abs=1e-12)


def test_leafwalk_insufficient_growth(capsys):
    code, _, err = run(capsys, "leafwalk", "--w", "1,1", "--seed", "1", "--n", "5", "--level", "10", "--paths", "5")
    assert code == 2 and "--n" in err


def test_oracle_check_pass_and_negative_control(capsys):
    code, out, _ = run(capsys, "oracle-check", "--w", "1,2", "--n", "4", "--samples", "20000", "--seed", "3")
    v = json.loads(out)
    assert code == 0 and v["passed"] and v["simulator"] == "discrete"
    code, out, _ = run(capsys, "oracle-check", "--w", "1,2", "--n", "5", "--samples", "20000", "--seed", "3", "--negative-control")
    v = json.loads(out)
    assert code == 1 and not v["passed"] and v["p_value"] < 1e-3


def test_config_file_with_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"w": "1,1", "a": 0.5}))
    _, out, _ = run(capsys, "solve", "--config", str(cfg))
    assert json.loads(out)["a"] == 0.5
    _, out, _ = run(capsys, "solve", "--config", str(cfg), "--a", "0.25")
    d = json.loads(out)
    assert d["a"] == 0.25 and d["dimension"] == pytest.approx(GOLDEN_H / math.log(4), abs=1e-9)


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"w": "1,1", "bogus": 3}))
    code, _, err = run(capsys, "solve", "--config", str(cfg))
    assert code == 2 and "bogus" in err


def test_output_is_repeatable_and_thread_independent(capsys):
    base = ["entropy", "--w", "1,2", "--seed", "11", "--n", "5000", "--replicas", "4", "--levels", "2,4"]
    outs = [run(capsys, *base, "--threads", t)[1] for t in ("1", "2", "1", "3")]
    assert len(set(outs)) == 1
    base = ["leafwalk", "--w", "1,1", "--seed", "2", "--n", "5000", "--replicas", "3", "--level", "4", "--paths", "20"]
    outs = [run(capsys, *base, "--threads", t)[1:] for t in ("1", "2")]
    assert outs[0] == outs[1]


def test_threads_env_fallback(capsys, monkeypatch):
    base = ["entropy", "--w", "1,1", "--seed", "3", "--n", "2000", "--replicas", "3", "--levels", "2"]
    ref = run(capsys, *base)[1]
    monkeypatch.setenv("TREEDIM_THREADS", "2")
    assert run(capsys, *base)[1] == ref
    monkeypatch.setenv("TREEDIM_THREADS", "0")
    assert run(capsys, *base)[0] == 2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "treedim.cli", "solve", "--w", "1,1"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["lambda_star"] == pytest.approx(GOLDEN_LAMBDA, abs=1e-9)
