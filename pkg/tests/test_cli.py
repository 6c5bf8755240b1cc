import csv
import io
import json
import math
import os

import pytest

from lsv_shortmat.cli import main

TABLE_MODEL = {
    "s0": 1.0, "v0": 0.1, "rho": 0.0, "r": 0.0, "q": 0.0,
    "local_vol": {"kind": "tanh", "f0": 1.0, "f1": -0.5, "x0": 0.0},
    "vol_of_vol": {"kind": "lognormal", "sigma": 2.0, "drift": {"kind": "zero"}},
}


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps(TABLE_MODEL))
    return str(path)


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


class TestTable1:
    def test_header_and_shape(self, capsys):
        code, out, err = run_cli(["table1"], capsys)
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["rho", "sigma_e_atm", "s_e", "kappa_e", "sigma_vix_atm", "s_vix", "kappa_vix"]
        assert [r[0] for r in rows] == ["-0.7", "0", "0.7"]

    def test_byte_identical_runs(self, capsys):
        _, out1, _ = run_cli(["table1"], capsys)
        _, out2, _ = run_cli(["table1"], capsys)
        assert out1 == out2

    def test_european_columns_match_reference_table(self, capsys):
        _, out, _ = run_cli(["table1"], capsys)
        _, rows = parse_csv(out)
        got = [(r[1], r[2], r[3]) for r in rows]
        assert got == [("0.316", "-0.429", "0.133"),
                       ("0.316", "-0.079", "0.520"),
                       ("0.316", "0.271", "0.133")]

    def test_vix_level_and_skew_match_reference_table(self, capsys):
        _, out, _ = run_cli(["table1"], capsys)
        _, rows = parse_csv(out)
        got = [(r[4], r[5]) for r in rows]
        assert got == [("1.116", "0.054"), ("1.012", "0.012"), ("0.896", "-0.053")]

    def test_out_file(self, tmp_path, capsys):
        out_path = tmp_path / "t1.csv"
        code, out, _ = run_cli(["table1", "--out", str(out_path)], capsys)
        assert code == 0 and out == ""
        assert out_path.read_text().startswith("rho,")


class TestSmile:
    def test_atm_matches_expansion(self, model_file, capsys):
        code, out, err = run_cli(
            ["smile", "--model", model_file, "--product", "european",
             "--kmin", "-0.1", "--kmax", "0.1", "--kcount", "5"], capsys)
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["strike", "log_moneyness", "iv_expansion", "iv_rate"]
        assert len(rows) == 5
        mid = rows[2]
        assert float(mid[1]) == pytest.approx(0.0, abs=1e-12)
        assert float(mid[2]) == pytest.approx(0.3162278, abs=1e-6)
        assert float(mid[3]) == pytest.approx(0.3162278, abs=1e-6)

    def test_vix_expansion_column(self, tmp_path, capsys):
        cfg = dict(TABLE_MODEL)
        cfg["rho"] = 0.7
        path = tmp_path / "m.json"
        path.write_text(json.dumps(cfg))
        code, out, _ = run_cli(
            ["smile", "--model", str(path), "--product", "vix",
             "--kmin", "-0.2", "--kmax", "0.2", "--kcount", "3"], capsys)
        assert code == 0
        _, rows = parse_csv(out)
        assert float(rows[1][2]) == pytest.approx(0.8965, abs=5e-4)

    def test_effective_config_echoed(self, model_file, capsys):
        _, _, err = run_cli(["smile", "--model", model_file, "--kcount", "3"], capsys)
        echoed = json.loads(err.strip().split("\n")[0])
        assert echoed["effective_config"]["model"]["s0"] == 1.0

    def test_invalid_grid_fails(self, model_file, capsys):
        with pytest.raises(SystemExit):
            main(["smile", "--model", model_file, "--kmin", "0.3", "--kmax", "-0.3"])

    def test_empty_grid_fails(self, model_file, capsys):
        with pytest.raises(SystemExit):
            main(["smile", "--model", model_file, "--kcount", "0"])

    def test_missing_model_file(self, capsys):
        code, _, err = run_cli(["smile", "--model", "/nonexistent.json"], capsys)
        assert code == 1
        assert "error" in err


class TestRate:
    def test_rate_columns(self, model_file, capsys):
        code, out, _ = run_cli(
            ["rate", "--model", model_file, "--kmin", "-0.2", "--kmax", "0.2", "--kcount", "5"], capsys)
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["strike", "log_moneyness", "rate", "minimizer_y", "minimizer_z",
                          "iterations", "converged"]
        ks = [float(r[1]) for r in rows]
        rates = [float(r[2]) for r in rows]
        assert rates[2] == pytest.approx(0.0, abs=1e-9)  # ATM
        assert rates[0] > 0 and rates[-1] > 0
        assert all(r[6] == "true" for r in rows)


class TestMcAndCompare:
    ARGS = ["--paths", "20000", "--steps", "40", "--seed", "7",
            "--kmin", "-0.1", "--kmax", "0.1", "--kcount", "5"]

    def test_mc_csv(self, model_file, capsys):
        code, out, _ = run_cli(["mc", "--model", model_file, "--product", "european"] + self.ARGS, capsys)
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["strike", "log_moneyness", "price", "std_error", "implied_vol", "iv_low", "iv_high"]
        assert len(rows) == 5
        ivs = [float(r[4]) for r in rows]
        assert all(0.2 < iv < 0.5 for iv in ivs)

    def test_seed_changes_mc_only(self, model_file, capsys):
        args = ["compare", "--model", model_file, "--product", "european",
                "--paths", "5000", "--steps", "20",
                "--kmin", "-0.1", "--kmax", "0.1", "--kcount", "3"]
        _, out1, _ = run_cli(args + ["--seed", "1"], capsys)
        _, out2, _ = run_cli(args + ["--seed", "2"], capsys)
        _, rows1 = parse_csv(out1)
        _, rows2 = parse_csv(out2)
        for r1, r2 in zip(rows1, rows2):
            assert r1[:4] == r2[:4]  # strike, k, expansion, rate identical
            assert r1[4] != r2[4]  # MC columns move with the seed

    def test_compare_z_scores_finite(self, model_file, capsys):
        code, out, _ = run_cli(["compare", "--model", model_file, "--product", "european"] + self.ARGS, capsys)
        assert code == 0
        header, rows = parse_csv(out)
        assert header[-2:] == ["diff", "z_score"]
        zs = [float(r[-1]) for r in rows]
        assert all(math.isfinite(z) for z in zs)

    def test_deterministic_output(self, model_file, capsys):
        args = ["mc", "--model", model_file] + self.ARGS
        _, out1, _ = run_cli(args, capsys)
        _, out2, _ = run_cli(args, capsys)
        assert out1 == out2

    def test_threads_do_not_change_output(self, model_file, capsys):
        args = ["mc", "--model", model_file] + self.ARGS
        _, out1, _ = run_cli(args + ["--threads", "1"], capsys)
        _, out2, _ = run_cli(args + ["--threads", "3"], capsys)
        assert out1 == out2

    def test_threads_env_default(self, model_file, capsys, monkeypatch):
        monkeypatch.setenv("LSV_SHORTMAT_THREADS", "2")
        _, _, err = run_cli(["mc", "--model", model_file] + self.ARGS, capsys)
        echoed = json.loads(err.strip().split("\n")[0])
        assert echoed["effective_config"]["threads"] == 2

    def test_quantile_grid_when_unspecified(self, model_file, capsys):
        code, out, _ = run_cli(["mc", "--model", model_file, "--paths", "5000",
                                "--steps", "20", "--seed", "3", "--kcount", "7"], capsys)
        assert code == 0
        _, rows = parse_csv(out)
        assert len(rows) == 7
