import csv
import json
import os

import numpy as np
import pytest

from micglm.cli import main

from conftest import DATA_DIR

DIABETES = os.path.join(DATA_DIR, "diabetes.csv")
FAST = ["--max-evals", "1500"]


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


@pytest.fixture()
def toy_csv(tmp_path):
    rng = np.random.default_rng(0)
    n = 80
    X = rng.standard_normal((n, 3))
    y = 2.0 * X[:, 0] + rng.standard_normal(n)
    path = tmp_path / "toy.csv"
    write_csv(path, ["u", "v", "w", "resp"],
              np.column_stack([X, y]).tolist())
    return str(path)


class TestFitCommand:
    def test_diabetes_json_report(self, tmp_path):
        out = str(tmp_path / "report.json")
        code = main(["fit", DIABETES, "--response", "progression",
                     "--family", "gaussian", "--seed", "5",
                     "--output", out])
        assert code == 0
        rep = json.loads(open(out).read())
        assert rep["schema_version"] == 1
        mic = rep["methods"]["mic"]
        assert set(mic["support"]) == {"sex", "bmi", "map", "hdl", "ltg"}
        assert mic["bic"] == pytest.approx(rep["methods"]["best_subset"]["bic"],
                                           abs=1e-6)
        assert mic["coefficients"]["bmi"]["beta"] == pytest.approx(
            0.325, abs=0.02)
        full = rep["methods"]["full"]["coefficients"]
        assert full["bmi"]["beta"] == pytest.approx(0.321, abs=0.02)

    def test_table_format(self, toy_csv, capsys):
        code = main(["fit", toy_csv, "--response", "resp",
                     "--family", "gaussian", "--seed", "1", "--format",
                     "table", *FAST])
        assert code == 0
        outp = capsys.readouterr().out
        assert "BIC" in outp and "u" in outp

    def test_missing_response_column_exit_2(self, toy_csv):
        assert main(["fit", toy_csv, "--response", "nope",
                     "--family", "gaussian", *FAST]) == 2

    def test_non_numeric_cell_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\nx,4\n")
        assert main(["fit", str(path), "--response", "b",
                     "--family", "gaussian", *FAST]) == 2
        err = capsys.readouterr().err
        assert "row 3" in err and "'a'" in err

    def test_ragged_row_exit_2(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("a,b\n1,2\n3\n")
        assert main(["fit", str(path), "--response", "b",
                     "--family", "gaussian", *FAST]) == 2

    def test_no_partial_output_on_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\nx,4\n")
        out = tmp_path / "never.json"
        assert main(["fit", str(path), "--response", "b",
                     "--family", "gaussian", "--output", str(out),
                     *FAST]) == 2
        assert not out.exists()

    def test_binomial_domain_failure_exit_3(self, toy_csv):
        # gaussian response is not 0/1
        assert main(["fit", toy_csv, "--response", "resp",
                     "--family", "binomial", *FAST]) == 3

    def test_interaction_column(self, tmp_path):
        rng = np.random.default_rng(1)
        n = 60
        X = rng.standard_normal((n, 2))
        y = X[:, 0] * X[:, 1] * 1.5 + rng.standard_normal(n)
        path = tmp_path / "inter.csv"
        write_csv(path, ["f", "g", "resp"],
                  np.column_stack([X, y]).tolist())
        out = str(tmp_path / "r.json")
        code = main(["fit", str(path), "--response", "resp",
                     "--family", "gaussian", "--interaction", "f:g",
                     "--seed", "2", "--output", out, *FAST])
        assert code == 0
        rep = json.loads(open(out).read())
        assert "f:g" in rep["columns"]
        assert "f:g" in rep["methods"]["mic"]["support"]

    def test_intercept_auto_by_family(self, tmp_path):
        rng = np.random.default_rng(2)
        n = 60
        X = rng.standard_normal((n, 2))
        y = rng.poisson(np.exp(0.5 * X[:, 0])).astype(float)
        path = tmp_path / "pois.csv"
        write_csv(path, ["a", "b", "y"], np.column_stack([X, y]).tolist())
        out = str(tmp_path / "r.json")
        assert main(["fit", str(path), "--response", "y",
                     "--family", "poisson", "--seed", "3",
                     "--output", out, *FAST]) == 0
        rep = json.loads(open(out).read())
        assert rep["intercept"] is True
        assert "intercept" in rep["columns"]

    def test_env_seed_fallback(self, toy_csv, tmp_path, monkeypatch):
        out1 = str(tmp_path / "a.json")
        out2 = str(tmp_path / "b.json")
        monkeypatch.setenv("MIC_SEED", "33")
        assert main(["fit", toy_csv, "--response", "resp",
                     "--family", "gaussian", "--output", out1, *FAST]) == 0
        rep = json.loads(open(out1).read())
        assert rep["seed"] == 33
        # explicit flag wins over the environment
        assert main(["fit", toy_csv, "--response", "resp",
                     "--family", "gaussian", "--seed", "44",
                     "--output", out2, *FAST]) == 0
        assert json.loads(open(out2).read())["seed"] == 44


class TestSimulateCommand:
    def test_report_fields_and_determinism(self, tmp_path):
        args = ["simulate", "--model", "A", "--n", "100", "--p", "6",
                "--reps", "3", "--seed", "9", *FAST]
        out1, out2 = str(tmp_path / "s1.json"), str(tmp_path / "s2.json")
        assert main(args + ["--output", out1]) == 0
        assert main(args + ["--output", out2]) == 0
        assert open(out1, "rb").read() == open(out2, "rb").read()
        rep = json.loads(open(out1).read())
        mm = rep["methods"]["MIC"]
        assert set(mm) == {"me_mean", "size_mean", "fp_mean", "fn_mean",
                           "c_rate"}
        assert rep["reps_completed"] == 3

    def test_thread_count_never_changes_bytes(self, tmp_path):
        base = ["simulate", "--model", "A", "--n", "100", "--p", "6",
                "--reps", "4", "--seed", "10", *FAST]
        out1, out2 = str(tmp_path / "t1.json"), str(tmp_path / "t2.json")
        assert main(base + ["--threads", "1", "--output", out1]) == 0
        assert main(base + ["--threads", "2", "--output", out2]) == 0
        assert open(out1, "rb").read() == open(out2, "rb").read()

    def test_single_rep_no_averaging_artifacts(self, tmp_path):
        out = str(tmp_path / "one.json")
        assert main(["simulate", "--model", "A", "--n", "100", "--p", "6",
                     "--reps", "1", "--seed", "11", "--output", out,
                     *FAST]) == 0
        rep = json.loads(open(out).read())
        mm = rep["methods"]["MIC"]
        assert mm["size_mean"] == int(mm["size_mean"])
        assert mm["c_rate"] in (0.0, 1.0)

    def test_invalid_design_exit_4(self):
        assert main(["simulate", "--model", "Z", "--n", "100"]) == 4
        assert main(["simulate", "--model", "A", "--n", "100",
                     "--reps", "0"]) == 4
        assert main(["simulate", "--model", "A", "--n", "100",
                     "--methods", "MIC,LASSO"]) == 4
        assert main(["simulate", "--n", "100"]) == 4  # model missing

    def test_design_from_config_file(self, tmp_path):
        cfg = tmp_path / "design.json"
        cfg.write_text(json.dumps({"model": "A", "n": 100, "p": 6,
                                   "reps": 2, "seed": 5}))
        out = str(tmp_path / "r.json")
        assert main(["simulate", "--config", str(cfg), "--output", out,
                     *FAST]) == 0
        rep = json.loads(open(out).read())
        assert rep["design"]["n"] == 100
        assert rep["design"]["seed"] == 5
        # explicit flags win over the file
        out2 = str(tmp_path / "r2.json")
        assert main(["simulate", "--config", str(cfg), "--n", "120",
                     "--output", out2, *FAST]) == 0
        assert json.loads(open(out2).read())["design"]["n"] == 120
        # unknown fields and unreadable files are invalid designs
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"model": "A", "n": 100, "bogus": 1}))
        assert main(["simulate", "--config", str(bad)]) == 4

    def test_table_format(self, capsys):
        assert main(["simulate", "--model", "A", "--n", "100", "--p", "6",
                     "--reps", "2", "--seed", "12", "--format", "table",
                     *FAST]) == 0
        outp = capsys.readouterr().out
        assert "Method" in outp and "MIC" in outp


class TestSweepACommand:
    def test_default_grid_has_21_points(self, toy_csv, tmp_path):
        out = str(tmp_path / "sweep.json")
        assert main(["sweep-a", toy_csv, "--response", "resp",
                     "--family", "gaussian", "--seed", "13",
                     "--output", out, *FAST]) == 0
        rep = json.loads(open(out).read())
        assert len(rep["grid"]) == 21
        assert len(rep["entries"]) == 21
        # a tidy trajectory: every coefficient appears in every entry
        for e in rep["entries"]:
            assert set(e["beta"]) == {"u", "v", "w"}
        assert 0.0 <= rep["stability"] <= 1.0

    def test_single_point_grid_matches_fit(self, toy_csv, tmp_path):
        out_fit = str(tmp_path / "fit.json")
        out_sweep = str(tmp_path / "sweep.json")
        common = [toy_csv, "--response", "resp", "--family", "gaussian",
                  "--seed", "14", *FAST]
        assert main(["fit", *common, "--methods", "mic",
                     "--output", out_fit]) == 0
        assert main(["sweep-a", *common, "--grid", "10",
                     "--output", out_sweep]) == 0
        fit = json.loads(open(out_fit).read())["methods"]["mic"]
        entry = json.loads(open(out_sweep).read())["entries"][0]
        for name in ("u", "v", "w"):
            assert entry["beta"][name] == pytest.approx(
                fit["coefficients"][name]["beta"], abs=1e-12)

    def test_numbers_roundtrip_12_significant_digits(self, toy_csv,
                                                     tmp_path):
        out = str(tmp_path / "sweep.json")
        assert main(["sweep-a", toy_csv, "--response", "resp",
                     "--family", "gaussian", "--seed", "15",
                     "--grid", "10,20", "--output", out, *FAST]) == 0
        rep = json.loads(open(out).read())
        text = open(out).read()
        rep2 = json.loads(text)
        for e1, e2 in zip(rep["entries"], rep2["entries"]):
            for name in e1["beta"]:
                a, b = e1["beta"][name], e2["beta"][name]
                assert a == b
                if a != 0.0:
                    assert abs(a - b) <= abs(a) * 1e-12


class TestBestSubsetCommand:
    def test_diabetes_support(self, tmp_path):
        out = str(tmp_path / "bss.json")
        assert main(["best-subset", DIABETES, "--response", "progression",
                     "--family", "gaussian", "--output", out]) == 0
        rep = json.loads(open(out).read())
        assert set(rep["best_support"]) == {"sex", "bmi", "map", "hdl",
                                            "ltg"}
        assert rep["models_evaluated"] == 2 ** 10
        sizes = [row["size"] for row in rep["per_size_best"]]
        assert sizes == sorted(sizes)

    def test_max_p_refusal_exit_3(self, tmp_path):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((40, 6))
        path = tmp_path / "wide.csv"
        write_csv(path, [f"c{j}" for j in range(6)] + ["y"],
                  np.column_stack([X, rng.standard_normal(40)]).tolist())
        assert main(["best-subset", str(path), "--response", "y",
                     "--family", "gaussian", "--max-p", "4"]) == 3
