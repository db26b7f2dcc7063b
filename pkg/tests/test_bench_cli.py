import json

import numpy as np
import pytest

from dcovdag.bench import BenchmarkReport, ScenarioConfig, emit_report, run_benchmark
from dcovdag.cli import main
from dcovdag.errors import ConfigError


def scenario_dict(**overrides) -> dict:
    base = {
        "name": "unit",
        "mode": "pc",
        "generator": "linear",
        "scheme": "normal",
        "n": 40,
        "p": 5,
        "expected_degree": 1.5,
        "reps": 2,
        "seed": 11,
        "alpha": 0.05,
        "n_boot": 49,
        "arms": ["oracle", "oracle"],
    }
    base.update(overrides)
    return base


class TestScenarioConfig:
    def test_expected_degree_resolves_sparsity(self):
        sc = ScenarioConfig.from_dict(scenario_dict())
        assert sc.sparsity == pytest.approx(1.5 / 4)

    def test_sparsity_and_degree_conflict(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(scenario_dict(sparsity=0.3))

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(scenario_dict(bogus=1))

    def test_missing_key_rejected(self):
        raw = scenario_dict()
        del raw["n"]
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(raw)

    def test_mode_dependent_alpha_default(self):
        raw = scenario_dict(mode="fci", p=7, expected_degree=2.0)
        del raw["alpha"]
        del raw["reps"]
        sc = ScenarioConfig.from_dict(raw)
        assert sc.alpha == 0.01
        assert sc.reps == 20
        raw_pc = scenario_dict()
        del raw_pc["alpha"]
        assert ScenarioConfig.from_dict(raw_pc).alpha == 0.05

    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(scenario_dict(mode="maybe"))
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(scenario_dict(reps=0))
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(scenario_dict(arms=["oracle"]))
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(scenario_dict(scheme="weird"))


class TestRunBenchmark:
    def test_oracle_arms_have_zero_shd(self):
        report = run_benchmark(ScenarioConfig.from_dict(scenario_dict(reps=3)))
        assert all(r["shd_nonparametric"] == 0 for r in report.runs)
        assert all(r["shd_baseline"] == 0 for r in report.runs)
        assert report.mean_shd_nonparametric == 0.0

    def test_fci_oracle_arms_zero(self):
        raw = scenario_dict(mode="fci", p=7, expected_degree=2.0, reps=2)
        report = run_benchmark(ScenarioConfig.from_dict(raw))
        assert report.mean_shd_nonparametric == 0.0
        assert report.mean_shd_baseline == 0.0

    def test_repeat_run_identical(self):
        sc = ScenarioConfig.from_dict(scenario_dict(arms=["cdcov", "fisher_z"], n_boot=49))
        first = emit_report(run_benchmark(sc), "json")
        second = emit_report(run_benchmark(sc), "json")
        assert first == second

    def test_parallel_equals_sequential(self):
        sc = ScenarioConfig.from_dict(scenario_dict(reps=3))
        seq = emit_report(run_benchmark(sc, jobs=1), "json")
        par = emit_report(run_benchmark(sc, jobs=2), "json")
        assert seq == par

    def test_mean_is_arithmetic_mean(self):
        sc = ScenarioConfig.from_dict(scenario_dict(arms=["cdcov", "fisher_z"], n_boot=49, reps=3))
        report = run_benchmark(sc)
        assert report.mean_shd_nonparametric == pytest.approx(
            np.mean([r["shd_nonparametric"] for r in report.runs])
        )


class TestEmitReport:
    def build(self) -> BenchmarkReport:
        return run_benchmark(ScenarioConfig.from_dict(scenario_dict(reps=2)))

    def test_empty_runs_rejected(self):
        report = BenchmarkReport(scenario={}, runs=(), mean_shd_nonparametric=0.0,
                                 mean_shd_baseline=0.0)
        with pytest.raises(ValueError):
            emit_report(report)

    def test_markdown_rows(self):
        text = emit_report(self.build(), "markdown")
        lines = [ln for ln in text.splitlines() if ln.startswith("|")]
        assert len(lines) == 2 + 2 + 1  # header, separator, 2 runs, mean row
        assert lines[-1].startswith("| mean")

    def test_json_round_trip(self):
        report = self.build()
        payload = json.loads(emit_report(report, "json"))
        assert payload["schema_version"] == 1
        assert BenchmarkReport.from_payload(payload) == report
        assert json.loads(emit_report(BenchmarkReport.from_payload(payload), "json")) == payload


class TestCli:
    def test_simulate_then_learn(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        truth = tmp_path / "t.json"
        rc = main([
            "simulate", "--p", "5", "--n", "60", "--expected-degree", "1.5",
            "--scheme", "normal", "--seed", "3",
            "--data-out", str(data), "--truth-out", str(truth),
        ])
        assert rc == 0
        assert data.exists() and truth.exists()

        out = tmp_path / "g.dot"
        sidecar = tmp_path / "meta.json"
        rc = main([
            "learn", str(data), "--algo", "pc", "--alpha", "0.05",
            "--out-format", "dot", "--out", str(out), "--sidecar", str(sidecar),
        ])
        assert rc == 0
        assert out.read_text().startswith(("graph {", "digraph {"))
        meta = json.loads(sidecar.read_text())
        assert meta["algorithm"] == "pc"
        assert meta["tests_performed"] > 0

    def test_learn_nonfci_emits_metadata(self, tmp_path):
        data = tmp_path / "d.csv"
        main([
            "simulate", "--p", "4", "--n", "40", "--sparsity", "0.4",
            "--scheme", "normal", "--seed", "5", "--data-out", str(data),
        ])
        out = tmp_path / "g.json"
        sidecar = tmp_path / "meta.json"
        rc = main([
            "learn", str(data), "--algo", "nonfci", "--boot", "49",
            "--out-format", "json", "--out", str(out), "--sidecar", str(sidecar),
        ])
        assert rc == 0
        meta = json.loads(sidecar.read_text())
        assert meta["omitted_orientation_rules"] == ["R5", "R6", "R7"]
        from dcovdag.graphs import MixedGraph

        MixedGraph.from_json(out.read_text())  # parses back

    def test_bench_json_and_markdown(self, tmp_path, capsys):
        scen = tmp_path / "s.json"
        scen.write_text(json.dumps(scenario_dict()))
        out = tmp_path / "report.json"
        rc = main(["bench", str(scen), "--out", str(out)])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == 1
        rc = main(["report", str(out), "--format", "markdown"])
        assert rc == 0
        assert "| mean" in capsys.readouterr().out

    def test_bench_toml_scenario(self, tmp_path):
        scen = tmp_path / "s.toml"
        scen.write_text(
            'name = "unit"\nmode = "pc"\ngenerator = "linear"\nscheme = "normal"\n'
            "n = 40\np = 5\nexpected_degree = 1.5\nreps = 1\nseed = 11\n"
            'arms = ["oracle", "oracle"]\n'
        )
        rc = main(["bench", str(scen), "--out", str(tmp_path / "r.json")])
        assert rc == 0

    def test_config_error_exit_code(self, tmp_path, capsys):
        scen = tmp_path / "bad.json"
        scen.write_text(json.dumps(scenario_dict(mode="nope")))
        assert main(["bench", str(scen)]) == 2

    def test_data_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,zzz\n")
        assert main(["learn", str(bad), "--algo", "pc"]) == 3

    def test_missing_file_exit_code(self):
        assert main(["learn", "/nonexistent.csv", "--algo", "pc"]) == 3

    def test_categorical_survey_recovers_planted_edges(self, tmp_path, capsys):
        # coded categorical data with planted structure AGE->INC<-SEX,
        # INC->FIN->STAT; a few rows carry missing values
        rng = np.random.default_rng(12)
        n = 160
        age = rng.integers(1, 4, n)
        sex = rng.integers(0, 2, n)
        inc = np.clip(age + sex + rng.integers(-1, 2, n), 1, 3)
        pol = rng.integers(1, 4, n)
        fin = np.clip(inc + rng.integers(-1, 2, n), 1, 3)
        stat = (fin + rng.integers(0, 2, n) > 2).astype(int)
        area = rng.integers(1, 4, n)
        rows = np.column_stack([age, sex, inc, pol, area, fin, stat])
        path = tmp_path / "survey.csv"
        with open(path, "w") as fh:
            fh.write("AGE,SEX,INC,POL,AREA,FIN,STAT\n")
            for i, r in enumerate(rows):
                cells = [str(int(v)) for v in r]
                if i % 40 == 0:
                    cells[3] = "NA"
                fh.write(",".join(cells) + "\n")
        sidecar = tmp_path / "meta.json"
        rc = main([
            "learn", str(path), "--algo", "nonpc", "--alpha", "0.1",
            "--boot", "199", "--seed", "2", "--out-format", "dot",
            "--sidecar", str(sidecar),
        ])
        assert rc == 0
        dot = capsys.readouterr().out
        for edge in ('"AGE" -> "INC"', '"SEX" -> "INC"', '"INC" -> "FIN"'):
            assert edge in dot
        assert json.loads(sidecar.read_text())["dropped_rows"] == 4
