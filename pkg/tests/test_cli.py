import json
import csv
import numpy as np
import pytest

from hkgeo.cli import main
from hkgeo.measures import DiscreteMeasure, measure_to_json


@pytest.fixture
def measure_files(tmp_path):
    rng = np.random.default_rng(0)
    a = DiscreteMeasure([[0.0, 0.0]], [1.0])
    b = DiscreteMeasure([[1.0, 0.0]], [2.0])
    pa, pb = tmp_path / "a.json", tmp_path / "b.json"
    pa.write_text(json.dumps(measure_to_json(a)))
    pb.write_text(json.dumps(measure_to_json(b)))
    return str(pa), str(pb)


class TestDist:
    def test_ghk_single_atoms_closed_form(self, measure_files, tmp_path, capsys):
        pa, pb = measure_files
        out = tmp_path / "r.json"
        code = main(["dist", "--metric", "ghk", pa, pb, "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        expected = 1.0 + 2.0 - 2 * np.sqrt(2.0) * np.exp(-0.5)
        assert rep["value"] == pytest.approx(expected, rel=1e-7)
        assert rep["gap"] <= 1e-9 * (1 + rep["value"])
        assert "config" in rep

    def test_w2_unequal_masses_inf(self, measure_files, tmp_path):
        pa, pb = measure_files
        out = tmp_path / "r.json"
        code = main(["dist", "--metric", "w2", pa, pb, "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["value"] == "inf"

    def test_he_identical_zero(self, measure_files, tmp_path):
        pa, _ = measure_files
        out = tmp_path / "r.json"
        assert main(["dist", "--metric", "he", pa, pa, "--out", str(out)]) == 0
        assert json.loads(out.read_text())["value"] == 0.0

    def test_malformed_json_exits_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"dim": 2, "points": [[0, 0]]}')
        good = tmp_path / "good.json"
        good.write_text(json.dumps(measure_to_json(DiscreteMeasure([[0.0, 0.0]], [1.0]))))
        code = main(["dist", str(bad), str(good)])
        assert code == 1
        assert "weights" in capsys.readouterr().err

    def test_nonconverged_solver_exits_two(self, measure_files, tmp_path, monkeypatch):
        import hkgeo.cli as cli_mod

        real = cli_mod.solve_let

        def lying_solver(problem, tol):
            sol = real(problem, tol)
            sol.converged = False
            return sol

        monkeypatch.setattr(cli_mod, "solve_let", lying_solver)
        pa, pb = measure_files
        out = tmp_path / "r.json"
        code = main(["dist", "--metric", "ghk", pa, pb, "--out", str(out)])
        assert code == 2
        rep = json.loads(out.read_text())
        assert "value" in rep and "gap" in rep  # value still emitted

    def test_cost_matrix_csv(self, measure_files, tmp_path):
        pa, pb = measure_files
        cost = tmp_path / "cost.csv"
        cost.write_text("0.25\n")
        out = tmp_path / "r.json"
        code = main(["dist", pa, pb, "--cost", str(cost), "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        expected = 3.0 - 2 * np.sqrt(2.0) * np.exp(-0.125)
        assert rep["values"]["primal"] == pytest.approx(expected, rel=1e-7)
        assert len(rep["sigma0"]) == 1 and len(rep["phi1"]) == 1


class TestSimulateSample:
    def test_besq_deterministic_csv(self, tmp_path):
        out1, out2 = tmp_path / "p1.csv", tmp_path / "p2.csv"
        argv = ["simulate", "besq", "--theta", "1.0", "--x0", "1.0", "--T", "0.2",
                "--dt", "1e-2", "--paths", "3", "--seed", "5", "--out"]
        assert main(argv + [str(out1)]) == 0
        assert main(argv + [str(out2)]) == 0
        assert out1.read_text() == out2.read_text()
        rows = list(csv.reader(out1.open()))
        assert rows[0] == ["t", "x0", "x1", "x2"]
        assert len(rows) == 22

    def test_sample_df_probabilities(self, tmp_path):
        out = tmp_path / "df.jsonl"
        code = main(["sample", "df", "--beta", "1.0", "--n", "10", "--seed", "1",
                     "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 11  # provenance header + 10 records
        header = json.loads(lines[0])
        assert header["provenance"]["law"] == "df"
        for line in lines[1:]:
            rec = json.loads(line)
            assert sum(rec["weights"]) == pytest.approx(1.0, abs=1e-12)

    def test_sample_mlp_window(self, tmp_path):
        out = tmp_path / "mlp.jsonl"
        code = main(["sample", "mlp", "--theta", "2.0", "--window", "1,4", "--n", "20",
                     "--seed", "1", "--out", str(out)])
        assert code == 0
        for line in out.read_text().strip().split("\n")[1:]:
            rec = json.loads(line)
            assert 1.0 <= sum(rec["weights"]) <= 4.0

    def test_seed_required(self, tmp_path, capsys):
        with pytest.raises(SystemExit):
            main(["sample", "df", "--n", "5", "--out", str(tmp_path / "x.jsonl")])


class TestValidate:
    def test_duality_suite_passes(self, tmp_path):
        out = tmp_path / "v.json"
        code = main(["validate", "duality", "--n", "3", "--seed", "7", "--tol", "1e-8",
                     "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        assert rep["passed"] and len(rep["checks"]) == 6

    def test_gradient_suite(self, tmp_path):
        out = tmp_path / "g.json"
        assert main(["validate", "gradient", "--n", "10", "--seed", "3", "--out", str(out)]) == 0

    def test_limits_suite(self, tmp_path):
        out = tmp_path / "l.json"
        assert main(["validate", "limits", "--n", "8", "--seed", "2", "--out", str(out)]) == 0

    def test_unknown_suite_rejected(self):
        with pytest.raises(SystemExit):
            main(["validate", "nonsense", "--seed", "1"])


class TestMollifyPotentials:
    def test_mollify_roundtrip(self, tmp_path, measure_files):
        pa, _ = measure_files
        out = tmp_path / "grid.json"
        code = main(["mollify", pa, "--eps", "0.4", "--spacing", "0.1", "--out", str(out)])
        assert code == 0
        rec = json.loads(out.read_text())
        assert sum(rec["weights"]) == pytest.approx(1.0 + 0.4, rel=1e-9)

    def test_potentials_outputs(self, tmp_path):
        mu = DiscreteMeasure([[0.3]], [0.8])
        pm = tmp_path / "m.json"
        pm.write_text(json.dumps(measure_to_json(mu)))
        prefix = str(tmp_path / "pot")
        code = main(["potentials", str(pm), "--radius", "1.0", "--spacing", "0.02",
                     "--eps", "0.4", "--out", prefix])
        assert code == 0
        rep = json.loads((tmp_path / "pot.report.json").read_text())
        assert rep["duality_value"] == pytest.approx(rep["solver_value"], rel=0.02)
        assert rep["psi_lipschitz"] <= rep["R"] + 1e-9
        assert (tmp_path / "pot.phi.csv").exists()
        assert (tmp_path / "pot.psi.csv").exists()


class TestConfigFile:
    def test_config_overridden_by_flag(self, tmp_path, measure_files):
        pa, pb = measure_files
        cfg = tmp_path / "run.cfg"
        cfg.write_text("metric = hk\ntol = 1e-7\n# comment line\n")
        out = tmp_path / "r.json"
        code = main(["dist", pa, pb, "--config", str(cfg), "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        assert rep["metric"] == "hk"
        assert rep["config"]["tol"] == 1e-7
        # explicit flag beats the config value
        code = main(["dist", pa, pb, "--config", str(cfg), "--metric", "he", "--out", str(out)])
        assert json.loads(out.read_text())["metric"] == "he"

    def test_malformed_config(self, tmp_path, measure_files, capsys):
        pa, pb = measure_files
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("metric hk\n")
        assert main(["dist", pa, pb, "--config", str(cfg)]) == 1
