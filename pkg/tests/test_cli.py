import json

import numpy as np
import pytest

import planarmatch.cli as cli
from planarmatch.core import BipartiteInstance, read_witness, write_instance
from planarmatch.solvers import MaxSizeResult, max_size_planar

FIG1 = [(2, 1), (3, 4), (5, 5), (6, 7), (7, 9)]


@pytest.fixture
def fig1(tmp_path):
    p = tmp_path / "fig1.csv"
    write_instance(BipartiteInstance.from_edges(9, FIG1), p)
    return p


def test_solve_max_size(fig1, tmp_path, capsys):
    w = tmp_path / "wit.csv"
    assert cli.main(["solve", "max-size", "--input", str(fig1), "--L", "2", "--witness", str(w)]) == 0
    assert capsys.readouterr().out.strip() == "5"
    assert len(read_witness(w, 9)) == 5


def test_solve_min_weight_zero(tmp_path, capsys):
    p = tmp_path / "z.csv"
    write_instance(BipartiteInstance(4, weights=np.zeros((4, 4))), p)
    assert cli.main(["solve", "min-weight", "--input", str(p), "--tau", "3"]) == 0
    assert float(capsys.readouterr().out) == 0.0


def test_solve_invalid_tau(tmp_path, capsys):
    p = tmp_path / "z.csv"
    write_instance(BipartiteInstance(4, weights=np.zeros((4, 4))), p)
    assert cli.main(["solve", "min-weight", "--input", str(p), "--tau", "5"]) == 2
    assert "InvalidTau" in capsys.readouterr().err


def test_solve_wrong_kind_and_missing_file(fig1, tmp_path):
    assert cli.main(["solve", "min-weight", "--input", str(fig1), "--tau", "1"]) == 2
    assert cli.main(["solve", "max-size", "--input", str(tmp_path / "nope.csv"), "--L", "1"]) == 2
    assert cli.main(["solve", "max-size", "--input", str(fig1)]) == 2


@pytest.mark.parametrize("n_max", [1, 3])
def test_oracle_check_clean(n_max, tmp_path, capsys):
    assert cli.main(["oracle-check", "--n-max", str(n_max), "--trials", "20", "--seed", "1",
                     "--out", str(tmp_path)]) == 0
    assert "0 mismatches" in capsys.readouterr().out


def test_oracle_check_catches_corrupted_solver(tmp_path, monkeypatch):
    def off_by_one(inst, L):
        res = max_size_planar(inst, L)
        return MaxSizeResult(res.size + (res.size >= 2), res.witness)

    monkeypatch.setattr(cli, "max_size_planar", off_by_one)
    out = tmp_path / "mm"
    assert cli.main(["oracle-check", "--n-max", "3", "--trials", "5", "--out", str(out)]) == 1
    lines = (out / "mismatches.csv").read_text().splitlines()
    assert lines[0] == "file,kind,param,expected,got" and len(lines) > 1
    assert (out / lines[1].split(",")[0]).exists()


def test_oracle_check_rejects_large_n():
    assert cli.main(["oracle-check", "--n-max", "9"]) == 2


def _config(tmp_path, **kw):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(kw))
    return p


def test_experiment_zero_trials(tmp_path):
    cfg = _config(tmp_path, experiment="appendix", master_seed=1, trials=0, n=10, p=0.1)
    assert cli.main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("bad", [
    {"experiment": "appendix", "trials": 5, "n": 10, "p": 0.1},
    {"experiment": "nope", "master_seed": 1},
    {"experiment": "appendix", "master_seed": 1, "trials": 5, "n": 10},
    {"experiment": "theorem31", "master_seed": 1, "trials": 5, "n_grid": [8],
     "weights": {"family": "power", "alpha": 1}},
    {"experiment": "theorem21", "master_seed": 1, "trials": 5, "n": 4, "L": 1,
     "states": {"kind": "matrix", "path": "missing.csv"}},
])
def test_experiment_invalid_configs(tmp_path, bad):
    cfg = _config(tmp_path, **bad)
    assert cli.main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_experiment_outputs_and_manifest(tmp_path):
    cfg = _config(tmp_path, experiment="appendix", master_seed=5, trials=50, n=30, p=0.01)
    out = tmp_path / "o"
    assert cli.main(["experiment", "--config", str(cfg), "--out", str(out), "--threads", "2"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["master_seed"] == 5 and man["config"]["n"] == 30
    assert set(man["files"]) == {"results", "trials", "bounds_csv", "bounds_jsonl"}
    assert man["deterministic_violations"] == 0
    assert (out / "bounds.csv").read_text().startswith("bound_id,lhs,rhs,holds,skipped,params_json")
    rows = (out / "trials.csv").read_text().splitlines()
    assert rows[0] == "point,trial_index,seed,U" and len(rows) == 51


def test_experiment_matrix_model_relative_path(tmp_path):
    (tmp_path / "p.csv").write_text("\n".join(",".join(["0.5"] * 6) for _ in range(6)) + "\n")
    cfg = _config(tmp_path, experiment="theorem21", master_seed=1, trials=100, n=6, L=1,
                  states={"kind": "matrix", "path": "p.csv"})
    assert cli.main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0


def test_threads_env_fallback(monkeypatch):
    from planarmatch.experiments import default_threads
    monkeypatch.setenv("PLANARMATCH_THREADS", "3")
    assert default_threads() == 3
