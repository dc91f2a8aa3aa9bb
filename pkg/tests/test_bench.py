import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from aipp_minmax.bench import BenchConfig, PcRow, QvmRow, TrrRow, markdown_table, run_bench
from aipp_minmax.runner import Method, SolveOutcome

TINY = """\
time_limit = 600
methods = ["raipp_s", "aipp_s", "qp_aipp_s"]

[[rows]]
family = "qvm"
n = 12
l = 4
k = 3
M = 10.0
m = 1.0
density = 0.3
seed = 5

[[rows]]
family = "pc"
N = 2
K = 2
"""


def test_config_parsing(tmp_path):
    path = tmp_path / "bench.toml"
    path.write_text(TINY)
    config = BenchConfig.from_toml(path)
    assert config.methods == [Method.RAIPP_S, Method.AIPP_S, Method.QP_AIPP_S]
    assert isinstance(config.rows[0], QvmRow) and isinstance(config.rows[1], PcRow)
    assert config.rows[0].label() == "M=1e+01 m=1e+00"
    assert config.rows[1].label() == "N=2 K=2"
    assert config.relative


def test_config_validation():
    with pytest.raises(ValidationError):
        BenchConfig.model_validate({"methods": ["raipp_s"], "rows": [{"family": "qvm", "M": 1.0, "m": 10.0}]})
    with pytest.raises(ValidationError):
        BenchConfig.model_validate({"methods": [], "rows": [{"family": "pc", "N": 1, "K": 1}]})
    with pytest.raises(ValidationError):
        TrrRow.model_validate({"alpha": 10.0})
    with pytest.raises(ValidationError):
        BenchConfig.model_validate({"methods": ["newton"], "rows": [{"family": "pc", "N": 1, "K": 1}]})


def test_trr_row_labels():
    assert TrrRow(path="data/heart.txt").label() == "heart"
    assert TrrRow(name="sonar", path="x").label() == "sonar"
    assert TrrRow(synthetic={"n_samples": 50, "n_features": 7}).label() == "synthetic-50x7"


def test_run_bench_writes_tables(tmp_path):
    path = tmp_path / "bench.toml"
    path.write_text(TINY)
    out = tmp_path / "out"
    tables = run_bench(BenchConfig.from_toml(path), out, threads=2)
    assert set(tables) == {"qvm", "pc"}
    qvm_rows = tables["qvm"]
    assert [r["method"] for r in qvm_rows] == ["raipp_s", "aipp_s", "qp_aipp_s"]
    assert qvm_rows[0]["termination"] == "Converged"
    assert qvm_rows[1]["termination"] == "Converged"
    assert qvm_rows[2]["termination"] == "Skipped"
    for family in ("qvm", "pc"):
        assert (out / f"{family}.csv").read_text().startswith("label,family,dims,method")
        assert (out / f"{family}.md").read_text().startswith(f"### {family.upper()}")
    log = [json.loads(line) for line in (out / "runs.jsonl").read_text().splitlines()]
    assert len(log) == 4
    assert {e["label"] for e in log} == {"M=1e+01 m=1e+00", "N=2 K=2"}


def _outcome(termination, acg, runtime):
    row = {"termination": termination, "acg_iterations": acg, "runtime_s": runtime, "p_hat_xi": "1.5e+00"}
    return SolveOutcome(row=row, exit_code=0)


def test_markdown_marks_best_cells():
    row = QvmRow(M=10.0, m=1.0)
    cells = {
        Method.RAIPP_S: _outcome("Converged", 20, "2.00"),
        Method.AIPP_S: _outcome("Converged", 50, "1.00"),
        Method.QP_AIPP_S: _outcome("TimeLimit", "", "4000.00*"),
    }
    table = markdown_table("qvm", [(0, row, cells)], [Method.RAIPP_S, Method.AIPP_S, Method.QP_AIPP_S])
    lines = table.splitlines()
    assert lines[2] == (
        "| instance | p_hat_xi(x_bar) | iters R-AIPP-S | iters AIPP-S | iters QP-AIPP-S "
        "| runtime R-AIPP-S | runtime AIPP-S | runtime QP-AIPP-S |"
    )
    assert lines[4] == "| M=1e+01 m=1e+00 | 1.5e+00 | **20** | 50 | - | 2.00 | **1.00** | 4000.00* |"


def test_reruns_are_deterministic(tmp_path):
    config = BenchConfig.model_validate(
        {
            "time_limit": 600,
            "methods": ["raipp_s"],
            "rows": [{"family": "qvm", "n": 12, "l": 4, "k": 3, "M": 10.0, "m": 1.0, "density": 0.3, "seed": 5}],
        }
    )
    first = run_bench(config, tmp_path / "a", threads=1)
    second = run_bench(config, tmp_path / "b", threads=1)
    assert first["qvm"][0]["acg_iterations"] == second["qvm"][0]["acg_iterations"]
    assert first["qvm"][0]["p_hat_xi"] == second["qvm"][0]["p_hat_xi"]


@pytest.mark.slow
def test_desk_scale_config_converges(tmp_path):
    config = BenchConfig.from_toml(Path(__file__).parents[1] / "resources" / "bench" / "desk_scale.toml")
    config = config.model_copy(update={"methods": [Method.RAIPP_S]})
    tables = run_bench(config, tmp_path, threads=1)
    assert set(tables) == {"qvm", "trr", "pc"}
    for rows in tables.values():
        assert all(r["termination"] == "Converged" for r in rows), rows
