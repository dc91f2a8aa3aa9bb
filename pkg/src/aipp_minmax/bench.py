"""
Benchmark tables: every (instance row, method) cell of a TOML config is solved, then one CSV and
one markdown table per family are written together with a JSON-lines run log.

Config layout::

    time_limit = 4000
    methods = ["raipp_s", "aipp_s"]

    [[rows]]
    family = "qvm"
    n = 50
    M = 10.0
    m = 1.0
"""

from __future__ import annotations

import csv
import json
import logging
import tomllib
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Annotated, Any, Literal

from pydantic import BaseModel, Field, model_validator

from .config import DEFAULT_TIME_LIMIT, get_settings
from .problems import Instance, pc_generate, qvm_constraint, qvm_generate, synthetic_libsvm, trr_load
from .runner import CSV_FIELDS, EXIT_OK, Method, SolveOutcome, SolveRequest, run_method
from .solvers.qp_aipp import LinearConstraint
from .tracing import init_tracing, traced

logger = logging.getLogger(__name__)

RUN_LOG = "runs.jsonl"


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


class QvmRow(BaseModel):
    family: Literal["qvm"] = "qvm"
    n: int = Field(default=200, ge=1)
    l: int = Field(default=10, ge=1)  # noqa: E741
    k: int = Field(default=5, ge=1)
    M: float = Field(gt=0.0, description="Upper curvature target")
    m: float = Field(gt=0.0, description="Lower curvature target")
    density: float = Field(default=0.05, gt=0.0, le=1.0)
    seed: int = 1
    rho_x: float = Field(default=1e-2, gt=0.0)
    rho_y: float = Field(default=1e-1, gt=0.0)
    constraint_rows: int = Field(default=0, ge=0, description="Random equality rows for qp_aipp_s")
    eta: float = Field(default=1e-3, gt=0.0)

    @model_validator(mode="after")
    def _targets_ordered(self) -> QvmRow:
        if self.m > self.M:
            raise ValueError(f"m ({self.m}) must not exceed M ({self.M})")
        return self

    def label(self) -> str:
        return f"M={self.M:.0e} m={self.m:.0e}"

    def build(self, workdir: Path) -> Instance:
        return qvm_generate(self.n, self.l, self.k, self.M, self.m, self.density, self.seed)


class SyntheticData(BaseModel):
    n_samples: int = Field(default=100, ge=1)
    n_features: int = Field(default=20, ge=1)
    density: float = Field(default=0.3, gt=0.0, le=1.0)
    seed: int = 1


class TrrRow(BaseModel):
    family: Literal["trr"] = "trr"
    name: str = ""
    path: str | None = Field(default=None, description="LIBSVM file supplied by the user")
    synthetic: SyntheticData | None = None
    alpha: float = Field(default=10.0, gt=0.0)
    rho_x: float = Field(default=1e-5, gt=0.0)
    rho_y: float = Field(default=1e-3, gt=0.0)

    @model_validator(mode="after")
    def _one_source(self) -> TrrRow:
        if (self.path is None) == (self.synthetic is None):
            raise ValueError("a TRR row needs exactly one of 'path' or 'synthetic'")
        return self

    @property
    def seed(self) -> int | None:
        return self.synthetic.seed if self.synthetic is not None else None

    def label(self) -> str:
        if self.name:
            return self.name
        if self.path is not None:
            return Path(self.path).stem
        assert self.synthetic is not None
        return f"synthetic-{self.synthetic.n_samples}x{self.synthetic.n_features}"

    def build(self, workdir: Path) -> Instance:
        if self.path is not None:
            return trr_load(self.path, self.alpha)
        assert self.synthetic is not None
        s = self.synthetic
        target = workdir / f"{self.label()}-seed{s.seed}.libsvm"
        synthetic_libsvm(target, s.n_samples, s.n_features, s.density, s.seed)
        return trr_load(target, self.alpha, n_features=s.n_features)


class PcRow(BaseModel):
    family: Literal["pc"] = "pc"
    N: int = Field(ge=1)
    K: int = Field(ge=1)
    seed: int = 1
    rho_x: float = Field(default=1e-1, gt=0.0)
    rho_y: float = Field(default=1e-1, gt=0.0)

    def label(self) -> str:
        return f"N={self.N} K={self.K}"

    def build(self, workdir: Path) -> Instance:
        return pc_generate(self.N, self.K, self.seed)


BenchRow = Annotated[QvmRow | TrrRow | PcRow, Field(discriminator="family")]


class BenchConfig(BaseModel):
    time_limit: float = Field(default=DEFAULT_TIME_LIMIT, gt=0.0)
    methods: list[Method] = Field(min_length=1)
    relative: bool = Field(default=True, description="Scale rho_x by ||grad p_xi(x0)|| + 1")
    rows: list[BenchRow] = Field(min_length=1)

    @classmethod
    def from_toml(cls, path: str | Path) -> BenchConfig:
        with Path(path).open("rb") as fh:
            return cls.model_validate(tomllib.load(fh))


# ---------------------------------------------------------------------------
# Scheduling
# ---------------------------------------------------------------------------


def _constraint_for(row: BenchRow, instance: Instance) -> LinearConstraint | None:
    if isinstance(row, QvmRow) and row.constraint_rows > 0:
        return qvm_constraint(instance, row.constraint_rows, row.seed)  # type: ignore[arg-type]
    return None


@traced("bench_cell")
def run_cell(
    row: BenchRow,
    instance: Instance,
    method: Method,
    config: BenchConfig,
    constraint: LinearConstraint | None,
) -> SolveOutcome:
    request = SolveRequest(
        method=method,
        rho_x=row.rho_x,
        rho_y=row.rho_y,
        eta=getattr(row, "eta", None) if method is Method.QP_AIPP_S else None,
        time_limit=config.time_limit,
        relative=config.relative,
    )
    return run_method(instance, request, constraint, seed=row.seed)


def _skipped(row: BenchRow, instance: Instance, method: Method, reason: str) -> SolveOutcome:
    out = {f: "" for f in CSV_FIELDS}
    out.update(
        family=instance.family,
        dims="x".join(str(d) for d in instance.header()["dims"]),
        method=method.value,
        termination="Skipped",
        error=reason,
    )
    return SolveOutcome(row=out, exit_code=EXIT_OK)


def run_bench(config: BenchConfig, out_dir: str | Path, threads: int | None = None) -> dict[str, list[dict[str, Any]]]:
    """Solve every cell and write the tables; returns the flat rows per family."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = threads or get_settings().bench_threads
    init_tracing()

    # instances are generated serially so every RNG stream is consumed in a fixed order
    built = []
    for idx, row in enumerate(config.rows):
        instance = row.build(out_dir)
        built.append((idx, row, instance, _constraint_for(row, instance)))

    results: dict[tuple[int, int], SolveOutcome] = {}
    log_path = out_dir / RUN_LOG
    with log_path.open("w") as log, ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {}
        for idx, row, instance, constraint in built:
            for m_idx, method in enumerate(config.methods):
                if method is Method.QP_AIPP_S and constraint is None:
                    results[(idx, m_idx)] = _skipped(row, instance, method, "row defines no linear constraint")
                    continue
                futures[pool.submit(run_cell, row, instance, method, config, constraint)] = (idx, m_idx)
        for fut in as_completed(futures):
            key = futures[fut]
            outcome = fut.result()
            results[key] = outcome
            idx, m_idx = key
            entry = {
                "row": idx,
                "label": config.rows[idx].label(),
                **outcome.row,
                "report": outcome.report.model_dump(mode="json") if outcome.report else None,
            }
            log.write(json.dumps(entry) + "\n")
            log.flush()
            logger.info(
                "bench %s / %s: %s in %s s",
                entry["label"],
                outcome.row["method"],
                outcome.row["termination"],
                outcome.row["runtime_s"],
            )

    by_family: dict[str, list[tuple[int, BenchRow, dict[Method, SolveOutcome]]]] = defaultdict(list)
    for idx, row, _, _ in built:
        cells = {method: results[(idx, m_idx)] for m_idx, method in enumerate(config.methods)}
        by_family[row.family].append((idx, row, cells))

    flat: dict[str, list[dict[str, Any]]] = {}
    for family, entries in by_family.items():
        rows_out = []
        for _, row, cells in entries:
            for method in config.methods:
                rows_out.append({"label": row.label(), **cells[method].row})
        write_csv(out_dir / f"{family}.csv", rows_out)
        (out_dir / f"{family}.md").write_text(markdown_table(family, entries, config.methods))
        flat[family] = rows_out
    return flat


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def write_csv(path: Path, rows: list[dict[str, Any]]) -> None:
    fields = ["label", *CSV_FIELDS]
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


def _best(values: dict[Method, float]) -> float | None:
    return min(values.values()) if values else None


def markdown_table(
    family: str,
    entries: list[tuple[int, BenchRow, dict[Method, SolveOutcome]]],
    methods: list[Method],
) -> str:
    """Iteration counts (total ACG iterations) and runtimes, per-row best in bold."""
    labels = [m.label for m in methods]
    header = ["instance", "p_hat_xi(x_bar)", *(f"iters {lb}" for lb in labels), *(f"runtime {lb}" for lb in labels)]
    lines = [
        f"### {family.upper()}",
        "",
        "| " + " | ".join(header) + " |",
        "|" + "|".join(["---"] * len(header)) + "|",
    ]
    for _, row, cells in entries:
        converged = {m: c for m, c in cells.items() if c.converged}
        iters = {m: float(c.row["acg_iterations"]) for m, c in converged.items()}
        times = {m: float(c.row["runtime_s"]) for m, c in converged.items()}
        best_iter, best_time = _best(iters), _best(times)
        p_hat = next((c.row["p_hat_xi"] for c in converged.values() if c.row.get("p_hat_xi")), "-")
        iter_cells, time_cells = [], []
        for method in methods:
            cell = cells[method]
            if method in iters:
                it = str(int(iters[method]))
                iter_cells.append(f"**{it}**" if iters[method] == best_iter else it)
                rt = cell.row["runtime_s"]
                time_cells.append(f"**{rt}**" if times[method] == best_time else rt)
            else:
                iter_cells.append("-")
                time_cells.append(cell.row.get("runtime_s") or "-")
        lines.append("| " + " | ".join([row.label(), p_hat, *iter_cells, *time_cells]) + " |")
    return "\n".join(lines) + "\n"
