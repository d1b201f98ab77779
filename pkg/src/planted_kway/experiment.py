"""Parameter sweeps over planted instances, producing a record table and plots."""
from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import EDGE
from .oracle import OracleBudgetError, brute_kway_opt, sandwich_check
from .pipeline import match_planted, run_pipeline
from .planted import AdversaryPolicy, PlantedParams, generate, integral_objective, premise_ratio
from .rounding import cluster_diagnostics
from .sdp import SolverConfig, integral_embedding, max_residual
from .svg import scatter_svg

SWEEP_AXES = ("eps", "k", "lambda_min", "d", "adversary")

# column name -> description; the table's schema line is generated from this
COLUMNS = {
    "cell": "sweep cell index (axes in order eps, k, lambda_min, d, adversary)",
    "replicate": "replicate index within the cell",
    "seed": "instance/solver seed derived from (config seed, cell, replicate)",
    "mode": "edge or vertex",
    "n": "vertex count",
    "k": "number of planted parts",
    "d": "base degree",
    "r": "degree ratio bound",
    "eps": "model epsilon",
    "lambda_min": "required block spectral gap",
    "adversary": "monotone adversary policy kind",
    "min_lambda": "smallest measured pre-adversary block spectral gap",
    "premise_ratio": "eps*k*r^3/lambda_min",
    "premise_holds": "premise_ratio <= 1/800",
    "cross_edges": "inter-part edges placed",
    "adversary_edges": "intra-part edges added by the adversary",
    "sdp_objective": "relaxation objective of the solver output",
    "integral_objective": "objective of the planted indicator embedding",
    "max_residual": "largest constraint residual of the solver output",
    "feasible": "solver output within feasibility tolerance",
    "sets_found": "number of sets returned by greedy rounding",
    "sizes": "set sizes, semicolon separated",
    "max_expansion": "largest expansion among the rounded sets",
    "min_overlap": "smallest |W_t and S_match|/|S_match| over rounded sets",
    "distinct_majority": "every set majority-overlaps a distinct planted part",
    "exact_recovery": "rounded sets equal the planted parts",
    "completed_max_expansion": "largest expansion after completing to a partition",
    "diag_a": "centroid deviation check",
    "diag_b": "centroid norm check",
    "diag_c": "centroid inner product check",
    "diag_d": "centroid distance check",
    "diag_e": "cluster overlap check",
    "diag_f": "cluster separation check",
    "diag_passed": "all six structural checks pass",
    "opt": "exact balanced k-way expansion (empty if n is beyond the oracle budget)",
    "ratio_to_k_opt": "max_expansion / (k*OPT), empty when OPT is 0 or unknown",
    "error": "failure message for this row, empty on success",
}


@dataclass
class ExperimentConfig:
    base: dict
    mode: str = EDGE
    sweep: dict = field(default_factory=dict)
    replicates: int = 1
    seed: int = 0
    solver: dict = field(default_factory=dict)
    oracle: bool = False
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        for axis, values in cfg.sweep.items():
            if axis not in SWEEP_AXES:
                raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
            if not values:
                raise ValueError(f"sweep axis {axis!r} is empty")
        if cfg.replicates < 1:
            raise ValueError("replicates must be at least 1")
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def cells(self) -> list[dict]:
        axes = [a for a in SWEEP_AXES if a in self.sweep]
        combos = itertools.product(*(self.sweep[a] for a in axes))
        return [dict(zip(axes, combo)) for combo in combos]


def cell_seed(seed: int, cell: int, replicate: int) -> int:
    return int(np.random.SeedSequence([seed, cell, replicate]).generate_state(1, dtype=np.uint32)[0])


def _params_for(cfg: ExperimentConfig, overrides: dict, seed: int) -> PlantedParams:
    data = dict(cfg.base)
    data.update({k: v for k, v in overrides.items() if k != "adversary"})
    adv = overrides.get("adversary", data.get("adversary"))
    data["adversary"] = AdversaryPolicy.from_dict(adv or {})
    data["seed"] = seed
    return PlantedParams(**data)


def run_cell(task: tuple) -> tuple[dict, dict]:
    """One (cell, replicate) row plus its timings; failures are recorded in the row."""
    cfg, cell, replicate, overrides = task
    seed = cell_seed(cfg.seed, cell, replicate)
    row = {c: "" for c in COLUMNS}
    row.update(cell=cell, replicate=replicate, seed=seed, mode=cfg.mode)
    timings = {"cell": cell, "replicate": replicate}
    try:
        params = _params_for(cfg, overrides, seed)
        row.update(n=params.n, k=params.k, d=params.d, r=params.r, eps=params.eps,
                   lambda_min=params.lambda_min, adversary=params.adversary.kind)
        t0 = time.perf_counter()
        inst = generate(params, cfg.mode)
        timings["generate"] = time.perf_counter() - t0
        row.update(
            min_lambda=min(inst.achieved_lambda), premise_ratio=premise_ratio(params),
            premise_holds=premise_ratio(params) <= 1 / 800, cross_edges=len(inst.cross_edges),
            adversary_edges=len(inst.adversary_edges), integral_objective=integral_objective(inst),
        )
        solver_cfg = SolverConfig(**{**cfg.solver, "seed": seed})
        t0 = time.perf_counter()
        run = run_pipeline(inst.graph, inst.k, cfg.mode, solver_cfg,
                           reference=integral_embedding(inst))
        timings["pipeline"] = time.perf_counter() - t0
        sol, res = run.solution, run.result
        match = match_planted(res, inst)
        diag = cluster_diagnostics(sol, inst)
        row.update(
            sdp_objective=sol.objective, max_residual=max_residual(sol.residuals),
            feasible=sol.feasible, sets_found=len(res.sets),
            sizes=";".join(str(s) for s in res.sizes),
            max_expansion=res.max_expansion if res.sets else "",
            min_overlap=min(match["overlap_fractions"]) if res.sets else "",
            distinct_majority=match["distinct"] and match["majority"] and not res.partial,
            exact_recovery=match["exact"],
            completed_max_expansion=run.completed.max_expansion if run.completed else "",
            diag_passed=diag.passed,
        )
        for key, ok in diag.checks.items():
            row["diag_" + key[0]] = ok
        if cfg.oracle:
            try:
                oracle = brute_kway_opt(inst.graph, inst.k, cfg.mode)
                pipeline_max = (run.completed or res).max_expansion
                report = sandwich_check(inst.n, inst.k, oracle.opt, sol.objective, pipeline_max)
                row["opt"] = report["opt"]
                row["ratio_to_k_opt"] = "" if report["ratio"] is None else report["ratio"]
            except OracleBudgetError:
                pass
        if res.partial:
            row["error"] = res.diagnostic
    except Exception as exc:  # recorded per row; the sweep carries on
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row, timings


def _cell_text(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def format_table(rows: list[dict]) -> str:
    buf = io.StringIO()
    schema = "; ".join(f"{name}: {desc}" for name, desc in COLUMNS.items())
    buf.write(f"# schema: {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(COLUMNS))
    for row in rows:
        w.writerow([_cell_text(row[c]) for c in COLUMNS])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig) -> tuple[list[dict], list[dict]]:
    tasks = [
        (cfg, cell, rep, overrides)
        for cell, overrides in enumerate(cfg.cells())
        for rep in range(cfg.replicates)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run_cell, tasks))
    else:
        results = [run_cell(t) for t in tasks]
    return [r for r, _ in results], [t for _, t in results]


def _floats(rows, key):
    out = []
    for row in rows:
        v = row.get(key)
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(float(v))
        else:
            out.append(float("nan"))
    return out


def plots(rows: list[dict]) -> dict[str, str]:
    ok = [r for r in rows if not r["error"] and r["diag_passed"] != ""]
    by_ratio: dict[float, list[bool]] = {}
    for r in ok:
        by_ratio.setdefault(float(r["premise_ratio"]), []).append(bool(r["diag_passed"]))
    pass_rate = [(x, sum(v) / len(v)) for x, v in sorted(by_ratio.items())]
    eps = _floats(ok, "eps")
    return {
        "pass_rate_vs_premise.svg": scatter_svg(
            {"diagnostics pass rate": pass_rate}, "Structural checks vs premise ratio",
            "eps*k*r^3/lambda", "pass rate"),
        "max_expansion_vs_eps.svg": scatter_svg(
            {"max set expansion": list(zip(eps, _floats(ok, "max_expansion")))},
            "Rounded set expansion vs eps", "eps", "max expansion", connect=False),
        "overlap_vs_eps.svg": scatter_svg(
            {"min overlap": list(zip(eps, _floats(ok, "min_overlap")))},
            "Overlap with planted parts vs eps", "eps", "|W and S| / |S|", connect=False),
    }


def write_outputs(rows: list[dict], timings: list[dict], out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"table": out / "records.csv", "timings": out / "timings.json"}
    paths["table"].write_text(format_table(rows), encoding="utf-8")
    paths["timings"].write_text(json.dumps(timings, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    for name, svg in plots(rows).items():
        paths[name] = out / name
        paths[name].write_text(svg, encoding="utf-8")
    return paths
