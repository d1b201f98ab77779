"""Command-line entry point: generate | solve | round | verify | oracle | experiment.

Exit codes: 0 success, 2 validation failure, 3 solver non-convergence,
4 rounding partial, 5 oracle budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as fio
from .experiment import ExperimentConfig, run_experiment, write_outputs
from .graph import EDGE, MODES, GraphError, parse_edge_list
from .oracle import OracleBudgetError, brute_kway_opt, sandwich_check
from .planted import AdversaryError, ExpanderGenerationError, PlantedParams, generate, validate_instance
from .rounding import RoundingError, cluster_diagnostics, complete_partition, round_greedy
from .sdp import (InfeasibleRelaxationError, SolverConfig, build_relaxation, check_feasibility,
                  integral_embedding, max_residual, solve)

OK, INVALID, NOT_CONVERGED, PARTIAL, BUDGET = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message: str, code: int = INVALID):
        super().__init__(message)
        self.code = code


def _emit(text: str) -> None:
    sys.stdout.write(text)


def load_graph(path, k: int | None, mode: str | None):
    """Return (graph, k, mode, instance-or-None) from a JSON instance or an edge-list file."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            inst = fio.instance_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        if k is not None and k != inst.k:
            raise CliError(f"--k {k} disagrees with the instance's k={inst.k}")
        return inst.graph, inst.k, mode or inst.mode, inst
    if k is None:
        raise CliError(f"{path} is an edge list; pass --k")
    return parse_edge_list(text), k, mode or EDGE, None


def _flatten(report: dict) -> dict:
    out = {}
    for key, value in report.items():
        if key == "parts":
            for entry in value:
                t = entry["part"]
                for name, v in entry.items():
                    if name != "part":
                        out[f"part{t}_{name}"] = v
        else:
            out[key] = value
    return out


def cmd_generate(args) -> int:
    if args.params:
        data = json.loads(Path(args.params).read_text(encoding="utf-8"))
    else:
        missing = [f for f in ("n", "k", "eps", "lambda_min", "d") if getattr(args, f) is None]
        if missing:
            raise CliError("missing parameters: " + ", ".join("--" + m.replace("_", "-") for m in missing))
        data = {"n": args.n, "k": args.k, "eps": args.eps, "lambda_min": args.lambda_min, "d": args.d}
    for key in ("r", "cross_edges", "portal_wiring"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if args.adversary:
        data["adversary"] = json.loads(args.adversary)
    if args.seed is not None:
        data["seed"] = args.seed
    params = PlantedParams.from_dict(data)
    params.validate()
    inst = generate(params, args.mode or EDGE)
    report = validate_instance(inst)
    if args.out:
        fio.write_instance(inst, args.out)
    _emit(fio.format_kv(_flatten(report)))
    if not report["premise_holds"]:
        _emit(f"WARN premise eps*k*r^3/lambda_min = {report['premise_ratio']:.6g} exceeds 1/800; "
              "structural guarantees do not apply\n")
    return OK


def _solver_config(args) -> SolverConfig:
    kw = {"seed": args.seed or 0}
    if args.tol is not None:
        kw["tol_feas"] = args.tol
    if args.rank is not None:
        kw["rank"] = args.rank
    if args.max_outer is not None:
        kw["max_outer"] = args.max_outer
    return SolverConfig(**kw)


def cmd_solve(args) -> int:
    G, k, mode, inst = load_graph(args.instance, args.k, args.mode)
    reference = integral_embedding(inst, mode) if inst is not None and inst.mode == mode else None
    sol = solve(build_relaxation(G, k, mode), _solver_config(args), reference=reference)
    out = args.out or "embedding.txt"
    fio.write_embedding(sol, out)
    summary = {"objective": sol.objective, "feasible": sol.feasible,
               "max_residual": max_residual(sol.residuals),
               "outer_iterations": sol.trace["outer_iterations"], "rank": sol.rank}
    summary.update({f"residual_{k}": v for k, v in sol.residuals.items() if isinstance(v, float)})
    if reference is not None:
        summary["integral_objective"] = reference.objective
    _emit(fio.format_kv(summary))
    if not sol.feasible:
        _emit(f"WARN solver did not reach tolerance; partial embedding written to {out}\n")
        return NOT_CONVERGED
    return OK


def _set_table(result) -> str:
    lines = ["set size expansion center radius"]
    for t, (s, e, p) in enumerate(zip(result.sets, result.expansions, result.provenance)):
        center = p.get("center", "-")
        radius = format(p["radius"], ".6g") if "radius" in p else "-"
        lines.append(f"{t} {len(s)} {e:.10g} {center} {radius}")
    return "\n".join(lines) + "\n"


def cmd_round(args) -> int:
    G, k, mode, inst = load_graph(args.instance, args.k, args.mode)
    sol = fio.read_embedding(args.embedding)
    if sol.n != G.n:
        raise CliError(f"embedding has {sol.n} rows but the graph has {G.n} vertices")
    result = round_greedy(sol, G, k, mode)
    if args.complete and not result.partial:
        result = complete_partition(result, G, mode)
    _emit(_set_table(result))
    if inst is not None:
        diag = cluster_diagnostics(sol, inst)
        _emit(fio.format_kv(diag.flat()))
    fio.write_result(result, args.out or "result.json")
    if result.partial:
        _emit(f"PARTIAL found {len(result.sets)} of {k} sets: {result.diagnostic}\n")
        return PARTIAL
    return OK


def cmd_verify(args) -> int:
    G, k, mode, inst = load_graph(args.instance, args.k, args.mode)
    ok = True
    report = {}
    if inst is not None:
        inst_report = validate_instance(inst)
        report.update(_flatten(inst_report))
        ok &= inst_report["expansion_ok"] and inst_report["lambda_ok"] and inst_report["degree_ok"]
        ok &= inst_report.get("portals_confined", True)
    if args.embedding:
        sol = fio.read_embedding(args.embedding)
        tol = args.tol if args.tol is not None else SolverConfig().tol_feas
        feas = check_feasibility(sol, build_relaxation(G, k, mode), seed=args.seed or 0)
        report.update({f"feasibility_{key}": v for key, v in feas.items()})
        worst = max_residual(feas)
        report["feasibility_ok"] = worst <= tol
        ok &= worst <= tol
        if inst is not None:
            diag = cluster_diagnostics(sol, inst)
            report.update({f"diag_{key}": v for key, v in diag.flat().items()})
    report["passed"] = bool(ok)
    _emit(fio.format_kv(report))
    return OK if ok else INVALID


def cmd_oracle(args) -> int:
    G, k, mode, _ = load_graph(args.instance, args.k, args.mode)
    oracle = brute_kway_opt(G, k, mode)
    report = {"opt": float(oracle.opt), "opt_exact": f"{oracle.opt.numerator}/{oracle.opt.denominator}",
              "partition": [list(p) for p in oracle.partition], "candidates": oracle.candidates}
    passed = True
    if args.embedding and args.result:
        sol = fio.read_embedding(args.embedding)
        result = fio.read_result(args.result)
        tol = args.tol if args.tol is not None else SolverConfig().tol_obj
        check = sandwich_check(G.n, k, oracle.opt, sol.objective, result.max_expansion, tol)
        report.update({f"sandwich_{key}": v for key, v in check.items() if key != "opt"})
        passed = check["passed"]
    _emit(fio.format_kv(report))
    return OK if passed else INVALID


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.mode:
        cfg.mode = args.mode
    if args.workers is not None:
        cfg.workers = args.workers
    rows, timings = run_experiment(cfg)
    paths = write_outputs(rows, timings, args.out or "experiment-out")
    failed = sum(1 for r in rows if r["error"])
    _emit(f"rows = {len(rows)}\nfailed_rows = {failed}\n")
    for name, path in sorted(paths.items()):
        _emit(f"{name} = {path}\n")
    return OK


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed")
    p.add_argument("--out", default=None, help="output path")
    p.add_argument("--mode", choices=MODES, default=None, help="edge or vertex expansion")
    p.add_argument("--tol", type=float, default=None, help="feasibility (or objective, for oracle) tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planted-kway", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a planted instance")
    _common(p)
    p.add_argument("--params", help="JSON file of instance parameters")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--lambda-min", dest="lambda_min", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--cross-edges", dest="cross_edges", type=int)
    p.add_argument("--portal-wiring", dest="portal_wiring", choices=("matching", "dense"))
    p.add_argument("--adversary", help='JSON policy, e.g. {"kind": "clique_within_part", "part": 1, "size": 5}')
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve the relaxation, write an embedding")
    _common(p)
    p.add_argument("instance")
    p.add_argument("--k", type=int)
    p.add_argument("--rank", type=int)
    p.add_argument("--max-outer", dest="max_outer", type=int)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("round", help="greedy ball rounding of an embedding")
    _common(p)
    p.add_argument("instance")
    p.add_argument("embedding")
    p.add_argument("--k", type=int)
    p.add_argument("--complete", action="store_true", help="complete the sets to a partition")
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("verify", help="check instance invariants and embedding feasibility")
    _common(p)
    p.add_argument("instance")
    p.add_argument("--embedding")
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="exact balanced k-way expansion by enumeration")
    _common(p)
    p.add_argument("instance")
    p.add_argument("--k", type=int)
    p.add_argument("--embedding")
    p.add_argument("--result")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("experiment", help="run a parameter sweep from a JSON config")
    _common(p)
    p.add_argument("config")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OracleBudgetError as exc:
        print(f"error: {exc}; the oracle handles n <= 16 for k = 2 and n <= 12 for k >= 3",
              file=sys.stderr)
        return BUDGET
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, GraphError, AdversaryError, ExpanderGenerationError,
            InfeasibleRelaxationError, RoundingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID


if __name__ == "__main__":
    sys.exit(main())
