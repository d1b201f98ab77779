"""Text file formats: instances, embeddings, rounding results, diagnostics."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .graph import build_graph
from .planted import PlantedInstance, PlantedParams
from .rounding import DiagnosticsReport, PartitionResult
from .sdp import EmbeddingSolution

INSTANCE_FORMAT = "planted-kway-instance/1"
RESULT_FORMAT = "planted-kway-result/1"
EMBEDDING_MAGIC = "# planted-kway-embedding/1"


class FormatError(ValueError):
    """A file could not be parsed; the message names the offending line or key."""


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


# -- instances -------------------------------------------------------------

def instance_to_dict(inst: PlantedInstance) -> dict:
    return {
        "format": INSTANCE_FORMAT,
        "mode": inst.mode,
        "n": inst.n,
        "edges": inst.graph.edges.tolist(),
        "parts": [p.tolist() for p in inst.parts],
        "t_sets": None if inst.t_sets is None else [t.tolist() for t in inst.t_sets],
        "params": inst.params.to_dict(),
        "achieved_lambda": list(inst.achieved_lambda),
        "cross_edges": [list(e) for e in inst.cross_edges],
        "adversary_edges": [list(e) for e in inst.adversary_edges],
    }


def instance_from_dict(data: dict) -> PlantedInstance:
    try:
        if data.get("format") != INSTANCE_FORMAT:
            raise FormatError(f"unsupported instance format {data.get('format')!r}")
        G = build_graph(int(data["n"]), data["edges"])
        t_sets = data.get("t_sets")
        return PlantedInstance(
            graph=G,
            parts=tuple(np.array(p, dtype=np.int64) for p in data["parts"]),
            params=PlantedParams.from_dict(data["params"]),
            mode=data["mode"],
            achieved_lambda=tuple(float(x) for x in data["achieved_lambda"]),
            t_sets=None if t_sets is None else tuple(np.array(t, dtype=np.int64) for t in t_sets),
            cross_edges=tuple(tuple(e) for e in data.get("cross_edges", [])),
            adversary_edges=tuple(tuple(e) for e in data.get("adversary_edges", [])),
        )
    except KeyError as exc:
        raise FormatError(f"instance file is missing key {exc}") from exc


def write_instance(inst: PlantedInstance, path) -> None:
    Path(path).write_text(_dump(instance_to_dict(inst)), encoding="utf-8")


def read_instance(path) -> PlantedInstance:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return instance_from_dict(data)


# -- embeddings ------------------------------------------------------------

def format_embedding(sol: EmbeddingSolution) -> str:
    """Header lines, then one row of p coordinates per vertex at 17 significant digits.

    Vertex-mode files append eta as a final column.
    """
    header = {
        "n": sol.n,
        "p": sol.rank,
        "k": sol.k,
        "mode": sol.mode,
        "objective": sol.objective,
        "feasible": sol.feasible,
        "residuals": sol.residuals,
    }
    lines = [EMBEDDING_MAGIC, "# " + json.dumps(header, sort_keys=True)]
    for i in range(sol.n):
        row = [format(float(x), ".17g") for x in sol.vectors[i]]
        if sol.eta is not None:
            row.append(format(float(sol.eta[i]), ".17g"))
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def parse_embedding(text: str) -> EmbeddingSolution:
    lines = text.splitlines()
    if not lines or lines[0].strip() != EMBEDDING_MAGIC:
        raise FormatError("line 1: missing embedding header")
    if len(lines) < 2 or not lines[1].startswith("# "):
        raise FormatError("line 2: missing metadata header")
    try:
        meta = json.loads(lines[1][2:])
        n, p, mode = int(meta["n"]), int(meta["p"]), meta["mode"]
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise FormatError(f"line 2: bad metadata header ({exc})") from exc
    width = p + (1 if mode == "vertex" else 0)
    body = lines[2:]
    if len(body) != n:
        raise FormatError(f"expected {n} coordinate rows after the header, found {len(body)}")
    rows = np.empty((n, width))
    for idx, line in enumerate(body):
        fields = line.split()
        if len(fields) != width:
            raise FormatError(f"line {idx + 3}: expected {width} numbers, found {len(fields)}")
        try:
            rows[idx] = [float(x) for x in fields]
        except ValueError as exc:
            raise FormatError(f"line {idx + 3}: {exc}") from exc
    eta = rows[:, p].copy() if mode == "vertex" else None
    return EmbeddingSolution(
        vectors=rows[:, :p].copy(), mode=mode, k=int(meta.get("k", 0)),
        objective=float(meta.get("objective", float("nan"))),
        residuals=dict(meta.get("residuals", {})), eta=eta,
        trace={"feasible": bool(meta.get("feasible", False)), "source": "file"},
    )


def write_embedding(sol: EmbeddingSolution, path) -> None:
    Path(path).write_text(format_embedding(sol), encoding="utf-8")


def read_embedding(path) -> EmbeddingSolution:
    return parse_embedding(Path(path).read_text(encoding="utf-8"))


# -- rounding results and diagnostics -------------------------------------

def result_to_dict(result: PartitionResult) -> dict:
    return {
        "format": RESULT_FORMAT,
        "mode": result.mode,
        "n": result.n,
        "k": result.k,
        "completed": result.completed,
        "partial": result.partial,
        "diagnostic": result.diagnostic,
        "sets": [
            {"members": s.tolist(), "size": int(len(s)), "expansion": _finite(e), "provenance": p}
            for s, e, p in zip(result.sets, result.expansions, result.provenance)
        ],
    }


def _finite(x: float):
    return x if np.isfinite(x) else None


def result_from_dict(data: dict) -> PartitionResult:
    if data.get("format") != RESULT_FORMAT:
        raise FormatError(f"unsupported result format {data.get('format')!r}")
    sets = data["sets"]
    return PartitionResult(
        sets=tuple(np.array(s["members"], dtype=np.int64) for s in sets),
        mode=data["mode"], n=int(data["n"]),
        expansions=tuple(float("inf") if s["expansion"] is None else float(s["expansion"]) for s in sets),
        provenance=tuple(s["provenance"] for s in sets),
        completed=bool(data["completed"]), partial=bool(data["partial"]),
        diagnostic=data.get("diagnostic", ""), k=data.get("k"),
    )


def write_result(result: PartitionResult, path, extra: dict | None = None) -> None:
    payload = result_to_dict(result)
    if extra:
        payload.update(extra)
    Path(path).write_text(_dump(payload), encoding="utf-8")


def read_result(path) -> PartitionResult:
    return result_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def format_kv(report: dict) -> str:
    """Flat ``key = value`` lines in sorted key order."""
    out = []
    for key in sorted(report):
        value = report[key]
        if isinstance(value, float):
            value = format(value, ".10g")
        elif isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"


def diagnostics_table(report: DiagnosticsReport) -> str:
    """One row per planted part, comma separated."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["part", "deviation", "centroid_norm", "cluster_size", "cluster_overlap", "cluster_diameter"])
    for t in range(len(report.deviations)):
        w.writerow([t, f"{report.deviations[t]:.10g}", f"{report.centroid_norms[t]:.10g}",
                    report.cluster_sizes[t], report.cluster_overlap[t], f"{report.cluster_diameters[t]:.10g}"])
    return buf.getvalue()
