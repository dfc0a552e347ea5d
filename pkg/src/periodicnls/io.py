"""Strict JSON graph-spec files, run reports, and CSV writers."""
from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from .graphs import CompactGraph, Edge, GraphError
from .periodic import PeriodicSpec, SpecError

TOOL_VERSION = "0.1.0"


class SpecFileError(ValueError):
    """A spec file failed validation; the message names every offence."""


_TOP_KEYS = {"name", "vertices", "edges", "donors", "receivers", "sigma"}
_EDGE_KEYS = {"id", "from", "to", "length"}
_SIGMA_KEYS = {"donor", "receiver"}


def parse_spec_dict(doc: Any, source: str = "<memory>") -> PeriodicSpec:
    problems: List[str] = []
    if not isinstance(doc, dict):
        raise SpecFileError(f"{source}: top level must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        problems.append(f"unknown top-level keys: {', '.join(sorted(unknown))}")
    missing = _TOP_KEYS - set(doc)
    if missing:
        problems.append(f"missing keys: {', '.join(sorted(missing))}")
    if problems:
        raise SpecFileError(f"{source}: " + "; ".join(problems))

    name = doc["name"]
    if not isinstance(name, str) or not name:
        problems.append("name must be a non-empty string")
    vertices = doc["vertices"]
    if not isinstance(vertices, list) or not all(isinstance(v, str) for v in vertices):
        problems.append("vertices must be a list of strings")
        vertices = []
    if len(set(vertices)) != len(vertices):
        problems.append("vertices contains duplicates")

    edges: List[Edge] = []
    if not isinstance(doc["edges"], list):
        problems.append("edges must be a list")
    else:
        for k, raw in enumerate(doc["edges"]):
            where = f"edges[{k}]"
            if not isinstance(raw, dict):
                problems.append(f"{where}: must be an object")
                continue
            bad = set(raw) - _EDGE_KEYS
            if bad:
                problems.append(f"{where}: unknown keys {sorted(bad)}")
            if set(raw) >= _EDGE_KEYS:
                if not isinstance(raw["length"], (int, float)) or raw["length"] <= 0:
                    problems.append(f"{where}: length must be a positive number")
                else:
                    edges.append(
                        Edge(str(raw["id"]), str(raw["from"]), str(raw["to"]), float(raw["length"]))
                    )
            else:
                problems.append(f"{where}: missing keys {sorted(_EDGE_KEYS - set(raw))}")

    donors = doc["donors"]
    receivers = doc["receivers"]
    for label, val in (("donors", donors), ("receivers", receivers)):
        if not isinstance(val, list) or not all(isinstance(v, str) for v in val):
            problems.append(f"{label} must be a list of strings")

    sigma_pairs: List[tuple] = []
    if not isinstance(doc["sigma"], list):
        problems.append("sigma must be a list")
    else:
        for k, raw in enumerate(doc["sigma"]):
            where = f"sigma[{k}]"
            if not isinstance(raw, dict) or set(raw) != _SIGMA_KEYS:
                problems.append(f"{where}: must be an object with keys donor, receiver")
                continue
            sigma_pairs.append((str(raw["donor"]), str(raw["receiver"])))

    if problems:
        raise SpecFileError(f"{source}: " + "; ".join(problems))
    try:
        cell = CompactGraph(vertices, edges)
        return PeriodicSpec(
            cell=cell,
            donors=frozenset(donors),
            receivers=frozenset(receivers),
            sigma=tuple(sorted(sigma_pairs)),
            name=name,
        )
    except (GraphError, SpecError) as exc:
        raise SpecFileError(f"{source}: {exc}") from exc


def parse_spec(path: str | Path) -> PeriodicSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecFileError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_spec_dict(doc, source=str(path))


def spec_to_dict(s: PeriodicSpec) -> Dict[str, Any]:
    return {
        "name": s.name,
        "vertices": list(s.cell.vertex_list),
        "edges": [
            {"id": e.id, "from": e.v, "to": e.w, "length": e.length}
            for e in s.cell.edges.values()
        ],
        "donors": sorted(s.donors),
        "receivers": sorted(s.receivers),
        "sigma": [{"donor": d, "receiver": r} for d, r in sorted(s.sigma)],
    }


def write_spec(s: PeriodicSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(s), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Reports and CSV
# ---------------------------------------------------------------------------


def _fmt(x: Any) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def input_digest(path: Optional[str | Path]) -> Optional[str]:
    if path is None or str(path).startswith("builtin:"):
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunReport:
    command: str
    input_path: Optional[str]
    options: Dict[str, Any]
    results: Dict[str, Any]
    started: float
    finished: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tool_version": TOOL_VERSION,
            "command": self.command,
            "input": self.input_path,
            "input_sha256": input_digest(self.input_path),
            "options": self.options,
            "results": self.results,
            "elapsed_seconds": round(self.finished - self.started, 3),
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
