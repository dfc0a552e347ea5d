"""Finite metric multigraphs.

Vertices are opaque string labels; edges carry a positive length and may be
parallel or loops.  A loop contributes 2 to the degree of its vertex.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple


class GraphError(ValueError):
    """Raised for malformed graph inputs."""


@dataclass(frozen=True)
class Edge:
    id: str
    v: str
    w: str
    length: float

    def is_loop(self) -> bool:
        return self.v == self.w

    def other(self, vertex: str) -> str:
        if vertex == self.v:
            return self.w
        if vertex == self.w:
            return self.v
        raise GraphError(f"vertex {vertex!r} is not an endpoint of edge {self.id!r}")


class CompactGraph:
    """A finite metric multigraph with a deterministic vertex/edge order."""

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge]):
        self.vertex_list: Tuple[str, ...] = tuple(dict.fromkeys(vertices))
        self._vertex_set = set(self.vertex_list)
        self.edges: Dict[str, Edge] = {}
        for e in edges:
            if e.id in self.edges:
                raise GraphError(f"duplicate edge id {e.id!r}")
            if e.v not in self._vertex_set or e.w not in self._vertex_set:
                raise GraphError(f"edge {e.id!r} references unknown vertex")
            if not (e.length > 0.0) or not (e.length < float("inf")):
                raise GraphError(f"edge {e.id!r} must have positive finite length")
            self.edges[e.id] = e
        self._incident: Dict[str, List[Edge]] = {v: [] for v in self.vertex_list}
        for e in self.edges.values():
            self._incident[e.v].append(e)
            if not e.is_loop():
                self._incident[e.w].append(e)

    @property
    def vertices(self) -> Tuple[str, ...]:
        return self.vertex_list

    def has_vertex(self, v: str) -> bool:
        return v in self._vertex_set

    def incident(self, v: str) -> List[Edge]:
        return list(self._incident[v])

    def degree(self, v: str) -> int:
        return sum(2 if e.is_loop() else 1 for e in self._incident[v])

    def total_length(self) -> float:
        return sum(e.length for e in self.edges.values())

    def components(self) -> List[Tuple[frozenset, frozenset]]:
        """Connected components as (vertex set, edge-id set), in vertex order."""
        seen: set = set()
        out: List[Tuple[frozenset, frozenset]] = []
        for start in self.vertex_list:
            if start in seen:
                continue
            comp_v = {start}
            comp_e: set = set()
            stack = [start]
            seen.add(start)
            while stack:
                v = stack.pop()
                for e in self._incident[v]:
                    comp_e.add(e.id)
                    u = e.other(v)
                    if u not in seen:
                        seen.add(u)
                        comp_v.add(u)
                        stack.append(u)
            out.append((frozenset(comp_v), frozenset(comp_e)))
        return out

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def without_edge(self, edge_id: str) -> "CompactGraph":
        return CompactGraph(
            self.vertex_list,
            [e for e in self.edges.values() if e.id != edge_id],
        )

    def __repr__(self) -> str:  # pragma: no cover
        return f"CompactGraph(|V|={len(self.vertex_list)}, |E|={len(self.edges)})"


def _sorted_close(a: List[float], b: List[float], tol: float) -> bool:
    if len(a) != len(b):
        return False
    return all(abs(x - y) <= tol for x, y in zip(sorted(a), sorted(b)))


def _pair_key(a: str, b: str) -> Tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def _pair_lengths(g: CompactGraph) -> Dict[Tuple[str, str], List[float]]:
    buckets: Dict[Tuple[str, str], List[float]] = {}
    for e in g.edges.values():
        buckets.setdefault(_pair_key(e.v, e.w), []).append(e.length)
    return buckets


def _signature(g: CompactGraph, v: str) -> Tuple[int, List[float], List[float]]:
    loops = sorted(e.length for e in g.incident(v) if e.is_loop())
    other = sorted(e.length for e in g.incident(v) if not e.is_loop())
    return (g.degree(v), loops, other)


def graphs_equal(
    g1: CompactGraph, g2: CompactGraph, tol: float = 1e-9
) -> Optional[Tuple[Dict[str, str], Dict[str, str]]]:
    """Length-preserving isomorphism between two metric multigraphs.

    Returns a (vertex map, edge map) witness, or None when the graphs differ.
    Exact backtracking; intended for small graphs (a few dozen edges).
    """
    if len(g1.vertex_list) != len(g2.vertex_list) or len(g1.edges) != len(g2.edges):
        return None
    if sorted(g1.degree(v) for v in g1.vertex_list) != sorted(
        g2.degree(v) for v in g2.vertex_list
    ):
        return None
    if not _sorted_close(
        [e.length for e in g1.edges.values()],
        [e.length for e in g2.edges.values()],
        tol,
    ):
        return None

    pairs1 = _pair_lengths(g1)
    pairs2 = _pair_lengths(g2)
    sig2 = {w: _signature(g2, w) for w in g2.vertex_list}

    # Visit g1 vertices in an order that keeps each new vertex adjacent to the
    # already-mapped prefix where possible (cuts the branching factor).
    order: List[str] = []
    placed = set()
    for comp_v, _ in g1.components():
        start = min(comp_v)
        stack = [start]
        placed.add(start)
        while stack:
            v = stack.pop()
            order.append(v)
            for e in g1.incident(v):
                u = e.other(v)
                if u not in placed:
                    placed.add(u)
                    stack.append(u)

    mapping: Dict[str, str] = {}
    used: set = set()

    def compatible(v: str, w: str) -> bool:
        s1 = _signature(g1, v)
        s2 = sig2[w]
        if s1[0] != s2[0]:
            return False
        if not _sorted_close(s1[1], s2[1], tol) or not _sorted_close(s1[2], s2[2], tol):
            return False
        for e in g1.incident(v):
            u = e.other(v)
            if u in mapping:
                b1 = pairs1.get(_pair_key(v, u), [])
                b2 = pairs2.get(_pair_key(w, mapping[u]), [])
                if not _sorted_close(b1, b2, tol):
                    return False
        return True

    def extend(k: int) -> bool:
        if k == len(order):
            return True
        v = order[k]
        for w in g2.vertex_list:
            if w in used:
                continue
            if compatible(v, w):
                mapping[v] = w
                used.add(w)
                if extend(k + 1):
                    return True
                del mapping[v]
                used.discard(w)
        return False

    if not extend(0):
        return None

    # Pair off edges bucket by bucket, matching lengths in sorted order.
    edge_map: Dict[str, str] = {}
    taken: set = set()
    for e in sorted(g1.edges.values(), key=lambda e: (e.length, e.id)):
        key = _pair_key(mapping[e.v], mapping[e.w])
        candidates = [
            f
            for f in g2.edges.values()
            if _pair_key(f.v, f.w) == key
            and f.id not in taken
            and abs(f.length - e.length) <= tol
        ]
        if not candidates:
            return None
        chosen = min(candidates, key=lambda f: (f.length, f.id))
        edge_map[e.id] = chosen.id
        taken.add(chosen.id)
    return mapping, edge_map
