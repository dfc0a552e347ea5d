"""Topological trichotomy for Z-periodic graphs.

A periodic graph either has a terminal edge (an edge ending in a degree-1
vertex), or removing any edge orbit leaves no compact component (the
assumption under which ground states exist up to the line's critical mass),
or it fails that assumption through a set of cut edges whose removal detaches
a compact piece.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np

from .graphs import CompactGraph, Edge
from .mesh import GraphFunction, Mesh
from .periodic import PeriodicSpec, SpecError, TruncatedGraph, build_truncation


@dataclass(frozen=True)
class TopologyClass:
    kind: str  # "h_per" | "terminal_edge" | "neither"
    witness_edge: Optional[str] = None
    cut_edges: FrozenSet[str] = frozenset()


class InconclusiveTopology(RuntimeError):
    """Raised when widening the analysis window never stabilised."""


def has_terminal_edge(s: PeriodicSpec) -> Optional[str]:
    """A cell edge incident to a degree-1 vertex of the glued graph, if any.

    Degrees of central-cell vertices in a 3-cell truncation are final, so the
    check is exact.
    """
    t = build_truncation(s, 1)
    for v in s.cell.vertex_list:
        name = t.vertex_of[(0, v)]
        if t.graph.degree(name) == 1:
            e = t.graph.incident(name)[0]
            return t.base_of_edge[e.id]
    return None


def _compact_component_after_removal(s: PeriodicSpec, base_edge: str, width: int) -> bool:
    """Does deleting the cell-0 copy of an edge orbit detach a compact piece?

    A component of the truncation that avoids every truncation-boundary
    vertex cannot grow when the window widens, hence is compact in the
    infinite graph.
    """
    t = build_truncation(s, width)
    g = t.graph.without_edge(t.edge_copy[(0, base_edge)])
    for comp_v, _ in g.components():
        if not (comp_v & t.boundary):
            return True
    return False


def cut_edge_set(s: PeriodicSpec, w_start: int = 3, w_cap: int = 48) -> FrozenSet[str]:
    """Cell edges whose orbit removal detaches a compact component.

    The window starts at w_start cells each side and doubles until two
    consecutive widths agree for every edge.
    """
    prev: Optional[Dict[str, bool]] = None
    width = w_start
    while width <= w_cap:
        cur = {
            eid: _compact_component_after_removal(s, eid, width)
            for eid in s.cell.edges
        }
        if prev is not None and cur == prev:
            return frozenset(e for e, bad in cur.items() if bad)
        prev = cur
        width *= 2
    raise InconclusiveTopology(
        f"edge-removal analysis did not stabilise up to window width {w_cap}"
    )


def satisfies_h_per(s: PeriodicSpec, w_start: int = 3, w_cap: int = 48) -> bool:
    return not cut_edge_set(s, w_start, w_cap)


def classify(s: PeriodicSpec, w_start: int = 3, w_cap: int = 48) -> TopologyClass:
    """Terminal edge takes precedence (it already rules out ground states)."""
    witness = has_terminal_edge(s)
    if witness is not None:
        return TopologyClass(kind="terminal_edge", witness_edge=witness)
    cuts = cut_edge_set(s, w_start, w_cap)
    if cuts:
        return TopologyClass(kind="neither", cut_edges=cuts)
    return TopologyClass(kind="h_per")


# ---------------------------------------------------------------------------
# Edge doubling
# ---------------------------------------------------------------------------


def double_cut_edges(
    u: GraphFunction, cut_edges: FrozenSet[str]
) -> Tuple[TruncatedGraph, GraphFunction]:
    """Replace every copy of the cut edges by two parallel edges of twice
    the length, transplanting u by the stretch u~(x) = u(x/2) on both copies.

    The stretched interpolant keeps the Dirichlet energy of each doubled edge
    and doubles its measure, which gives the exact comparison identities
    |u~'|_2^2 = |u'|_2^2 and |u~|_q^q = |u|_q^q + 3 * sum over cut copies.
    """
    owner = u.mesh.owner
    if not isinstance(owner, TruncatedGraph):
        raise SpecError("double_cut_edges expects a function on a truncation")
    old_mesh = u.mesh
    g = owner.graph

    edges: List[Edge] = []
    node_counts: Dict[str, int] = {}
    doubled: Dict[str, Tuple[str, str]] = {}
    for e in g.edges.values():
        base = owner.base_of_edge[e.id]
        n_old = old_mesh.edge_nodes[e.id].size
        if base in cut_edges:
            ia, ib = e.id + "~a", e.id + "~b"
            edges.append(Edge(ia, e.v, e.w, 2.0 * e.length))
            edges.append(Edge(ib, e.v, e.w, 2.0 * e.length))
            doubled[e.id] = (ia, ib)
            node_counts[ia] = 2 * n_old - 1
            node_counts[ib] = 2 * n_old - 1
        else:
            edges.append(e)
            node_counts[e.id] = n_old
    new_graph = CompactGraph(g.vertex_list, edges)

    cell_of_edge = {}
    base_of_edge = {}
    edge_copy = {}
    for (i, base), eid in owner.edge_copy.items():
        if eid in doubled:
            for suffix, new_eid in zip(("~a", "~b"), doubled[eid]):
                cell_of_edge[new_eid] = i
                base_of_edge[new_eid] = base + suffix
                edge_copy[(i, base + suffix)] = new_eid
        else:
            cell_of_edge[eid] = i
            base_of_edge[eid] = base
            edge_copy[(i, base)] = eid

    new_trunc = TruncatedGraph(
        spec=owner.spec,
        n_cells=owner.n_cells,
        graph=new_graph,
        vertex_of=dict(owner.vertex_of),
        cell_of_vertex=dict(owner.cell_of_vertex),
        edge_copy=edge_copy,
        cell_of_edge=cell_of_edge,
        base_of_edge=base_of_edge,
        boundary=owner.boundary,
    )
    new_mesh = Mesh(new_trunc, old_mesh.h_target, node_counts=node_counts)

    vals = np.zeros(new_mesh.n_nodes)
    for e in g.edges.values():
        old_vals = u.values[old_mesh.edge_nodes[e.id]]
        if e.id in doubled:
            stretched = np.empty(2 * old_vals.size - 1)
            stretched[0::2] = old_vals
            stretched[1::2] = 0.5 * (old_vals[:-1] + old_vals[1:])
            for new_eid in doubled[e.id]:
                vals[new_mesh.edge_nodes[new_eid]] = stretched
        else:
            vals[new_mesh.edge_nodes[e.id]] = old_vals
    return new_trunc, GraphFunction(new_mesh, vals)
