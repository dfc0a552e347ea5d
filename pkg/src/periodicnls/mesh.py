"""Piecewise-linear discretisation of H^1 functions on metric graphs.

Each edge carries a uniform 1-D grid; endpoint values live in shared vertex
slots, so continuity at vertices holds by construction.  The Dirichlet energy
of the interpolant is exact; |u|^p integrals use composite Simpson with the
interpolant evaluated at nodes and interval midpoints (exact for p = 2).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from .graphs import CompactGraph, GraphError
from .periodic import TruncatedGraph

FloatArray = NDArray[np.float64]


class Mesh:
    """Shared-vertex nodal grid over a compact graph or a truncation."""

    def __init__(
        self,
        owner: Union[TruncatedGraph, CompactGraph],
        h: float,
        node_counts: Optional[Dict[str, int]] = None,
    ):
        if not (h > 0):
            raise GraphError("mesh spacing must be positive")
        self.owner = owner
        self.graph: CompactGraph = owner.graph if isinstance(owner, TruncatedGraph) else owner
        self.h_target = float(h)

        g = self.graph
        self.vertex_index: Dict[str, int] = {v: i for i, v in enumerate(g.vertex_list)}
        self.n_vertices = len(g.vertex_list)

        self.edge_nodes: Dict[str, FloatArray] = {}   # node indices (int array)
        self.edge_x: Dict[str, FloatArray] = {}       # coordinates along the edge
        self.edge_h: Dict[str, float] = {}
        next_idx = self.n_vertices
        i0: List[np.ndarray] = []
        i1: List[np.ndarray] = []
        hs: List[np.ndarray] = []
        for e in g.edges.values():
            if node_counts and e.id in node_counts:
                n = max(2, int(node_counts[e.id]))
            else:
                n = max(2, int(math.ceil(e.length / h)) + 1)
            he = e.length / (n - 1)
            idx = np.empty(n, dtype=np.int64)
            idx[0] = self.vertex_index[e.v]
            idx[-1] = self.vertex_index[e.w]
            if n > 2:
                idx[1:-1] = np.arange(next_idx, next_idx + n - 2)
                next_idx += n - 2
            self.edge_nodes[e.id] = idx
            self.edge_x[e.id] = np.linspace(0.0, e.length, n)
            self.edge_h[e.id] = he
            i0.append(idx[:-1])
            i1.append(idx[1:])
            hs.append(np.full(n - 1, he))
        self.n_nodes = next_idx
        self.i0 = np.concatenate(i0) if i0 else np.empty(0, dtype=np.int64)
        self.i1 = np.concatenate(i1) if i1 else np.empty(0, dtype=np.int64)
        self.hseg = np.concatenate(hs) if hs else np.empty(0)
        self.total_length = float(np.sum(self.hseg))

    def zeros(self) -> "GraphFunction":
        return GraphFunction(self, np.zeros(self.n_nodes))

    def from_edge_values(
        self, fn: Callable[[str, FloatArray], FloatArray]
    ) -> "GraphFunction":
        """Sample fn(edge_id, x) on every edge; overlapping vertex slots must agree."""
        vals = np.zeros(self.n_nodes)
        for eid, idx in self.edge_nodes.items():
            vals[idx] = np.asarray(fn(eid, self.edge_x[eid]), dtype=float)
        return GraphFunction(self, vals)

    def node_distances(self, vertex: str) -> FloatArray:
        """Metric distance from a vertex to every mesh node (Dijkstra + linear)."""
        g = self.graph
        dist = {vertex: 0.0}
        heap = [(0.0, vertex)]
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist.get(v, float("inf")):
                continue
            for e in g.incident(v):
                u = e.other(v)
                nd = d + e.length
                if nd < dist.get(u, float("inf")):
                    dist[u] = nd
                    heapq.heappush(heap, (nd, u))
        out = np.full(self.n_nodes, np.inf)
        for eid, idx in self.edge_nodes.items():
            e = g.edges[eid]
            x = self.edge_x[eid]
            dv = dist.get(e.v, np.inf)
            dw = dist.get(e.w, np.inf)
            out[idx] = np.minimum(np.minimum(out[idx], dv + x), dw + (e.length - x))
        return out


@dataclass
class GraphFunction:
    mesh: Mesh
    values: FloatArray

    def copy(self) -> "GraphFunction":
        return GraphFunction(self.mesh, self.values.copy())

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def vertex_value(self, vertex: str) -> float:
        return float(self.values[self.mesh.vertex_index[vertex]])

    def edge_values(self, edge_id: str) -> FloatArray:
        return self.values[self.mesh.edge_nodes[edge_id]]

    def dump_rows(self) -> List[Tuple[str, int, float, float]]:
        """(edge_id, cell, x, value) rows in deterministic order."""
        rows = []
        owner = self.mesh.owner
        for eid in self.mesh.graph.edges:
            cell = owner.cell_of_edge.get(eid, 0) if isinstance(owner, TruncatedGraph) else 0
            for x, v in zip(self.mesh.edge_x[eid], self.values[self.mesh.edge_nodes[eid]]):
                rows.append((eid, cell, float(x), float(v)))
        return rows


# ---------------------------------------------------------------------------
# Norms and energies
# ---------------------------------------------------------------------------


def _segments(u: GraphFunction) -> Tuple[FloatArray, FloatArray, FloatArray]:
    m = u.mesh
    a = u.values[m.i0]
    b = u.values[m.i1]
    return a, b, m.hseg


def kinetic(u: GraphFunction) -> float:
    """Dirichlet energy of the interpolant (exact)."""
    a, b, h = _segments(u)
    return float(np.sum((b - a) ** 2 / h))


def lp_powersum(u: GraphFunction, p: float) -> float:
    """Integral of |u|^p via composite Simpson on the linear interpolant."""
    a, b, h = _segments(u)
    mid = 0.5 * (a + b)
    return float(np.sum(h / 6.0 * (np.abs(a) ** p + 4.0 * np.abs(mid) ** p + np.abs(b) ** p)))


def lp_norm(u: GraphFunction, p: float) -> float:
    return lp_powersum(u, p) ** (1.0 / p)


def l2_mass(u: GraphFunction) -> float:
    """Squared L^2 norm; Simpson is exact for squares of linear interpolants."""
    return lp_powersum(u, 2.0)


def energy(u: GraphFunction, p: float) -> float:
    """NLS energy: half the Dirichlet energy minus (1/p) |u|_p^p."""
    return 0.5 * kinetic(u) - lp_powersum(u, p) / p


def rescale_to_mass(u: GraphFunction, mu: float) -> GraphFunction:
    m = l2_mass(u)
    if m <= 0:
        raise GraphError("cannot rescale the zero function to positive mass")
    return GraphFunction(u.mesh, u.values * math.sqrt(mu / m))


def energy_gradient(u: GraphFunction, p: float) -> FloatArray:
    """Gradient of the discrete energy in nodal coordinates."""
    m = u.mesh
    a = u.values[m.i0]
    b = u.values[m.i1]
    h = m.hseg
    g = np.zeros(m.n_nodes)
    # Dirichlet part of E = 1/2 K.
    slope = (a - b) / h
    np.add.at(g, m.i0, slope)
    np.add.at(g, m.i1, -slope)
    # -(1/p) d/du of Simpson |u|^p.
    mid = 0.5 * (a + b)
    fa = np.abs(a) ** (p - 2) * a
    fb = np.abs(b) ** (p - 2) * b
    fm = np.abs(mid) ** (p - 2) * mid
    np.add.at(g, m.i0, -h / 6.0 * (fa + 2.0 * fm))
    np.add.at(g, m.i1, -h / 6.0 * (fb + 2.0 * fm))
    return g


def mass_gradient(u: GraphFunction) -> FloatArray:
    m = u.mesh
    a = u.values[m.i0]
    b = u.values[m.i1]
    h = m.hseg
    g = np.zeros(m.n_nodes)
    np.add.at(g, m.i0, h / 3.0 * (2.0 * a + b))
    np.add.at(g, m.i1, h / 3.0 * (2.0 * b + a))
    return g


@dataclass
class ElResidual:
    lam: float
    interior_residual: float
    kirchhoff_max: float


def el_residual(u: GraphFunction, p: float) -> ElResidual:
    """Diagnostics against the stationary equation u'' + |u|^{p-2}u = lam u.

    lam comes from the integration-by-parts identity
    lam = (|u|_p^p - kinetic) / mass.  The interior residual is the
    mesh-weighted L^2 norm of the second-difference residual; the Kirchhoff
    defect is the largest vertex flux imbalance of the interpolant (with the
    quadrature-consistent zero-order correction, so it vanishes on discrete
    critical points and on constants).
    """
    m = u.mesh
    mass = l2_mass(u)
    if mass <= 0:
        raise GraphError("el_residual needs a nonzero function")
    lam = (lp_powersum(u, p) - kinetic(u)) / mass

    sq = 0.0
    for eid, idx in m.edge_nodes.items():
        if idx.size < 3:
            continue
        v = u.values[idx]
        h = m.edge_h[eid]
        inner = v[1:-1]
        r = (v[:-2] - 2.0 * inner + v[2:]) / (h * h)
        r += np.abs(inner) ** (p - 2) * inner - lam * inner
        sq += h * float(np.sum(r * r))
    interior = math.sqrt(sq)

    a = u.values[m.i0]
    b = u.values[m.i1]
    h = m.hseg
    mid = 0.5 * (a + b)
    fa = np.abs(a) ** (p - 2) * a - lam * a
    fb = np.abs(b) ** (p - 2) * b - lam * b
    fm = np.abs(mid) ** (p - 2) * mid - lam * mid
    flux = np.zeros(m.n_nodes)
    slope = (b - a) / h
    np.add.at(flux, m.i0, slope + h / 6.0 * (fa + 2.0 * fm))
    np.add.at(flux, m.i1, -slope + h / 6.0 * (fb + 2.0 * fm))
    kirch = float(np.max(np.abs(flux[: m.n_vertices]))) if m.n_vertices else 0.0
    return ElResidual(lam=lam, interior_residual=interior, kirchhoff_max=kirch)


# ---------------------------------------------------------------------------
# Cell shifts on truncations
# ---------------------------------------------------------------------------


def clipped_mass(u: GraphFunction, k: int) -> float:
    """Mass living on cells that fall outside the truncation after a k-shift."""
    owner = u.mesh.owner
    if not isinstance(owner, TruncatedGraph):
        raise GraphError("cell_shift needs a function on a truncation")
    N = owner.n_cells
    total = 0.0
    for eid, idx in u.mesh.edge_nodes.items():
        i = owner.cell_of_edge[eid]
        if not (-N <= i + k <= N):
            v = u.values[idx]
            h = u.mesh.edge_h[eid]
            mid = 0.5 * (v[:-1] + v[1:])
            total += float(np.sum(h / 6.0 * (v[:-1] ** 2 + 4 * mid**2 + v[1:] ** 2)))
    return total


def cell_shift(u: GraphFunction, k: int) -> GraphFunction:
    """Translate a function k cells along the periodicity direction.

    Values of cell i move to cell i+k; material shifted past the truncation
    boundary is clipped and vacated cells are zero-filled.
    """
    owner = u.mesh.owner
    if not isinstance(owner, TruncatedGraph):
        raise GraphError("cell_shift needs a function on a truncation")
    N = owner.n_cells
    new = np.zeros_like(u.values)
    for (i, base), eid in owner.edge_copy.items():
        src_cell = i - k
        if -N <= src_cell <= N:
            src = owner.edge_copy[(src_cell, base)]
            new[u.mesh.edge_nodes[eid]] = u.values[u.mesh.edge_nodes[src]]
    return GraphFunction(u.mesh, new)


def sup_cell(u: GraphFunction) -> int:
    """Cell index holding the largest |u| value."""
    owner = u.mesh.owner
    if not isinstance(owner, TruncatedGraph):
        return 0
    best, cell = -1.0, 0
    for eid, idx in u.mesh.edge_nodes.items():
        m = float(np.max(np.abs(u.values[idx])))
        if m > best:
            best = m
            cell = owner.cell_of_edge[eid]
    return cell
