"""Z-periodic graphs built from a compact cell and a pasting rule.

A periodicity cell is a compact metric graph together with disjoint donor and
receiver vertex sets and a bijection sigma: donors -> receivers.  The periodic
graph is the quotient of countably many cell copies where each donor of copy i
is identified with its receiver in copy i+1.  The infinite graph is never
materialised; all computation happens on symmetric finite truncations.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from .graphs import CompactGraph, Edge, GraphError, graphs_equal


class SpecError(ValueError):
    """Raised when a pasting spec cannot be used as requested."""


@dataclass(frozen=True)
class PeriodicSpec:
    """A periodicity cell with donors, receivers and the pasting map.

    The constructor only checks referential integrity; use validate_spec for
    the structural requirements (disjointness, bijectivity, connectivity,
    a vertex of degree >= 3).
    """

    cell: CompactGraph
    donors: FrozenSet[str]
    receivers: FrozenSet[str]
    sigma: Tuple[Tuple[str, str], ...]  # (donor, receiver) pairs
    name: str = "unnamed"

    def __post_init__(self):
        for v in itertools.chain(self.donors, self.receivers):
            if not self.cell.has_vertex(v):
                raise SpecError(f"pasting references unknown vertex {v!r}")
        smap = dict(self.sigma)
        if len(smap) != len(self.sigma):
            raise SpecError("sigma lists a donor twice")
        if set(smap) != set(self.donors):
            raise SpecError("sigma must be defined exactly on the donor set")
        for r in smap.values():
            if r not in self.receivers:
                raise SpecError(f"sigma maps into non-receiver vertex {r!r}")

    @property
    def sigma_map(self) -> Dict[str, str]:
        return dict(self.sigma)


@dataclass
class ValidationReport:
    ok: bool
    problems: List[str]
    witness_path_length: Optional[float] = None
    max_core_degree: Optional[int] = None


@dataclass
class TruncatedGraph:
    """Cells -N..N of the periodic graph, glued along sigma.

    Vertex names are "c{i}:{v}" where (i, v) is the canonical representative
    of the merged class (donors are represented by the receiver they are
    pasted to).  Edge ids are "{edge_id}@c{i}".
    """

    spec: PeriodicSpec
    n_cells: int
    graph: CompactGraph
    vertex_of: Dict[Tuple[int, str], str]  # (cell, cell vertex) -> merged name
    cell_of_vertex: Dict[str, int]
    edge_copy: Dict[Tuple[int, str], str]  # (cell, cell edge id) -> edge id
    cell_of_edge: Dict[str, int]
    base_of_edge: Dict[str, str]
    boundary: FrozenSet[str] = field(default_factory=frozenset)


def _cell_distances(cell: CompactGraph, source: str) -> Dict[str, float]:
    """Shortest metric distance from source to every vertex of the cell."""
    dist = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist.get(v, float("inf")):
            continue
        for e in cell.incident(v):
            u = e.other(v)
            nd = d + e.length
            if nd < dist.get(u, float("inf")):
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


def validate_spec(s: PeriodicSpec) -> ValidationReport:
    """Check the structural requirements for a usable pasting rule."""
    problems: List[str] = []
    smap = s.sigma_map

    if not s.donors:
        problems.append("donor set is empty")
    if not s.receivers:
        problems.append("receiver set is empty")
    if s.donors & s.receivers:
        problems.append(
            "donors and receivers overlap: " + ", ".join(sorted(s.donors & s.receivers))
        )
    if len(set(smap.values())) != len(smap):
        problems.append("sigma is not injective")
    if set(smap.values()) != set(s.receivers):
        problems.append("sigma is not onto the receiver set")
    if not s.cell.is_connected():
        problems.append("periodicity cell is not connected")

    witness = None
    if s.donors and not problems:
        # A donor-to-receiver path inside the cell concatenates across copies
        # into an unbounded path, certifying infinite diameter.
        best = float("inf")
        for d in sorted(s.donors):
            dist = _cell_distances(s.cell, d)
            target = smap[d]
            if target in dist:
                best = min(best, dist[target])
        if best == float("inf"):
            problems.append("no donor can reach its pasted receiver inside the cell")
        else:
            witness = best

    max_deg = None
    if not problems:
        t = build_truncation(s, 1)
        core = [t.vertex_of[(0, v)] for v in s.cell.vertex_list]
        max_deg = max(t.graph.degree(v) for v in core)
        if max_deg < 3:
            problems.append(
                "no vertex of degree >= 3: the glued graph degenerates to a line"
            )

    return ValidationReport(
        ok=not problems,
        problems=problems,
        witness_path_length=witness,
        max_core_degree=max_deg,
    )


def build_truncation(s: PeriodicSpec, n_cells: int) -> TruncatedGraph:
    """Glue cells -N..N along sigma; boundary pastings are left open."""
    if n_cells < 0:
        raise SpecError("n_cells must be >= 0")
    report_problems = []
    if s.donors & s.receivers:
        report_problems.append("donors and receivers overlap")
    smap = s.sigma_map
    if len(set(smap.values())) != len(smap) or set(smap.values()) != set(s.receivers):
        report_problems.append("sigma is not a bijection onto receivers")
    if report_problems:
        raise SpecError(
            "cannot truncate a non-normal pasting rule: " + "; ".join(report_problems)
        )

    N = n_cells
    cells = range(-N, N + 1)

    def rep(i: int, v: str) -> Tuple[int, str]:
        # Donors merge into the receiver of the next copy (one step suffices
        # because donors and receivers are disjoint).
        if v in s.donors and i + 1 <= N:
            return (i + 1, smap[v])
        return (i, v)

    vertex_of: Dict[Tuple[int, str], str] = {}
    names: List[str] = []
    seen = set()
    for i in cells:
        for v in s.cell.vertex_list:
            r = rep(i, v)
            name = f"c{r[0]}:{r[1]}"
            vertex_of[(i, v)] = name
            if name not in seen:
                seen.add(name)
                names.append(name)

    edges: List[Edge] = []
    edge_copy: Dict[Tuple[int, str], str] = {}
    cell_of_edge: Dict[str, int] = {}
    base_of_edge: Dict[str, str] = {}
    for i in cells:
        for e in s.cell.edges.values():
            eid = f"{e.id}@c{i}"
            edges.append(Edge(eid, vertex_of[(i, e.v)], vertex_of[(i, e.w)], e.length))
            edge_copy[(i, e.id)] = eid
            cell_of_edge[eid] = i
            base_of_edge[eid] = e.id

    graph = CompactGraph(names, edges)
    cell_of_vertex = {f"c{i}:{v}": i for (i, v) in {(rep(i, v)) for i in cells for v in s.cell.vertex_list}}

    boundary = frozenset(
        {vertex_of[(N, d)] for d in s.donors}
        | {vertex_of[(-N, r)] for r in s.receivers}
    )
    return TruncatedGraph(
        spec=s,
        n_cells=N,
        graph=graph,
        vertex_of=vertex_of,
        cell_of_vertex=cell_of_vertex,
        edge_copy=edge_copy,
        cell_of_edge=cell_of_edge,
        base_of_edge=base_of_edge,
        boundary=boundary,
    )


# ---------------------------------------------------------------------------
# Normalisation of non-normal pasting rules
# ---------------------------------------------------------------------------


@dataclass
class NormalizationResult:
    kind: str  # "already_normal" | "normalized" | "star_like"
    spec: Optional[PeriodicSpec] = None
    cell_multiplier: int = 1
    witness_cycle: Tuple[str, ...] = ()


class _UnionFind:
    def __init__(self):
        self.parent: Dict = {}

    def find(self, x):
        p = self.parent.setdefault(x, x)
        while p != self.parent[p]:
            self.parent[p] = self.parent[self.parent[p]]
            p = self.parent[p]
        self.parent[x] = p
        return p

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def raw_glue(s: PeriodicSpec, count: int) -> CompactGraph:
    """The window spanned by `count` consecutive cell copies of the full
    two-sided gluing.

    Works for arbitrary sigma (overlapping donor/receiver sets, non-injective
    maps).  Vertex identifications are taken in the infinite graph — the
    union-find runs over padding copies on both sides — so e.g. two last-copy
    donors pasted onto the same receiver are already one vertex.  For a normal
    pasting rule this agrees with plainly chaining the copies.
    """
    if count < 1:
        raise SpecError("count must be >= 1")
    smap = s.sigma_map
    pad = len(s.cell.vertex_list) + 2
    uf = _UnionFind()
    for i in range(-pad, count + pad - 1):
        for d in sorted(s.donors):
            uf.union((i, d), (i + 1, smap[d]))
    names: Dict[Tuple[int, str], str] = {}
    order: List[str] = []
    seen = set()
    for i in range(count):
        for v in s.cell.vertex_list:
            r = uf.find((i, v))
            name = f"g{r[0]}:{r[1]}"
            names[(i, v)] = name
            if name not in seen:
                seen.add(name)
                order.append(name)
    edges = [
        Edge(f"{e.id}@g{i}", names[(i, e.v)], names[(i, e.w)], e.length)
        for i in range(count)
        for e in s.cell.edges.values()
    ]
    return CompactGraph(order, edges)


def _find_cycle_in_overlap(s: PeriodicSpec) -> Optional[Tuple[str, ...]]:
    """A sigma-cycle staying inside donors-and-receivers, if one exists."""
    overlap = s.donors & s.receivers
    smap = s.sigma_map
    for start in sorted(overlap):
        path = [start]
        seen = {start}
        cur = start
        while cur in overlap and cur in smap:
            cur = smap[cur]
            if cur in seen:
                k = path.index(cur)
                return tuple(path[k:])
            if cur not in overlap:
                break
            seen.add(cur)
            path.append(cur)
    return None


def _longest_chain_links(s: PeriodicSpec) -> int:
    """Longest run of sigma-steps that starts and stays inside the overlap."""
    overlap = s.donors & s.receivers
    smap = s.sigma_map
    best = 0
    for start in sorted(overlap):
        links = 0
        cur = start
        guard = 0
        while cur in overlap and cur in smap and smap[cur] in overlap:
            links += 1
            cur = smap[cur]
            guard += 1
            if guard > len(smap) + 1:
                break
        best = max(best, links)
    return best


def _merge_noninjective(s: PeriodicSpec) -> PeriodicSpec:
    """Identify donors that share an image; the glued graph is unchanged."""
    smap = s.sigma_map
    groups: Dict[str, List[str]] = {}
    for d in sorted(s.donors):
        groups.setdefault(smap[d], []).append(d)
    rename: Dict[str, str] = {}
    for r, ds in groups.items():
        if len(ds) > 1:
            target = ds[0]
            for d in ds[1:]:
                rename[d] = target
    verts = [v for v in s.cell.vertex_list if v not in rename]
    edges = [
        Edge(e.id, rename.get(e.v, e.v), rename.get(e.w, e.w), e.length)
        for e in s.cell.edges.values()
    ]
    donors = frozenset(rename.get(d, d) for d in s.donors)
    sigma = tuple(sorted({(rename.get(d, d), r) for d, r in s.sigma}))
    return PeriodicSpec(
        cell=CompactGraph(verts, edges),
        donors=donors,
        receivers=s.receivers,
        sigma=sigma,
        name=s.name + "/merged",
    )


def _compound_cell(s: PeriodicSpec, copies: int) -> Optional[PeriodicSpec]:
    """Glue `copies` cell copies into a candidate cell with a normal pasting."""
    smap = s.sigma_map
    uf = _UnionFind()
    for i in range(copies - 1):
        for d in sorted(s.donors):
            uf.union((i, d), (i + 1, smap[d]))
    name_of: Dict[Tuple[int, str], str] = {}
    order: List[str] = []
    seen = set()
    for i in range(copies):
        for v in s.cell.vertex_list:
            r = uf.find((i, v))
            nm = f"n{r[0]}:{r[1]}"
            name_of[(i, v)] = nm
            if nm not in seen:
                seen.add(nm)
                order.append(nm)
    edges = [
        Edge(f"{e.id}@n{i}", name_of[(i, e.v)], name_of[(i, e.w)], e.length)
        for i in range(copies)
        for e in s.cell.edges.values()
    ]
    cell = CompactGraph(order, edges)

    donors = {name_of[(copies - 1, d)] for d in s.donors}
    receivers = {name_of[(0, r)] for r in sorted(set(smap.values()))}
    if donors & receivers:
        return None
    sigma_pairs: Dict[str, str] = {}
    for d in sorted(s.donors):
        src = name_of[(copies - 1, d)]
        dst = name_of[(0, smap[d])]
        if src in sigma_pairs and sigma_pairs[src] != dst:
            return None  # pasting not well defined on merged donor classes
        sigma_pairs[src] = dst
    if set(sigma_pairs.values()) != receivers or len(set(sigma_pairs.values())) != len(
        sigma_pairs
    ):
        return None
    try:
        return PeriodicSpec(
            cell=cell,
            donors=frozenset(donors),
            receivers=frozenset(receivers),
            sigma=tuple(sorted(sigma_pairs.items())),
            name=f"{s.name}/x{copies}",
        )
    except SpecError:
        return None


def normalize_pasting(s: PeriodicSpec, tol: float = 1e-9) -> NormalizationResult:
    """Rewrite a non-normal pasting rule into an equivalent normal one.

    - sigma not onto: the receiver set shrinks to the image.
    - sigma not injective: donors sharing an image are identified.
    - donors meeting receivers: a sigma-cycle inside the overlap means the
      glued graph is star-like (bounded diameter) and cannot be normalised;
      otherwise several copies are compounded into a larger cell.
    The result is checked against the raw gluing with graphs_equal.
    """
    smap = s.sigma_map
    surjective = set(smap.values()) == set(s.receivers)
    injective = len(set(smap.values())) == len(smap)
    overlap = bool(s.donors & s.receivers)
    if surjective and injective and not overlap:
        return NormalizationResult(kind="already_normal", spec=s, cell_multiplier=1)

    cur = s
    if not surjective:
        cur = PeriodicSpec(
            cell=cur.cell,
            donors=cur.donors,
            receivers=frozenset(smap.values()),
            sigma=cur.sigma,
            name=cur.name,
        )
    if not injective:
        cur = _merge_noninjective(cur)

    if not (cur.donors & cur.receivers):
        _check_against_raw(s, cur, 1, tol)
        return NormalizationResult(kind="normalized", spec=cur, cell_multiplier=1)

    cycle = _find_cycle_in_overlap(cur)
    if cycle is not None:
        return NormalizationResult(kind="star_like", witness_cycle=cycle)

    links = _longest_chain_links(cur)
    for copies in range(2, links + 6):
        cand = _compound_cell(cur, copies)
        if cand is None:
            continue
        try:
            _check_against_raw(s, cand, copies, tol)
        except SpecError:
            continue
        return NormalizationResult(kind="normalized", spec=cand, cell_multiplier=copies)
    raise SpecError("could not normalise the pasting rule (no compound cell worked)")


def _check_against_raw(
    raw: PeriodicSpec, normal: PeriodicSpec, multiplier: int, tol: float
) -> None:
    """The normalised gluing must reproduce the raw gluing, copy for copy."""
    k = 3
    got = raw_glue(normal, k)
    want = raw_glue(raw, multiplier * k)
    if graphs_equal(got, want, tol) is None:
        raise SpecError("normalised cell does not reproduce the raw gluing")
