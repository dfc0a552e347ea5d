"""Explicit competitor functions with certified energy levels.

These constructions witness, on finite truncations, the three energy regimes:
negative-energy trials for subcritical powers, flattening sequences whose
energy tends to zero at the critical power, concentrating bumps with energy
diverging to minus infinity above the critical line mass, and the
circle-plus-bridge trial that pushes the critical mass threshold strictly
below the line's.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .graphs import GraphError
from .mesh import (
    GraphFunction,
    Mesh,
    energy,
    l2_mass,
    lp_powersum,
    rescale_to_mass,
)
from .periodic import PeriodicSpec, SpecError, TruncatedGraph, build_truncation
from .solitons import (
    MU_R,
    critical_kinetic_segment,
    critical_soliton,
    phi_mu,
    soliton_energy,
    soliton_params,
)
from . import corpus


# ---------------------------------------------------------------------------
# Subcritical trial (2 < p < 6): soliton threaded along the donor edges
# ---------------------------------------------------------------------------


@dataclass
class SubcriticalLayout:
    """Edges with exactly one donor endpoint carry the soliton profile; the
    rest of the cell is an equipotential plateau."""

    l_edges: Tuple[str, ...]
    dd_edges: Tuple[str, ...]  # both endpoints are donors: constant at donor value
    ell: float                 # threading length = min length over l_edges
    m: int
    plateau_measure: float     # measure of the cell minus the threaded segments


def subcritical_layout(s: PeriodicSpec) -> SubcriticalLayout:
    l_edges = []
    dd_edges = []
    for e in s.cell.edges.values():
        k = int(e.v in s.donors) + int(e.w in s.donors)
        if e.is_loop():
            k = 2 if e.v in s.donors else 0
        if k == 1:
            l_edges.append(e.id)
        elif k == 2:
            dd_edges.append(e.id)
    if not l_edges:
        raise SpecError("no edge with exactly one donor endpoint; trial undefined")
    ell = min(s.cell.edges[e].length for e in l_edges)
    total = s.cell.total_length()
    return SubcriticalLayout(
        l_edges=tuple(l_edges),
        dd_edges=tuple(dd_edges),
        ell=ell,
        m=len(l_edges),
        plateau_measure=total - len(l_edges) * ell,
    )


@dataclass
class SubcriticalTrial:
    u: GraphFunction
    trunc: TruncatedGraph
    layout: SubcriticalLayout
    mu1: float
    energy: float
    mass: float
    formula_mass: float     # m mu1 + plateau * sum of squared plateau levels
    formula_energy: float   # m E(phi_mu1, R) minus the plateau |u|^p contribution


def _plateau_level(params, mu1: float, i: int, ell: float) -> float:
    d = abs(i) if i < 0 else i
    return float(phi_mu(params, mu1, np.array([d * ell]))[0])


def _trial_values(
    s: PeriodicSpec,
    layout: SubcriticalLayout,
    params,
    mu1: float,
    mesh: Mesh,
    trunc: TruncatedGraph,
) -> GraphFunction:
    ell = layout.ell
    vals = np.zeros(mesh.n_nodes)
    levels: Dict[int, float] = {}
    N = trunc.n_cells
    for i in range(-N, N + 2):
        levels[i] = _plateau_level(params, mu1, i, ell)
    for (i, base), eid in trunc.edge_copy.items():
        e = s.cell.edges[base]
        x = mesh.edge_x[eid]
        idx = mesh.edge_nodes[eid]
        if base in layout.l_edges:
            donor_at_v = e.v in s.donors
            xd = x if donor_at_v else (e.length - x)
            if i >= 0:
                prof = phi_mu(params, mu1, (i + 1) * ell - xd)
            else:
                prof = phi_mu(params, mu1, (-i - 1) * ell + xd)
            vals[idx] = np.where(xd <= ell, prof, levels[i])
        elif base in layout.dd_edges:
            vals[idx] = levels[i + 1]
        else:
            vals[idx] = levels[i]
    return GraphFunction(mesh, vals)


def _formula_mass(s: PeriodicSpec, layout: SubcriticalLayout, params, mu1: float) -> float:
    ell = layout.ell
    total = layout.m * mu1
    psum = _plateau_level(params, mu1, 0, ell) ** 2
    k = 1
    while True:
        term = 2.0 * _plateau_level(params, mu1, k, ell) ** 2
        psum += term
        if term < 1e-16 * max(psum, 1.0) or k > 100000:
            break
        k += 1
    return total + layout.plateau_measure * psum


def subcritical_trial(
    s: PeriodicSpec,
    p: float,
    mu: float,
    mesh_h: float = 0.01,
    n_cells: Optional[int] = None,
) -> SubcriticalTrial:
    """Soliton threaded along the donor edges, mass-calibrated by bisection."""
    if not (2.0 < p < 6.0):
        raise SpecError("subcritical trial needs 2 < p < 6")
    layout = subcritical_layout(s)
    params = soliton_params(p)

    # Continuum calibration of the soliton mass mu1.
    lo, hi = 1e-12, mu
    if _formula_mass(s, layout, params, hi) < mu:
        raise SpecError("mass formula bracket failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _formula_mass(s, layout, params, mid) < mu:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * hi:
            break
    mu1 = 0.5 * (lo + hi)

    if n_cells is None:
        # Grow the window until appended cells contribute < 1e-9 of the mass.
        ell = layout.ell
        n_cells = 4
        while n_cells < 100000:
            lvl = _plateau_level(params, mu1, n_cells, ell)
            tail = (
                2.0 * layout.plateau_measure * lvl**2
                + 2.0 * layout.m * lvl**2 * ell * 4.0
            )
            if tail < 1e-9 * mu:
                break
            n_cells += 2

    trunc = build_truncation(s, n_cells)
    mesh = Mesh(trunc, mesh_h)

    # Re-calibrate against the discrete quadrature on the actual mesh.
    lo, hi = 0.5 * mu1, min(2.0 * mu1, mu)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        got = l2_mass(_trial_values(s, layout, params, mid, mesh, trunc))
        if got < mu:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * hi:
            break
    mu1 = 0.5 * (lo + hi)
    u = _trial_values(s, layout, params, mu1, mesh, trunc)

    # Plateau |u|^p bookkeeping for the energy decomposition.
    own = layout.plateau_measure - sum(
        s.cell.edges[e].length for e in layout.dd_edges
    )
    dd = sum(s.cell.edges[e].length for e in layout.dd_edges)
    csum = 0.0
    for i in range(-n_cells, n_cells + 1):
        ci = _plateau_level(params, mu1, i, layout.ell)
        cnext = _plateau_level(params, mu1, i + 1, layout.ell)
        csum += own * ci**p + dd * cnext**p
    formula_energy = layout.m * soliton_energy(p, mu1) - csum / p

    return SubcriticalTrial(
        u=u,
        trunc=trunc,
        layout=layout,
        mu1=mu1,
        energy=energy(u, p),
        mass=l2_mass(u),
        formula_mass=_formula_mass(s, layout, params, mu1),
        formula_energy=formula_energy,
    )


# ---------------------------------------------------------------------------
# Critical flattening sequence
# ---------------------------------------------------------------------------


@dataclass
class VanishingStep:
    n: int
    alpha: float
    energy: float
    u: GraphFunction


def vanishing_sequence(
    s: PeriodicSpec,
    mu: float,
    n: int,
    mesh_h: float = 0.02,
    n_cells: Optional[int] = None,
) -> VanishingStep:
    """Plateau over cells -n..n with linear ramps to zero on the edges
    entering the junction vertices of cells +-(n+1)."""
    if n_cells is None:
        n_cells = n + 2
    if n_cells < n + 1:
        raise SpecError("truncation too small for the requested plateau")
    trunc = build_truncation(s, n_cells)
    mesh = Mesh(trunc, mesh_h)

    vals = np.zeros(mesh.n_nodes)
    for (i, base), eid in trunc.edge_copy.items():
        e = s.cell.edges[base]
        x = mesh.edge_x[eid]
        idx = mesh.edge_nodes[eid]
        if abs(i) <= n:
            vals[idx] = 1.0
        elif i == n + 1 or i == -n - 1:
            junction = s.receivers if i > 0 else s.donors
            at_v = e.v in junction
            at_w = e.w in junction
            if e.is_loop():
                at_w = at_v
            if at_v and at_w:
                vals[idx] = np.abs(1.0 - 2.0 * x / e.length)
            elif at_v:
                vals[idx] = 1.0 - x / e.length
            elif at_w:
                vals[idx] = x / e.length
            # else: stays zero
    unit = GraphFunction(mesh, vals)
    alpha = math.sqrt(mu / l2_mass(unit))
    u = GraphFunction(mesh, alpha * vals)
    return VanishingStep(n=n, alpha=alpha, energy=energy(u, 6.0), u=u)


# ---------------------------------------------------------------------------
# Concentrating bump (p = 6, mu above the line's critical mass)
# ---------------------------------------------------------------------------


def concentrating_bump(
    mesh: Mesh, edge_id: str, mu: float, lam: float
) -> GraphFunction:
    """sqrt(lam) v(lam x) on the first 1/lam of an edge, v a quartic bump of
    mass mu; the energy scales exactly like lam^2 E(v)."""
    e = mesh.graph.edges[edge_id]
    if 1.0 / lam > e.length:
        raise GraphError("bump support exceeds the edge length")
    c = math.sqrt(630.0 * mu)

    def profile(eid: str, x: np.ndarray) -> np.ndarray:
        if eid != edge_id:
            return np.zeros_like(x)
        z = lam * x
        inside = (z >= 0.0) & (z <= 1.0)
        return np.where(inside, math.sqrt(lam) * c * z**2 * (1.0 - z) ** 2, 0.0)

    u = mesh.from_edge_values(profile)
    return rescale_to_mass(u, mu)


# ---------------------------------------------------------------------------
# Signpost trial (p = 6): soliton wrapped around the circle
# ---------------------------------------------------------------------------


@dataclass
class SignpostParams:
    gamma: float = 0.5
    beta: float = 0.5
    delta: float = 0.5


@dataclass
class SignpostTrial:
    u: GraphFunction
    trunc: TruncatedGraph
    lam: float
    energy: float
    energy_upper_bound: float
    mass_w: float
    r: float
    r_printed: float
    segment_integral_quadrature: float
    segment_integral_printed: float


def signpost_trial(
    params: SignpostParams,
    lam: float,
    mesh_h: Optional[float] = None,
    n_cells: Optional[int] = None,
) -> SignpostTrial:
    """Mass-critical trial on the signpost graph.

    The soliton peak is folded onto the circle, its displaced slice is
    rearranged onto the bridge, the tails run along the horizontals, and the
    off-centre circles and bridges sit at the local soliton level.  After
    rescaling to the line's critical mass the energy is strictly negative for
    large lam, with an explicit upper bound assembled from the proof terms.
    """
    g, b, d = params.gamma, params.beta, params.delta
    h_max = min(0.01, 1.0 / (4.0 * lam))
    if mesh_h is None:
        mesh_h = h_max
    if mesh_h > h_max + 1e-15:
        raise SpecError(f"mesh spacing must be <= {h_max} for lam={lam}")
    if n_cells is None:
        n_cells = max(3, int(math.ceil(30.0 * math.sqrt(3.0) / (2.0 * lam) / d)))

    spec = corpus.signpost_spec(g, b, d)
    trunc = build_truncation(spec, n_cells)
    mesh = Mesh(trunc, mesh_h)
    phi = critical_soliton(lam)

    vals = np.zeros(mesh.n_nodes)
    for (i, base), eid in trunc.edge_copy.items():
        x = mesh.edge_x[eid]
        idx = mesh.edge_nodes[eid]
        level = phi(np.array([g + b + abs(i) * d]))[0]
        if base == "circle":
            vals[idx] = phi(x - g) if i == 0 else level
        elif base == "bridge":
            # b*(y) = phi(gamma + y/2): the exact decreasing rearrangement of
            # the two displaced soliton slices (equal slopes pair up).
            vals[idx] = phi(g + 0.5 * x) if i == 0 else level
        else:  # horizontal, runs junction i -> junction i+1
            if i >= 0:
                vals[idx] = phi(g + b + i * d + x)
            else:
                vals[idx] = phi(g + b - i * d - x)
    w = GraphFunction(mesh, vals)

    mass_w = l2_mass(w)
    r = 1.0 - MU_R / mass_w
    u = rescale_to_mass(w, MU_R)

    quad_val, printed_val = critical_kinetic_segment(lam, g, g + b)
    c = 2.0 * g + 2.0 * b
    tail = 0.0
    i = 1
    while True:
        term = float(phi(np.array([c + i * d]))[0]) ** 6
        tail += term
        if term < 1e-22 * max(tail, 1.0) or i > 100000:
            break
        i += 1
    bound = (1.0 - r) * (-0.75 * quad_val - (c / 3.0) * tail) + 0.5 * r * lp_powersum(w, 6.0)
    r_printed = lam / (math.exp(2.0 / math.sqrt(3.0) * lam * (c + d)) * MU_R + lam)

    return SignpostTrial(
        u=u,
        trunc=trunc,
        lam=lam,
        energy=energy(u, 6.0),
        energy_upper_bound=bound,
        mass_w=mass_w,
        r=r,
        r_printed=r_printed,
        segment_integral_quadrature=quad_val,
        segment_integral_printed=printed_val,
    )
