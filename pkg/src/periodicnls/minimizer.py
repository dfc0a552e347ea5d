"""Mass-constrained NLS ground-state search on periodic-graph truncations.

Each start runs an L-BFGS pass on the mass-normalised energy (fast through
the stiff, nearly-flat directions of long truncations), then a projected
Barzilai-Borwein descent with monotone backtracking polishes to the gradient
tolerance.  Runs are classified as Converged (a localised stationary state),
Vanishing (energy flattening to zero as mass spreads), or Unbounded (energy
diving below any floor through concentration).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize as _scipy_minimize
from scipy.sparse.linalg import spsolve

from .mesh import (
    ElResidual,
    GraphFunction,
    Mesh,
    cell_shift,
    clipped_mass,
    el_residual,
    energy,
    energy_gradient,
    kinetic,
    l2_mass,
    mass_gradient,
    rescale_to_mass,
    sup_cell,
)
from .periodic import PeriodicSpec, build_truncation
from .solitons import MU_R, critical_soliton, phi_mu, soliton_params


class InconclusiveRun(RuntimeError):
    """No start converged and none diverged within the iteration budget."""

    def __init__(self, message: str, histories: Optional[list] = None):
        super().__init__(message)
        self.histories = histories or []


@dataclass
class MinimizeOptions:
    p: float
    mu: float
    mesh_h: float = 0.02
    n_cells: int = 8
    max_iters: int = 40000
    grad_tol: float = 1e-6
    energy_floor: float = -1.0e3
    kinetic_cap: float = 1.0e6
    starts: int = 1           # number of seeded random starts
    seed: int = 0
    recenter_every: int = 25
    vanish_energy_tol: float = 1.0e-4
    # "free" leaves the truncation ends open (needed to see flat/vanishing
    # states); "dirichlet" pins them to zero, which removes the spurious
    # boundary-hugging attractor of localised states (a free end behaves
    # like a half-line tip and draws mass out of the interior).
    boundary: str = "free"


@dataclass
class MinimizeReport:
    status: str               # "converged" | "vanishing" | "unbounded"
    energy: float
    mass: float
    kinetic: float
    sup: float
    lam: float
    iterations: int
    mesh_h: float
    n_cells: int
    u: Optional[GraphFunction] = None
    residual: Optional[ElResidual] = None
    history: List[float] = field(default_factory=list)
    start_label: str = ""


@dataclass
class _RunOutcome:
    kind: str                 # "converged" | "unbounded" | "budget"
    u: GraphFunction
    energy: float
    iterations: int
    history: List[float]
    label: str


class _FloorHit(Exception):
    pass


def _lbfgs_phase(
    u0: GraphFunction, opts: MinimizeOptions, free: Optional[np.ndarray]
) -> Tuple[np.ndarray, List[float], bool]:
    """Minimise v -> E(sqrt(mu) v / |v|) by restarted L-BFGS.

    The normalised functional sees the sphere constraint implicitly, which
    lets the quasi-Newton model take long steps through the nearly-flat
    directions that stall first-order descent.  Restarting with fresh memory
    until the energy stagnates recovers the last few digits that a single
    pass leaves on the table.  Returns (mass-mu values, monotone energy
    history, hit_floor).
    """
    mesh = u0.mesh
    p, mu = opts.p, opts.mu

    def j_and_grad(v: np.ndarray):
        f = GraphFunction(mesh, v)
        m = l2_mass(f)
        if m < 1e-280:
            return 0.0, np.zeros_like(v)
        scale = math.sqrt(mu / m)
        u = GraphFunction(mesh, scale * v)
        g = energy_gradient(u, p)
        mv = 0.5 * mass_gradient(f)
        gj = scale * (g - (float(np.dot(v, g)) / m) * mv)
        if free is not None:
            gj = gj * free
        return energy(u, p), gj

    history: List[float] = [j_and_grad(u0.values)[0]]
    best = [u0.values.copy(), history[0]]

    def cb(xk: np.ndarray):
        e = j_and_grad(xk)[0]
        if e < best[1]:
            best[0], best[1] = xk.copy(), e
            history.append(e)
        if e < opts.energy_floor:
            raise _FloorHit

    hit_floor = False
    budget = opts.max_iters
    try:
        for _ in range(10):
            before = best[1]
            res = _scipy_minimize(
                j_and_grad,
                best[0],
                jac=True,
                method="L-BFGS-B",
                callback=cb,
                options=dict(maxiter=min(budget, 5000), ftol=1e-18, gtol=1e-12),
            )
            budget -= max(int(res.nit), 1)
            if budget <= 0:
                break
            if before - best[1] <= 1e-12 * max(1.0, abs(best[1])):
                break
    except _FloorHit:
        hit_floor = True
    v = best[0]
    m = l2_mass(GraphFunction(mesh, v))
    if m < 1e-280:
        return u0.values.copy(), history, hit_floor
    return v * math.sqrt(mu / m), history, hit_floor


def _descend(
    u0: GraphFunction,
    opts: MinimizeOptions,
    label: str,
    free: Optional[np.ndarray] = None,
) -> _RunOutcome:
    mesh = u0.mesh
    p, mu = opts.p, opts.mu
    v0 = np.abs(u0.values)
    if free is not None:
        v0 = v0 * free
    u = rescale_to_mass(GraphFunction(mesh, v0), mu)
    x, history, hit_floor = _lbfgs_phase(u, opts, free)
    e_val = energy(GraphFunction(mesh, x), p)
    if hit_floor or e_val < opts.energy_floor:
        it0 = len(history)
        return _RunOutcome("unbounded", GraphFunction(mesh, x), e_val, it0, history, label)

    def projected_grad(xv: np.ndarray) -> np.ndarray:
        f = GraphFunction(mesh, xv)
        g = energy_gradient(f, p)
        gm = mass_gradient(f)
        if free is not None:
            g = g * free
            gm = gm * free
        denom = float(np.dot(gm, gm))
        if denom > 0:
            g = g - (float(np.dot(g, gm)) / denom) * gm
        return g

    g = projected_grad(x)
    prev_x: Optional[np.ndarray] = None
    prev_g: Optional[np.ndarray] = None
    tau = 0.1
    it = 0
    while it < opts.max_iters:
        it += 1
        gn = float(np.linalg.norm(g))
        if gn < opts.grad_tol:
            return _RunOutcome("converged", GraphFunction(mesh, x), e_val, it, history, label)
        if prev_x is not None:
            s = x - prev_x
            y = g - prev_g
            sy = float(np.dot(s, y))
            tau = float(np.dot(s, s)) / sy if sy > 1e-300 else tau * 2.0
            tau = min(max(tau, 1e-14), 1e10)
        accepted = False
        t = tau
        for _ in range(60):
            xn = x - t * g
            mn = l2_mass(GraphFunction(mesh, xn))
            if mn > 0:
                xn = xn * math.sqrt(mu / mn)
                en = energy(GraphFunction(mesh, xn), p)
                if en <= e_val:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            # Line search exhausted: accept the point as stationary if the
            # gradient is already small, else report the budget as spent.
            kind = "converged" if gn < 100 * opts.grad_tol else "budget"
            return _RunOutcome(kind, GraphFunction(mesh, x), e_val, it, history, label)
        prev_x, prev_g = x, g
        x, e_val = xn, en
        history.append(e_val)
        g = projected_grad(x)

        # Energy stall: backtracking keeps the sequence monotone, so a long
        # window with no measurable decrease means we sit at a stationary
        # point up to numerical resolution, even if the raw gradient norm is
        # still above grad_tol (flat states on long graphs do this).
        win = 400
        if len(history) > win:
            drop = history[-win - 1] - history[-1]
            if drop <= 1e-13 * max(1.0, abs(e_val)):
                return _RunOutcome("converged", GraphFunction(mesh, x), e_val, it, history, label)

        f = GraphFunction(mesh, x)
        if e_val < opts.energy_floor or (
            kinetic(f) > opts.kinetic_cap and len(history) > 2 and history[-1] < history[-2]
        ):
            return _RunOutcome("unbounded", f, e_val, it, history, label)

        if opts.recenter_every and it % opts.recenter_every == 0:
            k = -sup_cell(f)
            if k != 0 and clipped_mass(f, k) <= 1e-9 * mu:
                shifted = cell_shift(f, k)
                vals = shifted.values if free is None else shifted.values * free
                m = l2_mass(GraphFunction(mesh, vals))
                if m > 0:
                    x = vals * math.sqrt(mu / m)
                    e_val = energy(GraphFunction(mesh, x), p)
                    g = projected_grad(x)
                    prev_x = prev_g = None
    return _RunOutcome("budget", GraphFunction(mesh, x), e_val, it, history, label)


def _newton_polish(
    u: GraphFunction, opts: MinimizeOptions, free: Optional[np.ndarray]
) -> Optional[GraphFunction]:
    """Sharpen a descent output to the nearby discrete critical point.

    Solves the stationarity system grad E + (lam/2) grad M = 0, M = mu by a
    damped Newton iteration on (values, lam) with the exact sparse Hessian of
    the quadrature.  First-order methods stall within ~1e-5 of the energy on
    the nearly-flat landscapes of long truncations, which is not enough for
    energies at different truncation widths to agree; Newton removes that
    solver noise entirely.  Returns None when the iteration does not settle,
    in which case the caller keeps the descent output.
    """
    mesh = u.mesh
    p, mu = opts.p, opts.mu
    n = mesh.n_nodes
    i0, i1, h = mesh.i0, mesh.i1, mesh.hseg
    rows = np.concatenate([i0, i0, i1, i1])
    cols = np.concatenate([i0, i1, i0, i1])

    x = u.values.copy()
    lam = el_residual(u, p).lam
    res0 = None
    for _ in range(30):
        f = GraphFunction(mesh, x)
        g = energy_gradient(f, p)
        mg2 = 0.5 * mass_gradient(f)
        F = g + lam * mg2
        c = 0.5 * (l2_mass(f) - mu)
        if free is not None:
            F = F * free
        res = max(float(np.max(np.abs(F))), abs(c))
        if res0 is None:
            res0 = res
        if res < 1e-12:
            break
        a, b = x[i0], x[i1]
        m = 0.5 * (a + b)
        wa = np.abs(a) ** (p - 2.0)
        wb = np.abs(b) ** (p - 2.0)
        wm = np.abs(m) ** (p - 2.0)
        # Dirichlet block, Simpson |u|^p block, and (lam/2) mass block.
        daa = 1.0 / h - (p - 1.0) * h / 6.0 * (wa + wm) + lam * h / 3.0
        dbb = 1.0 / h - (p - 1.0) * h / 6.0 * (wb + wm) + lam * h / 3.0
        dab = -1.0 / h - (p - 1.0) * h / 6.0 * wm + lam * h / 6.0
        H = sp.csr_matrix((np.concatenate([daa, dab, dab, dbb]), (rows, cols)), shape=(n, n))
        if free is not None:
            keep = sp.diags(free)
            H = keep @ H @ keep + sp.diags(1.0 - free)
            mg2 = mg2 * free
        K = sp.bmat([[H, mg2[:, None]], [mg2[None, :], None]], format="csc")
        try:
            step = spsolve(K, np.concatenate([-F, [-c]]))
        except RuntimeError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        dx, dlam = step[:n], float(step[n])
        # Damp large first steps; near the critical point this is full Newton.
        scale = min(1.0, 0.1 * max(1.0, float(np.max(np.abs(x)))) / max(1e-30, float(np.max(np.abs(dx)))))
        x = x + scale * dx
        lam = lam + scale * dlam
    else:
        return None
    if res > min(1e-9, res0):
        return None
    out = GraphFunction(mesh, x)
    if abs(l2_mass(out) - mu) > 1e-9 * mu:
        return None
    return out


def default_starts(
    mesh: Mesh, trunc, opts: MinimizeOptions
) -> List[Tuple[str, GraphFunction]]:
    out: List[Tuple[str, GraphFunction]] = []
    cell0 = [eid for eid, i in trunc.cell_of_edge.items() if i == 0]
    center_vertex = mesh.graph.edges[cell0[0]].v
    dist = mesh.node_distances(center_vertex)
    if opts.p < 6.0:
        params = soliton_params(opts.p)
        prof = phi_mu(params, opts.mu, dist)
    else:
        prof = critical_soliton(2.0)(dist)
    out.append(("soliton", GraphFunction(mesh, prof)))
    out.append(("constant", GraphFunction(mesh, np.ones(mesh.n_nodes))))
    # Below the critical power the truncation ends act like half-line tips
    # and carry the lowest stationary state of the finite problem, so seed
    # one explicitly: whether the run lands there must not depend on N.
    # (At p >= 6 a tip seed could instead trigger the spurious end-point
    # concentration of masses above the half-line threshold, so skip it.)
    if trunc.boundary and opts.p < 6.0:
        bv = min(trunc.boundary)
        bdist = mesh.node_distances(bv)
        bprof = phi_mu(soliton_params(opts.p), 2.0 * opts.mu, bdist)
        out.append((f"edge:{bv}", GraphFunction(mesh, bprof)))
    # Bumps hugging any free tips of cell 0 (terminal edges matter at p = 6).
    g = mesh.graph
    for eid in cell0:
        e = g.edges[eid]
        for vtx, from_end in ((e.v, False), (e.w, True)):
            if g.degree(vtx) == 1:
                x = mesh.edge_x[eid]
                z = (e.length - x) if from_end else x
                vals = np.zeros(mesh.n_nodes)
                vals[mesh.edge_nodes[eid]] = np.exp(-((4.0 * z / e.length) ** 2))
                out.append((f"tip:{eid}", GraphFunction(mesh, vals)))
    # Narrow spikes: starts already concentrated near the mesh scale, so a
    # mass-supercritical run is not trapped at a broad stationary point.
    e0 = g.edges[cell0[0]]
    for width in (40.0 * mesh.h_target, 10.0 * mesh.h_target):
        w = min(width, e0.length)
        x = mesh.edge_x[cell0[0]]
        mid = e0.length / 2.0
        vals = np.zeros(mesh.n_nodes)
        vals[mesh.edge_nodes[cell0[0]]] = np.maximum(0.0, 1.0 - np.abs(x - mid) / (w / 2.0))
        out.append((f"spike:{w:g}", GraphFunction(mesh, vals)))
    rng = np.random.default_rng(opts.seed)
    for j in range(opts.starts):
        vals = rng.standard_normal(mesh.n_nodes)
        for _ in range(10):
            acc = vals.copy()
            cnt = np.ones_like(vals)
            np.add.at(acc, mesh.i0, vals[mesh.i1])
            np.add.at(acc, mesh.i1, vals[mesh.i0])
            np.add.at(cnt, mesh.i0, 1.0)
            np.add.at(cnt, mesh.i1, 1.0)
            vals = acc / cnt
        out.append((f"random{j}", GraphFunction(mesh, np.abs(vals) + 1e-3)))
    return out


def minimize(
    s: PeriodicSpec,
    opts: MinimizeOptions,
    extra_starts: Sequence[GraphFunction] = (),
    use_default_starts: bool = True,
) -> MinimizeReport:
    """Multistart projected descent with three-way classification.

    Vanishing requires the best stationary state to be both nearly flat
    (sup within a few multiples of the mass-spread level) and energetically
    trivial; either failure keeps the Converged label.
    """
    trunc = build_truncation(s, opts.n_cells)
    mesh = Mesh(trunc, opts.mesh_h)
    if opts.boundary == "dirichlet":
        free = np.ones(mesh.n_nodes)
        for v in trunc.boundary:
            free[mesh.vertex_index[v]] = 0.0
    elif opts.boundary == "free":
        free = None
    else:
        raise ValueError(f"unknown boundary condition {opts.boundary!r}")
    starts = default_starts(mesh, trunc, opts) if use_default_starts else []
    starts += [(f"extra{i}", GraphFunction(mesh, u.values.copy())) for i, u in enumerate(extra_starts)]
    if not starts:
        raise ValueError("no starting profiles: enable default starts or pass extra_starts")

    outcomes: List[_RunOutcome] = []
    for label, u0 in starts:
        out = _descend(u0, opts, label, free)
        outcomes.append(out)
        if out.kind == "unbounded":
            f = out.u
            return MinimizeReport(
                status="unbounded",
                energy=out.energy,
                mass=l2_mass(f),
                kinetic=kinetic(f),
                sup=f.sup_norm(),
                lam=float("nan"),
                iterations=out.iterations,
                mesh_h=opts.mesh_h,
                n_cells=opts.n_cells,
                u=f,
                history=out.history,
                start_label=out.label,
            )

    converged = [o for o in outcomes if o.kind == "converged"]
    if not converged:
        raise InconclusiveRun(
            "no start converged within the iteration budget",
            histories=[o.history for o in outcomes],
        )
    for o in converged:
        polished = _newton_polish(o.u, opts, free)
        if polished is not None:
            o.u = polished
            o.energy = energy(polished, opts.p)
            if o.energy <= o.history[-1]:
                o.history.append(o.energy)
    best = min(converged, key=lambda o: o.energy)
    f = best.u
    res = el_residual(f, opts.p)
    sup = f.sup_norm()
    flat_level = math.sqrt(opts.mu / mesh.total_length)
    # The vanishing diagnosis only makes sense at the critical power: below
    # it the constrained infimum is attained, so a shallow delocalised state
    # is a (possibly truncation-limited) minimizer, not mass escaping to
    # infinity.  At p = 6 a near-zero energy with a sup at the flat level
    # is the truncation's picture of a vanishing sequence.
    if (
        opts.p >= 6.0
        and abs(best.energy) <= opts.vanish_energy_tol
        and sup <= 5.0 * flat_level
    ):
        status = "vanishing"
    else:
        status = "converged"
    return MinimizeReport(
        status=status,
        energy=best.energy,
        mass=l2_mass(f),
        kinetic=kinetic(f),
        sup=sup,
        lam=res.lam,
        iterations=best.iterations,
        mesh_h=opts.mesh_h,
        n_cells=opts.n_cells,
        u=f,
        residual=res,
        history=best.history,
        start_label=best.label,
    )


@dataclass
class SweepRow:
    mu: float
    status: str
    energy: float
    kinetic: float
    sup: float
    lam: float
    iterations: int
    n_cells: int
    mesh_h: float


def sweep(
    s: PeriodicSpec, mus: Sequence[float], base_opts: MinimizeOptions
) -> List[SweepRow]:
    rows: List[SweepRow] = []
    for mu in mus:
        opts = MinimizeOptions(**{**base_opts.__dict__, "mu": float(mu)})
        try:
            rep = minimize(s, opts)
            rows.append(
                SweepRow(
                    mu=float(mu),
                    status=rep.status,
                    energy=rep.energy,
                    kinetic=rep.kinetic,
                    sup=rep.sup,
                    lam=rep.lam,
                    iterations=rep.iterations,
                    n_cells=rep.n_cells,
                    mesh_h=rep.mesh_h,
                )
            )
        except InconclusiveRun:
            rows.append(
                SweepRow(
                    mu=float(mu),
                    status="inconclusive",
                    energy=float("nan"),
                    kinetic=float("nan"),
                    sup=float("nan"),
                    lam=float("nan"),
                    iterations=base_opts.max_iters,
                    n_cells=base_opts.n_cells,
                    mesh_h=base_opts.mesh_h,
                )
            )
    return rows
