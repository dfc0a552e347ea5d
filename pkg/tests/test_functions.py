import math

import numpy as np
import pytest

from periodicnls import corpus
from periodicnls.mesh import (
    GraphFunction,
    Mesh,
    cell_shift,
    clipped_mass,
    el_residual,
    energy,
    energy_gradient,
    kinetic,
    l2_mass,
    lp_powersum,
    mass_gradient,
    rescale_to_mass,
    sup_cell,
)
from periodicnls.periodic import build_truncation
from periodicnls.solitons import line_mesh, phi_mu_callable, sample_on_line, soliton_params


def test_mesh_shares_vertex_dofs():
    trunc = build_truncation(corpus.ladder_spec(), 1)
    mesh = Mesh(trunc, 0.1)
    # Vertex slots come first and each edge's endpoint nodes are vertex slots.
    for eid in mesh.graph.edges:
        idx = mesh.edge_nodes[eid]
        assert idx[0] < mesh.n_vertices
        assert idx[-1] < mesh.n_vertices


def test_constant_function_exact_norms():
    trunc = build_truncation(corpus.ladder_spec(), 2)
    mesh = Mesh(trunc, 0.05)
    u = GraphFunction(mesh, 2.0 * np.ones(mesh.n_nodes))
    L = mesh.total_length
    assert math.isclose(l2_mass(u), 4.0 * L, rel_tol=1e-12)
    assert math.isclose(lp_powersum(u, 4.0), 16.0 * L, rel_tol=1e-12)
    assert kinetic(u) == 0.0


def test_linear_function_exact_kinetic():
    mesh = line_mesh(1.0, 0.01)
    u = mesh.from_edge_values(lambda eid, x: 3.0 * x)
    # |u'|^2 integrated over an interval of length 2
    assert math.isclose(kinetic(u), 9.0 * 2.0, rel_tol=1e-12)


def test_gradients_match_finite_differences():
    trunc = build_truncation(corpus.ladder_spec(), 1)
    mesh = Mesh(trunc, 0.25)
    rng = np.random.default_rng(7)
    u = GraphFunction(mesh, 0.5 + rng.random(mesh.n_nodes))
    p = 4.0
    ge = energy_gradient(u, p)
    gm = mass_gradient(u)
    eps = 1e-6
    for k in rng.choice(mesh.n_nodes, size=8, replace=False):
        vp = u.values.copy()
        vm = u.values.copy()
        vp[k] += eps
        vm[k] -= eps
        de = (energy(GraphFunction(mesh, vp), p) - energy(GraphFunction(mesh, vm), p)) / (2 * eps)
        dm = (l2_mass(GraphFunction(mesh, vp)) - l2_mass(GraphFunction(mesh, vm))) / (2 * eps)
        assert abs(de - ge[k]) < 5e-6 * max(1.0, abs(de))
        assert abs(dm - gm[k]) < 5e-6 * max(1.0, abs(dm))


def test_rescale_to_mass():
    mesh = line_mesh(5.0, 0.05)
    u = sample_on_line(mesh, lambda x: np.exp(-(x**2)))
    v = rescale_to_mass(u, 2.5)
    assert math.isclose(l2_mass(v), 2.5, rel_tol=1e-13)


def test_el_residual_zero_on_constant():
    trunc = build_truncation(corpus.ladder_spec(), 2)
    mesh = Mesh(trunc, 0.05)
    u = GraphFunction(mesh, 1.3 * np.ones(mesh.n_nodes))
    res = el_residual(u, 4.0)
    assert res.kirchhoff_max < 1e-12
    assert res.interior_residual < 1e-10


@pytest.mark.parametrize("p", [3.0, 4.0])
def test_el_residual_small_for_sampled_soliton(p):
    mesh = line_mesh(30.0, 0.01)
    u = sample_on_line(mesh, phi_mu_callable(p, 1.0))
    res = el_residual(u, p)
    params = soliton_params(p)
    assert res.interior_residual < 1e-3
    # lambda from the discrete identity should approximate a^2 k^2
    k = 2.0 / (p - 2.0)
    assert abs(res.lam - params.a**2 * k**2) < 1e-3


def test_el_residual_h_convergence_slope():
    p = 4.0
    errs = []
    hs = [0.04, 0.02, 0.01]
    for h in hs:
        mesh = line_mesh(30.0, h)
        u = sample_on_line(mesh, phi_mu_callable(p, 1.0))
        errs.append(el_residual(u, p).interior_residual)
    slope = (math.log(errs[0]) - math.log(errs[-1])) / (math.log(hs[0]) - math.log(hs[-1]))
    assert slope >= 1.9


def test_cell_shift_and_clip():
    trunc = build_truncation(corpus.ladder_spec(), 2)
    mesh = Mesh(trunc, 0.05)
    vals = np.zeros(mesh.n_nodes)
    for eid, i in trunc.cell_of_edge.items():
        if i == 2:
            # interior nodes only: endpoint DOFs are shared with neighbours
            vals[mesh.edge_nodes[eid][1:-1]] = 1.0
    u = GraphFunction(mesh, vals)
    assert sup_cell(u) == 2
    shifted = cell_shift(u, -2)
    assert sup_cell(shifted) == 0
    # mass clipped when shifting out of range equals the mass that was dropped
    assert clipped_mass(u, -2) <= 1e-12
    assert clipped_mass(u, 2) > 0.0


def test_energy_is_kinetic_minus_potential():
    mesh = line_mesh(10.0, 0.02)
    u = sample_on_line(mesh, lambda x: 1.0 / np.cosh(x))
    p = 4.0
    assert math.isclose(energy(u, p), 0.5 * kinetic(u) - lp_powersum(u, p) / p, rel_tol=1e-12)
