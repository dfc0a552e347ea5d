"""Line solitons of the stationary NLS equation and their scaling laws.

Subcritical (2 < p < 6): phi_mu(x) = mu^alpha phi_1(mu^beta x) with
alpha = 2/(6-p), beta = (p-2)/(6-p), where phi_1 = A sech^{alpha/beta}(a x)
has unit mass.  The amplitude A and width a are pinned numerically (bisection
against a quadrature mass) rather than hard-coded.

Critical (p = 6): phi_lam(x) = sqrt(lam) sech^{1/2}(2 lam x / sqrt 3); every
member has the same mass sqrt(3) pi / 2 and zero energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.integrate import quad

from .graphs import CompactGraph, Edge
from .mesh import GraphFunction, Mesh

MU_R = math.sqrt(3.0) * math.pi / 2.0      # critical mass of the line
MU_R_PLUS = math.sqrt(3.0) * math.pi / 4.0  # critical mass of the half line


@dataclass(frozen=True)
class SolitonParams:
    p: float
    alpha: float
    beta: float
    a: float       # width parameter of the unit-mass soliton
    amplitude: float
    lam: float     # Lagrange multiplier of the unit-mass soliton

    def sech_power(self) -> float:
        return self.alpha / self.beta


def _amplitude_for(p: float, a: float) -> float:
    # Plugging A sech^{2/(p-2)}(a x) into u'' + u^{p-1} = lam u forces
    # lam = a^2 k^2 and A^{p-2} = a^2 k (k+1) with k = 2/(p-2).
    k = 2.0 / (p - 2.0)
    return (a * a * k * (k + 1.0)) ** (1.0 / (p - 2.0))


def _mass_quadrature(p: float, a: float) -> float:
    k = 2.0 / (p - 2.0)
    amp = _amplitude_for(p, a)
    # Window where sech^{2k}(a x) has decayed below 1e-16.
    half = 40.0 / (2.0 * k * a) + 5.0 / a
    val, _ = quad(lambda x: (amp / np.cosh(a * x) ** k) ** 2, -half, half, limit=400)
    return val


@lru_cache(maxsize=None)
def soliton_params(p: float) -> SolitonParams:
    """Unit-mass soliton parameters for 2 < p < 6, via bisection on the width."""
    if not (2.0 < p < 6.0):
        raise ValueError("soliton_params needs 2 < p < 6")
    alpha = 2.0 / (6.0 - p)
    beta = (p - 2.0) / (6.0 - p)
    lo, hi = 1e-8, 1e8
    # mass(a) is strictly increasing in a (exponent 2k-1 > 0 for p < 6).
    if not (_mass_quadrature(p, lo) < 1.0 < _mass_quadrature(p, hi)):
        raise ValueError("bisection bracket failed")
    for _ in range(200):
        midpoint = 0.5 * (lo + hi)
        if _mass_quadrature(p, midpoint) < 1.0:
            lo = midpoint
        else:
            hi = midpoint
        if hi - lo <= 1e-14 * hi:
            break
    a = 0.5 * (lo + hi)
    k = 2.0 / (p - 2.0)
    return SolitonParams(
        p=p,
        alpha=alpha,
        beta=beta,
        a=a,
        amplitude=_amplitude_for(p, a),
        lam=a * a * k * k,
    )


def _sech(z: np.ndarray) -> np.ndarray:
    # 2 e^{-|z|} / (1 + e^{-2|z|}) never overflows, unlike 1/cosh for large z
    e = np.exp(-np.abs(np.asarray(z, dtype=float)))
    return 2.0 * e / (1.0 + e * e)


def phi_one(params: SolitonParams, x: np.ndarray) -> np.ndarray:
    k = 2.0 / (params.p - 2.0)
    return params.amplitude * _sech(params.a * np.asarray(x, dtype=float)) ** k


def phi_mu(params: SolitonParams, mu: float, x: np.ndarray) -> np.ndarray:
    """Mass-mu soliton via the subcritical scaling law."""
    return mu**params.alpha * phi_one(params, mu**params.beta * np.asarray(x, dtype=float))


def phi_mu_callable(p: float, mu: float) -> Callable[[np.ndarray], np.ndarray]:
    params = soliton_params(p)
    return lambda x: phi_mu(params, mu, x)


def soliton_energy(p: float, mu: float) -> float:
    """E(phi_mu, R) by quadrature (negative for 2 < p < 6)."""
    params = soliton_params(p)
    rate = params.a * mu**params.beta
    half = 40.0 / rate + 5.0 / rate

    def kin(x):
        return _phi_mu_prime(params, mu, x) ** 2

    def pot(x):
        return np.abs(phi_mu(params, mu, x)) ** p

    k, _ = quad(kin, -half, half, limit=400)
    q, _ = quad(pot, -half, half, limit=400)
    return 0.5 * k - q / p


def _phi_mu_prime(params: SolitonParams, mu: float, x):
    k = 2.0 / (params.p - 2.0)
    s = mu**params.beta
    z = params.a * s * np.asarray(x, dtype=float)
    return (
        -(mu**params.alpha)
        * params.amplitude
        * k
        * params.a
        * s
        * np.tanh(z)
        * _sech(z) ** k
    )


# ---------------------------------------------------------------------------
# Critical (p = 6) solitons
# ---------------------------------------------------------------------------


def critical_soliton(lam: float) -> Callable[[np.ndarray], np.ndarray]:
    """phi_lam(x) = sqrt(lam) sech^{1/2}((2/sqrt 3) lam x)."""
    c = 2.0 * lam / math.sqrt(3.0)
    return lambda x: np.sqrt(lam * _sech(c * np.asarray(x, dtype=float)))


def critical_soliton_prime(lam: float) -> Callable[[np.ndarray], np.ndarray]:
    c = 2.0 * lam / math.sqrt(3.0)

    def d(x):
        z = c * np.asarray(x, dtype=float)
        return -(lam**1.5 / math.sqrt(3.0)) * np.tanh(z) * np.sqrt(_sech(z))

    return d


def critical_kinetic_segment(lam: float, x0: float, x1: float) -> Tuple[float, float]:
    """Integral of |phi_lam'|^2 over [x0, x1]: (quadrature, printed closed form).

    The closed form (sqrt(3)/2) lam^2 [arctan(tanh(z/2)) - tanh(z) sech(z)/2]
    from the source derivation is evaluated alongside the quadrature; the two
    disagree by a constant factor and both are reported rather than reconciled.
    """
    d = critical_soliton_prime(lam)
    val, _ = quad(lambda x: d(x) ** 2, x0, x1, limit=400)
    c = 2.0 * lam / math.sqrt(3.0)

    def printed(x):
        z = c * x
        return math.sqrt(3.0) / 2.0 * lam**2 * (
            math.atan(math.tanh(z / 2.0)) - 0.5 * math.tanh(z) / math.cosh(z)
        )

    return val, printed(x1) - printed(x0)


# ---------------------------------------------------------------------------
# Line meshes for sampling
# ---------------------------------------------------------------------------


def line_mesh(half_width: float, h: float) -> Mesh:
    """A single-edge graph representing the interval [-half_width, half_width]."""
    g = CompactGraph(["L", "R"], [Edge("line", "L", "R", 2.0 * half_width)])
    return Mesh(g, h)


def sample_on_line(
    mesh: Mesh, f: Callable[[np.ndarray], np.ndarray]
) -> GraphFunction:
    """Sample f with the line edge recentred so x = 0 sits mid-edge."""
    length = mesh.graph.edges["line"].length
    return mesh.from_edge_values(lambda eid, x: f(x - 0.5 * length))
