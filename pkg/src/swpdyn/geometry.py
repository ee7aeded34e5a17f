"""Canonical one-form, symplectic forms and momentum map on the packet manifold.

Forms are evaluated as multilinear functions of tangent vectors.  A wedge
``a ^ b`` applied to ``(u, v)`` is ``a(u) b(v) - a(v) b(u)``.  The finite
difference helpers at the bottom are used to check ``Omega = -dTheta`` and
``i_X Omega = dH`` numerically.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .core import PacketParams, TangentVector, b_n_differential, b_n_matrix, norm_squared
from .dynamics import ModelConfig, ReducedState, ReducedTangent, reduced_hamiltonian

__all__ = [
    "theta_n",
    "omega_n",
    "omega_reduced",
    "momentum_map",
    "reduced_form_matrix",
    "reduced_coordinates",
    "exterior_derivative_fd",
    "directional_derivative_fd",
    "fd_step",
    "solve_reduced_field",
]


def theta_n(cfg: ModelConfig, y: PacketParams, v: TangentVector) -> float:
    """``N (p.dq - (hbar/4) tr((B^(n))^{-1} dA) - dphi)`` applied to ``v``."""
    Binv_n = np.linalg.inv(b_n_matrix(y.B, cfg.n))
    val = y.p @ v.dq - 0.25 * cfg.hbar * np.trace(Binv_n @ v.dA) - v.dphi
    return float(norm_squared(y, cfg.hbar) * val)


def omega_n(cfg: ModelConfig, y: PacketParams, u: TangentVector, v: TangentVector) -> float:
    """Symplectic form of the full system evaluated on ``(u, v)``."""
    hbar = cfg.hbar
    Bn = b_n_matrix(y.B, cfg.n)
    Binv_n = np.linalg.inv(Bn)

    def pieces(w: TangentVector):
        dBn = b_n_differential(y.B, cfg.n, w.dB)
        return dict(
            dq=w.dq,
            dp=w.dp,
            trB=float(np.trace(Binv_n @ dBn)),
            trA=float(np.trace(Binv_n @ w.dA)),
            dA=w.dA,
            dBinv=-Binv_n @ dBn @ Binv_n,
            dphi=w.dphi,
            ddelta=w.ddelta,
        )

    a, b = pieces(u), pieces(v)
    p = y.p

    def wedge(x1, y1, x2, y2):
        return x1 * y2 - x2 * y1

    val = (a["dq"] @ b["dp"] - b["dq"] @ a["dp"]
           - 0.5 * wedge(p @ a["dq"], a["trB"], p @ b["dq"], b["trB"])
           - (2.0 / hbar) * wedge(p @ a["dq"], a["ddelta"], p @ b["dq"], b["ddelta"])
           - 0.25 * hbar * (np.sum(a["dA"] * b["dBinv"]) - np.sum(b["dA"] * a["dBinv"]))
           + 0.125 * hbar * wedge(a["trA"], a["trB"], b["trA"], b["trB"])
           + 0.5 * wedge(a["trA"], a["ddelta"], b["trA"], b["ddelta"])
           - 0.5 * wedge(a["trB"], a["dphi"], b["trB"], b["dphi"])
           + (2.0 / hbar) * wedge(a["dphi"], a["ddelta"], b["dphi"], b["ddelta"]))
    return float(norm_squared(y, hbar) * val)


def omega_reduced(cfg: ModelConfig, s: ReducedState, u: ReducedTangent, v: ReducedTangent) -> float:
    """``dq ^ dp + (hbar/4) d(B^(n))^{-1}_jk ^ dA_jk`` on ``(u, v)``."""
    Binv_n = np.linalg.inv(s.Bn)
    du = -Binv_n @ np.asarray(u.dBn) @ Binv_n
    dv = -Binv_n @ np.asarray(v.dBn) @ Binv_n
    val = (np.dot(u.dq, v.dp) - np.dot(v.dq, u.dp)
           + 0.25 * cfg.hbar * (np.sum(du * np.asarray(v.dA)) - np.sum(dv * np.asarray(u.dA))))
    return float(val)


def momentum_map(cfg: ModelConfig, y: PacketParams) -> float:
    """Conserved quantity of the phase symmetry, ``-hbar N_hbar(B, delta)``."""
    return -cfg.hbar * norm_squared(y, cfg.hbar)


# ---------------------------------------------------------------------------
# Matrix representation on the reduced coordinates
# ---------------------------------------------------------------------------


def reduced_coordinates(d: int) -> list[ReducedTangent]:
    """Coordinate basis ``(q_i, p_i, A_jk, Bn_jk)`` with ``j <= k`` of the reduced space.

    Off-diagonal symmetric coordinates move both ``(j, k)`` and ``(k, j)``.
    """
    z, Z = np.zeros(d), np.zeros((d, d))
    basis = []
    for i in range(d):
        e = z.copy()
        e[i] = 1.0
        basis.append(ReducedTangent(e, z, Z, Z))
    for i in range(d):
        e = z.copy()
        e[i] = 1.0
        basis.append(ReducedTangent(z, e, Z, Z))
    sym = []
    for j in range(d):
        for k in range(j, d):
            E = Z.copy()
            E[j, k] = E[k, j] = 1.0
            sym.append(E)
    basis += [ReducedTangent(z, z, E, Z) for E in sym]
    basis += [ReducedTangent(z, z, Z, E) for E in sym]
    return basis


def reduced_form_matrix(cfg: ModelConfig, s: ReducedState) -> np.ndarray:
    """Matrix ``W_ab = Omega_bar(e_a, e_b)`` on :func:`reduced_coordinates`."""
    basis = reduced_coordinates(s.d)
    k = len(basis)
    W = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            W[a, b] = omega_reduced(cfg, s, basis[a], basis[b])
            W[b, a] = -W[a, b]
    return W


# ---------------------------------------------------------------------------
# Finite-difference exterior calculus
# ---------------------------------------------------------------------------


def fd_step(scale: float, rel: float = 1e-4) -> float:
    """Central-difference step scaled by the coordinate magnitude."""
    return rel * max(1.0, abs(scale))


def directional_derivative_fd(f: Callable, x, v, h: float, shift: Callable) -> float:
    """Fourth-order central difference of ``f`` at ``x`` along ``v``."""
    return (-f(shift(x, v, 2 * h)) + 8 * f(shift(x, v, h))
            - 8 * f(shift(x, v, -h)) + f(shift(x, v, -2 * h))) / (12.0 * h)


def exterior_derivative_fd(one_form: Callable, x, u, v, h: float, shift: Callable) -> float:
    """``d alpha(u, v) = D_u[alpha(v)] - D_v[alpha(u)]`` for constant coordinate fields."""
    du = directional_derivative_fd(lambda z: one_form(z, v), x, u, h, shift)
    dv = directional_derivative_fd(lambda z: one_form(z, u), x, v, h, shift)
    return du - dv


def solve_reduced_field(cfg: ModelConfig, s: ReducedState, rel_step: float = 1e-5) -> ReducedTangent:
    """Hamiltonian vector field of the reduced Hamiltonian found by solving
    ``Omega_bar(X, .) = dH_bar`` on the coordinate basis.

    ``dH_bar`` is taken by central differences.  For ``d = 1`` or a uniform
    index this reproduces :func:`~swpdyn.dynamics.reduced_field`; for a
    non-uniform index in ``d > 1`` the closed-form ``A`` equation is only
    approximate and this is the consistent alternative.
    """
    basis = reduced_coordinates(s.d)
    W = reduced_form_matrix(cfg, s)
    shift = lambda z, w, h: z.shifted(w, h)
    h = rel_step * max(1.0, float(np.max(np.abs(np.concatenate(
        [s.q, s.p, s.A.ravel(), s.Bn.ravel()])))))
    h = min(h, 0.1 * float(np.linalg.eigvalsh(s.Bn)[0]))
    dH = np.array([directional_derivative_fd(lambda z: reduced_hamiltonian(cfg, z), s, e, h, shift)
                   for e in basis])
    # Omega_bar(X, e_b) = sum_a c_a W_ab = dH_b
    c = np.linalg.solve(W.T, dH)
    d = s.d
    out = ReducedTangent(np.zeros(d), np.zeros(d), np.zeros((d, d)), np.zeros((d, d)))
    for ca, e in zip(c, basis):
        out = ReducedTangent(out.dq + ca * e.dq, out.dp + ca * e.dp,
                             out.dA + ca * e.dA, out.dBn + ca * e.dBn)
    return out
