"""Egorov / IVR reference: classical transport of the initial Wigner function.

The Wigner function of ``chi_n`` is the symplectic image of the harmonic
oscillator Wigner function,

    W_n(z) = (pi hbar)^{-d} exp(-|w|^2/hbar) prod_j (-1)^{n_j} L_{n_j}(2 r_j^2 / hbar),

with ``w = S^{-1}(z - (q, p))``, ``S = [[B^{-1/2}, 0], [A B^{-1/2}, B^{1/2}]]`` and
``r_j^2 = w_j^2 + w_{j+d}^2``.  Samples carry signed weights (see
:func:`sample_ensemble`); expectations are self-normalised weighted
means over the classically propagated samples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
import numpy as np

from .core import MultiIndex, PacketParams, eval_packet_grid, norm_squared, quadrature_grid, sym_sqrt
from .dynamics import ModelConfig, classical_energy
from .integrators import IntegratorSpec, Method, stormer_verlet_step

__all__ = [
    "WeightedEnsemble",
    "EgorovSeries",
    "laguerre",
    "symplectic_frame",
    "wigner_weight",
    "sample_ensemble",
    "egorov_expectations",
    "wigner_transform",
]

DIVERGENCE_RADIUS = 1e6


def laguerre(n: int, x):
    """Laguerre polynomial ``L_n(x)`` by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    for k in range(n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur


def symplectic_frame(y: PacketParams) -> tuple[np.ndarray, np.ndarray]:
    """The symplectic matrix ``S`` built from ``(Q, P)`` and its inverse."""
    root, inv_root = sym_sqrt(y.B)
    d = y.d
    Z = np.zeros((d, d))
    S = np.block([[inv_root, Z], [y.A @ inv_root, root]])
    S_inv = np.block([[root, Z], [-inv_root @ y.A, inv_root]])
    return S, S_inv


def _laguerre_weight(w: np.ndarray, n: MultiIndex, hbar: float) -> np.ndarray:
    d = n.d
    weight = np.ones(w.shape[0])
    for j, nj in enumerate(n.entries):
        if nj:
            r2 = w[:, j] ** 2 + w[:, j + d] ** 2
            weight *= (-1.0) ** nj * laguerre(nj, 2.0 * r2 / hbar)
    return weight


def wigner_weight(cfg: ModelConfig, y: PacketParams, n: MultiIndex, z):
    """Gaussian envelope ``g(z)`` and signed weight with ``W_n(z) = g(z) * weight(z)``.

    ``z`` is a phase-space point ``(x, xi)`` of length ``2d`` or a batch of
    shape ``(N, 2d)``; ``y`` should be normalised.
    """
    n = n if isinstance(n, MultiIndex) else MultiIndex(n)
    hbar, d = cfg.hbar, y.d
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    _, S_inv = symplectic_frame(y)
    w = (z - np.concatenate([y.q, y.p])) @ S_inv.T
    g = (np.pi * hbar) ** (-d) * np.exp(-np.sum(w * w, axis=1) / hbar)
    weight = _laguerre_weight(w, n, hbar)
    if single:
        return float(g[0]), float(weight[0])
    return g, weight


@dataclass(frozen=True)
class WeightedEnsemble:
    """Phase-space samples ``points`` (``(N, 2d)``) with signed ``weights``."""

    points: np.ndarray
    weights: np.ndarray
    seed: int

    def __post_init__(self):
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError("points and weights must have the same length")

    @property
    def d(self) -> int:
        return self.points.shape[1] // 2

    def __len__(self):
        return self.weights.shape[0]

    def mean(self, values: np.ndarray) -> np.ndarray:
        """Self-normalised weighted mean of per-sample ``values``."""
        w = self.weights
        return np.tensordot(w, values, axes=(0, 0)) / w.sum()

    def mc_stderr(self, values: np.ndarray) -> np.ndarray:
        """Delta-method standard error of the self-normalised mean."""
        w = self.weights
        mu = self.mean(values)
        resid = values - mu
        if resid.ndim > 1:
            wr = w[:, None] * resid
        else:
            wr = w * resid
        return np.sqrt(np.sum(wr ** 2, axis=0)) / abs(w.sum())


def _radial_table(nj: int, grid_points: int = 200001):
    """Tabulated radial CDF of ``u = 2 r^2/hbar`` under ``|W|`` for one oscillator pair.

    In these variables the radial density is ``exp(-u/2) |L_n(u)| / 2``,
    independent of ``hbar``.  Returns ``(u, cdf, mass)`` with ``mass`` the
    integral of ``|W|`` over the pair.
    """
    u_max = 2.0 * nj + 80.0 + 20.0 * np.sqrt(nj)
    u = np.linspace(0.0, u_max, grid_points)
    dens = 0.5 * np.exp(-0.5 * u) * np.abs(laguerre(nj, u))
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(u))])
    mass = cdf[-1]
    return u, cdf / mass, mass


SCHEMES = ("absolute", "envelope")


def sample_ensemble(cfg: ModelConfig, y: PacketParams, n: MultiIndex, count: int,
                    seed: int, scheme: str = "absolute") -> WeightedEnsemble:
    """Draw ``count`` signed-weight phase-space samples representing ``W_n``.

    ``scheme="absolute"`` samples ``|W_n|``, which factorises over the
    oscillator pairs ``(w_j, w_{j+d})``: each pair gets a radius from a
    tabulated inverse CDF and a uniform angle.  Weights are
    ``sign(W_n) * int |W_n|`` so that their mean tends to 1.

    ``scheme="envelope"`` draws ``w ~ N(0, hbar/2)`` and uses the Laguerre
    factor as weight.  Both are unbiased, but the envelope weights have a
    variance that grows quickly with ``|n|`` (effective sample size below
    one for ``n = 10`` at 1e5 samples).

    In both cases ``z = (q, p) + S w``.  Uses numpy's PCG64 generator, so
    the ensemble is reproducible for a given seed.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown sampling scheme {scheme!r}; expected one of {SCHEMES}")
    n = n if isinstance(n, MultiIndex) else MultiIndex(n)
    rng = np.random.Generator(np.random.PCG64(seed))
    d, hbar = y.d, cfg.hbar
    S, _ = symplectic_frame(y)
    z0 = np.concatenate([y.q, y.p])
    if scheme == "envelope":
        w = rng.normal(scale=np.sqrt(0.5 * hbar), size=(count, 2 * d))
        return WeightedEnsemble(z0 + w @ S.T, _laguerre_weight(w, n, hbar), seed)
    w = np.empty((count, 2 * d))
    weight = np.ones(count)
    for j, nj in enumerate(n.entries):
        if nj == 0:
            u = rng.exponential(2.0, size=count)
        else:
            grid, cdf, mass = _radial_table(nj)
            u = np.interp(rng.random(count), cdf, grid)
            weight *= mass * np.sign((-1.0) ** nj * laguerre(nj, u))
        angle = rng.uniform(0.0, 2.0 * np.pi, size=count)
        r = np.sqrt(0.5 * hbar * u)
        w[:, j] = r * np.cos(angle)
        w[:, j + d] = r * np.sin(angle)
    return WeightedEnsemble(z0 + w @ S.T, weight, seed)


@dataclass
class EgorovSeries:
    """Self-normalised expectation values along the transported ensemble."""

    times: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    mean_energy: np.ndarray
    ess: np.ndarray
    stderr_x: np.ndarray
    stderr_p: np.ndarray
    excluded: int = 0


def egorov_expectations(cfg: ModelConfig, ensemble: WeightedEnsemble, spec: IntegratorSpec) -> EgorovSeries:
    """Transport every sample with Stormer-Verlet and record ``<x>``, ``<p>`` and
    ``<H_cl>`` at every step.

    Samples leaving the ball ``|z| < 1e6`` (or becoming non-finite) are
    dropped from all later averages and counted in ``excluded``.
    """
    if spec.method is not Method.STORMER_VERLET:
        raise ValueError("the Egorov reference transports samples with Stormer-Verlet")
    d = ensemble.d
    q = ensemble.points[:, :d].copy()
    p = ensemble.points[:, d:].copy()
    w = ensemble.weights.astype(float).copy()
    active = np.ones(w.shape[0], dtype=bool)
    nsteps = spec.steps
    times = spec.dt * np.arange(nsteps + 1)
    mx = np.empty((nsteps + 1, d))
    mp = np.empty((nsteps + 1, d))
    me = np.empty(nsteps + 1)
    ess = np.empty(nsteps + 1)
    sx = np.empty((nsteps + 1, d))
    sp = np.empty((nsteps + 1, d))

    def record(i):
        wa = np.where(active, w, 0.0)
        tot = wa.sum()
        mx[i] = wa @ q / tot
        mp[i] = wa @ p / tot
        me[i] = wa @ np.where(active, classical_energy(cfg, q, p), 0.0) / tot
        ess[i] = tot ** 2 / np.sum(wa ** 2)
        sx[i] = np.sqrt(np.sum((wa[:, None] * (q - mx[i])) ** 2, axis=0)) / abs(tot)
        sp[i] = np.sqrt(np.sum((wa[:, None] * (p - mp[i])) ** 2, axis=0)) / abs(tot)

    record(0)
    for i in range(1, nsteps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            q, p = stormer_verlet_step(cfg, q, p, spec.dt)
            bad = ~(np.all(np.isfinite(q), axis=1) & np.all(np.isfinite(p), axis=1))
            bad |= np.sqrt(np.sum(q * q, axis=1) + np.sum(p * p, axis=1)) > DIVERGENCE_RADIUS
        newly = bad & active
        if newly.any():
            active &= ~bad
            q[bad] = 0.0
            p[bad] = 0.0
        record(i)
    excluded = int((~active).sum())
    if excluded:
        warnings.warn(f"{excluded} divergent samples excluded from the Egorov averages",
                      RuntimeWarning, stacklevel=2)
    return EgorovSeries(times, mx, mp, me, ess, sx, sp, excluded)


def wigner_transform(y: PacketParams, n: MultiIndex, hbar: float, xs, xis,
                     s_points: int = 2048) -> np.ndarray:
    """Direct quadrature of ``(2 pi hbar)^{-1} int conj(psi(x + s/2)) psi(x - s/2) e^{i s xi/hbar} ds``
    for the normalised packet ``psi = chi_n / ||chi_n||`` (d = 1).

    Returns an array of shape ``(len(xs), len(xis))``.
    """
    if y.d != 1:
        raise ValueError("the direct Wigner transform is implemented for d = 1")
    n = n if isinstance(n, MultiIndex) else MultiIndex(n)
    xs = np.asarray(xs, dtype=float)
    xis = np.asarray(xis, dtype=float)
    scale = 1.0 / np.sqrt(norm_squared(y, hbar))
    half = quadrature_grid(y, n, hbar, points=2)[-1] - y.q[0]
    s = np.linspace(-2.0 * half, 2.0 * half, s_points)
    ds = s[1] - s[0]
    plus = eval_packet_grid(y, n, hbar, (xs[:, None] + 0.5 * s[None, :]).ravel()).reshape(xs.size, -1)
    minus = eval_packet_grid(y, n, hbar, (xs[:, None] - 0.5 * s[None, :]).ravel()).reshape(xs.size, -1)
    integrand = np.conj(plus) * minus * scale ** 2
    phase = np.exp(1j * np.outer(s, xis) / hbar)
    W = integrand @ phase * ds / (2.0 * np.pi * hbar)
    return W.real
