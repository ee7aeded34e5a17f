"""Cross-module invariant suites run by ``swpdyn validate``.

Each suite returns a :class:`SuiteResult` with the measured worst-case error
and the tolerance it was held to.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (MultiIndex, PacketParams, TangentVector, eval_packet_grid, inner_product,
                   quadrature_grid)
from .dynamics import ModelConfig, ReducedState, full_field, full_hamiltonian, reduced_field
from .egorov import wigner_transform, wigner_weight
from .geometry import (directional_derivative_fd, momentum_map, omega_n, reduced_coordinates,
                       reduced_form_matrix, solve_reduced_field)
from .integrators import (IntegratorSpec, Method, _reduced_rhs, propagate, reduced_from_array,
                          reduced_to_array, rk4_step, splitting_step)
from .potentials import PolynomialPotential, cubic_well_potential

__all__ = [
    "SuiteResult",
    "SUITES",
    "run_suites",
    "random_state",
    "orthonormality_suite",
    "conservation_suite",
    "consistency_suite",
    "wigner_suite",
    "order_suite",
    "symplecticity_suite",
]


@dataclass(frozen=True)
class SuiteResult:
    name: str
    measured: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.measured) and self.measured <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{status}  {self.name:<16} measured {self.measured:.3e}  tolerance {self.tolerance:.1e}{extra}"


def _well_cfg(n: int, hbar: float = 0.05) -> ModelConfig:
    return ModelConfig(hbar, 1.0, MultiIndex((n,)), cubic_well_potential())


def _well_packet(hbar: float = 0.05) -> PacketParams:
    return PacketParams.create([0.25], [1.0], 0.0, 1.0, hbar=hbar)


def coupled_quartic_2d() -> PolynomialPotential:
    """A confining quartic on R^2 with a cubic coupling."""
    return PolynomialPotential([(1.0, (2, 0)), (2.0, (0, 2)), (0.3, (3, 0)), (0.5, (1, 2)),
                                (0.1, (4, 0)), (0.1, (0, 4))])


def random_state(rng: np.random.Generator, d: int = 1, uniform: bool = True):
    """Random ``(cfg, y)`` with a normalised packet, ``n <= 5`` and ``hbar`` in [0.02, 0.1]."""
    hbar = rng.uniform(0.02, 0.1)
    if uniform:
        n = (int(rng.integers(0, 6)),) * d
    else:
        n = tuple(int(k) for k in rng.integers(0, 6, size=d))
    pot = cubic_well_potential() if d == 1 else coupled_quartic_2d()
    cfg = ModelConfig(hbar, rng.uniform(0.5, 2.0), MultiIndex(n), pot)
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    B = Q @ np.diag(rng.uniform(0.5, 2.0, size=d)) @ Q.T
    M = rng.standard_normal((d, d))
    A = 0.5 * (M + M.T)
    y = PacketParams.create(rng.uniform(-1, 1, d), rng.standard_normal(d), A, B,
                            phi=rng.uniform(-1, 1), hbar=hbar)
    return cfg, y


def orthonormality_suite(nmax: int = 10) -> SuiteResult:
    hbar = 0.05
    y = PacketParams.create([0.25], [1.0], 0.3, 1.5, hbar=hbar)
    x = quadrature_grid(y, MultiIndex((nmax,)), hbar)
    chis = [eval_packet_grid(y, MultiIndex((m,)), hbar, x) for m in range(nmax + 1)]
    G = np.array([[inner_product(a, b, x) for b in chis] for a in chis])
    return SuiteResult("orthonormality", float(np.abs(G - np.eye(nmax + 1)).max()), 1e-8,
                       f"m, n <= {nmax}")


def conservation_suite(t_final: float = 1.0) -> SuiteResult:
    worst = 0.0
    for n in (0, 5):
        cfg = _well_cfg(n)
        traj = propagate(cfg, IntegratorSpec(Method.RK4, 1e-3, t_final), _well_packet())
        mm = np.array([momentum_map(cfg, s) for s in traj.states])
        worst = max(worst, float(np.abs(traj.norm - traj.norm[0]).max()),
                    float(np.abs(mm - mm[0]).max()))
    return SuiteResult("conservation", worst, 1e-9, "norm and momentum map, full RK4, n in {0, 5}")


def _full_residual(cfg: ModelConfig, y: PacketParams, rng: np.random.Generator) -> float:
    X = full_field(cfg, y)
    h = 1e-5
    shift = lambda z, v, s: z.shifted(v, s)
    lhs, rhs = [], []
    for _ in range(6):
        v = TangentVector.random(y.d, rng)
        lhs.append(omega_n(cfg, y, X, v))
        rhs.append(directional_derivative_fd(lambda z: full_hamiltonian(cfg, z), y, v, h, shift))
    lhs, rhs = np.array(lhs), np.array(rhs)
    return float(np.abs(lhs - rhs).max() / np.abs(rhs).max())


def _reduced_residual(cfg: ModelConfig, y: PacketParams) -> float:
    s = ReducedState.from_packet(y, cfg.n)
    X = np.concatenate([np.ravel(a) for a in reduced_field(cfg, s)])
    Y = np.concatenate([np.ravel(a) for a in solve_reduced_field(cfg, s)])
    return float(np.abs(X - Y).max() / np.abs(Y).max())


def consistency_suite(states: int = 50, seed: int = 7) -> SuiteResult:
    """``Omega(X, .) = dH`` for the full and reduced systems at random states
    (``d = 1`` and uniform-index ``d = 2``)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(states):
        cfg, y = random_state(rng, d=1 if k % 2 == 0 else 2)
        worst = max(worst, _full_residual(cfg, y, rng), _reduced_residual(cfg, y))
    return SuiteResult("consistency", worst, 1e-6, f"{states} random states")


def wigner_suite(nmax: int = 4, grid: int = 60) -> SuiteResult:
    hbar = 0.05
    y = PacketParams.create([0.25], [1.0], 0.3, 1.5, hbar=hbar)
    xs = np.linspace(-0.5, 1.0, grid)
    xis = np.linspace(0.2, 1.8, grid)
    X, XI = np.meshgrid(xs, xis, indexing="ij")
    z = np.column_stack([X.ravel(), XI.ravel()])
    worst = 0.0
    for n in range(nmax + 1):
        cfg = _well_cfg(n, hbar)
        g, w = wigner_weight(cfg, y, cfg.n, z)
        W = wigner_transform(y, cfg.n, hbar, xs, xis)
        worst = max(worst, float(np.abs(W.ravel() - g * w).max()))
    return SuiteResult("wigner", worst, 1e-4, f"n <= {nmax}, {grid}x{grid} grid")


def _observed_order(step: Callable, x0: np.ndarray, t: float, dts) -> float:
    def run(dt):
        x = x0
        for _ in range(int(round(t / dt))):
            x = step(x, dt)
        return x

    sols = [run(dt) for dt in dts]
    e1 = np.abs(sols[0] - sols[1]).max()
    e2 = np.abs(sols[1] - sols[2]).max()
    return float(np.log2(e1 / e2))


def order_suite() -> SuiteResult:
    """Observed convergence order of the splitting (2) and RK4 (4) reduced integrators."""
    cfg = _well_cfg(3)
    s0 = ReducedState.from_packet(_well_packet(), cfg.n)
    x0 = reduced_to_array(s0)
    split = lambda x, dt: reduced_to_array(splitting_step(cfg, reduced_from_array(x, 1), dt))
    f = _reduced_rhs(cfg)
    rk = lambda x, dt: rk4_step(f, x, dt)
    p_split = _observed_order(split, x0, 0.8, (0.02, 0.01, 0.005))
    p_rk = _observed_order(rk, x0, 0.8, (0.02, 0.01, 0.005))
    dev = max(abs(p_split - 2.0), abs(p_rk - 4.0))
    return SuiteResult("integrator_order", dev, 0.3,
                       f"splitting {p_split:.2f}, rk4 {p_rk:.2f}")


def step_jacobian(cfg: ModelConfig, s: ReducedState, dt: float, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of one splitting step on :func:`reduced_coordinates`."""
    basis = reduced_coordinates(s.d)

    def coords(state):
        d = state.d
        iu = np.triu_indices(d)
        return np.concatenate([state.q, state.p, state.A[iu], state.Bn[iu]])

    cols = []
    for e in basis:
        plus = coords(splitting_step(cfg, s.shifted(e, h), dt))
        minus = coords(splitting_step(cfg, s.shifted(e, -h), dt))
        cols.append((plus - minus) / (2 * h))
    return np.column_stack(cols)


def symplecticity_suite(samples: int = 5, seed: int = 3) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(samples):
        cfg, y = random_state(rng, d=1 if k % 2 == 0 else 2)
        s = ReducedState.from_packet(y, cfg.n)
        J = step_jacobian(cfg, s, 0.01)
        W0 = reduced_form_matrix(cfg, s)
        W1 = reduced_form_matrix(cfg, splitting_step(cfg, s, 0.01))
        worst = max(worst, float(np.abs(J.T @ W1 @ J - W0).max() / np.abs(W0).max()))
    return SuiteResult("symplecticity", worst, 1e-6, "FD Jacobian of one splitting step")


SUITES: dict[str, Callable[[], SuiteResult]] = {
    "orthonormality": orthonormality_suite,
    "conservation": conservation_suite,
    "consistency": consistency_suite,
    "wigner": wigner_suite,
    "integrator_order": order_suite,
    "symplecticity": symplecticity_suite,
}


def run_suites(names=None) -> list[SuiteResult]:
    names = list(SUITES) if names is None else list(names)
    return [SUITES[name]() for name in names]
