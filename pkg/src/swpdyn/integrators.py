"""Fixed-step time integrators.

* Stormer-Verlet for the classical system (vectorised over ensembles);
* Strang splitting with exact kinetic and potential subflows for the
  semiclassical systems, symplectic for the reduced form and reducing to
  Stormer-Verlet when the O(hbar) corrections are switched off;
* classical RK4 as reference and fallback.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    NumericalError,
    PacketParams,
    SiegelPoint,
    _lam,
    _symmetrize,
    b_n_matrix,
    norm_squared,
    recover_b_from_bn,
)
from .dynamics import (
    ModelConfig,
    ReducedState,
    classical_energy,
    classical_field,
    corrected_potential_grad,
    full_field,
    full_hamiltonian,
    reduced_field,
    reduced_hamiltonian,
)

__all__ = [
    "Method",
    "IntegratorSpec",
    "Trajectory",
    "stormer_verlet_step",
    "potential_subflow",
    "kinetic_subflow",
    "splitting_step",
    "splitting_step_full",
    "rk4_step",
    "reduced_to_array",
    "reduced_from_array",
    "packet_to_array",
    "packet_from_array",
    "propagate",
]


class Method(str, enum.Enum):
    STORMER_VERLET = "stormer_verlet"
    VARIATIONAL_SPLITTING = "variational_splitting"
    RK4 = "rk4"


@dataclass(frozen=True)
class IntegratorSpec:
    method: Method
    dt: float
    t_final: float

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= 0:
            raise ValueError("t_final must be non-negative")

    @property
    def steps(self) -> int:
        return int(math.floor(self.t_final / self.dt + 1e-9))


# ---------------------------------------------------------------------------
# Classical
# ---------------------------------------------------------------------------


def stormer_verlet_step(cfg: ModelConfig, q, p, dt: float):
    """One kick-drift-kick step; ``q``, ``p`` may be ``(d,)`` or ``(N, d)``."""
    grad = cfg.potential.grad
    p_half = p - 0.5 * dt * grad(q)
    q_new = q + dt * p_half / cfg.mass
    p_new = p_half - 0.5 * dt * grad(q_new)
    return q_new, p_new


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def _check_splittable(cfg: ModelConfig) -> None:
    if not cfg.n.is_uniform:
        raise ValueError("the splitting integrator needs d = 1 or a uniform multi-index; "
                         "use rk4 for non-uniform indices")


def potential_subflow(cfg: ModelConfig, q, p, A, B, tau: float):
    """Exact flow of the potential part for time ``tau``: ``q`` and ``B`` are frozen,
    so ``p`` and ``A`` move linearly."""
    p = p - tau * corrected_potential_grad(cfg, q, B)
    A = _symmetrize(A - tau * cfg.potential.hess(q))
    return p, A


def _mobius(C: np.ndarray, tau: float, m: float):
    d = C.shape[0]
    M = np.eye(d) + (tau / m) * C
    try:
        C_new = np.linalg.solve(M.T, C.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular Mobius denominator; reduce the step size") from exc
    return 0.5 * (C_new + C_new.T), M


def kinetic_subflow(cfg: ModelConfig, q, p, A, B, tau: float):
    """Exact flow of the kinetic part: free drift of ``q`` and the Riccati flow
    ``C' = -C^2/m`` of ``C = A + iB``, solved by ``C <- C (I + tau C/m)^{-1}``."""
    q = q + tau * p / cfg.mass
    C_new, _ = _mobius(A + 1j * B, tau, cfg.mass)
    return q, _symmetrize(C_new.real), _symmetrize(C_new.imag)


def splitting_step(cfg: ModelConfig, s: ReducedState, dt: float) -> ReducedState:
    """Strang step ``V(dt/2) o T(dt) o V(dt/2)`` of the reduced system."""
    _check_splittable(cfg)
    B = s.B(cfg.n)
    p, A = potential_subflow(cfg, s.q, s.p, s.A, B, 0.5 * dt)
    q, A, B = kinetic_subflow(cfg, s.q, p, A, B, dt)
    p, A = potential_subflow(cfg, q, p, A, B, 0.5 * dt)
    out = ReducedState(q, p, A, b_n_matrix(B, cfg.n))
    if not (np.all(np.isfinite(out.p)) and np.all(np.isfinite(out.A))):
        raise NumericalError("non-finite state in splitting step")
    return out


def splitting_step_full(cfg: ModelConfig, y: PacketParams, dt: float) -> PacketParams:
    """Strang step of the full system including ``phi`` and ``delta``.

    In the potential subflow ``phi`` moves by ``-tau V(q)`` and ``delta`` is
    constant.  In the kinetic subflow ``delta + (hbar/4) log det B`` is
    conserved and ``int tr B dt`` has the closed form
    ``m sum_k arg(1 + tau lambda_k / m)`` over the eigenvalues of ``C``.
    """
    _check_splittable(cfg)
    m, hbar = cfg.mass, cfg.hbar
    lam = _lam(cfg.n)[0]
    phi, delta = y.phi, y.delta

    p, A = potential_subflow(cfg, y.q, y.p, y.A, y.B, 0.5 * dt)
    phi -= 0.5 * dt * float(cfg.potential.value(y.q))

    C = A + 1j * y.B
    ev = np.linalg.eigvals(C)
    int_trB = m * float(np.sum(np.angle(1.0 + dt * ev / m)))
    phi += dt * 0.5 * (p @ p) / m - hbar / (2.0 * m) * lam * int_trB
    q, A, B = kinetic_subflow(cfg, y.q, p, A, y.B, dt)
    _, logdet0 = np.linalg.slogdet(y.B)
    _, logdet1 = np.linalg.slogdet(B)
    delta -= 0.25 * hbar * (logdet1 - logdet0)

    p, A = potential_subflow(cfg, q, p, A, B, 0.5 * dt)
    phi -= 0.5 * dt * float(cfg.potential.value(q))
    return PacketParams(q, p, SiegelPoint(A, B), phi, delta)


# ---------------------------------------------------------------------------
# RK4 on flat arrays
# ---------------------------------------------------------------------------


def rk4_step(field: Callable[[np.ndarray], np.ndarray], state: np.ndarray, dt: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta step for ``x' = field(x)``."""
    x = np.asarray(state, dtype=float)
    k1 = field(x)
    k2 = field(x + 0.5 * dt * k1)
    k3 = field(x + 0.5 * dt * k2)
    k4 = field(x + dt * k3)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise NumericalError("non-finite RK4 stage")
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _unpack(x: np.ndarray, d: int):
    q, p = x[:d], x[d:2 * d]
    A = x[2 * d:2 * d + d * d].reshape(d, d)
    M = x[2 * d + d * d:2 * d + 2 * d * d].reshape(d, d)
    return q, p, A, M, x[2 * d + 2 * d * d:]


def reduced_to_array(s: ReducedState) -> np.ndarray:
    return np.concatenate([s.q, s.p, s.A.ravel(), s.Bn.ravel()])


def reduced_from_array(x: np.ndarray, d: int) -> ReducedState:
    q, p, A, Bn, _ = _unpack(x, d)
    return ReducedState(q, p, A, Bn)


def packet_to_array(y: PacketParams) -> np.ndarray:
    return np.concatenate([y.q, y.p, y.A.ravel(), y.B.ravel(), [y.phi, y.delta]])


def packet_from_array(x: np.ndarray, d: int) -> PacketParams:
    q, p, A, B, rest = _unpack(x, d)
    return PacketParams(q, p, SiegelPoint(A, B), rest[0], rest[1])


def _reduced_rhs(cfg: ModelConfig) -> Callable[[np.ndarray], np.ndarray]:
    d = cfg.d

    def f(x):
        v = reduced_field(cfg, reduced_from_array(x, d))
        return np.concatenate([v.dq, v.dp, v.dA.ravel(), v.dBn.ravel()])

    return f


def _full_rhs(cfg: ModelConfig) -> Callable[[np.ndarray], np.ndarray]:
    d = cfg.d

    def f(x):
        v = full_field(cfg, packet_from_array(x, d))
        return np.concatenate([v.dq, v.dp, v.dA.ravel(), v.dB.ravel(), [v.dphi, v.ddelta]])

    return f


def _classical_rhs(cfg: ModelConfig) -> Callable[[np.ndarray], np.ndarray]:
    d = cfg.d

    def f(x):
        dq, dp = classical_field(cfg, x[:d], x[d:])
        return np.concatenate([dq, dp])

    return f


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Fixed-step record of a run: one entry per output time.

    ``states`` holds ``(q, p)`` tuples for classical runs, ``ReducedState`` for
    reduced runs and ``PacketParams`` for full-system runs.  ``norm`` is NaN
    where no packet norm is defined.
    """

    kind: str
    times: np.ndarray
    states: list
    energy: np.ndarray
    norm: np.ndarray

    def __len__(self):
        return len(self.times)

    @property
    def q(self) -> np.ndarray:
        return np.array([_qp(s)[0] for s in self.states])

    @property
    def p(self) -> np.ndarray:
        return np.array([_qp(s)[1] for s in self.states])


def _qp(s):
    if isinstance(s, tuple):
        return s
    return s.q, s.p


def propagate(cfg: ModelConfig, spec: IntegratorSpec, initial,
              observers: Sequence[Callable] = ()) -> Trajectory:
    """Fixed-step integration loop.

    ``initial`` selects the system: a ``(q, p)`` tuple is classical, a
    ``ReducedState`` the reduced semiclassical system, a ``PacketParams`` the
    full system.  Splitting with a non-uniform index in ``d > 1`` falls back
    to RK4 with a warning.  Every record is also passed to each observer as
    ``observer(t, state)``.  A failing step raises ``NumericalError`` naming
    the time at which it failed.
    """
    method = spec.method
    if method is Method.VARIATIONAL_SPLITTING and not cfg.n.is_uniform \
            and not isinstance(initial, tuple):
        warnings.warn("no closed kinetic flow for a non-uniform index; falling back to rk4",
                      RuntimeWarning, stacklevel=2)
        method = Method.RK4
    if isinstance(initial, tuple):
        kind = "classical"
        d = cfg.d
        state = (np.atleast_1d(np.asarray(initial[0], float)),
                 np.atleast_1d(np.asarray(initial[1], float)))
        energy = lambda s: float(classical_energy(cfg, *s))
        norm = lambda s: math.nan
        if method is Method.STORMER_VERLET:
            step = lambda s: stormer_verlet_step(cfg, s[0], s[1], spec.dt)
        elif method is Method.RK4:
            f = _classical_rhs(cfg)

            def step(s):
                x = rk4_step(f, np.concatenate(s), spec.dt)
                return x[:d], x[d:]
        else:
            raise ValueError(f"method {method.value} does not apply to the classical system")
    elif isinstance(initial, ReducedState):
        kind = "reduced"
        state = initial
        energy = lambda s: reduced_hamiltonian(cfg, s)
        norm = lambda s: 1.0
        if method is Method.VARIATIONAL_SPLITTING:
            step = lambda s: splitting_step(cfg, s, spec.dt)
        elif method is Method.RK4:
            f = _reduced_rhs(cfg)
            step = lambda s: reduced_from_array(rk4_step(f, reduced_to_array(s), spec.dt), cfg.d)
        else:
            raise ValueError("Stormer-Verlet applies to the classical system only")
    elif isinstance(initial, PacketParams):
        kind = "full"
        state = initial
        energy = lambda s: full_hamiltonian(cfg, s)
        norm = lambda s: norm_squared(s, cfg.hbar)
        if method is Method.VARIATIONAL_SPLITTING:
            step = lambda s: splitting_step_full(cfg, s, spec.dt)
        elif method is Method.RK4:
            f = _full_rhs(cfg)
            step = lambda s: packet_from_array(rk4_step(f, packet_to_array(s), spec.dt), cfg.d)
        else:
            raise ValueError("Stormer-Verlet applies to the classical system only")
    else:
        raise TypeError(f"unsupported initial state {type(initial).__name__}")

    nsteps = spec.steps
    times = spec.dt * np.arange(nsteps + 1)
    states, energies, norms = [], np.empty(nsteps + 1), np.empty(nsteps + 1)
    for i, t in enumerate(times):
        if i > 0:
            try:
                state = step(state)
            except (NumericalError, ValueError, np.linalg.LinAlgError) as exc:
                raise NumericalError(f"step failed at t = {times[i - 1]:.6g}: {exc}") from exc
        states.append(state)
        energies[i] = energy(state)
        norms[i] = norm(state)
        for obs in observers:
            obs(t, state)
    return Trajectory(kind, times, states, energies, norms)
