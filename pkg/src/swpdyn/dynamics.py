"""Hamiltonians, corrected potentials and the packet vector fields.

Three systems are provided:

* the classical system on ``T*R^d``;
* the full semiclassical system on ``(q, p, A, B, phi, delta)``;
* the reduced system on ``(q, p, A, B^(n))`` obtained by fixing the norm and
  quotienting out the phase.

The reduced state evolves ``B^(n) = B^{1/2} Lambda^{-1} B^{1/2}`` rather than
``B``; ``B`` is recovered whenever a formula needs it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    MultiIndex,
    PacketParams,
    SiegelPoint,
    TangentVector,
    _as_matrix,
    _frozen,
    _lam,
    _symmetrize,
    b_from_bn_differential,
    b_n_matrix,
    norm_squared,
    normalizing_delta,
    recover_b_from_bn,
)
from .potentials import PolynomialPotential

__all__ = [
    "ModelConfig",
    "ReducedState",
    "ReducedTangent",
    "CORRECTION_COEFF",
    "corrected_potential",
    "corrected_potential_grad",
    "classical_field",
    "classical_energy",
    "reduced_hamiltonian",
    "full_hamiltonian",
    "reduced_field",
    "full_field",
]

# prefactor of the O(hbar) potential correction, hbar * CORRECTION_COEFF * tr(...)
CORRECTION_COEFF = 0.25


@dataclass(frozen=True)
class ModelConfig:
    """Physical model: ``hbar``, mass, packet index and potential.

    ``corrections=False`` drops the O(hbar) potential correction from the
    momentum equation, which is how the classical limit of the splitting
    integrator is exercised.
    """

    hbar: float
    mass: float
    n: MultiIndex
    potential: PolynomialPotential
    corrections: bool = True

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        n = self.n if isinstance(self.n, MultiIndex) else MultiIndex(self.n)
        object.__setattr__(self, "n", n)
        if n.d != self.potential.d:
            raise ValueError(f"index dimension {n.d} does not match potential dimension "
                             f"{self.potential.d}")

    @property
    def d(self) -> int:
        return self.n.d

    def bn_inverse(self, B: np.ndarray) -> np.ndarray:
        """``(B^(n))^{-1} = B^{-1/2} Lambda B^{-1/2}``."""
        return np.linalg.inv(b_n_matrix(B, self.n))


@dataclass(frozen=True)
class ReducedState:
    """Point ``(q, p, A, B^(n))`` of the reduced phase space."""

    q: np.ndarray
    p: np.ndarray
    A: np.ndarray
    Bn: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        d = q.shape[0]
        A = _symmetrize(_as_matrix(self.A, d))
        Bn = _symmetrize(_as_matrix(self.Bn, d))
        if not np.all(np.isfinite(Bn)) or np.linalg.eigvalsh(Bn)[0] <= 0:
            raise ValueError("B^(n) must be positive definite")
        for name, val in (("q", q), ("p", p), ("A", A), ("Bn", Bn)):
            object.__setattr__(self, name, _frozen(val))

    @property
    def d(self) -> int:
        return self.q.shape[0]

    @classmethod
    def from_packet(cls, y: PacketParams, n: MultiIndex) -> "ReducedState":
        return cls(y.q, y.p, y.A, b_n_matrix(y.B, n))

    @classmethod
    def from_b(cls, q, p, A, B, n: MultiIndex) -> "ReducedState":
        return cls(q, p, A, b_n_matrix(_as_matrix(B), n))

    def B(self, n: MultiIndex) -> np.ndarray:
        return recover_b_from_bn(self.Bn, n)

    def to_packet(self, n: MultiIndex, hbar: float, phi: float = 0.0) -> PacketParams:
        """Lift to the normalised full parameter point with the given phase."""
        B = self.B(n)
        return PacketParams(self.q, self.p, SiegelPoint(self.A, B), phi, normalizing_delta(B, hbar))

    def shifted(self, v: "ReducedTangent", h: float = 1.0) -> "ReducedState":
        return ReducedState(self.q + h * v.dq, self.p + h * v.dp,
                            self.A + h * v.dA, self.Bn + h * v.dBn)


class ReducedTangent(NamedTuple):
    """Tangent vector ``(dq, dp, dA, dBn)`` on the reduced phase space."""

    dq: np.ndarray
    dp: np.ndarray
    dA: np.ndarray
    dBn: np.ndarray

    @classmethod
    def random(cls, d: int, rng: np.random.Generator) -> "ReducedTangent":
        def sym():
            M = rng.standard_normal((d, d))
            return M + M.T

        return cls(rng.standard_normal(d), rng.standard_normal(d), sym(), sym())


# ---------------------------------------------------------------------------
# Potentials and Hamiltonians
# ---------------------------------------------------------------------------


def _correction(cfg: ModelConfig) -> float:
    return CORRECTION_COEFF * cfg.hbar if cfg.corrections else 0.0


def corrected_potential(cfg: ModelConfig, q, B) -> float:
    """``V(q) + (hbar/4) tr((B^(n))^{-1} D^2 V(q))``."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    Binv_n = cfg.bn_inverse(_as_matrix(B))
    return float(cfg.potential.value(q) + _correction(cfg) * np.trace(Binv_n @ cfg.potential.hess(q)))


def corrected_potential_grad(cfg: ModelConfig, q, B) -> np.ndarray:
    """Partial ``q``-gradient of the corrected potential at fixed ``B``."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    Binv_n = cfg.bn_inverse(_as_matrix(B))
    return cfg.potential.grad(q) + _correction(cfg) * cfg.potential.third_contract(q, Binv_n)


def classical_field(cfg: ModelConfig, q, p) -> tuple[np.ndarray, np.ndarray]:
    """``(p/m, -D V(q))``; accepts single points or ``(N, d)`` batches."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    return p / cfg.mass, -cfg.potential.grad(q)


def classical_energy(cfg: ModelConfig, q, p):
    """``|p|^2/(2m) + V(q)``; accepts single points or ``(N, d)`` batches."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    return 0.5 * np.sum(p * p, axis=-1) / cfg.mass + cfg.potential.value(q)


def _kinetic_part(cfg: ModelConfig, A, B, Binv_n) -> float:
    return cfg.hbar / (4.0 * cfg.mass) * float(np.trace(Binv_n @ (A @ A + B @ B)))


def reduced_hamiltonian(cfg: ModelConfig, s: ReducedState) -> float:
    """``p^2/2m + (hbar/4m) tr((B^(n))^{-1}(A^2 + B^2)) + V^(n)_hbar(q, B)``."""
    B = s.B(cfg.n)
    Binv_n = np.linalg.inv(s.Bn)
    V = cfg.potential.value(s.q) + _correction(cfg) * np.trace(Binv_n @ cfg.potential.hess(s.q))
    return float(0.5 * s.p @ s.p / cfg.mass + _kinetic_part(cfg, s.A, B, Binv_n) + V)


def full_hamiltonian(cfg: ModelConfig, y: PacketParams) -> float:
    """``N_hbar(B, delta)`` times the reduced Hamiltonian at ``(q, p, A, B)``."""
    Binv_n = cfg.bn_inverse(y.B)
    h = (0.5 * y.p @ y.p / cfg.mass + _kinetic_part(cfg, y.A, y.B, Binv_n)
         + cfg.potential.value(y.q) + _correction(cfg) * np.trace(Binv_n @ cfg.potential.hess(y.q)))
    return float(norm_squared(y, cfg.hbar) * h)


# ---------------------------------------------------------------------------
# Vector fields
# ---------------------------------------------------------------------------


def _shared_rates(cfg: ModelConfig, q, p, A, B, Bn):
    m = cfg.mass
    lam = _lam(cfg.n)
    dq = p / m
    dp = -corrected_potential_grad(cfg, q, B)
    BnLB = (Bn * lam) @ B
    dA = _symmetrize(-(A @ A - 0.5 * (BnLB + BnLB.T)) / m - cfg.potential.hess(q))
    dBn = _symmetrize(-(A @ Bn + Bn @ A) / m)
    return dq, dp, dA, dBn


def reduced_field(cfg: ModelConfig, s: ReducedState) -> ReducedTangent:
    """Rates ``(q', p', A', B^(n)')`` of the reduced semiclassical system."""
    B = s.B(cfg.n)
    return ReducedTangent(*_shared_rates(cfg, s.q, s.p, s.A, B, s.Bn))


def full_field(cfg: ModelConfig, y: PacketParams) -> TangentVector:
    """Hamiltonian vector field of the full system, expressed in ``(q, p, A, B, phi, delta)``.

    The ``B`` rate is obtained from the ``B^(n)`` equation through the inverse
    differential of ``B -> B^(n)``.
    """
    m, hbar = cfg.mass, cfg.hbar
    Bn = b_n_matrix(y.B, cfg.n)
    dq, dp, dA, dBn = _shared_rates(cfg, y.q, y.p, y.A, y.B, Bn)
    dB = b_from_bn_differential(y.B, cfg.n, dBn)
    lam = _lam(cfg.n)
    dphi = (0.5 * y.p @ y.p / m - cfg.potential.value(y.q)
            - hbar / (2.0 * m) * float(np.sum(lam * np.diag(y.B))))
    ddelta = hbar / (2.0 * m) * float(np.trace(y.A))
    return TangentVector(dq, dp, dA, dB, dphi, ddelta)
