"""Polynomial potentials with exact derivatives up to third order."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

__all__ = ["PolynomialPotential", "cubic_well_potential", "quadratic_potential"]


def _falling(e: np.ndarray, k: int) -> np.ndarray:
    out = np.ones_like(e, dtype=float)
    for i in range(k):
        out = out * (e - i)
    return out


@dataclass(frozen=True)
class PolynomialPotential:
    """``V(x) = sum_k c_k x^{alpha_k}`` on ``R^d``.

    The potential should be bounded below; this is not enforced, but a
    warning is issued in 1-D when the leading term makes ``V`` unbounded.
    All evaluators accept a single point of shape ``(d,)`` or a batch of
    shape ``(N, d)``.
    """

    coefficients: np.ndarray
    exponents: np.ndarray

    def __init__(self, terms: Iterable[tuple[float, Sequence[int] | int]]):
        terms = list(terms)
        if not terms:
            raise ValueError("potential needs at least one term")
        coefs, exps = [], []
        for c, e in terms:
            e = (int(e),) if np.ndim(e) == 0 else tuple(int(k) for k in e)
            if any(k < 0 for k in e):
                raise ValueError(f"negative exponent in term {e}")
            coefs.append(float(c))
            exps.append(e)
        d = len(exps[0])
        if any(len(e) != d for e in exps):
            raise ValueError("all exponent multi-indices must have the same length")
        C = np.array(coefs)
        E = np.array(exps, dtype=int)
        C.setflags(write=False)
        E.setflags(write=False)
        object.__setattr__(self, "coefficients", C)
        object.__setattr__(self, "exponents", E)
        if d == 1:
            nz = C != 0
            if nz.any():
                top = E[nz, 0].max()
                lead = C[nz][E[nz, 0] == top].sum()
                if top > 0 and (lead < 0 or top % 2 == 1):
                    warnings.warn(
                        "potential is unbounded below; the semiclassical expansion assumes "
                        "V bounded below", stacklevel=2)

    @property
    def d(self) -> int:
        return self.exponents.shape[1]

    @property
    def terms(self) -> list[tuple[float, tuple[int, ...]]]:
        return [(float(c), tuple(int(k) for k in e))
                for c, e in zip(self.coefficients, self.exponents)]

    def _points(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1
        x = np.atleast_1d(x).reshape(-1, self.d) if single else x
        if x.shape[-1] != self.d:
            raise ValueError(f"expected points of dimension {self.d}, got shape {x.shape}")
        return x, single

    def derivative(self, x, alpha: Sequence[int]) -> np.ndarray:
        """Mixed partial derivative ``D^alpha V`` at ``x``."""
        x, single = self._points(x)
        alpha = np.asarray(alpha, dtype=int)
        E = self.exponents
        coef = self.coefficients * prod(_falling(E[:, j], alpha[j]) for j in range(self.d))
        keep = coef != 0
        if not keep.any():
            out = np.zeros(x.shape[0])
        else:
            powers = np.maximum(E[keep] - alpha, 0)
            # table of x^k by repeated multiplication; far cheaper than pow on large batches
            table = np.ones((int(powers.max()) + 1,) + x.shape)
            for k in range(1, table.shape[0]):
                table[k] = table[k - 1] * x
            mono = table[powers[:, 0], :, 0]
            for j in range(1, self.d):
                mono = mono * table[powers[:, j], :, j]
            out = coef[keep] @ mono
        return out[0] if single else out

    def value(self, x):
        """``V(x)``."""
        return self.derivative(x, [0] * self.d)

    def grad(self, x) -> np.ndarray:
        """``D V(x)``, shape ``(d,)`` or ``(N, d)``."""
        x, single = self._points(x)
        g = np.stack([self.derivative(x, np.eye(self.d, dtype=int)[l]) for l in range(self.d)], -1)
        return g[0] if single else g

    def hess(self, x) -> np.ndarray:
        """``D^2 V(x)``, shape ``(d, d)`` or ``(N, d, d)``."""
        x, single = self._points(x)
        d = self.d
        H = np.empty((x.shape[0], d, d))
        I = np.eye(d, dtype=int)
        for j in range(d):
            for k in range(j, d):
                H[:, j, k] = H[:, k, j] = self.derivative(x, I[j] + I[k])
        return H[0] if single else H

    def third_contract(self, x, M) -> np.ndarray:
        """``sum_{jk} M_jk d^3 V / dx_j dx_k dx_l``, one entry per ``l``."""
        x, single = self._points(x)
        M = np.atleast_2d(np.asarray(M, dtype=float))
        d = self.d
        I = np.eye(d, dtype=int)
        out = np.zeros((x.shape[0], d))
        for l in range(d):
            for j in range(d):
                for k in range(d):
                    if M[j, k] != 0:
                        out[:, l] += M[j, k] * self.derivative(x, I[j] + I[k] + I[l])
        return out[0] if single else out


def cubic_well_potential() -> PolynomialPotential:
    """Cubic well with quartic confinement, ``2x^2 + x^3 + 0.1x^4``."""
    return PolynomialPotential([(2.0, 2), (1.0, 3), (0.1, 4)])


def quadratic_potential(k: float = 2.0, d: int = 1) -> PolynomialPotential:
    """``k |x|^2``."""
    return PolynomialPotential([(k, tuple(2 * int(i == j) for i in range(d))) for j in range(d)])
