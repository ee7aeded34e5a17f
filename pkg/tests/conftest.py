import numpy as np
import pytest

from swpdyn.core import MultiIndex, PacketParams
from swpdyn.dynamics import ModelConfig
from swpdyn.potentials import cubic_well_potential, quadratic_potential


def cubic_cfg(n=0, hbar=0.05, mass=1.0, corrections=True):
    return ModelConfig(hbar, mass, MultiIndex((n,)), cubic_well_potential(), corrections)


def harmonic_cfg(n=0, hbar=0.05, k=2.0):
    return ModelConfig(hbar, 1.0, MultiIndex((n,)), quadratic_potential(k))


def start_packet(hbar=0.05, A=0.0, B=1.0):
    return PacketParams.create([0.25], [1.0], A, B, hbar=hbar)


def random_spd(rng, d, lo=0.5, hi=2.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return Q @ np.diag(rng.uniform(lo, hi, size=d)) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
