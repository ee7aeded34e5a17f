import numpy as np
import pytest

from swpdyn.core import MultiIndex, PacketParams, TangentVector, b_n_differential, norm_squared, sym_sqrt
from swpdyn.dynamics import (ModelConfig, ReducedState, ReducedTangent, full_field, full_hamiltonian,
                             reduced_field, reduced_hamiltonian)
from swpdyn.geometry import (directional_derivative_fd, exterior_derivative_fd, momentum_map, omega_n,
                             omega_reduced, reduced_coordinates, reduced_form_matrix, solve_reduced_field,
                             theta_n)
from swpdyn.validation import coupled_quartic_2d, random_state

from conftest import cubic_cfg, start_packet

SHIFT = lambda z, v, h: z.shifted(v, h)


def _unit(d=1, **kw):
    return TangentVector.zero(d).replace(**kw)


def test_theta_examples():
    cfg = cubic_cfg(1)
    y = start_packet()
    for v in (_unit(dp=[1.0]), _unit(dB=1.0), _unit(ddelta=1.0)):
        assert theta_n(cfg, y, v) == 0.0
    assert theta_n(cfg, y, _unit(dq=[1.0])) == pytest.approx(1.0)
    assert theta_n(cfg, y, _unit(dA=1.0)) == pytest.approx(-0.0375)


def test_omega_examples(rng):
    cfg = cubic_cfg(2)
    y = start_packet()
    u = TangentVector.random(1, rng)
    assert omega_n(cfg, y, u, u) == pytest.approx(0.0, abs=1e-14)
    assert omega_n(cfg, y, _unit(dq=[1.0]), _unit(dp=[1.0])) == pytest.approx(1.0)


def test_theta_raising_recurrence(rng):
    # raising n_j shifts theta by -(hbar/2) N (B^{-1/2} dA B^{-1/2})_jj
    for _ in range(5):
        cfg0, y = random_state(rng, 2)
        n = MultiIndex((1, 2))
        v = TangentVector.random(2, rng)
        _, Bmh = sym_sqrt(y.B)
        N = norm_squared(y, cfg0.hbar)
        for j in range(2):
            lo = ModelConfig(cfg0.hbar, cfg0.mass, n, cfg0.potential)
            hi = ModelConfig(cfg0.hbar, cfg0.mass, n.raised(j), cfg0.potential)
            shift = -0.5 * cfg0.hbar * N * (Bmh @ v.dA @ Bmh)[j, j]
            assert theta_n(hi, y, v) - theta_n(lo, y, v) == pytest.approx(shift, rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("d, n", [(1, (3,)), (2, (2, 2)), (2, (1, 3))])
def test_omega_is_minus_d_theta(rng, d, n):
    for _ in range(5):
        cfg0, y = random_state(rng, d)
        cfg = ModelConfig(cfg0.hbar, cfg0.mass, MultiIndex(n), cfg0.potential)
        u, v = TangentVector.random(d, rng), TangentVector.random(d, rng)
        dtheta = exterior_derivative_fd(lambda z, w: theta_n(cfg, z, w), y, u, v, 1e-4, SHIFT)
        om = omega_n(cfg, y, u, v)
        assert om == pytest.approx(-dtheta, rel=1e-5, abs=1e-9)


def test_antisymmetry_and_phase_invariance(rng):
    cfg, y = random_state(rng, 2)
    u, v = TangentVector.random(2, rng), TangentVector.random(2, rng)
    assert omega_n(cfg, y, u, v) == -omega_n(cfg, y, v, u)
    y2 = PacketParams(y.q, y.p, y.siegel, y.phi + cfg.hbar * 1.234, y.delta)
    assert omega_n(cfg, y2, u, v) == omega_n(cfg, y, u, v)
    assert theta_n(cfg, y2, u) == theta_n(cfg, y, u)
    s = ReducedState.from_packet(y, cfg.n)
    a, b = ReducedTangent.random(2, rng), ReducedTangent.random(2, rng)
    assert omega_reduced(cfg, s, a, b) == -omega_reduced(cfg, s, b, a)


def test_omega_reduced_examples():
    cfg = cubic_cfg(1)
    s = ReducedState([0.25], [1.0], 0.0, 1 / 3)
    z, Z = np.zeros(1), np.zeros((1, 1))
    assert omega_reduced(cfg, s, ReducedTangent(np.ones(1), z, Z, Z),
                         ReducedTangent(z, np.ones(1), Z, Z)) == 1.0
    # a unit dB is a dBn of 1/3
    val = omega_reduced(cfg, s, ReducedTangent(z, z, np.ones((1, 1)), Z),
                        ReducedTangent(z, z, Z, np.ones((1, 1)) / 3))
    assert val == pytest.approx(0.25 * cfg.hbar * 3)


def test_pullback_to_level_set(rng):
    for k in range(10):
        cfg, y = random_state(rng, 1 + k % 2)

        def lift(w):
            Binv = np.linalg.inv(y.B)
            return w.replace(ddelta=-0.25 * cfg.hbar * np.trace(Binv @ w.dB))

        u, v = lift(TangentVector.random(y.d, rng)), lift(TangentVector.random(y.d, rng))
        s = ReducedState.from_packet(y, cfg.n)
        proj = lambda w: ReducedTangent(w.dq, w.dp, w.dA, b_n_differential(y.B, cfg.n, w.dB))
        assert omega_n(cfg, y, u, v) == pytest.approx(omega_reduced(cfg, s, proj(u), proj(v)),
                                                      rel=1e-8, abs=1e-10)


def test_reduced_form_is_closed(rng):
    cfg, y = random_state(rng, 2)
    s = ReducedState.from_packet(y, cfg.n)
    a, b, c = (ReducedTangent.random(2, rng) for _ in range(3))
    h = 1e-4
    D = lambda w, f: directional_derivative_fd(f, s, w, h, SHIFT)
    om = lambda x, y_: (lambda z: omega_reduced(cfg, z, x, y_))
    val = D(a, om(b, c)) - D(b, om(a, c)) + D(c, om(a, b))
    assert abs(val) <= 1e-5


def test_momentum_map():
    cfg = cubic_cfg(1)
    y = start_packet()
    assert momentum_map(cfg, y) == pytest.approx(-cfg.hbar)
    far = PacketParams(y.q, y.p, y.siegel, 0.0, 10.0)
    assert -1e-30 < momentum_map(cfg, far) < 0


@pytest.mark.parametrize("d", [1, 2])
def test_full_field_is_hamiltonian(rng, d):
    for _ in range(10):
        cfg, y = random_state(rng, d)
        X = full_field(cfg, y)
        for _ in range(5):
            v = TangentVector.random(d, rng)
            dH = directional_derivative_fd(lambda z: full_hamiltonian(cfg, z), y, v, 1e-5, SHIFT)
            assert omega_n(cfg, y, X, v) == pytest.approx(dH, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("d", [1, 2])
def test_reduced_field_is_hamiltonian(rng, d):
    for _ in range(10):
        cfg, y = random_state(rng, d)
        s = ReducedState.from_packet(y, cfg.n)
        X = reduced_field(cfg, s)
        for e in reduced_coordinates(d):
            dH = directional_derivative_fd(lambda z: reduced_hamiltonian(cfg, z), s, e, 1e-5, SHIFT)
            assert omega_reduced(cfg, s, X, e) == pytest.approx(dH, rel=1e-6, abs=1e-8)


def test_solve_reduced_field_matches_closed_form(rng):
    cfg, y = random_state(rng, 1)
    s = ReducedState.from_packet(y, cfg.n)
    X, Y = reduced_field(cfg, s), solve_reduced_field(cfg, s)
    for a, b in zip(X, Y):
        assert np.allclose(a, b, rtol=1e-7, atol=1e-8)


def test_solve_reduced_field_non_uniform_is_hamiltonian():
    cfg = ModelConfig(0.05, 1.0, MultiIndex((1, 3)), coupled_quartic_2d())
    y = PacketParams.create([0.2, -0.1], [0.5, 0.3], [[0.1, 0.2], [0.2, -0.3]],
                            [[1.1, 0.3], [0.3, 0.8]], hbar=0.05)
    s = ReducedState.from_packet(y, cfg.n)
    X = solve_reduced_field(cfg, s)
    W = reduced_form_matrix(cfg, s)
    assert np.allclose(W, -W.T)
    for e in reduced_coordinates(2):
        dH = directional_derivative_fd(lambda z: reduced_hamiltonian(cfg, z), s, e, 1e-5, SHIFT)
        assert omega_reduced(cfg, s, X, e) == pytest.approx(dH, rel=1e-6, abs=1e-8)
    # the (q, p, Bn) rates of the closed form are still exact
    R = reduced_field(cfg, s)
    assert np.allclose(R.dq, X.dq) and np.allclose(R.dp, X.dp, atol=1e-8)
    assert np.allclose(R.dBn, X.dBn, atol=1e-8)
