import numpy as np
import pytest

from swpdyn.core import MultiIndex, NumericalError, PacketParams, norm_squared
from swpdyn.dynamics import ModelConfig, ReducedState, reduced_hamiltonian
from swpdyn.geometry import reduced_form_matrix
from swpdyn.integrators import (
    IntegratorSpec,
    Method,
    _reduced_rhs,
    propagate,
    reduced_from_array,
    reduced_to_array,
    rk4_step,
    splitting_step,
    splitting_step_full,
    stormer_verlet_step,
)
from swpdyn.potentials import PolynomialPotential, cubic_well_potential, quadratic_potential
from swpdyn.validation import coupled_quartic_2d, random_state, step_jacobian

from conftest import cubic_cfg, harmonic_cfg, start_packet


def free_cfg(n=0, hbar=0.05, mass=1.0):
    return ModelConfig(hbar, mass, MultiIndex((n,)), PolynomialPotential([(0.0, 2)]))


# --- IntegratorSpec and driver---------------------------------------------------------


def test_integrator_spec_validation():
    assert IntegratorSpec("rk4", 0.1, 1.0).method is Method.RK4
    assert IntegratorSpec(Method.RK4, 0.01, 3.39).steps == 339
    with pytest.raises(ValueError):
        IntegratorSpec(Method.RK4, 0.0, 1.0)
    with pytest.raises(ValueError):
        IntegratorSpec(Method.RK4, 0.1, -1.0)
    with pytest.raises(ValueError):
        IntegratorSpec("leapfrog", 0.1, 1.0)


def test_zero_final_time_gives_single_record():
    traj = propagate(cubic_cfg(), IntegratorSpec(Method.STORMER_VERLET, 0.01, 0.0), ([0.25], [1.0]))
    assert len(traj) == 1 and traj.times[0] == 0.0


def test_trajectory_length_and_observers():
    seen = []
    traj = propagate(cubic_cfg(2), IntegratorSpec(Method.VARIATIONAL_SPLITTING, 0.1, 1.05),
                     ReducedState.from_packet(start_packet(), MultiIndex((2,))),
                     observers=[lambda t, s: seen.append(t)])
    assert len(traj) == 11 == len(seen)
    assert np.allclose(traj.times, 0.1 * np.arange(11))
    assert np.all(traj.norm == 1.0)


def test_method_state_pairing():
    with pytest.raises(ValueError):
        propagate(cubic_cfg(), IntegratorSpec(Method.VARIATIONAL_SPLITTING, 0.1, 1.0), ([0.0], [0.0]))
    with pytest.raises(ValueError):
        propagate(cubic_cfg(), IntegratorSpec(Method.STORMER_VERLET, 0.1, 1.0),
                  ReducedState([0.0], [0.0], 0.0, 1.0))
    with pytest.raises(TypeError):
        propagate(cubic_cfg(), IntegratorSpec(Method.RK4, 0.1, 1.0), [0.0, 0.0])


@pytest.mark.filterwarnings("ignore:overflow")
def test_failing_step_reports_time():
    with pytest.warns(UserWarning, match="unbounded"):
        V = PolynomialPotential([(1.0, 2), (-50.0, 6)])
    cfg = ModelConfig(0.05, 1.0, MultiIndex((0,)), V)
    with pytest.raises(NumericalError, match="t ="):
        propagate(cfg, IntegratorSpec(Method.RK4, 0.5, 50.0), ([2.0], [0.0]))


# --- Stormer-Verlet -------------------------------------------------------------


def test_free_flight():
    q, p = stormer_verlet_step(free_cfg(mass=2.0), np.array([0.5]), np.array([1.0]), 0.1)
    assert q[0] == pytest.approx(0.55) and p[0] == 1.0


def test_harmonic_second_order():
    cfg = ModelConfig(0.05, 1.0, MultiIndex((0,)), quadratic_potential(0.5))

    def err(dt):
        q, p = np.array([1.0]), np.array([0.0])
        for _ in range(int(round(1.0 / dt))):
            q, p = stormer_verlet_step(cfg, q, p, dt)
        return abs(q[0] - np.cos(1.0)) + abs(p[0] + np.sin(1.0))

    ratio = err(0.02) / err(0.01)
    assert ratio == pytest.approx(4.0, rel=0.05)


def test_vectorised_matches_single():
    cfg = cubic_cfg()
    Q = np.array([[0.1], [0.2], [-0.3]])
    P = np.array([[1.0], [0.0], [0.5]])
    qb, pb = stormer_verlet_step(cfg, Q, P, 0.01)
    for i in range(3):
        q, p = stormer_verlet_step(cfg, Q[i], P[i], 0.01)
        assert np.allclose(qb[i], q) and np.allclose(pb[i], p)


def test_classical_well_orbit():
    traj = propagate(cubic_cfg(), IntegratorSpec(Method.STORMER_VERLET, 0.01, 3.39), ([0.25], [1.0]))
    q = traj.q[:, 0]
    assert q.max() < 0.71 and q.min() > -0.69
    assert abs(traj.energy - traj.energy[0]).max() < 1e-4
    assert abs(q[-1] - 0.25) < 0.02


# --- splitting ---------------------------------------------------------------------


def test_kinetic_flow_matches_riccati_solution():
    cfg = free_cfg(0, mass=1.5)
    s0 = ReducedState([0.0], [0.3], 0.4, 0.9)
    C0 = 0.4 + 0.9j
    s = s0
    for _ in range(100):
        s = splitting_step(cfg, s, 0.01)
    C = C0 / (1 + 1.0 * C0 / 1.5)
    assert s.A[0, 0] == pytest.approx(C.real, abs=1e-13)
    assert s.Bn[0, 0] == pytest.approx(0.9 / abs(1 + C0 / 1.5) ** 2, abs=1e-13)
    f = _reduced_rhs(cfg)
    x = reduced_to_array(s0)
    for _ in range(1000):
        x = rk4_step(f, x, 1e-3)
    assert np.allclose(x, reduced_to_array(s), atol=1e-11)


def test_quadratic_ground_state_matches_stormer_verlet():
    cfg = harmonic_cfg(0)
    s = ReducedState.from_packet(start_packet(), cfg.n)
    q, p = s.q, s.p
    for _ in range(200):
        s = splitting_step(cfg, s, 0.01)
        q, p = stormer_verlet_step(cfg, q, p, 0.01)
    assert np.array_equal(s.q, q) and np.array_equal(s.p, p)


def test_one_step_local_error():
    cfg = cubic_cfg(3)
    s0 = ReducedState.from_packet(start_packet(), cfg.n)
    f = _reduced_rhs(cfg)

    def ref(dt):
        x = reduced_to_array(s0)
        for _ in range(100):
            x = rk4_step(f, x, dt / 100)
        return x

    e1 = np.abs(reduced_to_array(splitting_step(cfg, s0, 0.01)) - ref(0.01)).max()
    e2 = np.abs(reduced_to_array(splitting_step(cfg, s0, 0.005)) - ref(0.005)).max()
    assert e1 < 1e-4
    assert e1 / e2 == pytest.approx(8.0, rel=0.15)


def test_classical_limit_is_stormer_verlet():
    for n in (0, 3, 7):
        cfg = cubic_cfg(n, corrections=False)
        s = ReducedState.from_packet(start_packet(), cfg.n)
        q, p = s.q, s.p
        for _ in range(100):
            s = splitting_step(cfg, s, 0.01)
            q, p = stormer_verlet_step(cfg, q, p, 0.01)
            assert np.abs(s.q - q).max() <= 1e-14 and np.abs(s.p - p).max() <= 1e-14


def test_splitting_is_symplectic(rng):
    for k in range(6):
        cfg, y = random_state(rng, 1 + k % 2)
        s = ReducedState.from_packet(y, cfg.n)
        J = step_jacobian(cfg, s, 0.01)
        W0 = reduced_form_matrix(cfg, s)
        W1 = reduced_form_matrix(cfg, splitting_step(cfg, s, 0.01))
        assert np.abs(J.T @ W1 @ J - W0).max() <= 1e-6 * np.abs(W0).max()


def test_uniform_two_dimensional_splitting_converges_to_rk4():
    cfg = ModelConfig(0.05, 1.0, MultiIndex((2, 2)), coupled_quartic_2d())
    y = PacketParams.create([0.2, -0.1], [0.5, 0.3], [[0.1, 0.05], [0.05, -0.2]],
                            [[1.1, 0.2], [0.2, 0.8]], hbar=0.05)
    s0 = ReducedState.from_packet(y, cfg.n)
    f = _reduced_rhs(cfg)
    x = reduced_to_array(s0)
    for _ in range(500):
        x = rk4_step(f, x, 1e-3)
    errs = []
    for dt in (0.01, 0.005):
        s = s0
        for _ in range(int(round(0.5 / dt))):
            s = splitting_step(cfg, s, dt)
        errs.append(np.abs(reduced_to_array(s) - x).max())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_non_uniform_index_falls_back_to_rk4():
    cfg = ModelConfig(0.05, 1.0, MultiIndex((1, 3)), coupled_quartic_2d())
    y = PacketParams.create([0.2, -0.1], [0.5, 0.3], 0.0, np.eye(2), hbar=0.05)
    s = ReducedState.from_packet(y, cfg.n)
    with pytest.raises(ValueError):
        splitting_step(cfg, s, 0.01)
    with pytest.warns(RuntimeWarning, match="rk4"):
        traj = propagate(cfg, IntegratorSpec(Method.VARIATIONAL_SPLITTING, 0.01, 0.1), s)
    ref = propagate(cfg, IntegratorSpec(Method.RK4, 0.01, 0.1), s)
    assert np.array_equal(traj.q, ref.q)


def test_width_stays_positive_in_escape_run():
    cfg = cubic_cfg(10)
    traj = propagate(cfg, IntegratorSpec(Method.VARIATIONAL_SPLITTING, 0.01, 3.39),
                     ReducedState.from_packet(start_packet(), cfg.n))
    assert min(np.linalg.eigvalsh(s.Bn)[0] for s in traj.states) > 0


def test_full_splitting_matches_reduced_and_keeps_norm():
    cfg = cubic_cfg(3)
    y = start_packet()
    s = ReducedState.from_packet(y, cfg.n)
    for _ in range(200):
        y = splitting_step_full(cfg, y, 0.01)
        s = splitting_step(cfg, s, 0.01)
    assert np.allclose(y.q, s.q, atol=1e-13) and np.allclose(y.A, s.A, atol=1e-12)
    assert norm_squared(y, cfg.hbar) == pytest.approx(1.0, abs=1e-13)


def test_full_splitting_phase_converges_to_rk4():
    cfg = cubic_cfg(2)
    y0 = start_packet()
    ref = propagate(cfg, IntegratorSpec(Method.RK4, 1e-3, 1.0), y0).states[-1]
    errs = []
    for dt in (0.02, 0.01):
        y = propagate(cfg, IntegratorSpec(Method.VARIATIONAL_SPLITTING, dt, 1.0), y0).states[-1]
        errs.append(abs(y.phi - ref.phi) + abs(y.delta - ref.delta))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)


# --- RK4 ----------------------------------------------------------------------------


def test_rk4_linear_growth():
    for dt in (0.1, 0.05):
        x = rk4_step(lambda x: x, np.array([1.0]), dt)
        assert abs(x[0] - np.exp(dt)) < dt ** 5


def test_rk4_fourth_order_on_reduced_system():
    cfg = cubic_cfg(3)
    f = _reduced_rhs(cfg)
    x0 = reduced_to_array(ReducedState.from_packet(start_packet(), cfg.n))

    def run(dt):
        x = x0
        for _ in range(int(round(1.0 / dt))):
            x = rk4_step(f, x, dt)
        return x

    ref = run(0.00125)
    ratio = np.abs(run(0.02) - ref).max() / np.abs(run(0.01) - ref).max()
    assert ratio == pytest.approx(16.0, rel=0.15)


def test_rk4_non_finite_stage():
    with pytest.raises(NumericalError):
        rk4_step(lambda x: np.array([np.inf]), np.array([1.0]), 0.1)


def test_rk4_energy_drift_over_period():
    cfg = cubic_cfg(2)
    traj = propagate(cfg, IntegratorSpec(Method.RK4, 0.01, 3.39),
                     ReducedState.from_packet(start_packet(), cfg.n))
    assert abs(traj.energy - traj.energy[0]).max() < 1e-6


def test_array_roundtrip(rng):
    cfg, y = random_state(rng, 2)
    s = ReducedState.from_packet(y, cfg.n)
    s2 = reduced_from_array(reduced_to_array(s), 2)
    assert np.allclose(s2.Bn, s.Bn) and np.allclose(s2.A, s.A)
