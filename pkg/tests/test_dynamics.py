"""Master-equation right-hand side and the fixed-step integrator."""

import numpy as np
import pytest

from oracles import (
    depolarizing_jumps,
    embed_pauli,
    evolve_oracle,
    lindblad_rhs_oracle,
    random_density,
)
from shadowanneal.dynamics import (
    AffineHamiltonian,
    IntegrationDivergedError,
    IntegratorConfig,
    NoiseSpec,
    TRAJECTORY_HEADER,
    default_dt,
    evolve,
    integrate,
    lindblad_rhs,
    write_trajectory,
)
from shadowanneal.linalg import DensityMatrix, PAULI_Z, expectation, pure_state
from shadowanneal.model import AnnealSpec, DriverParams, XxzParams


def random_hermitian(dim: int, rng) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return m + m.conj().T


ZERO_H1 = np.zeros((2, 2), dtype=complex)


# ------------------------------------------------------------- right-hand side

def test_rhs_vanishes_on_eigenprojector_without_noise():
    rng = np.random.default_rng(5)
    h = random_hermitian(4, rng)
    _, vecs = np.linalg.eigh(h)
    proj = np.outer(vecs[:, 1], vecs[:, 1].conj())
    out = lindblad_rhs(proj, h, NoiseSpec(rate=0.0))
    assert np.max(np.abs(out)) < 1e-14


def test_rhs_maximally_mixed_is_fixed_point():
    rng = np.random.default_rng(6)
    h = random_hermitian(8, rng)
    out = lindblad_rhs(np.eye(8, dtype=complex) / 8.0, h, NoiseSpec(rate=0.31))
    assert np.max(np.abs(out)) < 1e-14


def test_rhs_single_qubit_closed_form():
    # |0><0| under pure depolarizing decays along z at rate 4*lambda
    rho = np.diag([1.0, 0.0]).astype(complex)
    out = lindblad_rhs(rho, ZERO_H1, NoiseSpec(rate=0.7))
    assert np.max(np.abs(out - (-2.0 * 0.7) * PAULI_Z)) < 1e-14


def test_rhs_matches_textbook_form_depolarizing():
    rng = np.random.default_rng(7)
    for n in (2, 3):
        rho = random_density(n, rng)
        h = random_hermitian(2 ** n, rng)
        got = lindblad_rhs(rho, h, NoiseSpec(rate=0.013))
        want = lindblad_rhs_oracle(rho, h, 0.013, depolarizing_jumps(n))
        assert np.max(np.abs(got - want)) < 1e-12


def test_rhs_matches_textbook_form_partial_jumps():
    rng = np.random.default_rng(8)
    rho = random_density(2, rng)
    h = random_hermitian(4, rng)
    placements = ((0, "z"), (1, "x"))
    got = lindblad_rhs(rho, h, NoiseSpec(rate=0.2, jumps=placements))
    mats = [embed_pauli(2, [p]) for p in placements]
    want = lindblad_rhs_oracle(rho, h, 0.2, mats)
    assert np.max(np.abs(got - want)) < 1e-12


def test_rhs_traceless_and_hermitian():
    rng = np.random.default_rng(9)
    rho = random_density(3, rng)
    h = random_hermitian(8, rng)
    for noise in (NoiseSpec(rate=0.05), NoiseSpec(rate=0.05, jumps=((1, "y"),))):
        out = lindblad_rhs(rho, h, noise)
        assert abs(np.trace(out)) < 1e-12
        assert np.max(np.abs(out - out.conj().T)) < 1e-15


def test_rhs_accepts_density_matrix_wrapper():
    state = pure_state(np.array([1.0, 0.0]))
    a = lindblad_rhs(state, ZERO_H1, NoiseSpec(rate=0.7))
    b = lindblad_rhs(state.matrix, ZERO_H1, NoiseSpec(rate=0.7))
    assert np.array_equal(a, b)


# ---------------------------------------------------------------- integrator

def test_unitary_evolution_preserves_purity():
    rng = np.random.default_rng(10)
    h = random_hermitian(4, rng)
    rho0 = pure_state(rng.normal(size=4) + 1j * rng.normal(size=4))
    # random H has spectral radius ~5, so dt must be finer than the anneal default
    res = integrate(h, rho0, 5.0, NoiseSpec(rate=0.0), IntegratorConfig(dt=0.002))
    assert res.state.purity() == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("rate", [0.0025, 0.005])
@pytest.mark.parametrize("t_final", [1.0, 10.0, 100.0])
def test_single_qubit_depolarizing_decay_law(rate, t_final):
    rho0 = pure_state(np.array([1.0, 0.0]))
    res = integrate(ZERO_H1, rho0, t_final, NoiseSpec(rate=rate))
    got = expectation(res.state, PAULI_Z)
    assert got == pytest.approx(np.exp(-4.0 * rate * t_final), abs=1e-6)


def test_two_qubit_state_matches_exponential_oracle():
    rng = np.random.default_rng(11)
    h = random_hermitian(4, rng)
    rho0 = DensityMatrix(2, random_density(2, rng))
    res = integrate(h, rho0, 5.0, NoiseSpec(rate=0.01))
    want = evolve_oracle(h, rho0.matrix, 5.0, depolarizing_jumps(2), 0.01)
    assert np.linalg.norm(res.state.matrix - want) <= 1e-6


def test_anneal_bookkeeping_stays_within_contracts():
    spec = AnnealSpec(problem=XxzParams(n_qubits=3),
                      driver=DriverParams.from_seed(3, 2),
                      t_final=5.0, noise_rate=0.0025)
    res = evolve(spec, IntegratorConfig(dt=0.01, record_interval=50))
    assert res.max_hermiticity_deviation <= 1e-10
    assert res.symmetrize_delta <= 1e-8
    assert res.trace_delta <= 1e-8
    assert res.n_steps == 500
    traj = res.trajectory
    assert traj is not None and traj[0].t == 0.0 and traj[-1].t == 5.0
    assert all(abs(p.trace - 1.0) <= 1e-8 for p in traj)
    # depolarizing noise is unital, so purity must not grow (integration slack)
    purities = [p.purity for p in traj]
    assert all(b <= a + 1e-9 for a, b in zip(purities, purities[1:]))


def test_pure_dissipation_contracts_towards_identity():
    rho0 = pure_state(np.array([0.6, 0.8j]))
    res = integrate(ZERO_H1, rho0, 12.0, NoiseSpec(rate=0.1),
                    IntegratorConfig(dt=0.01, record_interval=100))
    dists = [p.purity - 0.5 for p in res.trajectory]
    assert all(d >= -1e-12 for d in dists)
    assert all(b < a for a, b in zip(dists, dists[1:]))
    assert dists[-1] < 1e-3


def test_rk4_global_error_scales_at_fourth_order():
    spec = AnnealSpec(problem=XxzParams(n_qubits=3),
                      driver=DriverParams.from_seed(3, 1),
                      t_final=10.0, noise_rate=0.005)

    def final_state(dt):
        return evolve(spec, IntegratorConfig(dt=dt)).state.matrix

    ref = final_state(0.005)
    err_coarse = np.linalg.norm(final_state(0.04) - ref)
    err_fine = np.linalg.norm(final_state(0.02) - ref)
    assert 12.0 < err_coarse / err_fine < 20.0


def test_oversized_step_diverges_loudly():
    rho0 = pure_state(np.array([1.0, 0.0]))
    with pytest.raises(IntegrationDivergedError):
        integrate(ZERO_H1, rho0, 5.0, NoiseSpec(rate=20.0),
                  IntegratorConfig(dt=0.05))


def test_integrate_rejects_bad_windows():
    rho0 = pure_state(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        integrate(ZERO_H1, rho0, -1.0, NoiseSpec(rate=0.0))
    with pytest.raises(ValueError):
        integrate(ZERO_H1, rho0, 1.0, NoiseSpec(rate=0.0),
                  IntegratorConfig(dt=2.0))


def test_config_and_noise_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(record_interval=0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        NoiseSpec(rate=-0.01)
    with pytest.raises(ValueError):
        NoiseSpec(rate=0.1, jumps=((0, "q"),))
    with pytest.raises(ValueError):
        NoiseSpec(rate=0.1, jumps=((-1, "z"),))
    with pytest.raises(ValueError):
        NoiseSpec(rate=0.1, jumps=((5, "z"),)).resolved_jumps(2)


def test_default_step_size_rule():
    assert default_dt(20.0) == 0.005
    assert default_dt(1.0) == pytest.approx(0.0005)
    assert default_dt(200.0) == 0.005


def test_affine_hamiltonian_interpolates():
    a = np.diag([1.0, -1.0]).astype(complex)
    b = np.ones((2, 2), dtype=complex)
    sched = AffineHamiltonian(h_start=a, h_end=b, t_final=4.0)
    assert np.array_equal(sched.at(0.0), a)
    assert np.array_equal(sched.at(4.0), b)
    assert np.max(np.abs(sched.at(1.0) - (0.75 * a + 0.25 * b))) < 1e-15


def test_trajectory_csv_round_trip(tmp_path):
    rho0 = pure_state(np.array([1.0, 0.0]))
    res = integrate(ZERO_H1, rho0, 1.0, NoiseSpec(rate=0.05),
                    IntegratorConfig(dt=0.01, record_interval=25))
    path = tmp_path / "traj.csv"
    write_trajectory(res.trajectory, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == TRAJECTORY_HEADER == "t,trace,purity,energy"
    assert len(lines) == 1 + len(res.trajectory)
    t, trace, purity, energy = (float(x) for x in lines[1].split(","))
    assert (t, trace) == (0.0, 1.0)
    assert purity == pytest.approx(res.trajectory[0].purity, rel=1e-10)
