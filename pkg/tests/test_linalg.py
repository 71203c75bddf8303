"""Dense linear-algebra kernel: conventions, validation, and oracle agreement."""

import numpy as np
import pytest

from oracles import (
    embed_pauli,
    expectation_oracle,
    jacobi_eigh,
    kron_oracle,
    matrix_power_oracle,
    partial_trace_oracle,
    random_density,
)
from shadowanneal.linalg import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix,
    QubitSubset,
    expectation,
    ground_state,
    ground_state_energy,
    kron,
    kron_all,
    matrix_power,
    partial_trace,
    pauli_string,
    pure_state,
)


def bell_state() -> DensityMatrix:
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1.0 / np.sqrt(2.0)
    return pure_state(v)


# ---------------------------------------------------------------- kron

def test_kron_identity():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))


def test_kron_pauli_entries():
    m = kron(PAULI_X, PAULI_Z)
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 2] = 1.0
    expected[1, 3] = -1.0
    expected[2, 0] = 1.0
    expected[3, 1] = -1.0
    assert np.array_equal(m, expected)


def test_kron_matches_index_oracle():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    # vectorized complex multiply may contract with FMA, so allow roundoff
    assert np.max(np.abs(kron(a, b) - kron_oracle(a, b))) < 1e-14


def test_kron_all_orders_first_factor_most_significant():
    assert np.array_equal(kron_all([PAULI_Z, np.eye(2)]),
                          pauli_string(2, [(0, "z")]))
    with pytest.raises(ValueError):
        kron_all([])


# ---------------------------------------------------------------- pauli_string

def test_pauli_string_single_z():
    assert np.array_equal(pauli_string(1, [(0, "z")]), np.diag([1.0, -1.0]).astype(complex))


def test_pauli_string_xx_antidiagonal():
    m = pauli_string(2, [(0, "x"), (1, "x")])
    assert np.array_equal(m, np.fliplr(np.eye(4, dtype=complex)))


def test_pauli_string_involution():
    m = pauli_string(3, [(1, "y")])
    assert np.max(np.abs(m @ m - np.eye(8))) < 1e-14


def test_pauli_string_matches_embedding_oracle():
    placements = [(0, "y"), (2, "x"), (3, "z")]
    assert np.array_equal(pauli_string(4, placements), embed_pauli(4, placements))


def test_pauli_string_rejects_bad_placements():
    with pytest.raises(ValueError):
        pauli_string(2, [(0, "x"), (0, "z")])
    with pytest.raises(ValueError):
        pauli_string(2, [(2, "x")])
    with pytest.raises(ValueError):
        pauli_string(2, [(0, "w")])


# ---------------------------------------------------------------- partial_trace

def test_partial_trace_product_state_factorizes():
    rng = np.random.default_rng(5)
    ra = random_density(1, rng)
    rb = random_density(2, rng)
    rho = DensityMatrix(3, np.kron(ra, rb))
    assert np.max(np.abs(partial_trace(rho, QubitSubset.of(3, [0])).matrix - ra)) < 1e-12
    assert np.max(np.abs(partial_trace(rho, QubitSubset.of(3, [1, 2])).matrix - rb)) < 1e-12


def test_partial_trace_bell_is_maximally_mixed():
    reduced = partial_trace(bell_state(), QubitSubset.of(2, [0]))
    assert np.max(np.abs(reduced.matrix - np.eye(2) / 2.0)) < 1e-12


def test_partial_trace_matches_double_sum_oracle():
    rng = np.random.default_rng(17)
    rho = DensityMatrix(3, random_density(3, rng))
    got = partial_trace(rho, QubitSubset.of(3, [0, 2])).matrix
    want = partial_trace_oracle(rho.matrix, [0, 2], 3)
    assert np.max(np.abs(got - want)) < 1e-12


def test_partial_trace_all_qubits_is_identity_map():
    rng = np.random.default_rng(23)
    rho = DensityMatrix(2, random_density(2, rng))
    out = partial_trace(rho, QubitSubset.of(2, [0, 1]))
    assert np.array_equal(out.matrix, rho.matrix)


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(29)
    rho = DensityMatrix(3, random_density(3, rng))
    for keep in ([0], [1], [2], [0, 1], [1, 2], [0, 2]):
        reduced = partial_trace(rho, QubitSubset.of(3, keep))
        assert abs(reduced.matrix.trace() - 1.0) < 1e-12


def test_partial_trace_adjoint_property():
    # Tr[Tr_C[rho] O] = Tr[rho (O embedded on the kept qubits)]
    rng = np.random.default_rng(31)
    rho = DensityMatrix(4, random_density(4, rng))
    kept = [1, 3]
    local_placements = [(0, "x"), (1, "z")]      # on the reduced register
    embedded_placements = [(1, "x"), (3, "z")]   # same operators on the original ids
    obs_local = pauli_string(2, local_placements)
    obs_embedded = pauli_string(4, embedded_placements)
    reduced = partial_trace(rho, QubitSubset.of(4, kept))
    assert abs(expectation(reduced, obs_local) - expectation(rho, obs_embedded)) < 1e-10


def test_partial_trace_rejects_bad_subsets():
    rng = np.random.default_rng(37)
    rho = DensityMatrix(2, random_density(2, rng))
    with pytest.raises(ValueError):
        partial_trace(rho, QubitSubset(2, ()))
    with pytest.raises(ValueError):
        partial_trace(rho, QubitSubset.of(3, [0]))


# ---------------------------------------------------------------- expectation

def test_expectation_ground_projector():
    assert expectation(pure_state(np.array([1.0, 0.0])), PAULI_Z) == pytest.approx(1.0, abs=1e-12)


def test_expectation_maximally_mixed():
    assert expectation(np.eye(2) / 2.0, PAULI_X) == pytest.approx(0.0, abs=1e-12)


def test_expectation_matches_elementwise_oracle():
    rng = np.random.default_rng(41)
    rho = DensityMatrix(2, random_density(2, rng))
    obs = pauli_string(2, [(0, "z"), (1, "z")])
    want = expectation_oracle(obs, rho.matrix)
    assert abs(expectation(rho, obs) - want.real) < 1e-10
    assert abs(want.imag) < 1e-10


def test_expectation_rejects_large_imaginary_residue():
    rho = pure_state(np.array([1.0, 1.0]))  # <sigma_x> = 1
    with pytest.raises(ValueError):
        expectation(rho, 1j * PAULI_X)


# ---------------------------------------------------------------- matrix_power

def test_matrix_power_projector_idempotent():
    p = pure_state(np.array([1.0, 2.0, 0.0, -1.0])).matrix
    assert np.max(np.abs(matrix_power(p, 5) - p)) < 1e-12


def test_matrix_power_diagonal():
    out = matrix_power(np.diag([0.5, 0.5]).astype(complex), 2)
    assert np.array_equal(out, np.diag([0.25, 0.25]).astype(complex))


def test_matrix_power_matches_spectral_oracle():
    rng = np.random.default_rng(43)
    rho = random_density(3, rng)
    assert np.max(np.abs(matrix_power(rho, 3) - matrix_power_oracle(rho, 3))) < 1e-12


def test_matrix_power_rejects_bad_exponents():
    m = np.eye(2, dtype=complex)
    for bad in (0, -1, 2.5, True):
        with pytest.raises(ValueError):
            matrix_power(m, bad)


# ---------------------------------------------------------------- ground_state

def test_ground_state_sigma_z():
    assert ground_state_energy(PAULI_Z) == pytest.approx(-1.0, abs=1e-12)


def test_ground_state_energy_xxz_n6():
    from shadowanneal.model import XxzParams, build_problem
    h_p = build_problem(XxzParams(n_qubits=6))
    assert ground_state_energy(h_p) == pytest.approx(-14.058, abs=1e-3)


def test_ground_state_matches_jacobi_oracle():
    rng = np.random.default_rng(47)
    for d in (8, 16, 64):
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        a = a + a.conj().T
        vals, _ = jacobi_eigh(a)
        assert abs(ground_state_energy(a) - vals[0]) <= 1e-9


def test_ground_state_eigenvector_quality_and_phase():
    rng = np.random.default_rng(53)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    a = a + a.conj().T
    e0, v0 = ground_state(a)
    assert np.max(np.abs(a @ v0 - e0 * v0)) < 1e-10
    # phase convention makes repeat calls bitwise identical
    e1, v1 = ground_state(a)
    assert e0 == e1 and np.array_equal(v0, v1)
    k = int(np.argmax(np.abs(v0)))
    assert abs(v0[k].imag) < 1e-12 and v0[k].real > 0


def test_ground_state_rejects_non_hermitian():
    with pytest.raises(ValueError):
        ground_state_energy(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_variational_bound_against_random_states():
    rng = np.random.default_rng(59)
    h = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = h + h.conj().T
    e_g = ground_state_energy(h)
    for _ in range(20):
        rho = DensityMatrix(3, random_density(3, rng))
        assert expectation(rho, h) >= e_g - 1e-7


# ---------------------------------------------------------------- value types

def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(1, np.array([[0.5, 0.3], [0.1, 0.5]]))  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix(1, np.diag([0.6, 0.6]).astype(complex))  # trace 1.2
    with pytest.raises(ValueError):
        DensityMatrix(1, np.diag([1.1, -0.1]).astype(complex))  # negative eigenvalue
    with pytest.raises(ValueError):
        DensityMatrix(2, np.eye(2, dtype=complex) / 2.0)  # shape mismatch
    with pytest.raises(ValueError):
        DensityMatrix.from_matrix(np.eye(3, dtype=complex) / 3.0)  # dim not 2^n


def test_density_matrix_accepts_integrator_scale_negativity():
    eps = 5e-8  # above exact zero, below the 1e-7 floor
    m = np.diag([1.0 + eps, -eps]).astype(complex)
    dm = DensityMatrix(1, m)
    assert dm.purity() > 0.9


def test_qubit_subset_ordering_rules():
    with pytest.raises(ValueError):
        QubitSubset(3, (2, 1))
    with pytest.raises(ValueError):
        QubitSubset(3, (0, 3))
    s = QubitSubset.of(4, [3, 1, 1])
    assert s.indices == (1, 3)
    assert len(s) == 2 and 3 in s and list(s) == [1, 3]


def test_pure_state_normalizes():
    dm = pure_state(np.array([3.0, 4.0]))
    assert dm.purity() == pytest.approx(1.0, abs=1e-12)
    assert abs(dm.matrix.trace() - 1.0) < 1e-12
