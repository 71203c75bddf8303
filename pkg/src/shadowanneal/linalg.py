"""Dense linear algebra for small qubit registers.

Conventions used across the package:

* Qubit 0 is the most significant bit of the computational-basis index,
  i.e. basis state ``|b_0 b_1 ... b_{N-1}>`` has index ``sum b_q 2^(N-1-q)``.
  Equivalently, ``pauli_string`` places qubit 0 as the leftmost Kronecker
  factor.
* States are dense complex density matrices, normalized to unit trace.

Everything here is plain numpy; register sizes stay small (N <= 14) so dense
storage is the right tool.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

# Validation tolerances for density matrices. The positivity floor is loose
# on purpose: fixed-step integration may leave eigenvalues a hair negative.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
EIGENVALUE_FLOOR = -1e-7

# Tolerance ladder for expectation values: residues below IMAG_DISCARD are
# silently dropped, anything above IMAG_ERROR signals a corrupted state.
IMAG_DISCARD = 1e-9
IMAG_ERROR = 1e-6

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

PAULI = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}

ComplexMatrix = np.ndarray


def _as_matrix(state) -> np.ndarray:
    """Accept either a DensityMatrix or a bare ndarray."""
    return state.matrix if isinstance(state, DensityMatrix) else np.asarray(state)


@dataclass(frozen=True)
class QubitSubset:
    """An ordered set of qubit indices within a register of ``n_total``."""

    n_total: int
    indices: Tuple[int, ...]

    def __post_init__(self):
        if self.n_total < 1:
            raise ValueError(f"register size must be positive, got {self.n_total}")
        idx = tuple(int(q) for q in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(q < 0 or q >= self.n_total for q in idx):
            raise ValueError(f"indices {idx} outside register of size {self.n_total}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing, got {idx}")

    @classmethod
    def of(cls, n_total: int, indices: Iterable[int]) -> "QubitSubset":
        """Build from any iterable, sorting and deduplicating."""
        return cls(n_total, tuple(sorted(set(int(q) for q in indices))))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, q) -> bool:
        return q in self.indices


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix on ``n_qubits`` qubits.

    Construction checks Hermiticity (1e-10), unit trace (1e-8) and
    positivity up to the integrator floor (eigenvalues >= -1e-7).
    """

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = 2 ** self.n_qubits
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.shape != (dim, dim):
            raise ValueError(f"expected shape {(dim, dim)} for {self.n_qubits} qubits, got {m.shape}")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"not Hermitian: max deviation {herm:.3e}")
        tr = m.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr:.12g} deviates from 1 by more than {TRACE_TOL:g}")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < EIGENVALUE_FLOOR:
            raise ValueError(f"negative eigenvalue {lo:.3e} below floor {EIGENVALUE_FLOOR:g}")

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "DensityMatrix":
        dim = np.asarray(matrix).shape[0]
        n = int(round(np.log2(dim)))
        if 2 ** n != dim:
            raise ValueError(f"dimension {dim} is not a power of two")
        return cls(n, matrix)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def purity(self) -> float:
        """Tr[rho^2], real by Hermiticity."""
        return float(np.einsum("ij,ji->", self.matrix, self.matrix).real)


def pure_state(vector: np.ndarray) -> DensityMatrix:
    """Projector |v><v| as a DensityMatrix (vector normalized first)."""
    v = np.asarray(vector, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return DensityMatrix.from_matrix(np.outer(v, v.conj()))


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Kronecker product, first factor most significant."""
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(factors: Sequence[ComplexMatrix]) -> ComplexMatrix:
    if len(factors) == 0:
        raise ValueError("need at least one factor")
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def pauli_string(n_qubits: int, placements: Iterable[Tuple[int, str]]) -> ComplexMatrix:
    """Tensor product with Pauli factors at the given qubits, identity elsewhere.

    ``placements`` is a sequence of (qubit, axis) with axis in {'x','y','z'}.
    Placing two operators on the same qubit is rejected; compose them first.
    """
    factors = [IDENTITY_2] * n_qubits
    seen = set()
    for q, axis in placements:
        q = int(q)
        if q < 0 or q >= n_qubits:
            raise ValueError(f"qubit {q} outside register of {n_qubits}")
        if q in seen:
            raise ValueError(f"duplicate placement on qubit {q}")
        if axis not in PAULI:
            raise ValueError(f"unknown axis {axis!r}, expected one of 'x','y','z'")
        seen.add(q)
        factors[q] = PAULI[axis]
    return kron_all(factors)


def partial_trace(rho: DensityMatrix, keep: QubitSubset) -> DensityMatrix:
    """Trace out every qubit not in ``keep``.

    The result is ordered by ascending original qubit index, regardless of
    the order qubits were requested in.
    """
    if len(keep) == 0:
        raise ValueError("keep set must be nonempty")
    if keep.n_total != rho.n_qubits:
        raise ValueError(f"subset register size {keep.n_total} != state register {rho.n_qubits}")
    n = rho.n_qubits
    kept = list(keep.indices)
    if len(kept) == n:
        return rho
    tensor = rho.matrix.reshape([2] * (2 * n))
    # einsum integer-subscript form: traced qubits share the row index on
    # their column axis, kept qubits keep separate row/column indices.
    row_idx = list(range(n))
    col_idx = [n + q if q in keep else q for q in range(n)]
    out_idx = kept + [n + q for q in kept]
    reduced = np.einsum(tensor, row_idx + col_idx, out_idx)
    dim = 2 ** len(kept)
    return DensityMatrix(len(kept), reduced.reshape(dim, dim))


def expectation(rho, obs: ComplexMatrix) -> float:
    """Tr[obs rho] as a real number.

    The imaginary residue must be below 1e-6 (corrupted-state guard);
    residues below 1e-9 are considered pure roundoff.
    """
    m = _as_matrix(rho)
    o = np.asarray(obs)
    val = complex(np.einsum("ij,ji->", o, m))
    if abs(val.imag) > IMAG_ERROR:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; state or observable corrupted")
    return float(val.real)


def matrix_power(m: ComplexMatrix, n: int) -> ComplexMatrix:
    """m @ m @ ... @ m, n >= 1 times. n = 0 is rejected (identity is never meant here)."""
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValueError(f"power must be an integer, got {n!r}")
    if n < 1:
        raise ValueError(f"power must be >= 1, got {n}")
    return np.linalg.matrix_power(np.asarray(m, dtype=complex), int(n))


def ground_state(h: ComplexMatrix) -> Tuple[float, np.ndarray]:
    """Smallest eigenvalue of a Hermitian matrix and its eigenvector.

    The eigenvector phase is fixed so its largest-magnitude entry is real
    positive, which makes repeated calls bitwise comparable.
    """
    m = np.asarray(h, dtype=complex)
    dev = np.max(np.abs(m - m.conj().T))
    if dev > HERMITICITY_TOL:
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3e})")
    vals, vecs = np.linalg.eigh(m)
    vec = vecs[:, 0]
    k = int(np.argmax(np.abs(vec)))
    phase = vec[k] / abs(vec[k])
    vec = vec / phase
    return float(vals[0]), vec


def ground_state_energy(h: ComplexMatrix) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    return ground_state(h)[0]
