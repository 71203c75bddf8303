"""Problem and driver Hamiltonians for the annealing benchmark.

The problem Hamiltonian is a periodic XXZ chain with a uniform y-field,

    H_p = J sum_i (X_i X_{i+1} + Y_i Y_{i+1} + Delta Z_i Z_{i+1}) + h sum_i Y_i,

decomposed into per-bond local terms H_i (bond term plus the field on site i)
so that sum_i H_i = H_p exactly. The driver is a random transverse field
H_d = -sum_i h_i X_i with amplitudes drawn from Uniform(0,1); its ground state
is the product state |+>^N used as the anneal's initial state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .linalg import (
    ComplexMatrix,
    DensityMatrix,
    QubitSubset,
    pauli_string,
)

# A Pauli-sum recipe: ((coefficient, ((qubit, axis), ...)), ...). Local terms
# carry their recipe so they can be rebuilt on a reduced register exactly.
PauliTerms = Tuple[Tuple[float, Tuple[Tuple[int, str], ...]], ...]


@dataclass(frozen=True)
class XxzParams:
    """Couplings of the periodic XXZ chain with uniform y-field."""

    n_qubits: int
    j: float = -1.0
    delta: float = -0.73
    h: float = 1.0

    def __post_init__(self):
        # N < 3 would double-count the single edge of the 2-cycle.
        if self.n_qubits < 3:
            raise ValueError(f"periodic chain needs n_qubits >= 3, got {self.n_qubits}")


@dataclass(frozen=True)
class LocalTerm:
    """One local term of the problem Hamiltonian with its support set.

    ``pauli_terms`` is the Pauli-sum recipe used to rebuild the operator on a
    reduced register (support qubits keep their identity, coefficients are
    unchanged).
    """

    index: int
    matrix: np.ndarray
    support: QubitSubset
    pauli_terms: PauliTerms = ()

    def on_register(self, kept: QubitSubset) -> np.ndarray:
        """Rebuild this term on the sub-register ``kept``.

        Exact whenever support is a subset of ``kept``: the same Pauli
        placements are laid down at the kept-qubit positions.
        """
        for q in self.support:
            if q not in kept:
                raise ValueError(f"support qubit {q} not in kept set {kept.indices}")
        pos = {q: k for k, q in enumerate(kept.indices)}
        dim = 2 ** len(kept)
        out = np.zeros((dim, dim), dtype=complex)
        for coeff, placements in self.pauli_terms:
            mapped = [(pos[q], ax) for q, ax in placements]
            out += coeff * pauli_string(len(kept), mapped)
        return out


def _bond_pauli_terms(p: XxzParams, i: int) -> PauliTerms:
    k = (i + 1) % p.n_qubits
    return (
        (p.j, ((i, "x"), (k, "x"))),
        (p.j, ((i, "y"), (k, "y"))),
        (p.j * p.delta, ((i, "z"), (k, "z"))),
        (p.h, ((i, "y"),)),
    )


def build_local_term(p: XxzParams, i: int) -> LocalTerm:
    """H_i = J(X_i X_{i+1} + Y_i Y_{i+1} + Delta Z_i Z_{i+1}) + h Y_i, mod N."""
    n = p.n_qubits
    if i < 0 or i >= n:
        raise ValueError(f"term index {i} outside [0, {n})")
    recipe = _bond_pauli_terms(p, i)
    dim = 2 ** n
    matrix = np.zeros((dim, dim), dtype=complex)
    for coeff, placements in recipe:
        matrix += coeff * pauli_string(n, placements)
    support = QubitSubset.of(n, (i, (i + 1) % n))
    return LocalTerm(index=i, matrix=matrix, support=support, pauli_terms=recipe)


def build_local_terms(p: XxzParams) -> Tuple[LocalTerm, ...]:
    return tuple(build_local_term(p, i) for i in range(p.n_qubits))


def build_problem(p: XxzParams) -> ComplexMatrix:
    """Full problem Hamiltonian; equals the sum of the local terms."""
    dim = 2 ** p.n_qubits
    h_p = np.zeros((dim, dim), dtype=complex)
    for i in range(p.n_qubits):
        h_p += build_local_term(p, i).matrix
    return h_p


def _driver_amplitude(seed: int, qubit: int) -> float:
    """One Uniform(0,1] draw from a counter-based stream keyed (seed, qubit).

    Keying per qubit makes the amplitude list independent of draw order.
    Exact zeros are resampled; the driver needs every amplitude positive.
    """
    key = np.array([seed % 2 ** 64, qubit], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    x = gen.random()
    while x == 0.0:
        x = gen.random()
    return float(x)


@dataclass(frozen=True)
class DriverParams:
    """Random transverse-field driver H_d = -sum_i h_i X_i."""

    n_qubits: int
    amplitudes: Tuple[float, ...]
    seed: Optional[int] = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("driver needs at least one qubit")
        amps = tuple(float(a) for a in self.amplitudes)
        object.__setattr__(self, "amplitudes", amps)
        if len(amps) != self.n_qubits:
            raise ValueError(f"expected {self.n_qubits} amplitudes, got {len(amps)}")
        if any(not (0.0 < a < 1.0) for a in amps):
            raise ValueError("driver amplitudes must lie in (0, 1)")

    @classmethod
    def from_seed(cls, n_qubits: int, seed: int) -> "DriverParams":
        amps = tuple(_driver_amplitude(seed, q) for q in range(n_qubits))
        return cls(n_qubits=n_qubits, amplitudes=amps, seed=seed)


def build_driver(d: DriverParams) -> ComplexMatrix:
    dim = 2 ** d.n_qubits
    h_d = np.zeros((dim, dim), dtype=complex)
    for q, amp in enumerate(d.amplitudes):
        h_d -= amp * pauli_string(d.n_qubits, [(q, "x")])
    return h_d


def initial_state(d: DriverParams) -> DensityMatrix:
    """Projector onto |+>^N, the driver ground state (all amplitudes > 0)."""
    dim = 2 ** d.n_qubits
    m = np.full((dim, dim), 1.0 / dim, dtype=complex)
    return DensityMatrix(d.n_qubits, m)


@dataclass(frozen=True)
class AnnealSpec:
    """Everything that defines one open-system anneal."""

    problem: XxzParams
    driver: DriverParams
    t_final: float
    noise_rate: float = 0.0

    def __post_init__(self):
        if self.problem.n_qubits != self.driver.n_qubits:
            raise ValueError("problem and driver register sizes differ")
        if not self.t_final > 0:
            raise ValueError(f"anneal time must be positive, got {self.t_final}")
        if self.noise_rate < 0:
            raise ValueError(f"noise rate must be >= 0, got {self.noise_rate}")

    @property
    def n_qubits(self) -> int:
        return self.problem.n_qubits


def schedule_hamiltonian(spec: AnnealSpec, t: float) -> ComplexMatrix:
    """H(t) = (t/T) H_p + (1 - t/T) H_d on the linear schedule."""
    if t < 0 or t > spec.t_final:
        raise ValueError(f"t={t} outside schedule window [0, {spec.t_final}]")
    a = t / spec.t_final
    return a * build_problem(spec.problem) + (1.0 - a) * build_driver(spec.driver)


def _cycle_distance(a: int, b: int, n: int) -> int:
    d = abs(a - b) % n
    return min(d, n - d)


@dataclass(frozen=True)
class RegionPartition:
    """Disjoint (A, B, C) split of the chain around one local term.

    A is the term's support, B the buffer of width ``w`` on each side, C the
    traced-out remainder. ``collapsed`` marks the degenerate case C = empty,
    where localized purification coincides with the full-size variant.
    """

    index: int
    width: int
    a: QubitSubset
    b: QubitSubset
    c: QubitSubset
    collapsed: bool = False


def build_regions(i: int, w: int, n_qubits: int) -> RegionPartition:
    """Partition the cycle into support A={i,i+1}, buffer B (distance <= w), rest C."""
    n = n_qubits
    if i < 0 or i >= n:
        raise ValueError(f"term index {i} outside [0, {n})")
    if w < 0:
        raise ValueError(f"buffer width must be >= 0, got {w}")
    a = {i, (i + 1) % n}
    dist = {q: min(_cycle_distance(q, x, n) for x in a) for q in range(n)}
    b = {q for q in range(n) if 1 <= dist[q] <= w}
    c = {q for q in range(n) if dist[q] > w}
    return RegionPartition(
        index=i,
        width=w,
        a=QubitSubset.of(n, a),
        b=QubitSubset(n, tuple(sorted(b))),
        c=QubitSubset(n, tuple(sorted(c))),
        collapsed=(len(c) == 0),
    )


def build_all_regions(n_qubits: int, w: int) -> Tuple[RegionPartition, ...]:
    return tuple(build_regions(i, w, n_qubits) for i in range(n_qubits))
