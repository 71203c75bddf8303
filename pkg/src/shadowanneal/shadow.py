"""Randomized Pauli-basis measurements and shadow estimators.

Each shot draws one measurement axis per qubit uniformly from {x, y, z},
rotates the state into that product basis, and samples a bitstring from the
diagonal (Born rule). The per-qubit inverse-channel factor

    3 U_q^dagger |b_q><b_q| U_q - I

turns a shot into an unbiased matrix estimate of the state, so reduced
density matrices, purities and purified local energies follow from plain
averages and pair U-statistics over shots. Pair sums use the O(M) identity
sum_{a != b} Tr[r_a X r_b] = Tr[S X S] - sum_a Tr[r_a X r_a] with
S = sum_a r_a.

Randomness is counter-based (Philox keyed by the ensemble seed): shot s
consumes exactly the stream positions [s(N+1), (s+1)(N+1)), meaning N axis
draws then one outcome draw, so any subset of shots can be regenerated
independently and in any order, bitwise identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .linalg import DensityMatrix, QubitSubset, kron_all
from .model import LocalTerm, RegionPartition
from .purify import PurifiedEstimate, TermContribution, _kept_set

AXES = "xyz"
_SQ2 = 1.0 / math.sqrt(2.0)

# Basis-change rotations, indexed by axis code 0=x, 1=y, 2=z. Measuring axis
# w means sampling diag(R_w rho R_w^dagger): x uses the Hadamard rotation, y
# the phase-then-Hadamard rotation, z nothing.
ROTATIONS = np.array([
    [[_SQ2, _SQ2], [_SQ2, -_SQ2]],
    [[_SQ2, -1j * _SQ2], [_SQ2, 1j * _SQ2]],
    [[1.0, 0.0], [0.0, 1.0]],
], dtype=complex)

# Inverse-channel factors 3 U^dagger |b><b| U - I, indexed by axis_code*2 +
# outcome_bit. Written out exactly so every downstream mean is exactly
# Hermitian in floating point.
_FACTORS = np.array([
    [[0.5, 1.5], [1.5, 0.5]],        # x, 0  -> 3|+><+| - I
    [[0.5, -1.5], [-1.5, 0.5]],      # x, 1
    [[0.5, -1.5j], [1.5j, 0.5]],     # y, 0  -> 3|+i><+i| - I
    [[0.5, 1.5j], [-1.5j, 0.5]],     # y, 1
    [[2.0, 0.0], [0.0, -1.0]],       # z, 0
    [[-1.0, 0.0], [0.0, 2.0]],       # z, 1
], dtype=complex)

_CHUNK = 4096  # shots per estimator chunk; bounds peak memory
PROBABILITY_SUM_TOL = 1e-8
PROBABILITY_FLOOR = -1e-6


class CorruptedStateError(ValueError):
    """Born-rule probabilities failed their sanity bounds."""


@dataclass(frozen=True)
class ShadowSnapshot:
    """One randomized-measurement record: per-qubit bases and outcome bits."""

    shot_id: int
    bases: Tuple[str, ...]
    outcomes: Tuple[int, ...]

    def __post_init__(self):
        if len(self.bases) != len(self.outcomes):
            raise ValueError("bases and outcomes differ in length")
        if any(b not in AXES for b in self.bases):
            raise ValueError(f"unknown basis in {self.bases}")
        if any(o not in (0, 1) for o in self.outcomes):
            raise ValueError(f"outcomes must be bits, got {self.outcomes}")

    @property
    def n_qubits(self) -> int:
        return len(self.bases)


def _axis_codes(bases: Union[str, Sequence[str], np.ndarray]) -> np.ndarray:
    if isinstance(bases, np.ndarray) and bases.dtype != object:
        return bases.astype(np.uint8)
    return np.array([AXES.index(b) for b in bases], dtype=np.uint8)


@dataclass(frozen=True)
class ShadowEnsemble:
    """A batch of snapshots in arrays: row s holds shot ``shot_ids[s]``.

    ``seed`` is the generating stream key, or None for ensembles rebuilt
    from persisted records (the on-disk format carries no seed).
    """

    n_qubits: int
    shot_ids: np.ndarray   # (M,) int64, unique
    bases: np.ndarray      # (M, N) uint8 axis codes
    outcomes: np.ndarray   # (M, N) uint8 bits
    seed: Optional[int] = None

    def __post_init__(self):
        ids = np.asarray(self.shot_ids, dtype=np.int64)
        b = np.asarray(self.bases, dtype=np.uint8)
        o = np.asarray(self.outcomes, dtype=np.uint8)
        object.__setattr__(self, "shot_ids", ids)
        object.__setattr__(self, "bases", b)
        object.__setattr__(self, "outcomes", o)
        m = len(ids)
        if b.shape != (m, self.n_qubits) or o.shape != (m, self.n_qubits):
            raise ValueError("snapshot arrays have inconsistent shapes")
        if len(np.unique(ids)) != m:
            raise ValueError("shot ids must be unique")
        if m and (b.max() > 2 or o.max() > 1):
            raise ValueError("basis codes must be in {0,1,2}, outcomes bits")

    def __len__(self) -> int:
        return len(self.shot_ids)

    def snapshot(self, k: int) -> ShadowSnapshot:
        return ShadowSnapshot(
            shot_id=int(self.shot_ids[k]),
            bases=tuple(AXES[c] for c in self.bases[k]),
            outcomes=tuple(int(x) for x in self.outcomes[k]),
        )

    @property
    def snapshots(self) -> List[ShadowSnapshot]:
        return [self.snapshot(k) for k in range(len(self))]

    @classmethod
    def from_snapshots(cls, snaps: Sequence[ShadowSnapshot],
                       seed: Optional[int] = None) -> "ShadowEnsemble":
        if not snaps:
            raise ValueError("need at least one snapshot")
        n = snaps[0].n_qubits
        if any(s.n_qubits != n for s in snaps):
            raise ValueError("snapshots disagree on register size")
        return cls(
            n_qubits=n,
            shot_ids=np.array([s.shot_id for s in snaps], dtype=np.int64),
            bases=np.array([[AXES.index(b) for b in s.bases] for s in snaps], dtype=np.uint8),
            outcomes=np.array([list(s.outcomes) for s in snaps], dtype=np.uint8),
            seed=seed,
        )


# ── sampling ────────────────────────────────────────────────────────────────

def _stream_draws(seed: int, n_qubits: int, start_shot: int, count: int) -> np.ndarray:
    """Uniform doubles for shots [start, start+count), one (N+1)-row per shot."""
    width = n_qubits + 1
    bitgen = np.random.Philox(key=seed % 2 ** 64)
    # advance() steps the counter, and each counter step yields 4 draws
    blocks, rem = divmod(start_shot * width, 4)
    if blocks:
        bitgen.advance(blocks)
    gen = np.random.Generator(bitgen)
    if rem:
        gen.random(rem)
    return gen.random(count * width).reshape(count, width)


def born_probabilities(rho, bases) -> np.ndarray:
    """Outcome distribution diag(U rho U^dagger) for one product basis.

    Raises CorruptedStateError if the diagonal fails positivity or does not
    sum to 1 within 1e-8.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    codes = _axis_codes(bases)
    u = kron_all([ROTATIONS[c] for c in codes])
    probs = np.einsum("ij,ij->i", u @ m, u.conj()).real
    lo = float(probs.min())
    if lo < PROBABILITY_FLOOR:
        raise CorruptedStateError(f"negative Born probability {lo:.3e}")
    probs = np.clip(probs, 0.0, None)
    total = float(probs.sum())
    if not (1.0 - PROBABILITY_SUM_TOL <= total <= 1.0 + PROBABILITY_SUM_TOL):
        raise CorruptedStateError(f"Born probabilities sum to {total:.12g}")
    return probs


def _index_bits(indices: np.ndarray, n_qubits: int) -> np.ndarray:
    """Basis index -> bit rows; qubit 0 is the most significant bit."""
    shifts = np.arange(n_qubits - 1, -1, -1)
    return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _measure_rows(m: np.ndarray, bases: np.ndarray, u: np.ndarray) -> np.ndarray:
    n_qubits = bases.shape[1]
    outcomes = np.empty_like(bases)
    uniq, inverse = np.unique(bases, axis=0, return_inverse=True)
    for g in range(len(uniq)):
        sel = np.nonzero(inverse == g)[0]
        probs = born_probabilities(m, uniq[g])
        cum = np.cumsum(probs)
        idx = np.searchsorted(cum, u[sel] * cum[-1], side="right")
        idx = np.minimum(idx, len(cum) - 1)
        outcomes[sel] = _index_bits(idx, n_qubits)
    return outcomes


def sample_ensemble(rho: DensityMatrix, n_shots: int, seed: int) -> ShadowEnsemble:
    """Draw ``n_shots`` randomized-basis shots with ids 0..n_shots-1."""
    if n_shots < 1:
        raise ValueError(f"need at least one shot, got {n_shots}")
    draws = _stream_draws(seed, rho.n_qubits, 0, n_shots)
    bases = (draws[:, :-1] * 3.0).astype(np.uint8)
    outcomes = _measure_rows(rho.matrix, bases, draws[:, -1])
    return ShadowEnsemble(
        n_qubits=rho.n_qubits,
        shot_ids=np.arange(n_shots, dtype=np.int64),
        bases=bases,
        outcomes=outcomes,
        seed=seed,
    )


def sample_snapshot(rho: DensityMatrix, seed: int, shot_id: int = 0) -> ShadowSnapshot:
    """Single shot from the keyed stream; row ``shot_id`` of the ensemble."""
    draws = _stream_draws(seed, rho.n_qubits, shot_id, 1)
    bases = (draws[:, :-1] * 3.0).astype(np.uint8)
    outcomes = _measure_rows(rho.matrix, bases, draws[:, -1])
    return ShadowEnsemble(
        n_qubits=rho.n_qubits,
        shot_ids=np.array([shot_id], dtype=np.int64),
        bases=bases,
        outcomes=outcomes,
        seed=seed,
    ).snapshot(0)


def measure_in_bases(rho: DensityMatrix, bases, u: float,
                     shot_id: int = 0) -> ShadowSnapshot:
    """Forced-basis measurement: one Born draw at uniform value ``u``."""
    codes = _axis_codes(bases).reshape(1, -1)
    outcomes = _measure_rows(rho.matrix, codes, np.array([float(u)]))
    return ShadowSnapshot(
        shot_id=shot_id,
        bases=tuple(AXES[c] for c in codes[0]),
        outcomes=tuple(int(x) for x in outcomes[0]),
    )


# ── estimators ──────────────────────────────────────────────────────────────

def snapshot_local_matrix(s: ShadowSnapshot, region: QubitSubset) -> np.ndarray:
    """Inverse-channel estimate on ``region``: kron of per-qubit factors."""
    for q in region:
        if q >= s.n_qubits:
            raise ValueError(f"region qubit {q} outside snapshot register")
    factors = []
    for q in region.indices:
        code = AXES.index(s.bases[q]) * 2 + s.outcomes[q]
        factors.append(_FACTORS[code])
    return kron_all(factors)


def _region_codes(ens: ShadowEnsemble, region: QubitSubset) -> np.ndarray:
    if region.n_total != ens.n_qubits:
        raise ValueError(f"region register {region.n_total} != ensemble register {ens.n_qubits}")
    if len(region) == 0:
        raise ValueError("region must be nonempty")
    cols = list(region.indices)
    order = np.argsort(ens.shot_ids, kind="stable")  # fixes the fold order
    return (ens.bases[order][:, cols].astype(np.intp) * 2
            + ens.outcomes[order][:, cols].astype(np.intp))


def _local_matrices(codes: np.ndarray) -> np.ndarray:
    """(m, 2^k, 2^k) stack of per-shot local estimates for one chunk."""
    mats = _FACTORS[codes[:, 0]]
    for col in range(1, codes.shape[1]):
        nxt = _FACTORS[codes[:, col]]
        m, d, _ = mats.shape
        mats = np.einsum("aij,akl->aikjl", mats, nxt).reshape(m, 2 * d, 2 * d)
    return mats


def estimate_rdm(ens: ShadowEnsemble, region: QubitSubset) -> np.ndarray:
    """Mean inverse-channel estimate of the reduced state on ``region``.

    Exactly Hermitian and unit-trace by construction, any shot count.
    """
    codes = _region_codes(ens, region)
    m = len(codes)
    dim = 2 ** codes.shape[1]
    total = np.zeros((dim, dim), dtype=complex)
    for lo in range(0, m, _CHUNK):
        total += _local_matrices(codes[lo:lo + _CHUNK]).sum(axis=0)
    return total / m


def _purity_stat(codes: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """(Tr[S S], per-shot Tr[r_a^2], S) over one batch of codes."""
    m = len(codes)
    dim = 2 ** codes.shape[1]
    s_sum = np.zeros((dim, dim), dtype=complex)
    self_tr = np.empty(m)
    for lo in range(0, m, _CHUNK):
        mats = _local_matrices(codes[lo:lo + _CHUNK])
        s_sum += mats.sum(axis=0)
        self_tr[lo:lo + _CHUNK] = np.einsum("aij,aji->a", mats, mats).real
    q = float(np.einsum("ij,ji->", s_sum, s_sum).real)
    return q, self_tr, s_sum


def _batch_bounds(m: int, batches: int) -> List[Tuple[int, int]]:
    if batches < 1:
        raise ValueError(f"batch count must be >= 1, got {batches}")
    if batches * 2 > m:
        raise ValueError(f"{batches} batches need at least {2 * batches} shots, got {m}")
    edges = np.linspace(0, m, batches + 1).astype(int)
    return [(int(edges[k]), int(edges[k + 1])) for k in range(batches)]


def estimate_purity(ens: ShadowEnsemble, region: QubitSubset, batches: int = 1) -> float:
    """Unbiased pair U-statistic for Tr[rho_region^2].

    (2/(M(M-1))) sum_{a<b} Tr[r_a r_b], evaluated in O(M) via the running-sum
    identity. With batches > 1, the median of per-batch estimates is returned
    (median-of-means robustness).
    """
    if len(ens) < 2:
        raise ValueError(f"purity needs at least 2 snapshots, got {len(ens)}")
    codes = _region_codes(ens, region)
    vals = []
    for lo, hi in _batch_bounds(len(codes), batches):
        m = hi - lo
        q, self_tr, _ = _purity_stat(codes[lo:hi])
        vals.append((q - float(self_tr.sum())) / (m * (m - 1)))
    return float(np.median(vals))


def _term_numerator_stat(codes: np.ndarray, h_local: np.ndarray,
                         s_sum: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """(Tr[S H S], per-shot Tr[r H r], Tr[r H S], Tr[r S]) for one batch."""
    m = len(codes)
    p = float(np.einsum("ij,jk,ki->", s_sum, h_local, s_sum).real)
    t_self = np.empty(m)
    w_cross = np.empty(m, dtype=complex)
    v_cross = np.empty(m)
    hs = h_local @ s_sum
    for lo in range(0, m, _CHUNK):
        mats = _local_matrices(codes[lo:lo + _CHUNK])
        rh = mats @ h_local
        t_self[lo:lo + _CHUNK] = np.einsum("aij,aji->a", rh, mats).real
        w_cross[lo:lo + _CHUNK] = np.einsum("aij,ji->a", mats, hs)
        v_cross[lo:lo + _CHUNK] = np.einsum("aij,ji->a", mats, s_sum).real
    return p, t_self, w_cross, v_cross


def _term_ustat(codes: np.ndarray, h_local: np.ndarray,
                jackknife: bool) -> Tuple[float, float, Optional[float]]:
    """Numerator and denominator U-statistics (and jackknife ratio bias)."""
    m = len(codes)
    pairs = m * (m - 1)
    q, r_self, s_sum = _purity_stat(codes)
    p, t_self, w_cross, v_cross = _term_numerator_stat(codes, h_local, s_sum)
    num = (p - float(t_self.sum())) / pairs
    den = (q - float(r_self.sum())) / pairs
    bias = None
    if jackknife and m >= 3 and den > 0:
        loo_pairs = (m - 1) * (m - 2)
        sum_t = float(t_self.sum())
        sum_r = float(r_self.sum())
        num_loo = (p - 2.0 * w_cross.real + 2.0 * t_self - sum_t) / loo_pairs
        den_loo = (q - 2.0 * v_cross + 2.0 * r_self - sum_r) / loo_pairs
        if np.all(den_loo > 0):
            bias = float((m - 1) * (np.mean(num_loo / den_loo) - num / den))
    return num, den, bias


def shadow_lvp_energy(ens: ShadowEnsemble, terms: Sequence[LocalTerm],
                      regions: Sequence[RegionPartition], n: int = 2,
                      batches: int = 1) -> PurifiedEstimate:
    """Localized purified energy from snapshots alone (two copies).

    Per term, the numerator Tr[rho_{A+B}^2 H_i] and denominator
    Tr[rho_{A+B}^2] are estimated by unbiased pair U-statistics over the
    shared ensemble; terms whose denominator estimate is not positive are
    flagged as failed and left out of the sum. The reported ratio carries a
    jackknife-over-snapshots bias estimate (batches == 1 only).
    """
    if n != 2:
        raise ValueError(f"shadow estimation supports exactly n=2 copies, got n={n}")
    if len(ens) < 2:
        raise ValueError(f"need at least 2 snapshots, got {len(ens)}")
    by_index = {r.index: r for r in regions}
    if sorted(by_index) != sorted(t.index for t in terms):
        raise ValueError("terms and regions are not index-aligned")
    contributions = []
    for term in sorted(terms, key=lambda t: t.index):
        region = by_index[term.index]
        kept = _kept_set(region, ens.n_qubits)
        codes = _region_codes(ens, kept)
        h_local = term.on_register(kept)
        if batches == 1:
            num, den, bias = _term_ustat(codes, h_local, jackknife=True)
        else:
            nums, dens = [], []
            for lo, hi in _batch_bounds(len(codes), batches):
                bn, bd, _ = _term_ustat(codes[lo:hi], h_local, jackknife=False)
                if bd > 0:
                    nums.append(bn)
                    dens.append(bd)
            bias = None
            if nums:
                num, den = float(np.median(nums)), float(np.median(dens))
            else:
                num, den = 0.0, -1.0
        failed = not den > 0
        contributions.append(TermContribution(
            index=term.index,
            numerator=num,
            denominator=den,
            ratio=num / den if not failed else float("nan"),
            collapsed=region.collapsed,
            failed=failed,
            jackknife_bias=bias,
        ))
    energy = float(sum(c.ratio for c in contributions if not c.failed))
    width = regions[0].width if regions else None
    return PurifiedEstimate(method="lvp-shadow", n_copies=2, energy=energy,
                            terms=tuple(contributions), buffer_width=width)


# ── persistence ─────────────────────────────────────────────────────────────

def save_snapshots(ens: ShadowEnsemble, path: str) -> None:
    """One text line per shot: ``shot_id,basis_string,outcome_string``."""
    lines = []
    for k in range(len(ens)):
        bstr = "".join(AXES[c] for c in ens.bases[k])
        ostr = "".join(str(int(b)) for b in ens.outcomes[k])
        lines.append(f"{ens.shot_ids[k]},{bstr},{ostr}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def load_snapshots(path: str) -> ShadowEnsemble:
    """Rebuild an ensemble from ``save_snapshots`` output (seed is not stored)."""
    ids: List[int] = []
    bases: List[List[int]] = []
    outcomes: List[List[int]] = []
    n_qubits = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected shot_id,bases,outcomes")
            sid, bstr, ostr = parts
            if n_qubits is None:
                n_qubits = len(bstr)
            if len(bstr) != n_qubits or len(ostr) != n_qubits:
                raise ValueError(f"{path}:{lineno}: inconsistent register size")
            try:
                ids.append(int(sid))
                bases.append([AXES.index(c) for c in bstr])
                outcomes.append([int(c) for c in ostr])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed record {line!r}") from exc
            if any(o not in (0, 1) for o in outcomes[-1]):
                raise ValueError(f"{path}:{lineno}: outcomes must be bits")
    if n_qubits is None:
        raise ValueError(f"{path}: no snapshot records found")
    return ShadowEnsemble(
        n_qubits=n_qubits,
        shot_ids=np.array(ids, dtype=np.int64),
        bases=np.array(bases, dtype=np.uint8),
        outcomes=np.array(outcomes, dtype=np.uint8),
        seed=None,
    )
