"""Fixed-step RK4 integration of the GKSL master equation.

The right-hand side is

    d rho / dt = -i [H(t), rho] - (rate/2) sum_k [L_k, [L_k, rho]]

with single-qubit Pauli jump operators L_k. The double-commutator form is the
GKSL dissipator specialized to Hermitian involutive jumps (2 L rho L -
{L^2, rho} = -[L, [L, rho]]). The default noise model is depolarizing: all
three axes on every qubit.

Two algebraic shortcuts keep the integrator fast without changing the math:

* [H, rho] = M - M^dagger with M = H rho, valid because every RK4 stage input
  is Hermitian (one matrix product per stage instead of two);
* for full depolarizing noise, sum_j sigma_j rho sigma_j = 2 I_q (x) Tr_q[rho]
  - rho per qubit, so the dissipator is -4 rate N rho + 2 rate sum_q I_q (x)
  Tr_q[rho]: N one-qubit partial traces instead of 6N dense products.

Both shortcuts are cross-checked against the literal textbook form in tests.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .linalg import DensityMatrix, PAULI
from .model import AnnealSpec, build_driver, build_problem, initial_state

logger = logging.getLogger(__name__)

# Hard failure thresholds (divergence) and cleanup bounds.
STEP_HERMITICITY_TOL = 1e-10
TRACE_DRIFT_TOL = 1e-6
NEGATIVITY_TOL = -1e-5
CLEANUP_TOL = 1e-8


class IntegrationDivergedError(RuntimeError):
    """The fixed-step integration left its validity envelope (dt too large)."""


@dataclass(frozen=True)
class NoiseSpec:
    """Noise rate plus jump-operator placement.

    ``jumps`` lists (qubit, axis) pairs; None means the default depolarizing
    model, every axis on every qubit.
    """

    rate: float
    jumps: Optional[Tuple[Tuple[int, str], ...]] = None

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"noise rate must be >= 0, got {self.rate}")
        if self.jumps is not None:
            jumps = tuple((int(q), str(ax)) for q, ax in self.jumps)
            object.__setattr__(self, "jumps", jumps)
            for q, ax in jumps:
                if ax not in PAULI:
                    raise ValueError(f"jump axis {ax!r} is not a single-qubit Pauli")
                if q < 0:
                    raise ValueError(f"jump qubit {q} negative")

    def resolved_jumps(self, n_qubits: int) -> Tuple[Tuple[int, str], ...]:
        if self.jumps is None:
            return tuple((q, ax) for q in range(n_qubits) for ax in ("x", "y", "z"))
        for q, _ in self.jumps:
            if q >= n_qubits:
                raise ValueError(f"jump qubit {q} outside register of {n_qubits}")
        return self.jumps

    def is_full_depolarizing(self, n_qubits: int) -> bool:
        if self.jumps is None:
            return True
        return set(self.jumps) == {(q, ax) for q in range(n_qubits) for ax in ("x", "y", "z")}


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings. dt = None means min(0.005, T/2000)."""

    dt: Optional[float] = None
    record_interval: Optional[int] = None
    method: str = "rk4"

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.record_interval is not None and self.record_interval < 1:
            raise ValueError("record interval must be >= 1")
        if self.method != "rk4":
            raise ValueError(f"unsupported integrator method {self.method!r}")


def default_dt(t_final: float) -> float:
    return min(0.005, t_final / 2000.0)


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    trace: float
    purity: float
    energy: float


@dataclass(frozen=True)
class EvolveResult:
    """Final state plus the integration bookkeeping the contracts require."""

    state: DensityMatrix
    t_final: float
    dt: float
    n_steps: int
    max_hermiticity_deviation: float
    symmetrize_delta: float
    trace_delta: float
    wall_time_s: float
    trajectory: Optional[Tuple[TrajectoryPoint, ...]] = None


@dataclass(frozen=True)
class AffineHamiltonian:
    """H(t) = (1 - t/T) h_start + (t/T) h_end, the linear anneal schedule."""

    h_start: np.ndarray
    h_end: np.ndarray
    t_final: float

    def at(self, t: float) -> np.ndarray:
        a = t / self.t_final
        return (1.0 - a) * self.h_start + a * self.h_end


HamiltonianLike = Union[np.ndarray, AffineHamiltonian, Callable[[float], np.ndarray]]


def _hamiltonian_fn(h: HamiltonianLike) -> Callable[[float], np.ndarray]:
    if isinstance(h, AffineHamiltonian):
        # Cache h_end - h_start so each evaluation is one scale plus one add.
        h0 = np.asarray(h.h_start, dtype=complex)
        diff = np.asarray(h.h_end, dtype=complex) - h0
        t_final = h.t_final
        return lambda t: h0 + (t / t_final) * diff
    if isinstance(h, np.ndarray):
        hm = np.asarray(h, dtype=complex)
        return lambda t: hm
    if callable(h):
        return h
    raise TypeError(f"cannot interpret {type(h).__name__} as a Hamiltonian")


def _embed_traced(partial: np.ndarray, q: int, n: int, out: np.ndarray) -> None:
    """Add I_q (x) partial into ``out`` (both full-register), partial on n-1 qubits."""
    left = 2 ** q
    right = 2 ** (n - q - 1)
    view = out.reshape(left, 2, right, left, 2, right)
    part = partial.reshape(left, right, left, right)
    view[:, 0, :, :, 0, :] += part
    view[:, 1, :, :, 1, :] += part


def _trace_one_qubit(rho: np.ndarray, q: int, n: int) -> np.ndarray:
    left = 2 ** q
    right = 2 ** (n - q - 1)
    t = rho.reshape(left, 2, right, left, 2, right)
    return np.einsum("iajkal->ijkl", t).reshape(left * right, left * right)


def _apply_pauli_both_sides(rho: np.ndarray, q: int, axis: str, n: int) -> np.ndarray:
    """sigma_q^axis rho sigma_q^axis without building the full operator."""
    left = 2 ** q
    right = 2 ** (n - q - 1)
    t = rho.reshape(left, 2, right, left, 2, right)
    sig = PAULI[axis]
    return np.einsum("ab,ibjkdl,de->iajkel", sig, t, sig.conj().T).reshape(rho.shape)


def _general_dissipator(rho: np.ndarray, rate: float, jumps, n: int) -> np.ndarray:
    # -(rate/2) [L,[L,rho]] = rate (L rho L - rho) per involutive jump L.
    out = np.zeros_like(rho)
    for q, axis in jumps:
        out += _apply_pauli_both_sides(rho, q, axis, n)
    out -= len(jumps) * rho
    return rate * out


def _rhs_matrix(m: np.ndarray, h: np.ndarray, rate: float,
                depolarizing: bool, jumps, n: int) -> np.ndarray:
    hr = h @ m
    adj = hr.conj()  # independent copy, so the in-place update below never aliases
    hr -= adj.T
    hr *= -1j
    if rate > 0:
        if depolarizing:
            hr += (-4.0 * rate * n) * m
            for q in range(n):
                partial = _trace_one_qubit(m, q, n)
                partial *= 2.0 * rate
                _embed_traced(partial, q, n, hr)
        else:
            hr += _general_dissipator(m, rate, jumps, n)
    return hr


def lindblad_rhs(rho, h: np.ndarray, noise: NoiseSpec) -> np.ndarray:
    """GKSL right-hand side for a Hermitian state and Hamiltonian.

    Output is traceless to 1e-12 and exactly Hermitian by construction.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    n = int(round(np.log2(m.shape[0])))
    depolarizing = noise.is_full_depolarizing(n)
    jumps = None if depolarizing else noise.resolved_jumps(n)
    return _rhs_matrix(m, np.asarray(h, dtype=complex), noise.rate, depolarizing, jumps, n)


def integrate(
    hamiltonian: HamiltonianLike,
    rho0: DensityMatrix,
    t_final: float,
    noise: NoiseSpec,
    cfg: Optional[IntegratorConfig] = None,
) -> EvolveResult:
    """Propagate rho0 to t_final with fixed-step RK4.

    H(t) is built at the three distinct stage times per step (t, t+dt/2,
    t+dt); the midpoint matrix is shared by the two middle stages.
    Each step ends with symmetrization (M + M^dagger)/2; the pre-symmetrization
    deviation must stay below 1e-10. The final state is symmetrized and
    trace-renormalized, both corrections < 1e-8 or the run fails.
    """
    cfg = cfg or IntegratorConfig()
    if not t_final > 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    dt_req = cfg.dt if cfg.dt is not None else default_dt(t_final)
    if dt_req > t_final:
        raise ValueError(f"dt={dt_req} exceeds t_final={t_final}")
    n_steps = max(1, int(round(t_final / dt_req)))
    dt = t_final / n_steps

    h_at = _hamiltonian_fn(hamiltonian)
    n = rho0.n_qubits
    rho = np.array(rho0.matrix, dtype=complex)
    fixed_h = isinstance(hamiltonian, np.ndarray)
    h_const = np.asarray(hamiltonian, dtype=complex) if fixed_h else None

    depolarizing = noise.rate > 0 and noise.is_full_depolarizing(n)
    jumps = None if (noise.rate == 0 or depolarizing) else noise.resolved_jumps(n)

    trajectory: List[TrajectoryPoint] = []

    def record(t: float, m: np.ndarray) -> None:
        tr = m.trace().real
        if abs(tr - 1.0) > TRACE_DRIFT_TOL:
            raise IntegrationDivergedError(
                f"trace drifted to {tr:.9g} at t={t:.6g} (dt={dt:.3g} too large?)")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < NEGATIVITY_TOL:
            raise IntegrationDivergedError(
                f"eigenvalue {lo:.3e} below {NEGATIVITY_TOL:g} at t={t:.6g} (dt={dt:.3g} too large?)")
        h_t = h_const if fixed_h else h_at(t)
        purity = float(np.einsum("ij,ji->", m, m).real)
        energy = float(np.einsum("ij,ji->", h_t, m).real)
        trajectory.append(TrajectoryPoint(t=t, trace=tr, purity=purity, energy=energy))

    t0 = time.perf_counter()
    max_herm = 0.0
    if cfg.record_interval is not None:
        record(0.0, rho)
    half = dt / 2.0
    sixth = dt / 6.0
    rate = noise.rate
    work = np.empty_like(rho)
    for step in range(n_steps):
        t = step * dt
        # k2 and k3 are both evaluated at t + dt/2, so build that H once.
        h_mid = h_const if fixed_h else h_at(t + half)
        k1 = _rhs_matrix(rho, h_const if fixed_h else h_at(t), rate, depolarizing, jumps, n)
        np.multiply(k1, half, out=work)
        work += rho
        k2 = _rhs_matrix(work, h_mid, rate, depolarizing, jumps, n)
        np.multiply(k2, half, out=work)
        work += rho
        k3 = _rhs_matrix(work, h_mid, rate, depolarizing, jumps, n)
        np.multiply(k3, dt, out=work)
        work += rho
        k4 = _rhs_matrix(work, h_const if fixed_h else h_at(t + dt), rate, depolarizing, jumps, n)
        k2 += k3
        k2 *= 2.0
        k2 += k1
        k2 += k4
        k2 *= sixth
        k2 += rho
        rho = k2
        adj = rho.conj()
        herm = float(np.max(np.abs(rho - adj.T)))
        if herm > max_herm:
            max_herm = herm
        if herm > STEP_HERMITICITY_TOL:
            raise IntegrationDivergedError(
                f"hermiticity deviation {herm:.3e} at step {step + 1} exceeds {STEP_HERMITICITY_TOL:g}")
        rho += adj.T
        rho *= 0.5
        if cfg.record_interval is not None and (step + 1) % cfg.record_interval == 0:
            record((step + 1) * dt, rho)

    # End-of-run cleanup: symmetrize, then renormalize the trace.
    sym_delta = float(np.max(np.abs(rho - rho.conj().T))) / 2.0
    rho = 0.5 * (rho + rho.conj().T)
    tr = rho.trace().real
    trace_delta = abs(tr - 1.0)
    if sym_delta > CLEANUP_TOL or trace_delta > CLEANUP_TOL:
        raise IntegrationDivergedError(
            f"final cleanup too large: symmetrize {sym_delta:.3e}, trace {trace_delta:.3e}")
    rho = rho / tr
    if cfg.record_interval is not None and n_steps % cfg.record_interval != 0:
        record(t_final, rho)
    wall = time.perf_counter() - t0

    try:
        state = DensityMatrix(n, rho)  # construction re-checks trace/positivity
    except ValueError as exc:
        raise IntegrationDivergedError(
            f"final state invalid (dt={dt:.3g} too large?): {exc}") from exc
    logger.debug(
        "integrated T=%.6g in %d steps (dt=%.3g): herm %.2e, sym %.2e, trace %.2e",
        t_final, n_steps, dt, max_herm, sym_delta, trace_delta)
    return EvolveResult(
        state=state,
        t_final=t_final,
        dt=dt,
        n_steps=n_steps,
        max_hermiticity_deviation=max_herm,
        symmetrize_delta=sym_delta,
        trace_delta=trace_delta,
        wall_time_s=wall,
        trajectory=tuple(trajectory) if cfg.record_interval is not None else None,
    )


def evolve(spec: AnnealSpec, cfg: Optional[IntegratorConfig] = None) -> EvolveResult:
    """Run the anneal: |+>^N under H(t) = (1-t/T) H_d + (t/T) H_p with noise."""
    schedule = AffineHamiltonian(
        h_start=build_driver(spec.driver),
        h_end=build_problem(spec.problem),
        t_final=spec.t_final,
    )
    rho0 = initial_state(spec.driver)
    noise = NoiseSpec(rate=spec.noise_rate)
    return integrate(schedule, rho0, spec.t_final, noise, cfg)


TRAJECTORY_HEADER = "t,trace,purity,energy"


def write_trajectory(points: Sequence[TrajectoryPoint], path: str) -> None:
    """Dump trajectory records as CSV with columns t,trace,purity,energy."""
    lines = [TRAJECTORY_HEADER]
    for p in points:
        lines.append(f"{p.t:.12g},{p.trace:.12g},{p.purity:.12g},{p.energy:.12g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
