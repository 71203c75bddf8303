"""Experiment orchestration: sweeps over anneal time, CSV output, reports.

A sweep evolves the open-system anneal once per (driver seed, anneal time)
cell and evaluates every requested estimator on that single final state, so
methods are compared on identical physics. Records carry the signed relative
error (energy - E_g)/|E_g| against the exact ground-state energy, which is
diagonalized once per configuration and reused bitwise.
"""

from __future__ import annotations

import json
import logging
import math
import statistics
import time
from dataclasses import asdict, dataclass, field
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .dynamics import IntegrationDivergedError, IntegratorConfig, evolve
from .linalg import ground_state_energy, partial_trace
from .model import (AnnealSpec, DriverParams, XxzParams, build_all_regions,
                    build_local_terms, build_problem)
from .purify import (_kept_set, conventional_energy, fvp_energy, lvp_energy,
                     spectral_diagnostics)
from .shadow import estimate_purity, estimate_rdm, sample_ensemble, shadow_lvp_energy

VERSION = "0.1.0"
METHODS = ("conventional", "fvp", "lvp", "lvp-shadow")
CSV_HEADER = ("n_qubits,T,method,driver_seed,shadow_seed,"
              "energy,relative_error,purity,dominant_p,wall_time_s")
BENCH_HEADER = ("n_qubits,T,n_shots,shadow_seed,"
                "rdm_error,purity_error,energy_error,wall_time_s")
TABLE_FOOTER = ("aggregation: median across seeds at each T, then minimum over T")

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid or malformed experiment configuration."""


def default_t_grid() -> Tuple[float, ...]:
    """24 log-spaced anneal times spanning the fast and slow regimes."""
    return tuple(float(x) for x in np.logspace(0.0, math.log10(200.0), 24))


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep definition; JSON configs use exactly these field names."""

    n_qubits: int
    noise_rate: float = 0.0
    j: float = -1.0
    delta: float = -0.73
    h: float = 1.0
    t_grid: Tuple[float, ...] = field(default_factory=default_t_grid)
    n_copies: int = 2
    buffer_width: int = 1
    methods: Tuple[str, ...] = ("conventional", "fvp", "lvp")
    shadow_shots: int = 0
    driver_seeds: Tuple[int, ...] = (1,)
    shadow_seeds: Tuple[int, ...] = (1,)
    dt: Optional[float] = None
    output: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "driver_seeds", tuple(int(s) for s in self.driver_seeds))
        object.__setattr__(self, "shadow_seeds", tuple(int(s) for s in self.shadow_seeds))
        try:
            self.problem_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.t_grid:
            raise ConfigError("t_grid must be nonempty")
        if any(t <= 0 for t in self.t_grid):
            raise ConfigError("t_grid values must be positive")
        if any(b <= a for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise ConfigError("t_grid must be strictly increasing")
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods list contains duplicates")
        if self.n_copies < 1:
            raise ConfigError(f"n_copies must be >= 1, got {self.n_copies}")
        if self.buffer_width < 0:
            raise ConfigError(f"buffer_width must be >= 0, got {self.buffer_width}")
        if not self.driver_seeds:
            raise ConfigError("driver_seeds must be nonempty")
        if "lvp-shadow" in self.methods:
            if self.shadow_shots < 2:
                raise ConfigError("lvp-shadow needs shadow_shots >= 2")
            if not self.shadow_seeds:
                raise ConfigError("lvp-shadow needs at least one shadow seed")
            if self.n_copies != 2:
                raise ConfigError("lvp-shadow supports exactly n_copies=2")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")

    def problem_params(self) -> XxzParams:
        return XxzParams(n_qubits=self.n_qubits, j=self.j, delta=self.delta, h=self.h)


def load_config(path: str) -> ExperimentConfig:
    """Read a JSON config; unknown keys are a hard error, not a warning."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    try:
        return ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class SweepRecord:
    n_qubits: int
    t_final: float
    method: str
    driver_seed: int
    shadow_seed: Optional[int]
    energy: float
    relative_error: float
    purity: float
    dominant_p: float
    wall_time_s: float


_EXACT_CACHE: Dict[Tuple[int, float, float, float], float] = {}


def exact_energy(p: XxzParams) -> float:
    """Ground-state energy of the problem Hamiltonian, cached per parameter set."""
    key = (p.n_qubits, p.j, p.delta, p.h)
    if key not in _EXACT_CACHE:
        _EXACT_CACHE[key] = ground_state_energy(build_problem(p))
    return _EXACT_CACHE[key]


def _record_sort_key(r: SweepRecord):
    return (r.driver_seed, r.t_final, r.method,
            r.shadow_seed if r.shadow_seed is not None else -1)


def run_sweep(cfg: ExperimentConfig, threads: int = 1,
              meta_sink: Optional[dict] = None) -> List[SweepRecord]:
    """Evolve each (driver seed, T) cell once and score every method on it.

    Cells are independent, so they can run on a thread pool (``threads``);
    the returned records are sorted by (driver seed, T, method, shadow seed)
    regardless of completion order.
    """
    params = cfg.problem_params()
    h_p = build_problem(params)
    terms = build_local_terms(params)
    regions = build_all_regions(cfg.n_qubits, cfg.buffer_width)
    e_g = exact_energy(params)
    abs_eg = abs(e_g)
    int_cfg = IntegratorConfig(dt=cfg.dt)

    def score(method: str, state, base_wall: float) -> Tuple[float, float]:
        t0 = time.perf_counter()
        if method == "conventional":
            e = conventional_energy(state, h_p)
        elif method == "fvp":
            e = fvp_energy(state, h_p, cfg.n_copies)
        else:  # lvp
            e = lvp_energy(state, terms, regions, cfg.n_copies).energy
        return e, base_wall + (time.perf_counter() - t0)

    def cell(job: Tuple[int, float]) -> Tuple[List[SweepRecord], Tuple[float, ...]]:
        seed, t_final = job
        driver = DriverParams.from_seed(cfg.n_qubits, seed)
        spec = AnnealSpec(problem=params, driver=driver, t_final=t_final,
                          noise_rate=cfg.noise_rate)
        try:
            res = evolve(spec, int_cfg)
        except IntegrationDivergedError as exc:
            raise IntegrationDivergedError(
                f"driver_seed={seed} T={t_final:g}: {exc}") from exc
        state = res.state
        purity = state.purity()
        dominant = spectral_diagnostics(state, h_p, top_k=1).dominant_population
        out = []
        for method in cfg.methods:
            if method == "lvp-shadow":
                for sseed in cfg.shadow_seeds:
                    t0 = time.perf_counter()
                    ens = sample_ensemble(state, cfg.shadow_shots, sseed)
                    est = shadow_lvp_energy(ens, terms, regions, n=2)
                    wall = res.wall_time_s + (time.perf_counter() - t0)
                    out.append(SweepRecord(
                        n_qubits=cfg.n_qubits, t_final=t_final, method=method,
                        driver_seed=seed, shadow_seed=sseed, energy=est.energy,
                        relative_error=(est.energy - e_g) / abs_eg,
                        purity=purity, dominant_p=dominant, wall_time_s=wall))
            else:
                e, wall = score(method, state, res.wall_time_s)
                out.append(SweepRecord(
                    n_qubits=cfg.n_qubits, t_final=t_final, method=method,
                    driver_seed=seed, shadow_seed=None, energy=e,
                    relative_error=(e - e_g) / abs_eg,
                    purity=purity, dominant_p=dominant, wall_time_s=wall))
        stats = (res.max_hermiticity_deviation, res.symmetrize_delta,
                 res.trace_delta, res.wall_time_s)
        return out, stats

    jobs = [(seed, t) for seed in cfg.driver_seeds for t in cfg.t_grid]
    records: List[SweepRecord] = []
    all_stats = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(cell, jobs))
    else:
        results = [cell(job) for job in jobs]
    for chunk, stats in results:
        records.extend(chunk)
        all_stats.append(stats)
    records.sort(key=_record_sort_key)
    if meta_sink is not None:
        meta_sink["exact_energy"] = e_g
        meta_sink["n_cells"] = len(jobs)
        meta_sink["integration"] = {
            "max_hermiticity_deviation": max(s[0] for s in all_stats),
            "max_symmetrize_delta": max(s[1] for s in all_stats),
            "max_trace_delta": max(s[2] for s in all_stats),
            "total_wall_time_s": sum(s[3] for s in all_stats),
        }
    return records


def check_purity_monotone(records: Sequence[SweepRecord]) -> List[str]:
    """Soft diagnostic: purity should not grow with T at fixed seed and noise.

    Violations are logged and returned, never raised; schedule nonlinearity
    can in principle produce them.
    """
    by_seed: Dict[int, Dict[float, float]] = {}
    for r in records:
        by_seed.setdefault(r.driver_seed, {})[r.t_final] = r.purity
    problems = []
    for seed, curve in sorted(by_seed.items()):
        ts = sorted(curve)
        for a, b in zip(ts, ts[1:]):
            if curve[b] > curve[a] + 1e-9:
                msg = (f"purity increased with T for driver_seed={seed}: "
                       f"{curve[a]:.6g} at T={a:g} -> {curve[b]:.6g} at T={b:g}")
                problems.append(msg)
                log.warning(msg)
    return problems


# ── CSV ─────────────────────────────────────────────────────────────────────

def _fmt(x: float) -> str:
    return f"{x:.12g}"


def emit_csv(records: Sequence[SweepRecord], path: str) -> None:
    """Write records under the fixed header; bytes are deterministic."""
    lines = [CSV_HEADER]
    for r in records:
        sseed = "-" if r.shadow_seed is None else str(r.shadow_seed)
        lines.append(",".join([
            str(r.n_qubits), _fmt(r.t_final), r.method, str(r.driver_seed), sseed,
            _fmt(r.energy), _fmt(r.relative_error), _fmt(r.purity),
            _fmt(r.dominant_p), _fmt(r.wall_time_s),
        ]))
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def parse_csv(path: str) -> List[SweepRecord]:
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: missing or wrong header")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 10:
            raise ValueError(f"{path}:{lineno}: expected 10 fields, got {len(parts)}")
        records.append(SweepRecord(
            n_qubits=int(parts[0]), t_final=float(parts[1]), method=parts[2],
            driver_seed=int(parts[3]),
            shadow_seed=None if parts[4] == "-" else int(parts[4]),
            energy=float(parts[5]), relative_error=float(parts[6]),
            purity=float(parts[7]), dominant_p=float(parts[8]),
            wall_time_s=float(parts[9])))
    return records


def write_meta(csv_path: str, cfg: ExperimentConfig, n_records: int,
               run_meta: Optional[dict] = None) -> str:
    """Sidecar run metadata next to the CSV, never mixed into it."""
    meta = {
        "version": VERSION,
        "config": asdict(cfg),
        "n_records": n_records,
    }
    if run_meta:
        meta.update(run_meta)
    path = csv_path + ".meta.json"
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ── minimum-energy report ───────────────────────────────────────────────────

def infer_exact_energy(records: Sequence[SweepRecord]) -> float:
    """Recover E_g from (energy, relative_error) pairs of one register size.

    relative_error = (e - g)/|g| admits two inversions, g = e/(1 + r) for
    g > 0 and g = e/(1 - r) for g < 0; only one is sign-consistent across a
    record set, and that one is returned.
    """
    if not records:
        raise ValueError("no records to infer the exact energy from")
    sizes = {r.n_qubits for r in records}
    if len(sizes) != 1:
        raise ValueError(f"records mix register sizes {sorted(sizes)}")
    pos, neg = [], []
    for r in records:
        if r.relative_error != -1.0:
            pos.append(r.energy / (1.0 + r.relative_error))
        if r.relative_error != 1.0:
            neg.append(r.energy / (1.0 - r.relative_error))

    def consistent(vals: List[float], sign: float) -> Optional[float]:
        if not vals or any(v * sign <= 0 for v in vals):
            return None
        mid = statistics.median(vals)
        if max(abs(v - mid) for v in vals) > 1e-8 * abs(mid):
            return None
        return mid

    g_pos = consistent(pos, 1.0)
    g_neg = consistent(neg, -1.0)
    if g_pos is None and g_neg is None:
        raise ValueError("records are not consistent with any single exact energy")
    if g_pos is not None and g_neg is not None:
        # happens when every relative error is ~0; both inversions agree
        return g_neg if abs(g_neg) >= abs(g_pos) else g_pos
    return g_pos if g_pos is not None else g_neg


@dataclass(frozen=True)
class MinTableRow:
    n_qubits: int
    method: str
    energy: float
    t_best: float
    exact: float


@dataclass(frozen=True)
class MinTable:
    rows: Tuple[MinTableRow, ...]
    footer: str = TABLE_FOOTER


def min_table(records: Sequence[SweepRecord],
              exact: Optional[Mapping[int, float]] = None) -> MinTable:
    """Per (register size, method): the minimum over T of the seed-median energy.

    Requires at least two T values per group; a minimum over a singleton grid
    is undefined and rejected.
    """
    groups: Dict[Tuple[int, str], Dict[float, List[float]]] = {}
    for r in records:
        groups.setdefault((r.n_qubits, r.method), {}).setdefault(r.t_final, []).append(r.energy)
    if not groups:
        raise ValueError("no records to tabulate")
    exact_by_n: Dict[int, float] = dict(exact) if exact else {}
    for n in {r.n_qubits for r in records}:
        if n not in exact_by_n:
            exact_by_n[n] = infer_exact_energy([r for r in records if r.n_qubits == n])
    rows = []
    for (n, method) in sorted(groups):
        per_t = groups[(n, method)]
        if len(per_t) < 2:
            raise ValueError(
                f"minimum over T is undefined for n_qubits={n} method={method}: "
                f"only {len(per_t)} grid point(s)")
        medians = {t: statistics.median(es) for t, es in per_t.items()}
        t_best = min(medians, key=lambda t: (medians[t], t))
        rows.append(MinTableRow(n_qubits=n, method=method, energy=medians[t_best],
                                t_best=t_best, exact=exact_by_n[n]))
    return MinTable(rows=tuple(rows))


def render_table(table: MinTable) -> str:
    head = f"{'N':>3}  {'method':<12} {'min energy':>14} {'at T':>9} {'exact':>14}"
    lines = [head, "-" * len(head)]
    for row in table.rows:
        lines.append(f"{row.n_qubits:>3}  {row.method:<12} {row.energy:>14.6f} "
                     f"{row.t_best:>9.4g} {row.exact:>14.6f}")
    lines.append(f"({table.footer})")
    return "\n".join(lines)


# ── shadow estimator convergence bench ──────────────────────────────────────

@dataclass(frozen=True)
class BenchRecord:
    n_qubits: int
    t_final: float
    n_shots: int
    shadow_seed: int
    rdm_error: float
    purity_error: float
    energy_error: float
    wall_time_s: float


def run_bench(cfg: ExperimentConfig, n_ladder: Optional[Sequence[int]] = None,
              meta_sink: Optional[dict] = None) -> List[BenchRecord]:
    """Shadow estimator errors against exact references on one evolved state.

    Evolves the last grid point for the first driver seed, then for each shot
    budget in the (default halving) ladder and each shadow seed compares
    estimate_rdm, estimate_purity and shadow_lvp_energy with their
    density-matrix counterparts.
    """
    if cfg.shadow_shots < 16:
        raise ConfigError("shadow-bench needs shadow_shots >= 16")
    if n_ladder is None:
        n_ladder = [max(2, cfg.shadow_shots >> k) for k in (3, 2, 1, 0)]
    params = cfg.problem_params()
    terms = build_local_terms(params)
    regions = build_all_regions(cfg.n_qubits, cfg.buffer_width)
    t_final = cfg.t_grid[-1]
    driver = DriverParams.from_seed(cfg.n_qubits, cfg.driver_seeds[0])
    spec = AnnealSpec(problem=params, driver=driver, t_final=t_final,
                      noise_rate=cfg.noise_rate)
    state = evolve(spec, IntegratorConfig(dt=cfg.dt)).state
    kept = _kept_set(regions[0], cfg.n_qubits)
    reduced = partial_trace(state, kept)
    ref_purity = reduced.purity()
    ref_energy = lvp_energy(state, terms, regions, n=2).energy
    out = []
    for m in n_ladder:
        for sseed in cfg.shadow_seeds:
            t0 = time.perf_counter()
            ens = sample_ensemble(state, int(m), sseed)
            rdm = estimate_rdm(ens, kept)
            pur = estimate_purity(ens, kept)
            est = shadow_lvp_energy(ens, terms, regions, n=2)
            wall = time.perf_counter() - t0
            out.append(BenchRecord(
                n_qubits=cfg.n_qubits, t_final=t_final, n_shots=int(m),
                shadow_seed=sseed,
                rdm_error=float(np.linalg.norm(rdm - reduced.matrix)),
                purity_error=abs(pur - ref_purity),
                energy_error=abs(est.energy - ref_energy),
                wall_time_s=wall))
    if meta_sink is not None:
        meta_sink["reference"] = {"purity": ref_purity, "lvp_energy": ref_energy,
                                  "t_final": t_final}
    return out


def emit_bench_csv(records: Sequence[BenchRecord], path: str) -> None:
    lines = [BENCH_HEADER]
    for r in records:
        lines.append(",".join([
            str(r.n_qubits), _fmt(r.t_final), str(r.n_shots), str(r.shadow_seed),
            _fmt(r.rdm_error), _fmt(r.purity_error), _fmt(r.energy_error),
            _fmt(r.wall_time_s),
        ]))
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write bench results to {path}: {exc}") from exc


def parse_bench_csv(path: str) -> List[BenchRecord]:
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise OSError(f"cannot read bench results from {path}: {exc}") from exc
    if not lines or lines[0] != BENCH_HEADER:
        raise ValueError(f"{path}: missing or wrong bench header")
    out = []
    for line in lines[1:]:
        p = line.split(",")
        out.append(BenchRecord(int(p[0]), float(p[1]), int(p[2]), int(p[3]),
                               float(p[4]), float(p[5]), float(p[6]), float(p[7])))
    return out
