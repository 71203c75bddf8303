"""Open-system quantum annealing with purification-based error mitigation.

Simulates depolarizing-noise anneals of a periodic XXZ chain exactly at
small register sizes, and estimates ground-state energies three ways:
directly, through full-register virtual purification, and through localized
purification over buffered regions. The localized estimator also runs from
randomized-measurement snapshots alone, so no density matrix is needed at
estimation time.
"""

from .dynamics import (AffineHamiltonian, EvolveResult, IntegrationDivergedError,
                       IntegratorConfig, NoiseSpec, TrajectoryPoint, default_dt,
                       evolve, integrate, lindblad_rhs, write_trajectory)
from .harness import (BenchRecord, ConfigError, ExperimentConfig, MinTable,
                      MinTableRow, SweepRecord, check_purity_monotone,
                      default_t_grid, emit_bench_csv, emit_csv, exact_energy,
                      infer_exact_energy, load_config, min_table,
                      parse_bench_csv, parse_csv, render_table, run_bench,
                      run_sweep, write_meta)
from .linalg import (DensityMatrix, QubitSubset, expectation, ground_state,
                     ground_state_energy, kron, kron_all, matrix_power,
                     partial_trace, pauli_string, pure_state)
from .model import (AnnealSpec, DriverParams, LocalTerm, RegionPartition,
                    XxzParams, build_all_regions, build_driver,
                    build_local_term, build_local_terms, build_problem,
                    build_regions, initial_state, schedule_hamiltonian)
from .purify import (PurifiedEstimate, SpectralDiagnostics, TermContribution,
                     conventional_energy, fvp_energy, lvp_energy,
                     spectral_diagnostics, term_deviation)
from .shadow import (CorruptedStateError, ShadowEnsemble, ShadowSnapshot,
                     born_probabilities, estimate_purity, estimate_rdm,
                     load_snapshots, measure_in_bases, sample_ensemble,
                     sample_snapshot, save_snapshots, shadow_lvp_energy,
                     snapshot_local_matrix)

__version__ = "0.1.0"

__all__ = [
    "AffineHamiltonian", "AnnealSpec", "BenchRecord", "ConfigError",
    "CorruptedStateError", "DensityMatrix", "DriverParams", "EvolveResult",
    "ExperimentConfig", "IntegrationDivergedError", "IntegratorConfig",
    "LocalTerm", "MinTable", "MinTableRow", "NoiseSpec", "PurifiedEstimate",
    "QubitSubset", "RegionPartition", "ShadowEnsemble", "ShadowSnapshot",
    "SpectralDiagnostics", "SweepRecord", "TermContribution",
    "TrajectoryPoint", "XxzParams", "born_probabilities",
    "build_all_regions", "build_driver", "build_local_term",
    "build_local_terms", "build_problem", "build_regions",
    "check_purity_monotone", "conventional_energy", "default_dt",
    "default_t_grid", "emit_bench_csv", "emit_csv", "estimate_purity",
    "estimate_rdm", "evolve", "exact_energy", "expectation", "fvp_energy",
    "ground_state", "ground_state_energy", "infer_exact_energy",
    "initial_state", "integrate", "kron", "kron_all", "lindblad_rhs",
    "load_config", "load_snapshots", "lvp_energy", "matrix_power",
    "measure_in_bases", "min_table", "parse_bench_csv", "parse_csv",
    "partial_trace", "pauli_string", "pure_state", "render_table",
    "run_bench", "run_sweep", "sample_ensemble", "sample_snapshot",
    "save_snapshots", "schedule_hamiltonian", "shadow_lvp_energy",
    "snapshot_local_matrix", "spectral_diagnostics", "term_deviation",
    "write_meta", "write_trajectory",
]
