"""Figure rendering for sweep and bench CSV output.

Figures are derived from parsed records, the same data a user would get from
the CSV, so the delimited file stays the single source of truth. All
rendering uses the Agg backend and writes PNG files next to the CSV.
"""

from __future__ import annotations

import statistics
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .harness import BenchRecord, SweepRecord

_STYLE = {
    "conventional": dict(color="#555555", marker="o"),
    "fvp": dict(color="#1f77b4", marker="s"),
    "lvp": dict(color="#d62728", marker="^"),
    "lvp-shadow": dict(color="#2ca02c", marker="x"),
}


def _median_curves(records: Sequence[SweepRecord], field: str) -> Dict[str, List[Tuple[float, float]]]:
    pools: Dict[str, Dict[float, List[float]]] = {}
    for r in records:
        pools.setdefault(r.method, {}).setdefault(r.t_final, []).append(getattr(r, field))
    return {
        method: [(t, statistics.median(vals)) for t, vals in sorted(per_t.items())]
        for method, per_t in pools.items()
    }


def relative_error_figure(records: Sequence[SweepRecord], path: str) -> str:
    """|relative error| vs anneal time, one median curve per method."""
    curves = _median_curves(records, "relative_error")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for method in sorted(curves):
        pts = curves[method]
        ts = [p[0] for p in pts]
        errs = [max(abs(p[1]), 1e-16) for p in pts]
        ax.loglog(ts, errs, label=method, markersize=4,
                  **_STYLE.get(method, dict(marker=".")))
    ax.set_xlabel("anneal time T")
    ax.set_ylabel("|relative error|")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def purity_figure(records: Sequence[SweepRecord], path: str) -> str:
    """Final-state purity vs anneal time, one curve per driver seed."""
    per_seed: Dict[int, Dict[float, float]] = {}
    for r in records:
        per_seed.setdefault(r.driver_seed, {})[r.t_final] = r.purity
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for seed in sorted(per_seed):
        curve = sorted(per_seed[seed].items())
        ax.semilogx([c[0] for c in curve], [c[1] for c in curve],
                    marker=".", label=f"seed {seed}")
    ax.set_xlabel("anneal time T")
    ax.set_ylabel("purity of final state")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def bench_figure(records: Sequence[BenchRecord], path: str) -> str:
    """Shadow estimator errors vs shot count, with a M^{-1/2} guide line."""
    pools: Dict[str, Dict[int, List[float]]] = {"rdm": {}, "purity": {}, "energy": {}}
    for r in records:
        pools["rdm"].setdefault(r.n_shots, []).append(r.rdm_error)
        pools["purity"].setdefault(r.n_shots, []).append(r.purity_error)
        pools["energy"].setdefault(r.n_shots, []).append(r.energy_error)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for label, per_m in pools.items():
        if not per_m:
            continue
        ms = sorted(per_m)
        meds = [statistics.median(per_m[m]) for m in ms]
        ax.loglog(ms, [max(v, 1e-16) for v in meds], marker="o",
                  markersize=4, label=f"{label} error")
    ms = sorted(pools["rdm"])
    if ms:
        anchor = statistics.median(pools["rdm"][ms[0]])
        guide = [anchor * (ms[0] / m) ** 0.5 for m in ms]
        ax.loglog(ms, guide, "k--", alpha=0.6, label=r"$M^{-1/2}$ guide")
    ax.set_xlabel("snapshots M")
    ax.set_ylabel("estimator error")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def sweep_figure_paths(csv_path: str) -> Tuple[str, str]:
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return stem + ".relative_error.png", stem + ".purity.png"


def bench_figure_path(csv_path: str) -> str:
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return stem + ".convergence.png"
