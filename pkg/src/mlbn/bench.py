"""Experiment drivers: exact recovery, inactivation sweeps, stability
thresholds and instability traces, emitting CSV plot data plus a manifest.

All runs are reproducible from (config, seed list); desk-scale defaults
divide the paper-scale sample sizes by 10, with paper scale behind a flag.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .gmm import (
    DegenerateNoiseError,
    NoUsableComponentError,
    estimate_gmm,
    min_estimator,
)
from .network import WeightedDag, edge_occupancy
from .presets import competing_parents, get_preset, star_example, triangle
from .qp import auto_tune, default_schedule
from .simulate import InnovationSpec, NoiseSpec, differences, simulate
from .tropical import classify_edges


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    graph: str = "star4"
    N: int = 1000
    sigma: float = 0.1
    seeds: tuple[int, ...] = tuple(range(20))
    methods: tuple[str, ...] = ("gmm", "qp")
    grid: tuple[float, ...] = ()  # scenario-specific sweep values
    k_max: int = 3
    restarts: int = 4
    weight_floor: float = 0.01
    paper_scale: bool = False
    alpha: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.sigma > 0.25:
            import warnings

            warnings.warn(
                f"sigma={self.sigma} exceeds 0.25; estimator reliability "
                "deteriorates at this noise level",
                stacklevel=2,
            )


@dataclass
class SweepResult:
    config: ExperimentConfig
    columns: tuple[str, ...]
    rows: list[tuple]
    notes: dict = field(default_factory=dict)

    def write(self, out_dir: str | Path, name: str) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{name}.csv"
        with csv_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            writer.writerows(self.rows)
        manifest = {
            "scenario": self.config.scenario,
            "config": asdict(self.config),
            "outputs": [csv_path.name],
            "notes": self.notes,
        }
        (out / f"{name}.manifest.json").write_text(
            json.dumps(manifest, indent=2, default=str) + "\n"
        )
        return csv_path


def _innovation(cfg: ExperimentConfig) -> InnovationSpec:
    return InnovationSpec(alpha=cfg.alpha)


# ---------------------------------------------------------------------------
# Occupancy control for the competing-parents sweep graph.
#
# log-Frechet(0,1,1) innovations are standard Gumbel, so the argmax of the
# child's structural terms follows a softmax over the term locations:
# P(target edge wins) = 1 / (e^w + 2) for competitor weight w.


def competitor_weight_for_occupancy(p: float) -> float:
    if not 0 < p < 1 / 2:
        raise ValueError(f"occupancy must lie in (0, 0.5), got {p}")
    return math.log(1.0 / p - 2.0)


def expected_max_std_normal(k: int) -> float:
    """Asymptotic mean of the maximum of k standard normals."""
    k = max(k, 3)
    b = math.sqrt(2.0 * math.log(k))
    return b - (math.log(math.log(k)) + math.log(4.0 * math.pi)) / (2.0 * b)


def centered_qp_estimate(y, sigma: float, path_count: int, steps: int = 80) -> float:
    """QP estimate re-centered onto the soft boundary.

    The shifted minimum sits below the true boundary by roughly the expected
    extreme of the realized atom noise, sqrt(2)*sigma*E[max of k normals];
    tuning is driven until the fitted offset matches that depth.
    """
    t = math.sqrt(2.0) * sigma * expected_max_std_normal(path_count)
    if t <= 0:
        t = 1e-9
    n_obs = len(y.values)
    sol = auto_tune(y, t=t, schedule=default_schedule(n_obs, t, steps=steps))
    return sol.omega_hat


# ---------------------------------------------------------------------------
# Scenarios


def run_exact_recovery(cfg: ExperimentConfig) -> SweepResult:
    """Noise-free minimum-estimator recovery per edge, plus masking status."""
    dag = _resolve_graph(cfg)
    noise = NoiseSpec.constant(0.0, dag.n)
    edge_class = classify_edges(dag)
    ks_entries = _closure_entries(dag)
    rows = []
    exact = 0
    total = 0
    for seed in cfg.seeds:
        samples = simulate(dag, _innovation(cfg), noise, cfg.N, seed=seed)
        for e in dag.edges:
            est = min_estimator(differences(samples, e.i, e.j)).estimate
            target = ks_entries[e.i - 1, e.j - 1]  # closure: best-path weight
            is_exact = est == e.omega
            rows.append(
                (
                    seed,
                    e.i,
                    e.j,
                    e.omega,
                    target,
                    est,
                    edge_class[(e.i, e.j)],
                    is_exact,
                )
            )
            exact += is_exact
            total += 1
    return SweepResult(
        config=cfg,
        columns=(
            "seed",
            "i",
            "j",
            "omega_true",
            "closure_weight",
            "estimate",
            "edge_class",
            "exact_match",
        ),
        rows=rows,
        notes={"exact_match_fraction": exact / total},
    )


def run_inactivation_sweep(cfg: ExperimentConfig) -> SweepResult:
    """GMM vs QP estimation error across path-occupancy grid points.

    The target edge has weight 0; occupancy is controlled by the competing
    parent's weight, not by subsampling, matching the generative mechanism
    of tail dependence.
    """
    grid = cfg.grid or (0.006, 0.011, 0.023, 0.046, 0.092, 0.2)
    rows = []
    for p in grid:
        w = competitor_weight_for_occupancy(p)
        dag = competing_parents(w)
        noise = NoiseSpec.constant(cfg.sigma, dag.n)
        for seed in cfg.seeds:
            samples = simulate(dag, _innovation(cfg), noise, cfg.N, seed=seed)
            path_count = int((samples.provenance[:, 2] == 2).sum())
            y = differences(samples, 2, 3)
            gmm_est: Optional[float] = None
            gmm_note = ""
            if "gmm" in cfg.methods:
                if cfg.sigma == 0:
                    gmm_note = "refused: noise-free differences are point masses"
                else:
                    try:
                        gmm_est = estimate_gmm(
                            y,
                            cfg.k_max,
                            weight_floor=cfg.weight_floor,
                            restarts=cfg.restarts,
                            seed=seed,
                        ).estimate
                    except NoUsableComponentError as exc:
                        gmm_note = f"refused: {exc}"
            qp_est = (
                centered_qp_estimate(y, cfg.sigma, path_count)
                if "qp" in cfg.methods
                else None
            )
            rows.append(
                (
                    p,
                    w,
                    seed,
                    path_count,
                    gmm_est,
                    abs(gmm_est) if gmm_est is not None else None,
                    _log2_abs(gmm_est),
                    qp_est,
                    abs(qp_est) if qp_est is not None else None,
                    gmm_note,
                )
            )
    return SweepResult(
        config=cfg,
        columns=(
            "occupancy_target",
            "competitor_weight",
            "seed",
            "path_count",
            "gmm_estimate",
            "gmm_abs_error",
            "gmm_log2_abs_error",
            "qp_estimate",
            "qp_abs_error",
            "note",
        ),
        rows=rows,
    )


def _log2_abs(x: Optional[float]) -> Optional[float]:
    if x is None or x == 0:
        return None
    return math.log2(abs(x))


def gmm_stability_probe(
    N: int,
    path_count: int,
    sigma: float,
    seeds: Sequence[int],
    k_max: int = 3,
    restarts: int = 4,
    alpha: float = 0.0,
) -> tuple[float, float, list[float]]:
    """(median |est|, IQR of est) for the target-weight-zero sweep graph
    at the given expected path-observation count.
    """
    p = min(max(path_count / N, 1e-6), 0.49)
    dag = competing_parents(competitor_weight_for_occupancy(p))
    noise = NoiseSpec.constant(sigma, dag.n)
    ests = []
    for seed in seeds:
        samples = simulate(dag, InnovationSpec(alpha=alpha), noise, N, seed=seed)
        y = differences(samples, 2, 3)
        try:
            ests.append(estimate_gmm(y, k_max, restarts=restarts, seed=seed).estimate)
        except NoUsableComponentError:
            ests.append(math.inf)
    med = float(statistics.median(abs(e) for e in ests))
    finite = [e for e in ests if math.isfinite(e)]
    if len(finite) >= 2:
        q75, q25 = np.percentile(finite, [75, 25])
        iqr = float(q75 - q25)
    else:
        iqr = math.inf
    return med, iqr, ests


def _is_stable(med: float, iqr: float) -> bool:
    # operational proxy for "consistent estimation": tight and centered
    return med <= 0.1 and iqr <= 0.1


def run_stability_table(cfg: ExperimentConfig) -> SweepResult:
    """Minimal path-observation count at which the GMM estimate stabilizes,
    per sample size, found by binary search on the occupancy.
    """
    if cfg.paper_scale:
        sizes = (500, 1000, 5000, 10000, 50000)
    else:
        sizes = (500, 1000, 5000)
    rows = []
    for N in sizes:
        lo, hi = 5, max(int(0.3 * N), 40)
        # ensure hi is stable before searching
        med, iqr, _ = gmm_stability_probe(
            N, hi, cfg.sigma, cfg.seeds, cfg.k_max, cfg.restarts, cfg.alpha
        )
        if not _is_stable(med, iqr):
            rows.append((N, None, None, med, iqr, "no stable count found"))
            continue
        best = (hi, med, iqr)
        while lo < hi:
            mid = (lo + hi) // 2
            med, iqr, _ = gmm_stability_probe(
                N, mid, cfg.sigma, cfg.seeds, cfg.k_max, cfg.restarts, cfg.alpha
            )
            if _is_stable(med, iqr):
                best = (mid, med, iqr)
                hi = mid
            else:
                lo = mid + 1
        count, med, iqr = best
        rows.append((N, 100.0 * count / N, count, med, iqr, ""))
    return SweepResult(
        config=cfg,
        columns=("N", "path_pct", "path_obs", "median_abs_est", "iqr", "note"),
        rows=rows,
        notes={
            "stability_criterion": "median |est| <= 0.1 and IQR <= 0.1 over seeds",
            "estimate_scale": (
                "raw estimates near 0 are reported; the reference table's "
                "caption mentions a log2 scale that its own values do not "
                "appear to use"
            ),
        },
    )


def run_instability_trace(cfg: ExperimentConfig) -> SweepResult:
    """Per-seed estimate scatter across path counts around the stability
    threshold, exposing the unstable hand-off window.
    """
    N = 50000 if cfg.paper_scale else cfg.N
    if cfg.grid:
        counts = tuple(int(c) for c in cfg.grid)
    elif cfg.paper_scale:
        counts = tuple(range(400, 801, 50))
    else:
        # same fractional window at desk scale
        counts = tuple(int(round(N * f)) for f in np.linspace(0.008, 0.016, 9))
    rows = []
    for count in counts:
        p = min(max(count / N, 1e-6), 0.49)
        dag = competing_parents(competitor_weight_for_occupancy(p))
        noise = NoiseSpec.constant(cfg.sigma, dag.n)
        for seed in cfg.seeds:
            samples = simulate(dag, _innovation(cfg), noise, N, seed=seed)
            realized = int((samples.provenance[:, 2] == 2).sum())
            y = differences(samples, 2, 3)
            try:
                est = estimate_gmm(
                    y, cfg.k_max, restarts=cfg.restarts, seed=seed
                ).estimate
            except NoUsableComponentError:
                est = None
            rows.append((count, realized, realized / N, seed, est))
    return SweepResult(
        config=cfg,
        columns=("target_count", "path_count", "empirical_frequency", "seed", "estimate"),
        rows=rows,
    )


SCENARIOS = {
    "recovery": run_exact_recovery,
    "inactivation": run_inactivation_sweep,
    "table1": run_stability_table,
    "instability": run_instability_trace,
}


def run_scenario(cfg: ExperimentConfig) -> SweepResult:
    try:
        runner = SCENARIOS[cfg.scenario]
    except KeyError:
        raise ValueError(
            f"unknown scenario {cfg.scenario!r}; available: {sorted(SCENARIOS)}"
        ) from None
    return runner(cfg)


def _resolve_graph(cfg: ExperimentConfig) -> WeightedDag:
    from .network import load_dag

    if cfg.graph.endswith(".json"):
        return load_dag(cfg.graph)
    return get_preset(cfg.graph)


def _closure_entries(dag: WeightedDag) -> np.ndarray:
    from .network import dag_kleene_star

    return dag_kleene_star(dag).closure.entries


def smoothed_means(values: Sequence[float], window: int = 3) -> list[float]:
    """Moving average used by the monotonicity checks on sweep curves."""
    out = []
    half = window // 2
    vals = list(values)
    for idx in range(len(vals)):
        chunk = vals[max(0, idx - half) : idx + half + 1]
        out.append(sum(chunk) / len(chunk))
    return out
