"""Forward simulation of max-linear Bayesian networks in log space.

Each vertex j evolves as

    log X_j = max( max_{i in pa(j)} (w_ij + log X_i), log Z_j ) + eps_j

with Frechet innovations Z_j and Gaussian log-noise eps_j ~ N(0, sigma_j^2).
Provenance records which term attained the pre-noise max, one byte per cell.
"""

from __future__ import annotations

import base64
import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .network import WeightedDag, dag_to_json

SELF = 0  # provenance marker: the innovation term attained the max

_GRID = float(2**26)  # innovation log-values are snapped to this grid


class SimulationError(ValueError):
    pass


class SampleFileError(ValueError):
    pass


@dataclass(frozen=True)
class InnovationSpec:
    """Frechet(alpha, beta, xi) innovation parameters.

    alpha >= 0 is required so that log Z stays finite: the max-times model
    needs Z > 0, and the support of the Frechet is (alpha, inf).
    """

    alpha: float = 0.0
    beta: float = 1.0
    xi: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise SimulationError(f"scale beta must be positive, got {self.beta}")
        if self.xi <= 0:
            raise SimulationError(f"shape xi must be positive, got {self.xi}")
        if self.alpha < 0:
            raise SimulationError(
                f"location alpha must be >= 0 so that Z > 0, got {self.alpha}"
            )

    def cdf(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        pos = z > self.alpha
        out[pos] = np.exp(-(((z[pos] - self.alpha) / self.beta) ** (-self.xi)))
        return out

    def median(self) -> float:
        return self.alpha + self.beta * (math.log(2)) ** (-1.0 / self.xi)


@dataclass(frozen=True)
class NoiseSpec:
    """Per-vertex standard deviations of the Gaussian log-noise."""

    sigmas: tuple[float, ...]

    def __post_init__(self):
        if any(s < 0 for s in self.sigmas):
            raise SimulationError("noise standard deviations must be >= 0")

    @classmethod
    def constant(cls, sigma: float, n: int) -> "NoiseSpec":
        return cls(sigmas=(float(sigma),) * n)

    @property
    def n(self) -> int:
        return len(self.sigmas)

    def is_noise_free(self) -> bool:
        return all(s == 0 for s in self.sigmas)


def sample_frechet(
    spec: InnovationSpec, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Inverse-CDF draws z = alpha + beta * (-ln u)^(-1/xi), u uniform (0,1)."""
    u = rng.random(size)
    # rng.random() lies in [0,1); redraw exact zeros to stay in the open interval
    while (mask := u == 0.0).any():
        u[mask] = rng.random(int(mask.sum()))
    return spec.alpha + spec.beta * (-np.log(u)) ** (-1.0 / spec.xi)


@dataclass(frozen=True)
class SampleSet:
    """N x n table of log-space observations with generation metadata."""

    log_x: np.ndarray  # (N, n) float64
    provenance: Optional[np.ndarray]  # (N, n) int8; parent id or SELF
    seed: int
    innovation: InnovationSpec
    noise: NoiseSpec
    graph_hash: str
    feed_prenoise: bool = False

    def __post_init__(self):
        self.log_x.setflags(write=False)
        if self.provenance is not None:
            self.provenance.setflags(write=False)

    @property
    def N(self) -> int:
        return self.log_x.shape[0]

    @property
    def n(self) -> int:
        return self.log_x.shape[1]


@dataclass(frozen=True)
class DifferenceSample:
    """Per-sample differences Y_ij = log X_j - log X_i."""

    pair: tuple[int, int]
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def N(self) -> int:
        return len(self.values)


def graph_hash(dag: WeightedDag) -> str:
    payload = json.dumps(dag_to_json(dag), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


def _vertex_rng(seed: int, vertex: int, channel: int) -> np.random.Generator:
    # One substream per (vertex, channel); adding vertices leaves existing
    # columns untouched.
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(vertex, channel))
    return np.random.default_rng(ss)


def simulate(
    dag: WeightedDag,
    innovation: InnovationSpec,
    noise: NoiseSpec,
    N: int,
    seed: int,
    feed_prenoise: bool = False,
) -> SampleSet:
    """Draw N samples by propagating through the DAG in topological order.

    By default children receive the noisy value of their parents, reading the
    recursion literally; ``feed_prenoise=True`` propagates the pre-noise max
    instead, for sensitivity runs.
    """
    if N < 1:
        raise SimulationError(f"sample count must be >= 1, got {N}")
    if noise.n != dag.n:
        raise SimulationError(
            f"noise spec has {noise.n} sigmas, graph has {dag.n} vertices"
        )
    n = dag.n
    log_x = np.empty((N, n))
    pre_noise = np.empty((N, n))
    prov = np.empty((N, n), dtype=np.int8)
    for j in dag.topo_order:
        z = sample_frechet(innovation, _vertex_rng(seed, j, 0), N)
        # snapping log Z to a 2^-26 grid makes noise-free structural
        # identities (Y = omega on realized edges) hold bit-exactly for
        # dyadic weights; the 1.5e-8 perturbation is far below every
        # statistical tolerance
        log_z = np.round(np.log(z) * _GRID) / _GRID
        terms = [log_z]
        labels = [SELF]
        for i in dag.parents(j):
            src = pre_noise if feed_prenoise else log_x
            terms.append(dag.weight(i, j) + src[:, i - 1])
            labels.append(i)
        # columns: SELF first, then parents in ascending index order
        stacked = np.stack(terms, axis=1)
        if len(labels) == 1:
            winners = np.zeros(N, dtype=int)
        else:
            # ties break toward the lowest-index parent; SELF wins only
            # when strictly above every parent term
            parent_part = stacked[:, 1:]
            best_parent = np.argmax(parent_part, axis=1)  # first max wins
            parent_val = parent_part[np.arange(N), best_parent]
            winners = np.where(parent_val >= stacked[:, 0], best_parent + 1, 0)
        prov[:, j - 1] = np.asarray(labels, dtype=np.int8)[winners]
        pre = stacked[np.arange(N), winners]
        sigma = noise.sigmas[j - 1]
        eps = (
            _vertex_rng(seed, j, 1).normal(0.0, sigma, N) if sigma > 0 else 0.0
        )
        pre_noise[:, j - 1] = pre
        log_x[:, j - 1] = pre + eps
    return SampleSet(
        log_x=log_x,
        provenance=prov,
        seed=seed,
        innovation=innovation,
        noise=noise,
        graph_hash=graph_hash(dag),
        feed_prenoise=feed_prenoise,
    )


def differences(samples: SampleSet, i: int, j: int) -> DifferenceSample:
    """Elementwise Y_ij = log X_j - log X_i, in sample order."""
    if i == j:
        raise SimulationError("differences require i != j")
    for v in (i, j):
        if not 1 <= v <= samples.n:
            raise SimulationError(f"vertex {v} out of range 1..{samples.n}")
    values = samples.log_x[:, j - 1] - samples.log_x[:, i - 1]
    return DifferenceSample(pair=(i, j), values=values)


# ---------------------------------------------------------------------------
# Serialization: CSV body plus JSON sidecar


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".meta.json")


def save_sample_set(samples: SampleSet, path: str | Path) -> None:
    if samples.N == 0:
        raise SampleFileError("refusing to save an empty sample set")
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"X{v}" for v in range(1, samples.n + 1)])
        for row in samples.log_x:
            writer.writerow([format(x, ".17g") for x in row])
    meta = {
        "N": samples.N,
        "n": samples.n,
        "seed": samples.seed,
        "innovation": {
            "alpha": samples.innovation.alpha,
            "beta": samples.innovation.beta,
            "xi": samples.innovation.xi,
        },
        "sigmas": list(samples.noise.sigmas),
        "graph_hash": samples.graph_hash,
        "feed_prenoise": samples.feed_prenoise,
        "provenance_b64": (
            base64.b64encode(samples.provenance.tobytes()).decode()
            if samples.provenance is not None
            else None
        ),
    }
    _sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def load_sample_set(path: str | Path) -> SampleSet:
    path = Path(path)
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        raise SampleFileError(f"missing metadata sidecar {sidecar}")
    try:
        meta = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise SampleFileError(f"{sidecar}: invalid JSON at line {exc.lineno}") from exc
    rows: list[list[float]] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SampleFileError(f"{path}: empty file") from None
        n = len(header)
        if header != [f"X{v}" for v in range(1, n + 1)]:
            raise SampleFileError(f"{path}: line 1: malformed header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != n:
                raise SampleFileError(
                    f"{path}: line {lineno}: expected {n} fields, got {len(row)}"
                )
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise SampleFileError(f"{path}: line {lineno}: {exc}") from exc
    log_x = np.array(rows)
    if meta.get("N") != len(rows) or meta.get("n") != n:
        raise SampleFileError(
            f"{sidecar}: metadata shape ({meta.get('N')}, {meta.get('n')}) "
            f"does not match data shape {log_x.shape}"
        )
    prov_b64 = meta.get("provenance_b64")
    prov = None
    if prov_b64 is not None:
        prov = np.frombuffer(
            base64.b64decode(prov_b64), dtype=np.int8
        ).reshape(log_x.shape).copy()
    return SampleSet(
        log_x=log_x,
        provenance=prov,
        seed=meta["seed"],
        innovation=InnovationSpec(**meta["innovation"]),
        noise=NoiseSpec(sigmas=tuple(meta["sigmas"])),
        graph_hash=meta["graph_hash"],
        feed_prenoise=meta.get("feed_prenoise", False),
    )


def verify_graph_match(samples: SampleSet, dag: WeightedDag) -> bool:
    """Whether the sample set was generated from this exact weighted graph."""
    return samples.graph_hash == graph_hash(dag)
