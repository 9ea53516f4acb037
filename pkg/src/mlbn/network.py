"""Weighted DAG model underlying a max-linear Bayesian network.

Vertices are 1-based throughout, matching the figure labels used in the
graph file format.  Edge weights are log-scale (max-plus) values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, NamedTuple

import numpy as np

from .tropical import NEG_INF, KleeneStar, TropicalMatrix

if TYPE_CHECKING:
    from .simulate import SampleSet


class GraphError(ValueError):
    pass


class Edge(NamedTuple):
    i: int
    j: int
    omega: float


@dataclass(frozen=True)
class WeightedDag:
    """A DAG with per-edge finite log-weights and a cached topological order."""

    n: int
    edges: tuple[Edge, ...]
    topo_order: tuple[int, ...] = field(compare=False)

    def parents(self, v: int) -> list[int]:
        self._check_vertex(v)
        return sorted(e.i for e in self.edges if e.j == v)

    def children(self, v: int) -> list[int]:
        self._check_vertex(v)
        return sorted(e.j for e in self.edges if e.i == v)

    def weight(self, i: int, j: int) -> float:
        for e in self.edges:
            if (e.i, e.j) == (i, j):
                return e.omega
        raise GraphError(f"no edge {i}->{j}")

    def has_edge(self, i: int, j: int) -> bool:
        return any((e.i, e.j) == (i, j) for e in self.edges)

    def _check_vertex(self, v: int) -> None:
        if not 1 <= v <= self.n:
            raise GraphError(f"vertex {v} out of range 1..{self.n}")


def make_dag(n: int, edges: Iterable[tuple[int, int, float]]) -> WeightedDag:
    """Validate and build a WeightedDag; raises GraphError on cycles,
    duplicate edges, self-loops, non-finite weights or out-of-range vertices.
    """
    if n < 1:
        raise GraphError("vertex count must be positive")
    es = [Edge(int(i), int(j), float(w)) for i, j, w in edges]
    seen: set[tuple[int, int]] = set()
    for e in es:
        if not (1 <= e.i <= n and 1 <= e.j <= n):
            raise GraphError(f"edge {e.i}->{e.j} out of range 1..{n}")
        if e.i == e.j:
            raise GraphError(f"self-loop at vertex {e.i}")
        if (e.i, e.j) in seen:
            raise GraphError(f"duplicate edge {e.i}->{e.j}")
        if not np.isfinite(e.omega):
            raise GraphError(f"edge {e.i}->{e.j} has non-finite weight {e.omega}")
        seen.add((e.i, e.j))
    order = _topological_order(n, seen)
    return WeightedDag(n=n, edges=tuple(es), topo_order=order)


def _topological_order(n: int, arcs: set[tuple[int, int]]) -> tuple[int, ...]:
    indeg = {v: 0 for v in range(1, n + 1)}
    out: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
    for i, j in arcs:
        indeg[j] += 1
        out[i].append(j)
    ready = sorted(v for v, d in indeg.items() if d == 0)
    order: list[int] = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for u in sorted(out[v]):
            indeg[u] -= 1
            if indeg[u] == 0:
                ready.append(u)
        ready.sort()
    if len(order) != n:
        raise GraphError("graph contains a directed cycle")
    return tuple(order)


def weight_matrix(dag: WeightedDag) -> TropicalMatrix:
    """Max-plus weight matrix: zero diagonal, omega on edges, -inf elsewhere."""
    w = np.full((dag.n, dag.n), NEG_INF)
    np.fill_diagonal(w, 0.0)
    for e in dag.edges:
        w[e.i - 1, e.j - 1] = e.omega
    return TropicalMatrix(w)


def dag_kleene_star(dag: WeightedDag) -> KleeneStar:
    from .tropical import kleene_star

    return kleene_star(weight_matrix(dag))


def ancestors(dag: WeightedDag, v: int, extended: bool = False) -> set[int]:
    """All u with a path u ~> v; the extended variant adds v itself."""
    dag._check_vertex(v)
    preds: dict[int, list[int]] = {u: [] for u in range(1, dag.n + 1)}
    for e in dag.edges:
        preds[e.j].append(e.i)
    found: set[int] = set()
    stack = list(preds[v])
    while stack:
        u = stack.pop()
        if u not in found:
            found.add(u)
            stack.extend(preds[u])
    if extended:
        found.add(v)
    return found


class Atom(NamedTuple):
    location: float
    ancestors: tuple[int, ...]  # common extended ancestors realizing it

    @property
    def multiplicity(self) -> int:
        return len(self.ancestors)


@dataclass(frozen=True)
class AtomSet:
    """Atom locations of the coordinate difference Y_ij = log X_j - log X_i."""

    pair: tuple[int, int]
    atoms: tuple[Atom, ...]

    @property
    def locations(self) -> list[float]:
        return [a.location for a in self.atoms]

    @property
    def raw_count(self) -> int:
        """Atom count before duplicate merging (one per common extended ancestor)."""
        return sum(a.multiplicity for a in self.atoms)


def atom_set(
    dag: WeightedDag, ks: KleeneStar, i: int, j: int, merge_tol: float = 1e-12
) -> AtomSet:
    """Atoms of Y_ij: one location w*(k,j) - w*(k,i) per common extended
    ancestor k of i and j; coinciding locations merged with multiplicity.
    """
    if i == j:
        raise GraphError("atom set requires i != j")
    dag._check_vertex(i)
    dag._check_vertex(j)
    common = sorted(
        ancestors(dag, i, extended=True) & ancestors(dag, j, extended=True)
    )
    c = ks.closure.entries
    located = [(float(c[k - 1, j - 1] - c[k - 1, i - 1]), k) for k in common]
    located.sort()
    merged: list[Atom] = []
    for loc, k in located:
        if merged and abs(loc - merged[-1].location) <= merge_tol:
            merged[-1] = Atom(merged[-1].location, merged[-1].ancestors + (k,))
        else:
            merged.append(Atom(loc, (k,)))
    return AtomSet(pair=(i, j), atoms=tuple(merged))


@dataclass(frozen=True)
class EdgeOccupancy:
    """Empirical probability that edge (i,j) realizes the max at vertex j."""

    edge: tuple[int, int]
    count: int
    sample_size: int

    @property
    def fraction(self) -> float:
        return self.count / self.sample_size


def edge_occupancy(dag: WeightedDag, samples: "SampleSet") -> list[EdgeOccupancy]:
    """Per-edge fraction of samples whose structural max at the child is
    attained through that edge, read off the simulator's provenance channel.
    """
    if samples.provenance is None:
        raise GraphError("sample set carries no provenance channel")
    if samples.n != dag.n:
        raise GraphError(
            f"sample set has {samples.n} vertices, graph has {dag.n}"
        )
    prov = samples.provenance
    out = []
    for e in dag.edges:
        count = int(np.count_nonzero(prov[:, e.j - 1] == e.i))
        out.append(EdgeOccupancy(edge=(e.i, e.j), count=count, sample_size=samples.N))
    return out


APPROACHING_INACTIVATION = "approaching-inactivation"


def inactivation_flags(
    occupancies: list[EdgeOccupancy], threshold: float = 0.05
) -> dict[tuple[int, int], bool]:
    """Flag edges whose realization fraction is strictly below the threshold."""
    return {o.edge: o.fraction < threshold for o in occupancies}


# ---------------------------------------------------------------------------
# Graph file format


def dag_to_json(dag: WeightedDag) -> dict:
    return {
        "n": dag.n,
        "edges": [{"i": e.i, "j": e.j, "omega": e.omega} for e in dag.edges],
    }


def dag_from_json(obj: dict) -> WeightedDag:
    try:
        return make_dag(obj["n"], [(e["i"], e["j"], e["omega"]) for e in obj["edges"]])
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph object: {exc}") from exc


def save_dag(dag: WeightedDag, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dag_to_json(dag), indent=2) + "\n")


def load_dag(path: str | Path) -> WeightedDag:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: invalid JSON at line {exc.lineno}") from exc
    return dag_from_json(obj)
