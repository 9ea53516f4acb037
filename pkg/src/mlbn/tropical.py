"""Max-plus (tropical) linear algebra.

Matrices live over the semiring (R ∪ {-inf}, max, +).  -inf is the additive
identity and is represented by the IEEE float -inf, never by a large negative
finite number.  All operations are pure; matrices are immutable after
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

import numpy as np

if TYPE_CHECKING:
    from .network import WeightedDag

NEG_INF = float("-inf")


class TropicalError(ValueError):
    pass


class PositiveCycleError(TropicalError):
    """A positive-weight cycle was detected during closure computation."""

    def __init__(self, vertex: int, excess: float):
        self.vertex = vertex
        self.excess = excess
        super().__init__(
            f"positive cycle through vertex {vertex}: "
            f"closure diagonal entry {excess:.3g} > 0"
        )


def _as_entries(entries: Iterable) -> np.ndarray:
    arr = np.asarray(entries, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise TropicalError(f"square matrix required, got shape {arr.shape}")
    if np.isnan(arr).any():
        raise TropicalError("NaN entries are not elements of the max-plus semiring")
    if np.isposinf(arr).any():
        raise TropicalError("+inf entries are not elements of the max-plus semiring")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TropicalMatrix:
    """A square matrix over the max-plus semiring."""

    entries: np.ndarray

    def __init__(self, entries: Iterable):
        object.__setattr__(self, "entries", _as_entries(entries))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "TropicalMatrix":
        e = np.full((n, n), NEG_INF)
        np.fill_diagonal(e, 0.0)
        return cls(e)

    def is_rastic(self) -> bool:
        """True when every row and every column holds a finite entry."""
        finite = np.isfinite(self.entries)
        return bool(finite.any(axis=1).all() and finite.any(axis=0).all())

    def has_zero_diagonal(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(np.diag(self.entries)) <= tol))

    def __matmul__(self, other: "TropicalMatrix") -> "TropicalMatrix":
        return trop_matmul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TropicalMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool(
            np.array_equal(self.entries, other.entries)
        )

    def __hash__(self):
        return hash(self.entries.tobytes())


def trop_matmul(a: TropicalMatrix, b: TropicalMatrix) -> TropicalMatrix:
    """Max-plus matrix product: result(i,j) = max_k a(i,k) + b(k,j).

    The max over an all--inf set is -inf.  -inf + finite = -inf holds in IEEE
    arithmetic; +inf never occurs, so no NaN can arise.
    """
    if a.n != b.n:
        raise TropicalError(f"dimension mismatch: {a.n} vs {b.n}")
    sums = a.entries[:, :, None] + b.entries[None, :, :]
    return TropicalMatrix(sums.max(axis=1))


def matrix_to_json(m: TropicalMatrix) -> dict:
    """{"n": n, "entries": [[...]]} with the string "-inf" for -infinity."""
    entries = [
        [("-inf" if v == NEG_INF else float(v)) for v in row] for row in m.entries
    ]
    return {"n": m.n, "entries": entries}


def matrix_from_json(obj: dict) -> TropicalMatrix:
    try:
        n = obj["n"]
        raw = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise TropicalError(f"matrix JSON missing field: {exc}") from exc
    if len(raw) != n or any(len(row) != n for row in raw):
        raise TropicalError(f"matrix JSON entries are not {n}x{n}")

    def parse(v):
        if v == "-inf":
            return NEG_INF
        if isinstance(v, (int, float)):
            return float(v)
        raise TropicalError(f"bad matrix entry {v!r}")

    return TropicalMatrix([[parse(v) for v in row] for row in raw])


@dataclass(frozen=True)
class KleeneStar:
    """A weight matrix together with its transitive max-plus closure."""

    base: TropicalMatrix
    closure: TropicalMatrix

    @property
    def n(self) -> int:
        return self.base.n


def kleene_star(w: TropicalMatrix, cycle_tol: float = 1e-12) -> KleeneStar:
    """Closure I ⊕ w ⊕ w^2 ⊕ ... by Floyd-Warshall max-plus relaxation.

    closure(i,j) is the heaviest path weight i ~> j (0 for i = j, -inf when
    no path exists).  A diagonal entry exceeding ``cycle_tol`` after
    relaxation certifies a positive cycle and raises PositiveCycleError.
    """
    n = w.n
    d = w.entries.copy()
    np.fill_diagonal(d, np.maximum(np.diag(d), 0.0))
    for k in range(n):
        np.maximum(d, d[:, k, None] + d[None, k, :], out=d)
    diag = np.diag(d)
    if (diag > cycle_tol).any():
        v = int(np.argmax(diag))
        raise PositiveCycleError(v + 1, float(diag[v]))
    # Legitimately zero diagonals may carry rounding from the relaxation.
    np.fill_diagonal(d, 0.0)
    return KleeneStar(base=w, closure=TropicalMatrix(d))


@dataclass(frozen=True)
class FacetConstraint:
    """x_j - x_i >= bound, vertices 1-based."""

    i: int
    j: int
    bound: float


@dataclass(frozen=True)
class PolytropeFacets:
    constraints: tuple[FacetConstraint, ...] = field(default_factory=tuple)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)


def polytrope_facets(ks: KleeneStar) -> PolytropeFacets:
    """One constraint x_j - x_i >= closure(i,j) per finite off-diagonal entry."""
    c = ks.closure.entries
    cons = [
        FacetConstraint(i + 1, j + 1, float(c[i, j]))
        for i in range(ks.n)
        for j in range(ks.n)
        if i != j and np.isfinite(c[i, j])
    ]
    return PolytropeFacets(tuple(cons))


def membership(x: np.ndarray, facets: PolytropeFacets, tol: float = 0.0) -> bool:
    """Whether x (vertex v at x[v-1]) satisfies every facet within tol.

    Invariant under adding a multiple of the all-ones vector, since every
    constraint involves only coordinate differences.
    """
    x = np.asarray(x, dtype=float)
    if tol < 0:
        raise TropicalError("tol must be nonnegative")
    for c in facets.constraints:
        if x[c.j - 1] - x[c.i - 1] < c.bound - tol:
            return False
    return True


def membership_violations(
    x: np.ndarray, facets: PolytropeFacets
) -> list[tuple[FacetConstraint, float]]:
    """Per-constraint slack x_j - x_i - bound for every violated constraint."""
    x = np.asarray(x, dtype=float)
    out = []
    for c in facets.constraints:
        slack = x[c.j - 1] - x[c.i - 1] - c.bound
        if slack < 0:
            out.append((c, float(slack)))
    return out


FACET_DEFINING = "facet-defining"
MASKED = "masked"


def classify_edges(dag: "WeightedDag") -> dict[tuple[int, int], str]:
    """Classify each edge as facet-defining or masked.

    An edge i->j is facet-defining iff its weight strictly exceeds the best
    alternative i ~> j path avoiding the edge; ties count as masked since the
    facet is then not uniquely supported by the edge.
    """
    from .network import weight_matrix

    w = weight_matrix(dag).entries
    out: dict[tuple[int, int], str] = {}
    for e in dag.edges:
        reduced = w.copy()
        reduced[e.i - 1, e.j - 1] = NEG_INF
        alt = kleene_star(TropicalMatrix(reduced)).closure.entries[e.i - 1, e.j - 1]
        out[(e.i, e.j)] = FACET_DEFINING if e.omega > alt else MASKED
    return out
