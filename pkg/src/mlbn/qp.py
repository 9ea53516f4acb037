"""Hyperplane-fit estimation of edge weights by quadratic programming.

The per-pair problem

    minimize  K1 * sum_v max(0, Y'_v - w') + K2 * w'^2,   Y' = Y - min(Y)

is solved exactly by scanning the breakpoints of the convex piecewise
quadratic objective.  A generic dual active-set solver for the canonical
form  min -d^T b + 1/2 b^T D b  s.t.  A^T b >= b0  is retained as a
cross-checking oracle and for arbitrary small QP instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .gmm import ArrayLike, _pair, _values


class QpError(ValueError):
    pass


class InfeasibleError(QpError):
    pass


NEEDS_MANUAL_TUNING = "NEEDS_MANUAL_TUNING"


# ---------------------------------------------------------------------------
# Generic dual active-set solver


@dataclass(frozen=True)
class QpCanonical:
    """min -d^T b + 1/2 b^T D b  subject to  A^T b >= b0."""

    D: np.ndarray  # (n, n) symmetric positive definite
    d: np.ndarray  # (n,)
    A: np.ndarray  # (n, m) constraint normals as columns
    b0: np.ndarray  # (m,)

    def __post_init__(self):
        n = self.D.shape[0]
        if self.D.shape != (n, n):
            raise QpError("D must be square")
        if not np.allclose(self.D, self.D.T, atol=1e-12):
            raise QpError("D must be symmetric")
        if self.d.shape != (n,):
            raise QpError("d has wrong length")
        if self.A.shape[0] != n or self.A.shape[1] != len(self.b0):
            raise QpError("constraint dimensions inconsistent")


@dataclass(frozen=True)
class GenericSolution:
    b: np.ndarray
    active: tuple[int, ...]
    multipliers: np.ndarray  # aligned with active
    objective: float
    iterations: int


def solve_qp_generic(
    p: QpCanonical, tol: float = 1e-10, max_iter: Optional[int] = None
) -> GenericSolution:
    """Dual active-set method: start from the unconstrained minimum and add
    violated constraints one at a time, taking partial dual steps and
    dropping blocking constraints as needed.
    """
    D, d, A, b0 = p.D, p.d, p.A, p.b0
    n, m = A.shape
    if max_iter is None:
        max_iter = 20 * (m + n) + 100

    def dsolve(rhs):
        return np.linalg.solve(D, rhs)

    x = dsolve(d)
    active: list[int] = []
    u: list[float] = []
    iterations = 0
    while True:
        iterations += 1
        if iterations > max_iter:
            raise QpError(f"active-set iteration limit {max_iter} exceeded")
        s = A.T @ x - b0
        scale = 1.0 + np.abs(b0).max(initial=0.0)
        candidates = [k for k in range(m) if s[k] < -tol * scale and k not in active]
        if not candidates:
            obj = float(-d @ x + 0.5 * x @ D @ x)
            return GenericSolution(
                b=x,
                active=tuple(active),
                multipliers=np.array(u),
                objective=obj,
                iterations=iterations,
            )
        pcon = min(candidates, key=lambda k: s[k])
        npv = A[:, pcon]
        u_p = 0.0
        s_p = float(s[pcon])
        while True:
            iterations += 1
            if iterations > max_iter:
                raise QpError(f"active-set iteration limit {max_iter} exceeded")
            if active:
                Nmat = A[:, active]
                Ginv_N = dsolve(Nmat)
                M = Nmat.T @ Ginv_N
                Ginv_np = dsolve(npv)
                r = np.linalg.solve(M, Nmat.T @ Ginv_np)
                z = Ginv_np - Ginv_N @ r
            else:
                r = np.zeros(0)
                z = dsolve(npv)
            # dual step bound: first active multiplier driven to zero
            t1 = math.inf
            k_drop = -1
            for idx in range(len(active)):
                if r[idx] > tol:
                    ratio = u[idx] / r[idx]
                    if ratio < t1:
                        t1, k_drop = ratio, idx
            znp = float(z @ npv)
            t2 = -s_p / znp if znp > tol else math.inf
            t = min(t1, t2)
            if not math.isfinite(t):
                raise InfeasibleError(
                    f"constraint {pcon} cannot be satisfied: infeasible problem"
                )
            if t2 == math.inf:
                # dual-only step; drop the blocking constraint
                for idx in range(len(active)):
                    u[idx] -= t * r[idx]
                u_p += t
                active.pop(k_drop)
                u.pop(k_drop)
                continue
            x = x + t * z
            for idx in range(len(active)):
                u[idx] -= t * r[idx]
            u_p += t
            s_p = float(A[:, pcon] @ x - b0[pcon])
            if t == t2:
                active.append(pcon)
                u.append(u_p)
                break
            active.pop(k_drop)
            u.pop(k_drop)


# ---------------------------------------------------------------------------
# Exact one-dimensional specialization


@dataclass(frozen=True)
class QpSolution:
    pair: Optional[tuple[int, int]]
    omega_hat: float  # omega_prime + shift
    omega_prime: float
    deltas: np.ndarray
    k1: float
    k2: float
    objective: float
    active_count: int  # observations above the fitted boundary
    shift: float  # subtracted minimum of Y
    flag: Optional[str] = None
    trajectory: tuple = ()


def _check_tuning(k1: float, k2: float) -> None:
    if k1 < 0 or k2 < 0:
        raise QpError(f"tuning weights must be nonnegative, got K1={k1}, K2={k2}")
    if abs(k1 + k2 - 1.0) > 1e-9:
        raise QpError(f"tuning weights must satisfy K1+K2=1, got {k1 + k2}")
    if k2 == 0:
        raise QpError(
            "K2 = 0 leaves the objective unbounded below in omega (all slacks "
            "vanish as omega grows); choose K2 > 0"
        )


def hinge_objective(yp: np.ndarray, omega: float, k1: float, k2: float) -> float:
    return float(k1 * np.maximum(0.0, yp - omega).sum() + k2 * omega * omega)


def solve_pair_1d(y: ArrayLike, k1: float, k2: float) -> QpSolution:
    """Exact minimizer of the shifted per-pair objective.

    On each segment between sorted breakpoints the objective is quadratic
    with stationary point 2*K2*omega = K1 * (count of Y' above omega);
    the convex minimum is found among in-segment stationary points and the
    breakpoints themselves.
    """
    _check_tuning(k1, k2)
    values = _values(y)
    if len(values) < 1:
        raise QpError("need at least one observation")
    shift = float(values.min())
    yp = values - shift
    ys = np.sort(yp)
    N = len(ys)
    counts_above = N - np.arange(N + 1)  # after passing l breakpoints
    suffix = np.zeros(N + 1)  # suffix[l] = sum of ys[l:]
    suffix[:N] = np.cumsum(ys[::-1])[::-1]
    cand = k1 * counts_above / (2.0 * k2)
    lo = np.concatenate(([-np.inf], ys))
    hi = np.concatenate((ys, [np.inf]))
    in_segment = (cand >= lo) & (cand <= hi)
    # on segment l the hinge sum is suffix[l] - counts[l]*omega, so every
    # candidate evaluates in O(1) after the prefix pass
    cand_objs = k1 * (suffix - counts_above * cand) + k2 * cand * cand
    bp_objs = k1 * (suffix[1:] - counts_above[1:] * ys) + k2 * ys * ys
    candidates = np.concatenate((cand[in_segment], ys))
    objs = np.concatenate((cand_objs[in_segment], bp_objs))
    best = int(np.argmin(objs))
    omega = float(candidates[best])
    deltas = np.maximum(0.0, yp - omega)
    return QpSolution(
        pair=_pair(y),
        omega_hat=omega + shift,
        omega_prime=omega,
        deltas=deltas,
        k1=k1,
        k2=k2,
        objective=float(objs[best]),
        active_count=int((yp > omega).sum()),
        shift=shift,
    )


def pair_canonical(y: ArrayLike, k1: float, k2: float, reg: float = 1e-8) -> QpCanonical:
    """Canonical-form instance for the per-pair problem over b = (w', delta).

    The delta block of D is singular (the objective is linear in the slacks);
    a reg*I ridge meets the dual method's positive-definiteness requirement
    without moving the minimizer beyond ~1e-8.
    """
    _check_tuning(k1, k2)
    values = _values(y)
    N = len(values)
    yp = values - values.min()
    D = np.eye(N + 1) * reg
    D[0, 0] += 2.0 * k2
    d = np.zeros(N + 1)
    d[1:] = -k1
    # columns: w' + delta_v >= Y'_v for each v, then delta_v >= 0
    A = np.zeros((N + 1, 2 * N))
    b0 = np.zeros(2 * N)
    for v in range(N):
        A[0, v] = 1.0
        A[v + 1, v] = 1.0
        b0[v] = yp[v]
        A[v + 1, N + v] = 1.0
    return QpCanonical(D=D, d=d, A=A, b0=b0)


def _polish_segment(yp: np.ndarray, omega: float, k1: float, k2: float) -> float:
    """Exact minimizer on the breakpoint segment located by a ridged solve.

    The ridge biases omega by O(reg * sum(delta) / k2); within the segment the
    true objective is a single quadratic with stationary point k1*m/(2*k2),
    so the exact value is recovered from the segment alone.
    """
    tol = 1e-6
    ys = np.sort(yp)
    below = ys[ys <= omega + tol]
    above = ys[ys > omega + tol]
    lo = float(below.max()) if len(below) else -math.inf
    hi = float(above.min()) if len(above) else math.inf
    cand = k1 * len(above) / (2.0 * k2)
    if lo - tol <= cand <= hi + tol:
        return float(min(max(cand, lo), hi))
    # kink solution: the convex minimum sits on a breakpoint
    finite = [b for b in (lo, hi) if math.isfinite(b)]
    return min(finite, key=lambda b: hinge_objective(ys, b, k1, k2))


def solve_pair_generic(y: ArrayLike, k1: float, k2: float) -> QpSolution:
    """Per-pair solve through the generic dual active-set solver."""
    values = _values(y)
    shift = float(values.min())
    yp = values - shift
    sol = solve_qp_generic(pair_canonical(y, k1, k2))
    omega = _polish_segment(yp, float(sol.b[0]), k1, k2)
    deltas = np.maximum(0.0, yp - omega)
    return QpSolution(
        pair=_pair(y),
        omega_hat=omega + shift,
        omega_prime=omega,
        deltas=deltas,
        k1=k1,
        k2=k2,
        objective=hinge_objective(yp, omega, k1, k2),
        active_count=int((yp > omega + 1e-10).sum()),
        shift=shift,
    )


# ---------------------------------------------------------------------------
# Tuning schedule (automated replay of the manual loop)


def default_threshold(y: ArrayLike) -> float:
    values = _values(y)
    yp = values - values.min()
    q75, q25 = np.percentile(yp, [75, 25])
    iqr = float(q75 - q25)
    return 0.01 * iqr if iqr > 0 else 1e-6


def default_schedule(n_obs: int, t: float, steps: int = 8) -> list[tuple[float, float]]:
    """Geometric sweep of the ratio K1/K2 from 1 down to ~2t/N.

    The fitted boundary satisfies 2*K2*w' = K1*m with m <= N, so the final
    ratio forces w' <= t and the loop terminates.
    """
    r_hi = 1.0
    r_lo = max(2.0 * t / max(n_obs, 1), 1e-14)
    r_lo = min(r_lo, r_hi)
    ratios = np.geomspace(r_hi, r_lo, steps)
    return [(r / (1.0 + r), 1.0 / (1.0 + r)) for r in ratios]


def auto_tune(
    y: ArrayLike,
    t: Optional[float] = None,
    schedule: Optional[Sequence[tuple[float, float]]] = None,
) -> QpSolution:
    """Step through the tuning schedule until the shifted estimate drops to
    the threshold; on exhaustion the tightest solution is returned flagged
    for manual tuning through the interactive service.
    """
    values = _values(y)
    if t is None:
        t = default_threshold(y)
    if t <= 0:
        raise QpError(f"threshold must be positive, got {t}")
    if schedule is None:
        schedule = default_schedule(len(values), t)
    trajectory: list[tuple[float, float, float]] = []  # (k1, k2, omega_prime)
    best: Optional[QpSolution] = None
    for k1, k2 in schedule:
        sol = solve_pair_1d(y, k1, k2)
        trajectory.append((k1, k2, sol.omega_prime))
        if best is None or sol.omega_prime < best.omega_prime:
            best = sol
        if sol.omega_prime <= t:
            return replace(sol, trajectory=tuple(trajectory))
    if best is None:
        return QpSolution(
            pair=_pair(y),
            omega_hat=math.nan,
            omega_prime=math.inf,
            deltas=np.zeros(0),
            k1=math.nan,
            k2=math.nan,
            objective=math.nan,
            active_count=0,
            shift=float(values.min()) if len(values) else math.nan,
            flag=NEEDS_MANUAL_TUNING,
        )
    return replace(best, flag=NEEDS_MANUAL_TUNING, trajectory=tuple(trajectory))


# ---------------------------------------------------------------------------
# KKT diagnostics


@dataclass(frozen=True)
class KktReport:
    max_primal_violation: float
    max_negative_slack: float
    complementarity: float
    stationarity: float
    tie_count: int
    passed: bool


def kkt_report(sol: QpSolution, y: ArrayLike, tol: float = 1e-8) -> KktReport:
    """Residuals of the per-pair optimality conditions.

    The stationarity residual |2*K2*w' - K1*m| is bracketed by the number of
    observations tied with the boundary, since the hinge count jumps there.
    """
    values = _values(y)
    yp = values - sol.shift
    omega = sol.omega_prime
    main_slack = omega + sol.deltas - yp
    primal = float(np.maximum(0.0, -main_slack).max(initial=0.0))
    neg_slack = float(np.maximum(0.0, -sol.deltas).max(initial=0.0))
    comp = float(np.minimum(np.abs(sol.deltas), np.abs(main_slack)).max(initial=0.0))
    ties = int((np.abs(yp - omega) <= tol).sum())
    m_above = int((yp > omega + tol).sum())
    stat = abs(2.0 * sol.k2 * omega - sol.k1 * m_above)
    scale = 1.0 + float(np.abs(yp).max(initial=0.0))
    passed = (
        primal <= tol * scale
        and neg_slack <= tol
        and comp <= tol * scale
        and stat <= sol.k1 * ties + tol * scale
    )
    return KktReport(
        max_primal_violation=primal,
        max_negative_slack=neg_slack,
        complementarity=comp,
        stationarity=stat,
        tie_count=ties,
        passed=passed,
    )


def qp_estimate_report(sol: QpSolution):
    """QpSolution condensed into the common estimate-report shape."""
    from .gmm import EstimateReport

    return EstimateReport(
        pair=sol.pair,
        method="QP",
        estimate=sol.omega_hat,
        diagnostics={
            "k1": sol.k1,
            "k2": sol.k2,
            "omega_prime": sol.omega_prime,
            "objective": sol.objective,
            "active_count": sol.active_count,
            "shift": sol.shift,
            "flag": sol.flag,
        },
    )
