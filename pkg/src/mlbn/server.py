"""JSON-over-HTTP service backing the interactive hyperplane tuner.

Single-session, loopback-by-default.  All responses are deterministic
functions of the loaded dataset and the request (mixture fits take explicit
seeds), so identical request sequences replay identically.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import gmm, qp
from .network import (
    WeightedDag,
    atom_set,
    dag_kleene_star,
    dag_to_json,
    load_dag,
)
from .simulate import SampleSet, differences, load_sample_set, verify_graph_match

MAX_POINTS = 20_000
HIST_BINS = 80


@dataclass
class SessionState:
    """One loaded dataset plus the tuning loop's mutable state."""

    dag: Optional[WeightedDag] = None
    samples: Optional[SampleSet] = None
    current: dict[tuple[int, int], qp.QpSolution] = field(default_factory=dict)
    solved: set = field(default_factory=set)  # pairs with any completed solve
    ledger: list[dict] = field(default_factory=list)
    ledger_path: Optional[Path] = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def require_dataset(self) -> tuple[WeightedDag, SampleSet]:
        if self.dag is None or self.samples is None:
            raise HTTPException(status_code=404, detail="no dataset loaded")
        return self.dag, self.samples

    def append_ledger(self, entry: dict) -> None:
        with self.lock:
            self.ledger.append(entry)
            if self.ledger_path is not None:
                self.ledger_path.write_text(json.dumps(self.ledger, indent=2) + "\n")


class QpRequest(BaseModel):
    i: int
    j: int
    K1: float
    K2: float


class GmmRequest(BaseModel):
    i: int
    j: int
    kmax: int = 3
    seed: int = 0


class AcceptRequest(BaseModel):
    i: int
    j: int
    omega: float


def _check_pair(dag: WeightedDag, i: int, j: int) -> None:
    for v in (i, j):
        if not 1 <= v <= dag.n:
            raise HTTPException(
                status_code=400, detail=f"vertex {v} out of range 1..{dag.n}"
            )
    if i == j:
        raise HTTPException(status_code=400, detail="pair requires i != j")


def _finite(x: float):
    return x if math.isfinite(x) else None


def _qp_payload(sol: qp.QpSolution) -> dict:
    d = asdict(sol)
    d["deltas"] = sol.deltas.tolist()
    d["omega_hat"] = _finite(sol.omega_hat)
    d["omega_prime"] = _finite(sol.omega_prime)
    d["objective"] = _finite(sol.objective)
    d["pair"] = list(sol.pair) if sol.pair else None
    return d


def _stride(n: int) -> int:
    return max(1, math.ceil(n / MAX_POINTS))


def create_app(
    dag: Optional[WeightedDag] = None,
    samples: Optional[SampleSet] = None,
    ledger_path: Optional[str | Path] = None,
    static_dir: Optional[str | Path] = None,
) -> FastAPI:
    app = FastAPI(title="mlbn tuning service", version="1.0")
    state = SessionState(
        dag=dag,
        samples=samples,
        ledger_path=Path(ledger_path) if ledger_path else None,
    )
    app.state.session = state

    @app.get("/api/graph")
    def get_graph():
        g, _ = state.require_dataset()
        return dag_to_json(g)

    @app.get("/api/marginal")
    def get_marginal(i: int, j: int, k: int, l: int):  # noqa: E741
        g, s = state.require_dataset()
        _check_pair(g, i, j)
        _check_pair(g, k, l)
        y_ij = differences(s, i, j).values
        y_kl = differences(s, k, l).values
        stride = _stride(len(y_ij))
        counts, edges = np.histogram(y_ij, bins=HIST_BINS)
        return {
            "pair": [i, j],
            "versus": [k, l],
            "stride": stride,
            "n_total": int(len(y_ij)),
            "y_ij": y_ij[::stride].tolist(),
            "y_kl": y_kl[::stride].tolist(),
            "histogram": {
                "counts": counts.tolist(),
                "edges": edges.tolist(),
            },
        }

    @app.get("/api/atoms")
    def get_atoms(i: int, j: int):
        g, _ = state.require_dataset()
        _check_pair(g, i, j)
        atoms = atom_set(g, dag_kleene_star(g), i, j)
        return {
            "pair": [i, j],
            "atoms": [
                {"location": a.location, "ancestors": list(a.ancestors)}
                for a in atoms.atoms
            ],
            "raw_count": atoms.raw_count,
        }

    @app.post("/api/qp")
    def post_qp(req: QpRequest):
        g, s = state.require_dataset()
        _check_pair(g, req.i, req.j)
        y = differences(s, req.i, req.j)
        try:
            sol = qp.solve_pair_1d(y, req.K1, req.K2)
        except qp.QpError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        with state.lock:
            state.current[(req.i, req.j)] = sol
            state.solved.add((req.i, req.j))
        return _qp_payload(sol)

    @app.post("/api/gmm")
    def post_gmm(req: GmmRequest):
        g, s = state.require_dataset()
        _check_pair(g, req.i, req.j)
        if req.kmax < 1:
            raise HTTPException(status_code=400, detail="kmax must be >= 1")
        y = differences(s, req.i, req.j)
        try:
            fit = gmm.select_k(y, req.kmax, seed=req.seed)
            report = gmm.smallest_peak(fit, pair=(req.i, req.j))
        except gmm.NoUsableComponentError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except gmm.GmmError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        with state.lock:
            state.solved.add((req.i, req.j))
        return {
            "fit": {
                "k": fit.k,
                "weights": fit.weights.tolist(),
                "means": fit.means.tolist(),
                "variances": fit.variances.tolist(),
                "loglik": fit.loglik,
                "bic": fit.bic,
                "n_iter": fit.n_iter,
                "converged": fit.converged,
                "pruned": fit.pruned,
            },
            "report": {
                "pair": [req.i, req.j],
                "method": report.method,
                "estimate": report.estimate,
                "diagnostics": report.diagnostics,
            },
        }

    @app.post("/api/accept")
    def post_accept(req: AcceptRequest):
        g, _ = state.require_dataset()
        _check_pair(g, req.i, req.j)
        if (req.i, req.j) not in state.solved:
            raise HTTPException(
                status_code=409,
                detail=f"no solve completed for pair ({req.i}, {req.j}); "
                "run /api/qp or /api/gmm first",
            )
        if not math.isfinite(req.omega):
            raise HTTPException(status_code=400, detail="omega must be finite")
        entry = {"i": req.i, "j": req.j, "omega": req.omega}
        state.append_ledger(entry)
        return {"accepted": entry, "ledger_size": len(state.ledger)}

    @app.get("/api/report")
    def get_report():
        return {"accepted": list(state.ledger)}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def export_openapi(app: FastAPI, path: str | Path) -> None:
    """Write the service's payload schemas as an OpenAPI reference file."""
    Path(path).write_text(json.dumps(app.openapi(), indent=2) + "\n")


def default_static_dir() -> Optional[Path]:
    # repo layout: frontend build output next to the package checkout
    here = Path(__file__).resolve()
    for base in here.parents:
        candidate = base / "frontend" / "dist"
        if candidate.is_dir():
            return candidate
    return None


def run_server(
    graph_path: str,
    samples_path: str,
    host: str = "127.0.0.1",
    port: int = 8787,
    ledger_path: Optional[str] = None,
) -> None:
    import uvicorn

    dag = load_dag(graph_path)
    samples = load_sample_set(samples_path)
    if not verify_graph_match(samples, dag):
        raise ValueError(
            f"sample set {samples_path} was not generated from graph {graph_path}"
        )
    app = create_app(
        dag=dag,
        samples=samples,
        ledger_path=ledger_path,
        static_dir=default_static_dir(),
    )
    uvicorn.run(app, host=host, port=port, log_level="info")
