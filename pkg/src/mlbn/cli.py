"""Command-line entry point.

Machine-readable JSON goes to stdout; logs go to stderr.  Exit codes:
0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from typing import Optional, Sequence

import numpy as np

from . import bench, gmm, qp
from .network import (
    GraphError,
    atom_set,
    dag_kleene_star,
    edge_occupancy,
    inactivation_flags,
    load_dag,
)
from .presets import get_preset
from .simulate import (
    InnovationSpec,
    NoiseSpec,
    SampleFileError,
    SimulationError,
    differences,
    load_sample_set,
    save_sample_set,
    simulate,
)
from .tropical import TropicalError, matrix_from_json, matrix_to_json, kleene_star

log = logging.getLogger("mlbn")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

DATA_ERRORS = (
    GraphError,
    TropicalError,
    SimulationError,
    SampleFileError,
    gmm.GmmError,
    qp.QpError,
    OSError,
    json.JSONDecodeError,
    ValueError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, indent=2, default=_jsonable)
    sys.stdout.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "_asdict"):
        return obj._asdict()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _load_graph(args) -> "WeightedDag":
    if getattr(args, "preset", None):
        return get_preset(args.preset)
    if getattr(args, "graph", None):
        return load_dag(args.graph)
    raise GraphError("either --graph or --preset is required")


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        i, j = (int(p) for p in text.split(","))
    except ValueError:
        raise GraphError(f"pair must look like '2,4', got {text!r}") from None
    return i, j


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_generate(args) -> int:
    dag = _load_graph(args)
    innovation = InnovationSpec(alpha=args.alpha, beta=args.beta, xi=args.xi)
    noise = NoiseSpec.constant(args.sigma, dag.n)
    samples = simulate(dag, innovation, noise, args.n, seed=args.seed)
    save_sample_set(samples, args.out)
    log.info("wrote %d samples to %s", samples.N, args.out)
    _emit(
        {
            "out": args.out,
            "N": samples.N,
            "n": samples.n,
            "seed": samples.seed,
            "graph_hash": samples.graph_hash,
        }
    )
    return EXIT_OK


def _cmd_kleene(args) -> int:
    if args.matrix:
        with open(args.matrix) as fh:
            w = matrix_from_json(json.load(fh))
        ks = kleene_star(w)
    else:
        ks = dag_kleene_star(_load_graph(args))
    _emit(matrix_to_json(ks.closure))
    return EXIT_OK


def _cmd_atoms(args) -> int:
    dag = _load_graph(args)
    i, j = _parse_pair(args.pair)
    atoms = atom_set(dag, dag_kleene_star(dag), i, j)
    _emit(
        {
            "pair": list(atoms.pair),
            "atoms": [
                {"location": a.location, "ancestors": list(a.ancestors)}
                for a in atoms.atoms
            ],
            "raw_count": atoms.raw_count,
        }
    )
    return EXIT_OK


def _cmd_occupancy(args) -> int:
    dag = _load_graph(args)
    samples = load_sample_set(args.samples)
    occs = edge_occupancy(dag, samples)
    flags = inactivation_flags(occs, threshold=args.threshold)
    _emit(
        [
            {
                "i": o.edge[0],
                "j": o.edge[1],
                "count": o.count,
                "fraction": o.fraction,
                "approaching_inactivation": flags[o.edge],
            }
            for o in occs
        ]
    )
    return EXIT_OK


def _cmd_estimate(args) -> int:
    samples = load_sample_set(args.samples)
    i, j = _parse_pair(args.pair)
    y = differences(samples, i, j)
    if args.method == "min":
        report = gmm.min_estimator(y)
        _emit(asdict(report))
    elif args.method == "gmm":
        report = gmm.estimate_gmm(
            y, args.kmax, weight_floor=args.floor, seed=args.seed
        )
        _emit(asdict(report))
    else:  # qp
        if args.auto:
            sol = qp.auto_tune(y, t=args.t)
        else:
            if args.k1 is None or args.k2 is None:
                raise qp.QpError("qp needs --k1 and --k2, or --auto")
            sol = qp.solve_pair_1d(y, args.k1, args.k2)
        payload = asdict(sol)
        payload["deltas"] = sol.deltas  # keep ndarray path through _jsonable
        _emit(payload)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
    for key in ("seeds", "methods", "grid"):
        if key in overrides:
            overrides[key] = tuple(overrides[key])
    cfg = bench.ExperimentConfig(scenario=args.scenario, **overrides)
    result = bench.run_scenario(cfg)
    csv_path = result.write(args.out, args.scenario)
    log.info("scenario %s: %d rows", args.scenario, len(result.rows))
    _emit({"scenario": args.scenario, "rows": len(result.rows), "csv": str(csv_path)})
    return EXIT_OK


def _cmd_serve(args) -> int:
    # imported lazily: fastapi/uvicorn are not needed by the batch commands
    from .server import run_server

    run_server(
        graph_path=args.graph,
        samples_path=args.samples,
        host=args.host,
        port=args.port,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlbn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_opts(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--graph", help="graph JSON file")
        g.add_argument("--preset", help="named example network")

    p = sub.add_parser("generate", help="simulate and save a sample set")
    graph_opts(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("kleene", help="print the max-plus closure matrix")
    graph_opts(p)
    p.add_argument("--matrix", help="matrix JSON file instead of a graph")
    p.set_defaults(func=_cmd_kleene)

    p = sub.add_parser("atoms", help="atom locations of a coordinate difference")
    graph_opts(p)
    p.add_argument("--pair", required=True, help="i,j")
    p.set_defaults(func=_cmd_atoms)

    p = sub.add_parser("occupancy", help="per-edge realization fractions")
    graph_opts(p)
    p.add_argument("--samples", required=True)
    p.add_argument("--threshold", type=float, default=0.05)
    p.set_defaults(func=_cmd_occupancy)

    p = sub.add_parser("estimate", help="estimate one edge weight")
    p.add_argument("--method", choices=("min", "gmm", "qp"), required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--pair", required=True, help="i,j")
    p.add_argument("--kmax", type=int, default=3)
    p.add_argument("--floor", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k1", type=float)
    p.add_argument("--k2", type=float)
    p.add_argument("--auto", action="store_true")
    p.add_argument("--t", type=float, help="auto-tune threshold")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("experiment", help="run a benchmark scenario")
    p.add_argument(
        "--scenario",
        choices=sorted(bench.SCENARIOS),
        required=True,
    )
    p.add_argument("--config", help="JSON file of ExperimentConfig overrides")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("serve", help="start the tuning service")
    p.add_argument("--graph", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(message)s", force=True
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DATA_ERRORS as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
