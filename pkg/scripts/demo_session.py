#!/usr/bin/env python3
"""Prepare a demo dataset and launch the interactive tuning service.

Generates samples from the 10-node preset (with the tuning-demo weight
w23=-0.5), writes graph + samples next to --out, and serves on --port.
The documented tuning script for pair (2,3): start at K1=K2=0.5, lower
K1 until the boundary line settles into the left edge of the scatter,
then Accept.
"""

import argparse
from pathlib import Path

from mlbn.network import save_dag
from mlbn.presets import ten_node_preset
from mlbn.server import run_server
from mlbn.simulate import InnovationSpec, NoiseSpec, save_sample_set, simulate


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo")
    parser.add_argument("--n", type=int, default=20_000)
    parser.add_argument("--sigma", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--port", type=int, default=8787)
    parser.add_argument("--w23", type=float, default=-0.5)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dag = ten_node_preset(w23=args.w23)
    graph_path = out / "graph.json"
    samples_path = out / "samples.csv"
    save_dag(dag, graph_path)
    samples = simulate(
        dag,
        InnovationSpec(),
        NoiseSpec.constant(args.sigma, dag.n),
        args.n,
        seed=args.seed,
    )
    save_sample_set(samples, samples_path)
    print(f"dataset ready under {out}/; serving on port {args.port}")
    run_server(
        str(graph_path),
        str(samples_path),
        port=args.port,
        ledger_path=str(out / "ledger.json"),
    )


if __name__ == "__main__":
    main()
