"""CLI dispatch and the HTTP tuning service."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from mlbn.cli import main
from mlbn.network import save_dag
from mlbn.presets import star_example, ten_node_preset
from mlbn.server import create_app, export_openapi
from mlbn.simulate import (
    InnovationSpec,
    NoiseSpec,
    differences,
    save_sample_set,
    simulate,
)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    dag = star_example()
    graph = root / "g.json"
    save_dag(dag, graph)
    samples = simulate(dag, InnovationSpec(), NoiseSpec.constant(0.1, 4), 2000, seed=7)
    csv_path = root / "s.csv"
    save_sample_set(samples, csv_path)
    return dag, samples, str(graph), str(csv_path)


def run_cli(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr().out
    return rc, json.loads(out) if out.strip() else None


class TestCli:
    def test_kleene(self, capsys, dataset):
        _, _, graph, _ = dataset
        rc, payload = run_cli(capsys, "kleene", "--graph", graph)
        assert rc == 0
        assert payload["n"] == 4
        assert payload["entries"][1][3] == 1.5
        assert payload["entries"][3][0] == "-inf"

    def test_estimate_min(self, capsys, tmp_path):
        dag = star_example()
        graph = tmp_path / "g.json"
        save_dag(dag, graph)
        s = simulate(dag, InnovationSpec(), NoiseSpec.constant(0.0, 4), 2000, seed=0)
        save_sample_set(s, tmp_path / "nf.csv")
        rc, payload = run_cli(
            capsys,
            "estimate", "--method", "min",
            "--samples", str(tmp_path / "nf.csv"), "--pair", "2,4",
        )
        assert rc == 0 and payload["estimate"] == 1.5

    def test_estimate_qp_auto(self, capsys, dataset):
        _, _, _, samples = dataset
        rc, payload = run_cli(
            capsys,
            "estimate", "--method", "qp", "--samples", samples,
            "--pair", "2,4", "--auto", "--t", "0.1",
        )
        assert rc == 0 and "omega_hat" in payload

    def test_atoms(self, capsys, dataset):
        _, _, graph, _ = dataset
        rc, payload = run_cli(capsys, "atoms", "--graph", graph, "--pair", "2,4")
        assert rc == 0
        assert payload["atoms"] == [{"location": 1.5, "ancestors": [2]}]

    def test_occupancy(self, capsys, dataset):
        _, _, graph, samples = dataset
        rc, payload = run_cli(capsys, "occupancy", "--graph", graph, "--samples", samples)
        assert rc == 0
        fractions = {(e["i"], e["j"]): e["fraction"] for e in payload}
        assert sum(fractions.values()) <= 1.0

    def test_generate_round_trip(self, capsys, tmp_path):
        rc, payload = run_cli(
            capsys,
            "generate", "--preset", "star4", "--n", "50", "--seed", "2",
            "--sigma", "0.1", "--out", str(tmp_path / "out.csv"),
        )
        assert rc == 0 and payload["N"] == 50
        assert (tmp_path / "out.csv").exists()
        assert (tmp_path / "out.csv.meta.json").exists()

    def test_experiment(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"graph": "star4", "N": 100, "seeds": [0]}))
        rc, payload = run_cli(
            capsys,
            "experiment", "--scenario", "recovery",
            "--config", str(cfg), "--out", str(tmp_path / "res"),
        )
        assert rc == 0
        assert (tmp_path / "res" / "recovery.csv").exists()
        assert (tmp_path / "res" / "recovery.manifest.json").exists()

    def test_usage_error_exit_1(self, capsys):
        assert main(["estimate", "--badflag"]) == 1

    def test_unknown_command_exit_1(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_data_error_exit_2(self, capsys):
        rc = main(["estimate", "--method", "min", "--samples", "/no/such.csv", "--pair", "1,2"])
        assert rc == 2

    def test_logs_go_to_stderr(self, capsys, tmp_path):
        main([
            "generate", "--preset", "star4", "--n", "10", "--seed", "0",
            "--sigma", "0", "--out", str(tmp_path / "x.csv"),
        ])
        captured = capsys.readouterr()
        json.loads(captured.out)  # stdout is pure JSON
        assert "wrote" in captured.err


class TestServer:
    @pytest.fixture(scope="class")
    def client(self, tmp_path_factory):
        dag = star_example()
        samples = simulate(
            dag, InnovationSpec(), NoiseSpec.constant(0.1, 4), 2000, seed=7
        )
        ledger = tmp_path_factory.mktemp("ledger") / "ledger.json"
        app = create_app(dag=dag, samples=samples, ledger_path=ledger)
        return TestClient(app), dag, samples, ledger

    def test_graph(self, client):
        c, dag, _, _ = client
        body = c.get("/api/graph").json()
        assert body["n"] == dag.n and len(body["edges"]) == len(dag.edges)

    def test_marginal_matches_differences(self, client):
        c, _, samples, _ = client
        body = c.get("/api/marginal", params=dict(i=2, j=4, k=1, l=4)).json()
        expect = differences(samples, 2, 4).values[:: body["stride"]]
        assert np.allclose(body["y_ij"], expect)
        assert len(body["y_ij"]) <= 20_000
        assert sum(body["histogram"]["counts"]) == samples.N

    def test_marginal_deterministic(self, client):
        c, _, _, _ = client
        a = c.get("/api/marginal", params=dict(i=2, j=4, k=1, l=4)).json()
        b = c.get("/api/marginal", params=dict(i=2, j=4, k=1, l=4)).json()
        assert a == b

    def test_atoms(self, client):
        c, _, _, _ = client
        body = c.get("/api/atoms", params=dict(i=2, j=4)).json()
        assert body["atoms"][0]["location"] == 1.5

    def test_bad_pair_400(self, client):
        c, _, _, _ = client
        assert c.get("/api/atoms", params=dict(i=2, j=2)).status_code == 400
        assert c.get("/api/marginal", params=dict(i=0, j=4, k=1, l=4)).status_code == 400

    def test_no_dataset_404(self):
        c = TestClient(create_app())
        assert c.get("/api/graph").status_code == 404
        assert c.post("/api/qp", json=dict(i=1, j=2, K1=0.5, K2=0.5)).status_code == 404

    def test_accept_without_solve_409(self, client):
        c, _, _, _ = client
        r = c.post("/api/accept", json=dict(i=3, j=4, omega=2.0))
        assert r.status_code == 409

    def test_qp_round_trip(self, client):
        c, _, samples, ledger = client
        sol = c.post("/api/qp", json=dict(i=2, j=4, K1=0.5, K2=0.5)).json()
        from mlbn.qp import solve_pair_1d

        direct = solve_pair_1d(differences(samples, 2, 4), 0.5, 0.5)
        assert sol["omega_hat"] == direct.omega_hat  # bit-for-bit
        accept = c.post(
            "/api/accept", json=dict(i=2, j=4, omega=sol["omega_hat"])
        )
        assert accept.status_code == 200
        report = c.get("/api/report").json()
        assert {"i": 2, "j": 4, "omega": sol["omega_hat"]} in report["accepted"]
        assert json.loads(ledger.read_text()) == report["accepted"]

    def test_qp_invalid_tuning_400(self, client):
        c, _, _, _ = client
        assert c.post("/api/qp", json=dict(i=2, j=4, K1=0.9, K2=0.9)).status_code == 400

    def test_gmm_deterministic_with_seed(self, client):
        c, _, _, _ = client
        a = c.post("/api/gmm", json=dict(i=2, j=4, kmax=2, seed=3)).json()
        b = c.post("/api/gmm", json=dict(i=2, j=4, kmax=2, seed=3)).json()
        assert a == b
        assert a["report"]["estimate"] == pytest.approx(1.5, abs=0.1)

    def test_openapi_export(self, client, tmp_path):
        c, _, _, _ = client
        path = tmp_path / "openapi.json"
        export_openapi(c.app, path)
        spec = json.loads(path.read_text())
        for route in ("/api/graph", "/api/qp", "/api/gmm", "/api/accept"):
            assert route in spec["paths"]
