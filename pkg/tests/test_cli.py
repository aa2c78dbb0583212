import json
from pathlib import Path

import numpy as np
import pytest

from wsnlife.cli import main
from wsnlife.model import EnergyParams, Position, Topology, flow_solve, transmit_costs, workloads
from wsnlife.trace import read_trace, routing_from_trace

ROOT = Path(__file__).resolve().parents[1]
LINE3 = str(ROOT / "scenarios" / "line3_static.yaml")
WALK6 = str(ROOT / "scenarios" / "six_node_walk.yaml")
CORRIDOR = str(ROOT / "scenarios" / "corridor_tpbvp.yaml")


def test_validate(capsys):
    assert main(["validate", WALK6]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_bad_file(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("nodes: [\n")
    assert main(["validate", str(p)]) == 2
    assert main(["validate", str(tmp_path / "missing.yaml")]) == 2


def test_simulate_static(tmp_path, capsys):
    assert main(["simulate", LINE3, "--out-dir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "trace.summary.json").read_text())
    assert summary["lifetime"] == pytest.approx(80 / 0.06, rel=1e-9)
    assert "SourceDead" in capsys.readouterr().out


def test_simulate_p3_path_column(tmp_path):
    assert main(["simulate", WALK6, "--policy", "p3", "--out-dir", str(tmp_path)]) == 0
    tr = read_trace(tmp_path / "trace.csv")
    assert all(p is not None and p[0] == 0 and p[-1] == 5 for p in tr["path"])
    summary = json.loads((tmp_path / "trace.summary.json").read_text())
    assert np.isfinite(summary["lifetime"])


def test_sweep_table(tmp_path, capsys):
    assert main(["sweep-epsilon", LINE3, "--epsilon", "0.5,1,8", "--out-dir", str(tmp_path)]) == 0
    rows = (tmp_path / "sweep.csv").read_text().strip().splitlines()
    assert rows[0] == "epsilon,lifetime,termination_reason" and len(rows) == 4
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 4


def test_flags_override_file(tmp_path):
    assert main(["simulate", LINE3, "--delta", "0.5", "--threshold", "0.5",
                 "--out-dir", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "trace.summary.json").read_text())
    assert s["delta"] == 0.5 and s["threshold"] == 0.5
    assert s["lifetime"] == pytest.approx(40 / 0.06, rel=1e-9)


def test_seed_on_non_walk_is_config_error(tmp_path):
    assert main(["simulate", LINE3, "--seed", "3", "--out-dir", str(tmp_path)]) == 2


def test_bad_threshold_flag(tmp_path):
    assert main(["simulate", LINE3, "--threshold", "1.5", "--out-dir", str(tmp_path)]) == 2


def test_seed_changes_walk(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", WALK6, "--policy", "p1", "--seed", "2", "--out-dir", str(a)]) == 0
    assert main(["simulate", WALK6, "--policy", "p1", "--seed", "3", "--out-dir", str(b)]) == 0
    assert (a / "trace.csv").read_bytes() != (b / "trace.csv").read_bytes()


def test_export_completeness(tmp_path):
    """Workloads recomputed from the trace plus summary match the recorded ones."""
    assert main(["simulate", WALK6, "--policy", "p3", "--out-dir", str(tmp_path)]) == 0
    tr = read_trace(tmp_path / "trace.csv")
    s = json.loads((tmp_path / "trace.summary.json").read_text())
    topo = Topology(np.array(s["positions"]), np.array(s["ranges"]), s["arcs"])
    params = EnergyParams(**s["energy"])
    n = topo.n_nodes
    Ws = routing_from_trace(tr, n)
    for k in range(tr["k"].size):
        src = Position(tr["x0"][k], tr["y0"][k])
        G = flow_solve(Ws[k])
        I = workloads(Ws[k], G, transmit_costs(topo, src, params), params)
        rec = np.array([tr[f"I_{i}"][k] for i in range(n - 1)])
        np.testing.assert_allclose(I[:-1], rec, atol=1e-9, rtol=0)


def test_trace_column_count_constant(tmp_path):
    assert main(["simulate", WALK6, "--policy", "p1", "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    counts = {len(line.split(",")) for line in lines}
    assert len(counts) == 1


def test_tpbvp_stationary(tmp_path, capsys):
    assert main(["tpbvp", LINE3, "--out-dir", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "tpbvp.summary.json").read_text())
    assert s["nu"] == pytest.approx(-25 / 3, rel=1e-6)
    assert s["T"] == pytest.approx(4000 / 3, rel=1e-6)
    assert "nu = -8.333333" in capsys.readouterr().out


def test_tpbvp_random_walk_config_error(tmp_path):
    assert main(["tpbvp", WALK6, "--out-dir", str(tmp_path)]) == 2


def test_tpbvp_diverging_guess(tmp_path, capsys):
    # one Newton iteration cannot get there from T = 0.001
    text = Path(LINE3).read_text() + "tpbvp: {guess: {T: 0.001, nu: -1.0}, n_steps: 20, max_iter: 1}\n"
    p = tmp_path / "s.yaml"
    p.write_text(text)
    code = main(["tpbvp", str(p), "--out-dir", str(tmp_path / "o")])
    assert code == 3
    assert "best residual" in capsys.readouterr().err
    s = json.loads((tmp_path / "o" / "tpbvp.summary.json").read_text())
    assert s["converged"] is False


@pytest.mark.parametrize("argv", [
    ["simulate", WALK6, "--policy", "p3"],
    ["simulate", WALK6, "--policy", "p2", "--epsilon", "1"],
    ["sweep-epsilon", LINE3, "--epsilon", "0.5,1,8"],
    ["tpbvp", CORRIDOR],
])
def test_byte_identical_reruns(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out-dir", str(a)]) == 0
    assert main(argv + ["--out-dir", str(b)]) == 0
    fa = sorted(p.name for p in a.iterdir())
    assert fa == sorted(p.name for p in b.iterdir())
    for name in fa:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
