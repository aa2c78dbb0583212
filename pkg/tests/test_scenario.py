from pathlib import Path

import numpy as np
import pytest

from wsnlife.errors import ParseError, ValidationError
from wsnlife.scenario import load_scenario, parse_scenario, scenario_to_dict, serialize_scenario
from wsnlife.trajectory import RandomWalk

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = sorted((ROOT / "scenarios").glob("*.yaml"))

MINIMAL = """
name: tiny
base: 2
nodes:
  - {id: 0, x: 0, y: 0, energy: 80}
  - {id: 1, x: 10, y: 0, energy: 80}
  - {id: 2, x: 20, y: 0}
trajectory: {type: stationary, x: 0, y: 0}
"""


def test_reconstruction_scenario_parses():
    sc = load_scenario(ROOT / "scenarios" / "six_node_walk.yaml")
    assert sc.topology.n_nodes == 6
    # initial energies R_i = 80 for all non-base nodes
    np.testing.assert_array_equal(sc.energies, np.full(5, 80.0))
    p = sc.params
    assert (p.c_s, p.c_f, p.c_r, p.beta) == (1e-4, 0.05, 0.05, 2.0)
    assert sc.sim.death_threshold_fraction == 0.1
    assert isinstance(sc.trajectory, RandomWalk)


def test_defaults():
    sc = parse_scenario(MINIMAL)
    assert sc.sim.delta == 1.0 and sc.sim.policy.policy == "p1"
    assert np.isinf(sc.topology.ranges).all()


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_round_trip(path):
    sc = load_scenario(path)
    text = serialize_scenario(sc)
    again = parse_scenario(text)
    assert scenario_to_dict(again) == scenario_to_dict(sc)
    assert serialize_scenario(again) == text


def test_missing_base():
    with pytest.raises(ValidationError) as info:
        parse_scenario(MINIMAL.replace("base: 2\n", ""))
    assert any("base" in e for e in info.value.errors)


def test_errors_are_collected():
    bad = MINIMAL.replace("energy: 80}", "energy: -1}").replace("x: 10", "x: .nan")
    with pytest.raises(ValidationError) as info:
        parse_scenario(bad)
    assert len(info.value.errors) >= 3


@pytest.mark.parametrize("patch", [
    ("base: 2", "base: 1"),
    ("{id: 1,", "{id: 3,"),
    ("type: stationary", "type: teleport"),
])
def test_validation_failures(patch):
    with pytest.raises(ValidationError):
        parse_scenario(MINIMAL.replace(*patch))


def test_bad_arc_rejected():
    with pytest.raises(ValidationError):
        parse_scenario(MINIMAL + "arcs: [[1, 0]]\n")


def test_yaml_syntax_error_has_line():
    with pytest.raises(ParseError) as info:
        parse_scenario("name: x\nnodes: [\n  {id: 0\n")
    assert info.value.line is not None
