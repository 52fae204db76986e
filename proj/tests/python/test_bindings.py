import json

import numpy as np
import pytest

import gnncert
from conftest import admissible_set, load_instance, random_instance, reference_logits, reference_margin


def fixture(data_dir, model="shift_model.json", graph="shift_graph.json", spec="path_spec.json"):
    g = gnncert.Graph.load(str(data_dir / graph))
    return gnncert.Model.load(str(data_dir / model)), g, gnncert.Spec.load(str(data_dir / spec), g)


def test_fixture_properties(data_dir):
    m, g, s = fixture(data_dir)
    assert m.input_dim == 1 and m.num_classes == 2 and m.num_layers == 1
    assert g.num_nodes == 3 and g.target == 0 and not g.directed
    assert g.adjacency.tolist() == [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
    assert s.mode == "p1" and s.global_budget == 1 and s.local_budgets == [1, 1, 1]


def test_margin_and_forward(data_dir):
    m, g, _ = fixture(data_dir)
    assert gnncert.margin(m, g) == pytest.approx(2.5)
    a = g.adjacency.copy()
    a[0, 2] = a[2, 0] = 1
    assert gnncert.margin(m, g, a) == pytest.approx(-0.5)
    logits = m.forward(g.features, a)
    assert logits.shape == (3, 2)
    assert logits[0, 0] == pytest.approx(-0.5)


def test_verify_fixture(data_dir):
    m, g, s = fixture(data_dir)
    report = gnncert.verify(m, g, s, attack_restarts=0, deterministic=True)
    assert report["status"] == "nonrobust"
    assert report["witness_edges"] == [[0, 2]]
    assert report["time_seconds"] == 0
    m, g, s = fixture(data_dir, spec="frozen_spec.json")
    report = gnncert.verify(m, g, s, strategy="basic")
    assert report["status"] == "robust"
    assert report["certified_bound"] == pytest.approx(2.5)


def test_bounds_fixture(data_dir):
    m, g, s = fixture(data_dir, model="path_model.json", graph="path_graph.json")
    table = gnncert.bounds(m, g, s, strategy="sbt")
    first = table["records"][0]
    assert (first["layer"], first["node"], first["feature"]) == (1, 0, 0)
    assert first["pre"] == [-1, 2]
    assert gnncert.bounds(m, g, s, strategy="basic")["records"][0]["pre"] == [-1, 4]


def test_export_matches_golden(data_dir):
    m, g, s = fixture(data_dir)
    assert gnncert.export_lp(m, g, s, strategy="sbt") == (data_dir / "shift_p1_sbt.lp").read_text()
    merged = gnncert.export_lp(m, g, s, merge_pairs=True)
    assert "sym_" not in merged


def test_brute_force_attack_admissible(data_dir):
    m, g, s = fixture(data_dir)
    value, argmin, count = gnncert.brute_force(m, g, s)
    assert value == pytest.approx(-0.5) and count == 4
    assert gnncert.is_admissible(g, s, argmin)
    hit = gnncert.attack(m, g, s, restarts=2, seed=3)
    assert hit is not None and gnncert.margin(m, g, hit) < 0
    far = g.adjacency.copy()
    far[0, 2] = far[2, 0] = 1
    far[0, 1] = far[1, 0] = 0
    assert not gnncert.is_admissible(g, s, far)


def test_sgm():
    assert gnncert.sgm([10, 40]) == pytest.approx(np.sqrt(1000) - 10, abs=1e-9)
    assert gnncert.sgm([4.0], shift=3) == pytest.approx(4.0)
    with pytest.raises(gnncert.GnncertError):
        gnncert.sgm([])


def test_errors_are_value_errors():
    assert issubclass(gnncert.GnncertError, ValueError)
    with pytest.raises(gnncert.GnncertError, match="ParseError"):
        gnncert.Model.from_json("{")
    with pytest.raises(gnncert.GnncertError, match="IoError"):
        gnncert.Model.load("/nonexistent.json")


def test_json_round_trip(data_dir):
    m, g, s = fixture(data_dir)
    m2 = gnncert.Model.from_json(m.to_json())
    g2 = gnncert.Graph.from_json(g.to_json())
    assert m2.to_json() == m.to_json() and g2.to_json() == g.to_json()
    assert json.loads(s.to_json())["local_budgets"] == [1, 1, 1]


@pytest.mark.parametrize("seed", range(40))
def test_random_instances_against_numpy(seed):
    rng = np.random.default_rng(seed)
    model_j, graph_j, spec_j = random_instance(rng)
    m, g, s = load_instance(gnncert, model_j, graph_j, spec_j)
    points = admissible_set(graph_j, spec_j)
    for a in points[:20]:
        np.testing.assert_allclose(m.forward(g.features, a), reference_logits(model_j, graph_j["features"], a),
                                   atol=1e-9)
        assert gnncert.is_admissible(g, s, a)
    exact = min(reference_margin(model_j, graph_j, a) for a in points)
    value, _, count = gnncert.brute_force(m, g, s)
    assert count == len(points)
    assert value == pytest.approx(exact, abs=1e-9)
    if abs(exact) < 1e-9:
        return
    for strategy in ("basic", "sbt", "abt"):
        report = gnncert.verify(m, g, s, strategy=strategy, attack_restarts=seed % 3)
        assert report["status"] == ("robust" if exact > 0 else "nonrobust")
        if exact > 0:
            assert 0 <= report["certified_bound"] <= exact + 1e-7
        else:
            assert report["witness_margin"] < 0
