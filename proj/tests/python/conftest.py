import itertools
import json
import os
import pathlib

import numpy as np
import pytest

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def cli():
    path = os.environ.get("GNNCERT_CLI")
    if not path or not os.path.exists(path):
        pytest.skip("GNNCERT_CLI not set")
    return path


def reference_logits(model, features, adjacency):
    """Dense numpy forward pass; adjacency[u, v] = 1 means u feeds v."""
    x = np.asarray(features, dtype=float)
    a = np.asarray(adjacency, dtype=float)
    for layer in model["layers"]:
        ws = np.asarray(layer["w_self"], dtype=float)
        wn = np.asarray(layer.get("w_neigh", np.zeros_like(ws)), dtype=float)
        x = x @ ws + a.T @ x @ wn + np.asarray(layer["bias"], dtype=float)
        if layer["activation"] == "relu":
            x = np.maximum(x, 0.0)
    if model.get("pooling", "none") == "add":
        x = x.sum(axis=0, keepdims=True)
        for layer in model.get("dense", []):
            x = x @ np.asarray(layer["w_self"], dtype=float) + np.asarray(layer["bias"], dtype=float)
            if layer["activation"] == "relu":
                x = np.maximum(x, 0.0)
    return x


def reference_margin(model, graph, adjacency):
    logits = reference_logits(model, graph["features"], adjacency)
    row = 0 if graph["target"] == "graph" else graph["target"]["node"]
    return logits[row, graph["label_true"]] - logits[row, graph["label_attack"]]


def dense_adjacency(graph):
    n = graph["n"]
    a = np.zeros((n, n))
    for u, v in graph["edges"]:
        a[u, v] = 1
        if not graph["directed"]:
            a[v, u] = 1
    return a


def admissible_set(graph, spec):
    """Every admissible adjacency, straight from the set definitions."""
    base = dense_adjacency(graph)
    n = graph["n"]
    p1 = spec["mode"] == "p1"
    if p1:
        units = [(u, v) for u in range(n) for v in range(u + 1, n)]
    else:
        units = [(u, v) for u in range(n) for v in range(n) if base[u, v]]
    q = spec["global_budget"]
    out = []
    for k in range(0, min(q, len(units)) + 1):
        for flips in itertools.combinations(units, k):
            a = base.copy()
            for u, v in flips:
                a[u, v] = 1 - a[u, v]
                if p1:
                    a[v, u] = 1 - a[v, u]
            changed = a != base
            if any(changed[:, v].sum() > spec["local_budgets"][v] for v in range(n)):
                continue
            out.append(a)
    return out


def random_instance(rng, n_max=5):
    n = int(rng.integers(2, n_max + 1))
    d0 = int(rng.integers(1, 4))
    width = int(rng.integers(1, 4))
    classes = int(rng.integers(2, 4))
    node_task = bool(rng.integers(0, 2))
    p1 = bool(rng.integers(0, 2))

    def layer(i, o, act):
        return {
            "w_self": rng.normal(size=(i, o)).round(3).tolist(),
            "w_neigh": rng.normal(size=(i, o)).round(3).tolist(),
            "bias": rng.normal(size=o).round(3).tolist(),
            "activation": act,
        }

    layers = [layer(d0, width, "relu"), layer(width, classes, "identity")]
    model = {"layers": layers, "pooling": "none" if node_task else "add", "dense": []}
    directed = (not p1) and bool(rng.integers(0, 2))
    edges = []
    for u in range(n):
        for v in range(n):
            if u == v or (not directed and v < u):
                continue
            if rng.random() < 0.4:
                edges.append([u, v])
    graph = {
        "n": n,
        "directed": directed,
        "features": rng.uniform(-1, 1, size=(n, d0)).round(3).tolist(),
        "edges": edges,
        "target": {"node": int(rng.integers(0, n))} if node_task else "graph",
        "label_true": 0,
        "label_attack": 1,
    }
    logits = reference_logits(model, graph["features"], dense_adjacency(graph))
    row = 0 if not node_task else graph["target"]["node"]
    graph["label_true"] = int(np.argmax(logits[row]))
    graph["label_attack"] = (graph["label_true"] + 1) % classes
    spec = {
        "mode": "p1" if p1 else "p2",
        "global_budget": int(rng.integers(0, 3)),
        "local_budgets": rng.integers(0, 3, size=n).tolist(),
    }
    return model, graph, spec


def load_instance(gnncert, model, graph, spec):
    g = gnncert.Graph.from_json(json.dumps(graph))
    return gnncert.Model.from_json(json.dumps(model)), g, gnncert.Spec.from_json(json.dumps(spec), g)
