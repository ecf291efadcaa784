import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factories import random_instance, random_duals, raw_pricing
from kepcg.errors import ParseError, ValidationError
from kepcg.graph import (
    SOURCE,
    build_pricing_graph,
    compute_extended_sets,
    compute_hop_distances,
    debug_dump,
    is_valid_path,
    load_pricing,
    path_cost,
    prepare,
    prepare_pricing_graph,
    preprocess,
    pricing_from_dict,
    pricing_to_dict,
    reprice,
    save_pricing,
)
from kepcg.instance import g1_fixture
from oracles import all_paths, csgraph_hops


def g1_zero():
    g1 = g1_fixture()
    return build_pricing_graph(g1, {v: 0.0 for v in g1.vertices})


def test_costs_from_duals():
    g1 = g1_fixture()
    duals = {1: 0.5, 2: 0.0, 3: 1.0, 4: 0.0, 5: 0.25, 6: 0.0, 7: 0.0}
    g = build_pricing_graph(g1, duals)
    assert g.source_arcs == {1: 0.5, 2: 0.0}
    assert g.cost(1, 3) == pytest.approx(-1 + 1.0)
    assert g.cost(3, 5) == pytest.approx(-1 + 0.25)
    # path cost is minus the chain's reduced cost
    assert path_cost(g, (1, 3, 5)) == pytest.approx(-(2 - 0.5 - 1.0 - 0.25))


def test_missing_dual():
    with pytest.raises(ValidationError):
        build_pricing_graph(g1_fixture(), {1: 0.0})


def test_g1_distances():
    d = compute_hop_distances(g1_zero())
    assert d.from_source(3) == 2
    assert d.from_source(7) == 4
    assert d.from_source(6) == 5
    assert d.from_source(4) == 6
    assert d(5, 6) == 2
    assert d(4, 1) == d.inf


def test_g1_preprocess_removes_far_vertices():
    g = preprocess(g1_zero())
    assert g.vertices == (1, 2, 3, 5, 7)
    assert g.removed_vertices == {4, 6}
    assert (4, 6) in g.removed_arcs and (6, 4) in g.removed_arcs
    # 7 sits at depth 4 = L, so its out-arc can never be used
    assert (7, 6) in g.removed_arcs
    g3 = preprocess(prepare(build_pricing_graph(g1_fixture(l=3), {v: 0.0 for v in range(1, 8)})))
    assert 7 not in g3.vertices


def test_g1_extended_sets():
    g = prepare(g1_zero())
    assert g.gamma_pred[7] == {1, 2, 3, 5, 7}
    assert 6 not in g.gamma[3]


def test_reprice_keeps_topology():
    inst = random_instance(3, 10, 2, 0.3, l=4)
    g0 = prepare_pricing_graph(inst, random_duals(inst, 0))
    d = random_duals(inst, 1)
    g1 = reprice(g0, inst, d)
    fresh = prepare_pricing_graph(inst, d)
    assert g1.vertices == fresh.vertices
    assert g1.arcs == fresh.arcs and g1.source_arcs == fresh.source_arcs
    assert g1.gamma == fresh.gamma


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 12), st.integers(1, 6), st.floats(0.05, 0.5))
def test_distances_match_csgraph(seed, n, L, density):
    g = raw_pricing(seed, n, L, density)
    d = compute_hop_distances(g)
    ref = csgraph_hops(g)
    for (a, b), h in ref.items():
        if h == float("inf"):
            assert d(a, b) == d.inf
        else:
            assert d(a, b) == h


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 11), st.integers(1, 6))
def test_extended_sets_cover_every_path(seed, n, L):
    g = prepare(raw_pricing(seed, n, L))
    for path, _ in all_paths(g):
        assert is_valid_path(g, path)
        for a in range(len(path)):
            for b in range(a + 1, len(path)):
                assert path[a] in g.gamma_pred[path[b]]
                assert path[b] in g.gamma[path[a]] and path[a] in g.gamma[path[b]]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 11), st.integers(1, 6))
def test_extended_sets_formula(seed, n, L):
    g = prepare(raw_pricing(seed, n, L))
    hops = csgraph_hops(g)
    gamma, pred = compute_extended_sets(g)
    for i in g.vertices:
        expected = {j for j in g.vertices if j != i and hops[(SOURCE, j)] + hops[(j, i)] <= L}
        assert pred[i] - {i} == expected


def test_roundtrip(tmp_path):
    inst = random_instance(5, 9, 2, 0.35, l=4)
    g = build_pricing_graph(inst, random_duals(inst, 5))
    p = tmp_path / "p.json"
    save_pricing(g, p)
    data = json.loads(p.read_text())
    assert set(data) >= {"format", "l", "source_arcs", "arcs"}
    back = load_pricing(p)
    assert back.vertices == g.vertices and back.arcs == g.arcs
    assert back.source_arcs == g.source_arcs and back.L == g.L and back.alpha == g.alpha


def test_minimal_file_without_vertices_or_duals():
    g = pricing_from_dict({"format": 1, "l": 2, "source_arcs": [{"to": 0, "c": 0.0}],
                           "arcs": [{"from": 0, "to": 1, "c": -1.0}]})
    assert g.vertices == (0, 1) and g.alpha == {}


@pytest.mark.parametrize("data, field", [
    ({"format": 1, "source_arcs": [], "arcs": []}, "l"),
    ({"format": 1, "l": 2, "source_arcs": [{"to": 0}], "arcs": []}, "source_arcs[0].c"),
    ({"format": 1, "l": 2, "source_arcs": [], "arcs": [{"from": 0, "to": "a", "c": 1}]}, "arcs[0].to"),
])
def test_pricing_parse_errors(data, field):
    with pytest.raises(ParseError) as exc:
        pricing_from_dict(data)
    assert exc.value.field == field


def test_debug_dump_serializable():
    json.dumps(debug_dump(prepare(g1_zero())))
