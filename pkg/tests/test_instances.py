import json

import pytest

from bdmst_anneal.instances import (
    CATALOG_GRAPHS,
    Graph,
    ProblemInstance,
    WEIGHT_LISTS,
    catalog_graph,
    count_spanning_trees,
    default_root,
    delta2_labels,
    enumerate_spanning_trees,
    kruskal_mst,
    load_catalog,
    make_instance,
    solve_bdmst_exact,
    validate_tree,
)


def test_catalog_has_22_graphs():
    graphs = load_catalog()
    assert len(graphs) == 22
    assert all(g.n == 5 for g in graphs)


def test_catalog_m4ver1_edges():
    g = catalog_graph("m4ver1")
    assert g.edges == ((1, 2), (2, 3), (3, 4), (4, 5))


def test_weight_list_w2():
    assert WEIGHT_LISTS["w2"] == (1, 2, 1, 2, 1, 2, 1, 2, 1, 2)


def test_pairing_takes_first_m_weights():
    inst = make_instance("m5ver1", "w2", 2)
    assert inst.weights == (1, 2, 1, 2, 1)
    assert inst.weight_map()[(1, 5)] == 1


def test_pairing_rejects_short_weight_lists():
    # w24 has 4 entries, m5ver1 needs 5
    with pytest.raises(ValueError):
        make_instance("m5ver1", "w24", 2)


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(n=3, edges=((1, 1),))
    with pytest.raises(ValueError):
        Graph(n=3, edges=((1, 2), (1, 2), (2, 3)))
    with pytest.raises(ValueError):
        Graph(n=4, edges=((1, 2), (3, 4)))  # disconnected


def test_default_root_prefers_high_degree_then_small_id():
    assert default_root(catalog_graph("m5ver2")) == 2  # degree 3
    assert default_root(catalog_graph("m4ver1")) == 2  # tie 2,3,4 at degree 2
    assert default_root(catalog_graph("m10ver1")) == 1  # complete graph tie


def test_enumerate_path_graph_single_tree():
    trees = list(enumerate_spanning_trees(catalog_graph("m4ver1")))
    assert len(trees) == 1
    assert sorted(trees[0]) == [(1, 2), (2, 3), (3, 4), (4, 5)]


def test_enumerate_cycle_has_five_trees():
    assert len(list(enumerate_spanning_trees(catalog_graph("m5ver1")))) == 5


def test_enumerate_k5_cayley_count():
    trees = list(enumerate_spanning_trees(catalog_graph("m10ver1")))
    assert len(trees) == 5**3
    assert len(set(tuple(sorted(t)) for t in trees)) == 5**3


@pytest.mark.parametrize("label", sorted(CATALOG_GRAPHS))
def test_enumeration_matches_matrix_tree_count(label):
    g = catalog_graph(label)
    assert sum(1 for _ in enumerate_spanning_trees(g)) == count_spanning_trees(g)


def test_bdmst_cycle_drops_heavy_edge():
    res = solve_bdmst_exact(make_instance("m5ver1", "w2", 2))
    assert res.feasible and res.cost == 5
    # tie between dropping either weight-2 edge; lexicographic edge list wins
    assert res.tree.edges == ((1, 2), (1, 5), (2, 3), (3, 4))


def test_bdmst_path_graph_unique_tree():
    res = solve_bdmst_exact(make_instance("m4ver1", "w2", 2))
    assert res.cost == 1 + 2 + 1 + 2


def test_bdmst_star_infeasible_at_delta_2():
    star = Graph(n=5, edges=((1, 2), (1, 3), (1, 4), (1, 5)))
    inst = ProblemInstance(graph=star, weights=(1, 1, 1, 1), degree_bound=2, root=1)
    assert not solve_bdmst_exact(inst).feasible


def test_bdmst_matches_brute_force_over_trees():
    inst = make_instance("m6ver2", "w13", 2)
    res = solve_bdmst_exact(inst)
    wmap = inst.weight_map()
    costs = []
    for t in enumerate_spanning_trees(inst.graph):
        deg = {}
        for (u, v) in t:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        if max(deg.values()) <= 2:
            costs.append(sum(wmap[e] for e in t))
    assert res.cost == min(costs)


def test_kruskal_tree_input_returns_itself():
    g = catalog_graph("m4ver1")
    t = kruskal_mst(g, (1, 2, 1, 2))
    assert t.edges == g.edges and t.cost == 6


def test_kruskal_matches_enumeration_minimum():
    inst = make_instance("m10ver1", "w12", 2)
    t = kruskal_mst(inst.graph, inst.weights)
    wmap = inst.weight_map()
    best = min(sum(wmap[e] for e in tr) for tr in enumerate_spanning_trees(inst.graph))
    assert t.cost == best


@pytest.mark.parametrize("label", delta2_labels())
def test_bdmst_at_least_mst(label):
    inst = make_instance(label, "w2", 2)
    res = solve_bdmst_exact(inst)
    assert res.feasible
    assert res.cost >= kruskal_mst(inst.graph, inst.weights).cost
    assert validate_tree(inst.graph, res.tree.edges, 2)


def test_validate_tree_verdicts():
    g = catalog_graph("m4ver1")
    assert validate_tree(g, g.edges, 2).valid
    c5 = catalog_graph("m5ver1")
    assert validate_tree(c5, c5.edges, 2).reason == "cyclic"
    star_edges = [(1, 2), (1, 3), (1, 4), (1, 5)]
    v = validate_tree(catalog_graph("m5ver5"), star_edges, 3)
    assert v.reason == "degree-violation"
    assert validate_tree(g, [(1, 3)], 2).reason == "not-subgraph"
    assert validate_tree(g, [(1, 2), (2, 3)], 2).reason == "disconnected"


def test_instance_json_round_trip():
    inst = make_instance("m6ver3", "w9", 3)
    again = ProblemInstance.from_json(json.loads(json.dumps(inst.to_json())))
    assert again.graph.edges == inst.graph.edges
    assert again.weights == inst.weights
    assert again.degree_bound == inst.degree_bound
    assert again.root == inst.root
    assert again.label == inst.label


def test_delta2_labels_excludes_star_variant():
    labels = delta2_labels()
    assert "m5ver5" not in labels and len(labels) == 21
