import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from checks import onestep_violations, overhead_from_traces, run_onestep
from sleeplocal.clustering import (ColoredClustering, UniquelyLabeledClustering,
                                   build_virtual_graph, merge_direct,
                                   merge_two_level, pipeline, random_clustering, simulate_on_virtual,
                                   singleton_clustering, validate_colored, validate_uniquely_labeled)
from sleeplocal.clustering.model import ClusteringError, load_clustering
from sleeplocal.clustering.pipeline import PipelineParams
from sleeplocal.constants import LINIAL_A, MERGE_AWAKE_MAX
from sleeplocal.engine import STAY_AWAKE, NodeProgram, Terminate, run
from sleeplocal.graph import Graph, GraphFamily, generate
from sleeplocal.primitives.linial import LinialProgram

A, B, C, D = 1, 2, 3, 4
PATH4 = Graph.from_edges([A, B, C, D], [(A, B), (B, C), (C, D)])


# -- validators ---------------------------------------------------------------

def test_singletons_validate():
    g = generate(GraphFamily("gnp", {"n": 50, "p": 0.1}, 0))
    assert validate_uniquely_labeled(g, singleton_clustering(g)).ok


def test_path_cluster_ok_and_mismatch():
    g = Graph.from_edges([A, B, C], [(A, B), (B, C)])
    ok = UniquelyLabeledClustering({A: 1, B: 1, C: 1}, {A: 0, B: 1, C: 2})
    assert validate_uniquely_labeled(g, ok).ok
    bad = UniquelyLabeledClustering({A: 1, B: 1, C: 1}, {A: 0, B: 1, C: 3})
    report = validate_uniquely_labeled(g, bad)
    assert report.violations == [f"label 1: distance mismatch at {C}"]


def test_disconnected_label_rejected():
    c = UniquelyLabeledClustering({A: 1, B: 2, C: 1, D: 2}, {A: 0, B: 0, C: 1, D: 1})
    assert "not connected" in validate_uniquely_labeled(PATH4, c).violations[0]


def test_colored_validator():
    g = Graph.from_edges([A, B, C], [(A, B)])
    assert validate_colored(g, ColoredClustering({A: 2, B: 1, C: 1}, {A: 0, B: 0, C: 0})).ok
    grid = generate(GraphFamily("grid", {"n": 16}, 0))
    two = {v: 1 + (grid.bfs_distances(min(grid.nodes))[v] % 2) for v in grid.nodes}
    assert validate_colored(grid, ColoredClustering(two, {v: 0 for v in grid.nodes})).ok
    twin = ColoredClustering({A: 1, B: 1, C: 1}, {A: 0, B: 0, C: 0})
    assert "two roots" in validate_colored(g, twin).violations[0]


def test_missing_node_reported():
    report = validate_colored(PATH4, ColoredClustering({A: 1}, {A: 0}))
    assert not report.ok and "no (label, delta)" in report.violations[0]
    assert json.loads(report.to_json())["ok"] is False


def test_clustering_json_round_trip():
    g = generate(GraphFamily("gnp", {"n": 40, "p": 0.1}, 3))
    c = random_clustering(g, 6, random.Random(1))
    back = load_clustering(c.to_json())
    assert isinstance(back, UniquelyLabeledClustering)
    assert dict(back.label) == dict(c.label) and dict(back.delta) == dict(c.delta)
    col = ColoredClustering({v: 1 for v in g.nodes}, {v: 0 for v in g.nodes})
    assert isinstance(load_clustering(col.to_json()), ColoredClustering)


# -- virtual graph ------------------------------------------------------------

def test_singleton_contraction_is_identity():
    g = generate(GraphFamily("gnp", {"n": 40, "p": 0.1}, 2))
    vg = build_virtual_graph(g, singleton_clustering(g))
    assert vg.graph.edges() == g.edges()


def test_path_contracts_to_edge():
    c = UniquelyLabeledClustering({A: 1, B: 1, C: 3, D: 3}, {A: 0, B: 1, C: 0, D: 1})
    vg = build_virtual_graph(PATH4, c)
    assert vg.graph.edges() == [(1, 3)]
    assert vg.back_map == {1: {A, B}, 3: {C, D}} and vg.root_of == {1: A, 3: C}


def brute_contraction(g, label):
    labels = sorted(set(label.values()))
    return sorted((i, j) for i in labels for j in labels if i < j
                  and any(label[u] == i and label[v] == j or label[u] == j and label[v] == i
                          for u, v in g.edges()))


@pytest.mark.parametrize("seed", range(10))
def test_random_contraction_matches_brute_force(seed):
    rng = random.Random(seed)
    g = generate(GraphFamily("gnp", {"n": rng.randint(5, 100), "p": 0.08}, seed))
    c = random_clustering(g, rng.randint(1, 15), rng)
    assert validate_uniquely_labeled(g, c).ok
    assert build_virtual_graph(g, c).graph.edges() == brute_contraction(g, c.label)


def test_invalid_clustering_rejected():
    bad = UniquelyLabeledClustering({A: 1, B: 1, C: 1, D: 1}, {A: 0, B: 0, C: 1, D: 2})
    with pytest.raises(ClusteringError):
        build_virtual_graph(PATH4, bad)


def test_colored_contraction_splits_components():
    g = Graph.from_edges([A, B, C, D], [(A, B), (B, C), (C, D)])
    c = ColoredClustering({A: 5, B: 1, C: 2, D: 5}, {A: 0, B: 0, C: 0, D: 0})
    vg = build_virtual_graph(g, c)
    assert sorted(vg.graph.nodes) == [A, B, C, D]
    assert vg.cluster_of[D] == D


# -- simulation ---------------------------------------------------------------

class OwnLabel(NodeProgram):
    def init(self, ctx):
        return ctx.id, []

    def on_wake(self, st, rnd, inbox):
        return st, [], Terminate(st)

    def round_bound(self, n):
        return 1


class SwapLabels(NodeProgram):
    def init(self, ctx):
        return None, [(None, ctx.id)]

    def on_wake(self, st, rnd, inbox):
        if rnd == 1:
            return sorted(m for _, m in inbox), [], STAY_AWAKE
        return st, [], Terminate(st)

    def round_bound(self, n):
        return 2


def check_overhead(sim):
    assert sim.overhead_ok(7)
    assert overhead_from_traces(sim) == []


def test_simulate_own_label():
    g = generate(GraphFamily("gnp", {"n": 60, "p": 0.06}, 4))
    c = random_clustering(g, 8, random.Random(4))
    sim = simulate_on_virtual(g, c, OwnLabel(), trace=True)
    assert sim.outputs == dict(c.label)
    assert sim.result.metrics.awake_complexity <= 7
    check_overhead(sim)


def test_simulate_singletons_equals_direct():
    g = generate(GraphFamily("gnp", {"n": 50, "p": 0.08}, 6))
    prog = LinialProgram(g.max_degree, g.id_bound)
    sim = simulate_on_virtual(g, singleton_clustering(g), prog, trace=True)
    assert sim.outputs == run(g, prog).outputs == sim.direct.outputs
    check_overhead(sim)


def test_simulate_two_clusters_swap():
    c = UniquelyLabeledClustering({A: 1, B: 1, C: 3, D: 3}, {A: 0, B: 1, C: 0, D: 1})
    sim = simulate_on_virtual(PATH4, c, SwapLabels(), trace=True)
    assert sim.outputs == {A: [3], B: [3], C: [1], D: [1]}
    assert sim.result.metrics.awake_complexity <= 14
    check_overhead(sim)


@pytest.mark.parametrize("seed", range(6))
def test_simulate_linial_on_random_clusters(seed):
    rng = random.Random(seed)
    g = generate(GraphFamily("gnp", {"n": 80, "p": 0.05}, seed))
    c = random_clustering(g, 12, rng)
    vg = build_virtual_graph(g, c)
    prog = LinialProgram(max(vg.graph.max_degree, 1), vg.graph.id_bound)
    sim = simulate_on_virtual(g, c, prog, trace=True)
    assert all(sim.outputs[v] == sim.direct.outputs[c.label[v]] for v in g.nodes)
    check_overhead(sim)


def test_simulate_inputs_must_agree():
    c = UniquelyLabeledClustering({A: 1, B: 1, C: 3, D: 3}, {A: 0, B: 1, C: 0, D: 1})
    with pytest.raises(ClusteringError, match="inconsistent"):
        simulate_on_virtual(PATH4, c, OwnLabel(), node_inputs={A: 1, B: 2, C: 0, D: 0})
    sim = simulate_on_virtual(PATH4, c, OwnLabel(), node_inputs={A: 1, B: 1, C: 0, D: 0})
    assert sim.outputs[B] == 1


# -- merge --------------------------------------------------------------------

def test_identity_merge():
    g = generate(GraphFamily("gnp", {"n": 60, "p": 0.07}, 1))
    first = random_clustering(g, 10, random.Random(1))
    vg = build_virtual_graph(g, first)
    out, _ = merge_two_level(g, first, singleton_clustering(vg.graph))
    assert dict(out.label) == dict(first.label) and dict(out.delta) == dict(first.delta)


def test_path_merge():
    first = UniquelyLabeledClustering({A: A, B: A, C: C, D: C}, {A: 0, B: 1, C: 0, D: 1})
    second = UniquelyLabeledClustering({A: 9, C: 9}, {A: 0, C: 1})
    out, res = merge_two_level(PATH4, first, second)
    assert dict(out.label) == {A: 9, B: 9, C: 9, D: 9}
    assert [out.delta[v] for v in (A, B, C, D)] == [0, 1, 2, 3]
    assert res.metrics.awake_complexity <= MERGE_AWAKE_MAX


def merge_instance(seed, n):
    rng = random.Random(seed)
    g = generate(GraphFamily("gnp", {"n": n, "p": 3.0 / n}, seed))
    first = random_clustering(g, max(1, n // rng.randint(2, 8)), rng)
    vg = build_virtual_graph(g, first)
    second = random_clustering(vg.graph, max(1, vg.graph.n // rng.randint(1, 5)), rng)
    return g, first, vg, second


@pytest.mark.parametrize("seed", range(15))
def test_merge_matches_oracle(seed):
    g, first, vg, second = merge_instance(seed, 20 + 5 * seed)
    out, res = merge_two_level(g, first, second)
    expected = merge_direct(g, first, second)
    assert dict(out.label) == dict(expected.label) and dict(out.delta) == dict(expected.delta)
    assert validate_uniquely_labeled(g, out).ok
    assert res.metrics.awake_complexity <= MERGE_AWAKE_MAX
    # merged virtual graph is the virtual graph of the second clustering
    k = build_virtual_graph(vg.graph, second).graph
    assert build_virtual_graph(g, out).graph.edges() == k.edges()


def test_merge_rejects_invalid_second():
    first = UniquelyLabeledClustering({A: A, B: A, C: C, D: C}, {A: 0, B: 1, C: 0, D: 1})
    with pytest.raises(ClusteringError, match="second"):
        merge_two_level(PATH4, first, UniquelyLabeledClustering({A: 9, C: 9}, {A: 0, C: 0}))


# -- onestep ------------------------------------------------------------------

def test_onestep_star():
    g = generate(GraphFamily("star", {"n": 9}, 0))
    center = next(v for v in g.nodes if g.degree(v) == 8)
    prog, res = run_onestep(g, 3)
    assert onestep_violations(g, res.outputs, 3, prog.params.a) == []
    assert {o.gamma for o in res.outputs.values()} == {center + LINIAL_A * 9}
    assert {v: o.delta for v, o in res.outputs.items()} == {v: int(v != center) for v in g.nodes}


def test_onestep_two_nodes():
    g = Graph.from_edges([1, 2], [(1, 2)])
    prog, res = run_onestep(g, 3)
    assert onestep_violations(g, res.outputs, 3, prog.params.a) == []
    assert all(o.delta == 0 and 1 <= o.gamma <= LINIAL_A * 9 and not o.big for o in res.outputs.values())
    assert res.outputs[1].gamma != res.outputs[2].gamma


def test_onestep_single_node():
    g = Graph({1: []})
    prog, res = run_onestep(g, 2)
    assert res.outputs[1].delta == 0 and res.outputs[1].gamma <= LINIAL_A * 4


@pytest.mark.parametrize("use_ids", [False, True])
def test_onestep_gnp_500(use_ids):
    g = generate(GraphFamily("gnp", {"n": 500, "p": 0.02}, 0))
    prog, res = run_onestep(g, 4, use_ids)
    assert onestep_violations(g, res.outputs, 4, prog.params.a) == []
    assert len({o.label for o in res.outputs.values() if o.big}) <= 125
    assert res.metrics.max_round <= prog.round_bound(g.n)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["path", "star", "gnp", "tree", "cycle"]), st.integers(3, 80),
       st.sampled_from([2, 4, 8]), st.integers(0, 999), st.booleans(), st.integers(1, 2))
def test_onestep_property(kind, n, b, seed, use_ids, s):
    g = generate(GraphFamily(kind, {"n": n, "p": min(1.0, 4.0 / n)}, seed, id_exponent=s))
    prog, res = run_onestep(g, b, use_ids)
    assert onestep_violations(g, res.outputs, b, prog.params.a) == []


# -- pipeline -----------------------------------------------------------------

def test_pipeline_single_node():
    pr = pipeline(Graph({1: []}))
    assert dict(pr.clustering.color) == {1: 1} and dict(pr.clustering.delta) == {1: 0}


@pytest.mark.parametrize("n", [2, 3, 17, 64, 200])
def test_pipeline_path(n):
    g = generate(GraphFamily("path", {"n": n}, n))
    pr = pipeline(g)
    assert validate_colored(g, pr.clustering).ok
    assert set(pr.clustering.delta.values()) == {0}
    assert max(pr.clustering.color.values()) <= pr.params.small
    assert {o.phase for o in pr.outputs.values()} == {1}


def test_params_ceiling_policy():
    p = PipelineParams.for_n(1024)
    assert (p.k, p.b) == (7, 16)
    for n in [2, 5, 64, 1000, 4096, 10 ** 6]:
        p = PipelineParams.for_n(n)
        assert n < p.b ** p.k


def test_pipeline_regular_1024():
    g = generate(GraphFamily("regular", {"n": 1024, "d": 4}, 0))
    pr = pipeline(g)
    assert validate_colored(g, pr.clustering).ok
    assert pr.clustering.num_colors() <= 7 * LINIAL_A * 256
    assert pr.virtual_sizes[-1] == 0
    for prev, cur in zip(pr.virtual_sizes, pr.virtual_sizes[1:]):
        assert cur * 16 <= prev


@pytest.mark.parametrize("family", [
    GraphFamily("gnp", {"n": 300, "p": 0.04}, 3),
    GraphFamily("star", {"n": 100}, 0),
    GraphFamily("grid", {"n": 144}, 0),
    GraphFamily("gnp", {"n": 120, "p": 0.03}, 1, id_exponent=2),
    GraphFamily("gnp", {"n": 150, "p": 0.01}, 5),
])
@pytest.mark.parametrize("use_ids", [False, True])
def test_pipeline_validates(family, use_ids):
    g = generate(family)
    pr = pipeline(g, use_ids=use_ids)
    assert validate_colored(g, pr.clustering).ok
    assert max(pr.clustering.color.values()) <= pr.params.max_color
    assert pr.result.metrics.total_dropped >= 0
    for o in pr.outputs.values():
        assert (o.gamma - 1) // pr.params.small == o.phase - 1
