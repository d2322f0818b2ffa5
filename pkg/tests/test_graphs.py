import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete
from hampow.errors import GraphFormatError, GraphValidationError
from hampow.graphs import (
    Config,
    MultipartiteGraph,
    degree_profile,
    gen_extremal,
    gen_random,
    induced_subgraph,
    load_graph,
    reduce_parts,
    save_graph,
)


class TestLoadSave:
    def test_k22_document(self):
        doc = {"k": 2, "parts": [[0, 1], [2, 3]], "edges": [[0, 2], [0, 3], [1, 2], [1, 3]]}
        g = load_graph(json.dumps(doc))
        assert g.k == 2 and g.n == 4
        assert degree_profile(g).delta_p == 1

    def test_edge_inside_part_rejected(self):
        doc = {"k": 2, "parts": [[0, 1], [2, 3]], "edges": [[0, 1]]}
        with pytest.raises(GraphValidationError, match="inside part"):
            load_graph(json.dumps(doc))

    def test_overlapping_parts_rejected(self):
        doc = {"k": 2, "parts": [[0, 1], [1, 2]], "edges": []}
        with pytest.raises(GraphValidationError):
            load_graph(json.dumps(doc))

    def test_dangling_vertex_rejected(self):
        doc = {"k": 2, "parts": [[0], [1]], "edges": [[0, 5]]}
        with pytest.raises(GraphValidationError, match="dangling"):
            load_graph(json.dumps(doc))

    def test_malformed_json(self):
        with pytest.raises(GraphFormatError):
            load_graph("{not json")

    def test_unknown_format_tag(self):
        with pytest.raises(GraphFormatError):
            load_graph("{}", fmt="dimacs")

    def test_round_trip_identity(self):
        g = gen_random(3, [3, 2, 2], Fraction(1, 2), 42)
        assert load_graph(save_graph(g)) == g
        assert save_graph(load_graph(save_graph(g))) == save_graph(g)


class TestDegreeProfile:
    def test_complete_three_partite(self):
        assert degree_profile(complete(3, [2, 2, 2])).delta_p == 1

    def test_k22_minus_edge(self):
        g = MultipartiteGraph.from_edges([[0, 1], [2, 3]], [[0, 2], [0, 3], [1, 2]])
        assert degree_profile(g).delta_p == Fraction(1, 2)

    def test_single_edge_deletion_is_local(self):
        g = complete(4, [2, 2, 2, 2])
        before = degree_profile(g).delta_ij
        edges = [e for e in g.edges() if e != (0, 2)]
        g2 = MultipartiteGraph.from_edges([list(p) for p in g.parts], edges)
        after = degree_profile(g2).delta_ij
        touched = {g.part_of(0), g.part_of(2)}
        for i in range(4):
            for j in range(4):
                if i != j and i not in touched and j not in touched:
                    assert before[i][j] == after[i][j]

    def test_empty_part_rejected(self):
        g = MultipartiteGraph((tuple(), (0, 1)), (frozenset(), frozenset()))
        with pytest.raises(GraphValidationError, match="empty"):
            degree_profile(g)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 4))
    def test_monotone_under_edge_addition(self, seed, k):
        g = gen_random(k, [3] * k, Fraction(1, 2), seed)
        missing = [
            (u, v)
            for u in range(g.n)
            for v in range(u + 1, g.n)
            if g.part_of(u) != g.part_of(v) and v not in g.adj[u]
        ]
        if not missing:
            return
        before = degree_profile(g)
        g2 = MultipartiteGraph.from_edges(
            [list(p) for p in g.parts], g.edges() + [list(missing[seed % len(missing)])]
        )
        after = degree_profile(g2)
        assert after.delta_p >= before.delta_p
        for i in range(k):
            for j in range(k):
                if i != j:
                    assert after.delta_ij[i][j] >= before.delta_ij[i][j]


class TestGenerators:
    def test_delta_one_is_complete(self):
        g = gen_random(3, [2, 3, 2], 1, 9)
        assert len(g.edges()) == 2 * 3 + 2 * 2 + 3 * 2

    def test_delta_zero_is_empty(self):
        g = gen_random(3, [2, 2, 2], 0, 9)
        assert g.edges() == []
        assert degree_profile(g).delta_p == 0

    def test_same_seed_same_graph(self):
        a = gen_random(3, [4, 4, 4], Fraction(3, 4), 7)
        b = gen_random(3, [4, 4, 4], Fraction(3, 4), 7)
        assert a == b
        c = gen_random(3, [4, 4, 4], Fraction(3, 4), 8)
        assert a != c

    def test_size_mismatch(self):
        with pytest.raises(GraphValidationError):
            gen_random(2, [2, 2, 2], 1, 0)

    def test_extremal_666(self):
        g = gen_extremal(3, (6, 6, 6), 3)
        assert degree_profile(g).delta_p == Fraction(1, 2)
        planted = {v for part in g.parts for v in part[: len(part) // 3 + 1]}
        assert len(planted) == 9 > 18 // 3
        for u in planted:
            assert not g.adj[u] & planted

    def test_extremal_44(self):
        g = gen_extremal(2, (4, 4), 2)
        planted = {v for part in g.parts for v in part[: len(part) // 2 + 1]}
        assert len(planted) == 6 > 8 // 2

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), st.integers(3, 7))
    def test_extremal_independent_set_beats_bound(self, r, size):
        k = r
        g = gen_extremal(k, [size] * k, r)
        planted = {v for part in g.parts for v in part[: len(part) // r + 1]}
        assert len(planted) > g.n // r
        for u in planted:
            assert not g.adj[u] & planted


class TestReduceParts:
    def test_merge_example(self):
        g = complete(4, [5, 5, 3, 2])
        res = reduce_parts(g, 3)
        assert sorted(len(p) for p in res.graph.parts) == [5, 5, 5]
        assert res.graph.k == 3

    def test_balanced_input_unchanged(self):
        g = complete(3, [4, 4, 4])
        res = reduce_parts(g, 3)
        assert [len(p) for p in res.graph.parts] == [4, 4, 4]
        assert sorted(res.graph.edges()) == sorted(g.edges())

    def test_output_is_subgraph(self):
        g = gen_random(5, [4, 4, 4, 2, 1], Fraction(4, 5), 3)
        res = reduce_parts(g, 3)
        assert set(map(tuple, res.graph.edges())) <= set(map(tuple, g.edges()))
        assert res.graph.n == g.n

    def test_k_bounds_and_mapping(self):
        for seed in range(6):
            g = gen_random(6, [3, 3, 3, 3, 2, 1], Fraction(1, 2), seed)
            res = reduce_parts(g, 3)
            assert 3 <= res.graph.k <= 5
            for v in range(g.n):
                assert v in res.graph.parts[res.part_map[v]]

    def test_split_path_dissolves_tiny_part(self):
        # two smallest parts exceed n/r together, so the tiny part must be
        # dissolved across the others instead of merged
        g = complete(4, [25, 24, 24, 2])
        res = reduce_parts(g, 3)
        assert sorted(len(p) for p in res.graph.parts) == [25, 25, 25]
        assert set(map(tuple, res.graph.edges())) <= set(map(tuple, g.edges()))
        for v in range(g.n):
            assert v in res.graph.parts[res.part_map[v]]

    def test_merge_never_decreases_delta(self):
        # merge-only reduction (no tiny parts): measured profile cannot drop
        g = gen_random(4, [4, 4, 2, 2], Fraction(9, 10), 5)
        before = degree_profile(g).delta_p
        res = reduce_parts(g, 3, tiny=Fraction(0))
        assert degree_profile(res.graph).delta_p >= before

    def test_precondition_part_too_big(self):
        g = complete(2, [5, 2])
        with pytest.raises(GraphValidationError):
            reduce_parts(g, 2)


def test_induced_subgraph_relabels():
    g = complete(3, [3, 3, 3])
    sub, old_ids = induced_subgraph(g, [g.parts[0][:2], g.parts[2][:2]])
    assert sub.n == 4 and sub.k == 2
    for new, old in enumerate(old_ids):
        assert {old_ids[u] for u in sub.adj[new]} <= g.adj[old]


class TestConfig:
    def test_defaults_satisfy_chain(self):
        for r in range(2, 7):
            cfg = Config.default(r)
            assert 0 < cfg.beta < cfg.sigma < cfg.gamma <= Fraction(1, r)

    def test_invalid_chain_rejected(self):
        with pytest.raises(GraphValidationError):
            Config(
                r=3,
                gamma=Fraction(1, 10),
                sigma=Fraction(1, 5),
                beta=Fraction(1, 20),
                nu=Fraction(1, 10),
                alpha=Fraction(1, 10),
            )

    def test_floor_is_at_least_one(self):
        cfg = Config.default(3)
        assert cfg.floor_m(10) == 1
        assert cfg.floor_m(10_000) >= cfg.beta * 10_000

    def test_rng_streams_are_deterministic(self):
        cfg = Config.default(3, seed=5)
        assert cfg.rng("x").random() == cfg.rng("x").random()
        assert cfg.rng("x").random() != cfg.rng("y").random()
