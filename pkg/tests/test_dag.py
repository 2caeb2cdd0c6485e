import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diskembed import dag as D
from diskembed import synthetic
from diskembed.errors import ConfigError, CycleError, FormatError, ParseError, ValidationError


def floyd_warshall(n, edges):
    R = np.zeros((n, n), dtype=bool)
    for u, v in edges:
        R[u, v] = True
    for k in range(n):
        R |= np.outer(R[:, k], R[k, :])
    return {(int(u), int(v)) for u, v in zip(*np.nonzero(R))}


def reduction_by_definition(closure):
    """Closure pairs with no intermediate node."""
    nodes = {u for e in closure for u in e}
    return {(u, v) for u, v in closure if not any((u, w) in closure and (w, v) in closure for w in nodes)}


def reduction_by_subsets(n, edges):
    """Smallest edge subset with the same closure, found by exhaustive search."""
    target = floyd_warshall(n, edges)
    edges = sorted(edges)
    for size in range(len(edges) + 1):
        hits = [set(sub) for sub in itertools.combinations(edges, size) if floyd_warshall(n, sub) == target]
        if hits:
            assert len(hits) == 1, "transitive reduction of a DAG is unique"
            return hits[0]
    raise AssertionError("unreachable")


def small_dags(count, seed, max_nodes=12):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(2, max_nodes + 1))
        m = int(rng.integers(0, n * (n - 1) // 2 + 1))
        yield synthetic.random_dag(n, m, rng)


class TestPairSet:
    def test_basic_ops(self):
        a = D.PairSet.from_pairs(4, [(0, 1), (2, 3), (0, 1)])
        b = D.PairSet.from_pairs(4, [(2, 3), (3, 0)])
        assert len(a) == 2 and (0, 1) in a and (1, 0) not in a
        assert a.union(b) == {(0, 1), (2, 3), (3, 0)}
        assert a.difference(b) == {(0, 1)}
        assert not a.isdisjoint(b) and D.PairSet.from_pairs(4, [(2, 3)]).issubset(a)
        assert a.reversed() == {(1, 0), (3, 2)}
        np.testing.assert_array_equal(a.contains_many([(0, 1), (1, 1)]), [True, False])

    def test_empty(self):
        e = D.PairSet(3)
        assert len(e) == 0 and (0, 1) not in e
        assert not e.contains_codes([1, 2]).any()


class TestParse:
    def test_round_trip(self):
        g = D.parse_edge_list("# comment\n\na\tb\nb\tc\n")
        assert g.node_names == ("a", "b", "c")
        assert D.format_edge_list(g) == "a\tb\nb\tc\n"

    def test_bad_line_reports_number(self):
        with pytest.raises(ParseError, match="line 2"):
            D.parse_edge_list("a\tb\nc d\n")

    def test_self_loop(self):
        with pytest.raises(ValidationError, match="self-loop"):
            D.parse_edge_list("a\ta\n")

    def test_cycle_names_back_edge(self):
        with pytest.raises(CycleError, match="back edge"):
            D.parse_edge_list("a\tb\nb\tc\nc\ta\n")

    def test_duplicate_edges_collapse(self):
        assert len(D.parse_edge_list("a\tb\na\tb\n").edges) == 1


class TestClosureReduction:
    def test_against_oracles_on_100_random_dags(self):
        for g in small_dags(100, seed=7):
            edges = list(g.edges)
            closure = floyd_warshall(g.n_nodes, edges)
            assert D.transitive_closure(g) == closure
            assert D.transitive_reduction(g) == reduction_by_definition(closure)

    def test_reduction_is_minimal_subset(self):
        rng = np.random.default_rng(3)
        done = 0
        while done < 25:
            n = int(rng.integers(3, 8))
            g = synthetic.random_dag(n, int(rng.integers(1, 10)), rng)
            if len(g.edges) > 9:
                continue
            assert D.transitive_reduction(g) == reduction_by_subsets(g.n_nodes, list(g.edges))
            done += 1

    def test_tree_counts(self):
        g = synthetic.balanced_tree(2, 7)
        assert g.n_nodes == 255
        # each node at depth k has k ancestors
        assert len(D.transitive_closure(g)) == sum(k * 2 ** k for k in range(8))
        assert len(D.transitive_reduction(g)) == 254

    def test_chain(self):
        g = synthetic.chain(4)
        assert len(D.transitive_closure(g)) == 6
        assert D.transitive_reduction(g) == set(g.edges)

    def test_reduction_of_closure_is_reduction(self):
        for g in small_dags(30, seed=11):
            cg = D.Dag(g.node_names, D.transitive_closure(g))
            assert D.transitive_reduction(cg) == D.transitive_reduction(g)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10), st.integers(0, 45), st.integers(0, 2**32 - 1))
def test_reverse_is_involution(n, m, seed):
    g = synthetic.random_dag(n, m, np.random.default_rng(seed))
    r = D.reverse(g)
    assert D.reverse(r) == g
    assert D.transitive_closure(r) == D.transitive_closure(g).reversed()


class TestSplit:
    def test_invariants_over_100_seeds(self):
        g = synthetic.balanced_tree(2, 4)
        closure, reduction = D.transitive_closure(g), D.transitive_reduction(g)
        n = g.n_nodes
        m_nonbasic = len(closure) - len(reduction)
        for seed in range(100):
            ds = D.split_dataset(g, 0.3, 5, 7, neg_ratio=3, seed=seed)
            train = D.PairSet.from_pairs(n, ds.train_pos)
            valid = D.PairSet.from_pairs(n, ds.valid_pos)
            test = D.PairSet.from_pairs(n, ds.test_pos)
            assert reduction.issubset(train) and train.issubset(closure)
            assert len(train) == len(reduction) + int(0.3 * m_nonbasic)
            assert valid.isdisjoint(train) and test.isdisjoint(train) and valid.isdisjoint(test)
            assert valid.issubset(closure) and test.issubset(closure)
            assert (len(valid), len(test)) == (5, 7)
            negs = np.concatenate([ds.valid_neg, ds.test_neg])
            assert len(negs) == 36
            assert len(D.PairSet.from_pairs(n, negs)) == 36
            assert not closure.contains_many(negs).any()
            assert np.all(negs[:, 0] != negs[:, 1])

    def test_deterministic(self):
        g = synthetic.balanced_tree(2, 4)
        a = D.split_dataset(g, 0.5, 5, 5, seed=9)
        b = D.split_dataset(g, 0.5, 5, 5, seed=9)
        for key in ("train_pos", "valid_pos", "test_pos", "valid_neg", "test_neg"):
            np.testing.assert_array_equal(getattr(a, key), getattr(b, key))

    def test_zero_percent_keeps_only_reduction(self):
        ds = D.split_dataset(synthetic.chain(3), 0.0, 0, 1, neg_ratio=1)
        assert D.PairSet.from_pairs(3, ds.train_pos) == {(0, 1), (1, 2)}

    def test_insufficient_pairs(self):
        with pytest.raises(ConfigError, match="insufficient non-basic pairs"):
            D.split_dataset(synthetic.chain(3), 0.0, 1, 1)

    def test_bad_percent(self):
        with pytest.raises(ConfigError):
            D.split_dataset(synthetic.chain(3), 1.5, 0, 0)

    def test_sparse_negative_sampler(self):
        closure = D.PairSet.from_pairs(3000, [(i, i + 1) for i in range(2999)])
        codes = D._sample_non_closure(closure, 3000, 500, np.random.default_rng(0))
        assert len(np.unique(codes)) == 500
        assert not closure.contains_codes(codes).any()
        assert np.all(codes // 3000 != codes % 3000)

    def test_manifest_round_trip(self, tmp_path):
        ds = D.split_dataset(synthetic.balanced_tree(2, 3), 0.5, 3, 3, seed=1)
        D.write_split_manifest(ds, tmp_path / "m")
        meta = json.loads((tmp_path / "m" / "split.json").read_text())
        assert meta["format_version"] == 1 and meta["counts"]["nodes"] == 15
        back = D.read_split_manifest(tmp_path / "m")
        assert back.node_names == ds.node_names
        assert back.closure == ds.closure and back.reduction == ds.reduction
        for key in ("train_pos", "valid_pos", "test_pos", "valid_neg", "test_neg"):
            assert D.PairSet.from_pairs(15, getattr(back, key)) == D.PairSet.from_pairs(15, getattr(ds, key))

    def test_manifest_rejects_other_versions(self, tmp_path):
        ds = D.split_dataset(synthetic.chain(3), 0.0, 0, 1, neg_ratio=1)
        D.write_split_manifest(ds, tmp_path / "m")
        meta = tmp_path / "m" / "split.json"
        meta.write_text(meta.read_text().replace('"format_version": 1', '"format_version": 9'))
        with pytest.raises(FormatError, match="format_version"):
            D.read_split_manifest(tmp_path / "m")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FormatError):
            D.read_split_manifest(tmp_path)


def test_layered_dag_shape():
    g = synthetic.layered_dag(4, 30, 0.1, np.random.default_rng(0))
    assert g.n_nodes == 120
    arr = g.edges.to_array()
    layer = lambda k: k // 30
    assert np.all(layer(arr[:, 1]) == layer(arr[:, 0]) + 1)
    has_parent = set(arr[:, 0].tolist())
    assert has_parent == set(range(90))
