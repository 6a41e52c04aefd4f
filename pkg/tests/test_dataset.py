import numpy as np
import pytest

from relgraph.dataset import (
    DatasetError,
    LinkExample,
    as_arrays,
    featurize,
    featurize_many,
    make_folds,
    positive_pairs,
    read_dataset,
    sample_negatives,
    write_dataset,
)
from relgraph.graph import Graph, NodeKind, RelationKind
from relgraph.skipgram import EmbeddingTable

DD = RelationKind.DRUG_DISEASE


def full_scale_graph(seed=0):
    """600 drugs x 508 diseases with 2,836 indications."""
    rng = np.random.default_rng(seed)
    codes = rng.choice(600 * 508, 2836, replace=False)
    nodes = [(f"d{i}", NodeKind.DRUG, "") for i in range(600)] + [(f"x{j}", NodeKind.DISEASE, "") for j in range(508)]
    return Graph.from_edges({DD: [(f"d{c // 508}", f"x{c % 508}") for c in codes]}, nodes)


class TestNegatives:
    def test_empty_complement(self):
        g = Graph.from_edges({DD: [("d", "x")]})
        with pytest.raises(DatasetError, match="complement"):
            sample_negatives(g, 1, seed=0)

    def test_forced_exhaustive(self):
        g = Graph.from_edges({DD: [("d1", "x1"), ("d2", "x2")]})
        # drop one edge from the pool of four pairs by using a graph with one positive
        g = Graph.from_edges({DD: [("d1", "x1")]}, [("d2", NodeKind.DRUG, ""), ("x2", NodeKind.DISEASE, "")])
        # d2 has no edges, so the candidate drugs are only d1
        with pytest.raises(DatasetError):
            sample_negatives(g, 2, seed=0)
        g = Graph.from_edges({DD: [("d1", "x1"), ("d2", "x1")]}, [("x2", NodeKind.DISEASE, "")])
        neg = sample_negatives(g, 2, seed=0)
        names = {(g.names[a], g.names[b]) for a, b in neg}
        assert names == {("d1", "x2"), ("d2", "x2")}

    def test_two_by_two_one_positive(self):
        nodes = [("d2", NodeKind.DRUG, ""), ("x2", NodeKind.DISEASE, "")]
        g = Graph.from_edges({DD: [("d1", "x1")], RelationKind.DRUG_PROTEIN: [("d2", "p")]}, nodes)
        neg = sample_negatives(g, 3, seed=4)
        names = sorted((g.names[a], g.names[b]) for a, b in neg)
        assert names == [("d1", "x2"), ("d2", "x1"), ("d2", "x2")]

    def test_full_scale_request(self):
        g = full_scale_graph()
        neg = sample_negatives(g, 30196, seed=1)
        assert len({tuple(p) for p in neg.tolist()}) == 30196
        pos = {tuple(p) for p in positive_pairs(g).tolist()}
        assert not pos & {tuple(p) for p in neg.tolist()}

    def test_reproducible_and_uniform_overlap(self):
        g = full_scale_graph()
        a = sample_negatives(g, 30196, seed=1)
        assert np.array_equal(a, sample_negatives(g, 30196, seed=1))
        b = sample_negatives(g, 30196, seed=2)
        m = 600 * 508 - 2836
        k = 30196
        # overlap of two independent k-subsets of m items is hypergeometric
        mean = k * k / m
        sd = np.sqrt(k * (k / m) * (1 - k / m) * (m - k) / (m - 1))
        overlap = len({tuple(p) for p in a.tolist()} & {tuple(p) for p in b.tolist()})
        assert overlap < mean + 3 * sd

    def test_count_validation(self):
        g = full_scale_graph()
        with pytest.raises(DatasetError):
            sample_negatives(g, 0, seed=0)


class TestFolds:
    def test_full_scale_fold_sizes(self):
        pos = np.arange(2836 * 2).reshape(-1, 2)
        neg = np.arange(100 * 2).reshape(-1, 2) + 10**6
        ex = make_folds(pos, neg, 5, seed=0)
        sizes = sorted((sum(1 for e in ex if e.fold == f and e.label == 1) for f in range(5)), reverse=True)
        assert sizes == [568, 567, 567, 567, 567]

    def test_ten_and_ten(self):
        pos = np.arange(20).reshape(-1, 2)
        neg = np.arange(20).reshape(-1, 2) + 100
        ex = make_folds(pos, neg, 5, seed=3)
        for f in range(5):
            assert sum(e.fold == f and e.label == 1 for e in ex) == 2
            assert sum(e.fold == f and e.label == 0 for e in ex) == 2

    def test_partition(self, rng):
        pos = rng.choice(10**6, (37, 2), replace=False)
        neg = rng.choice(10**6, (151, 2), replace=False) + 10**6
        ex = make_folds(pos, neg, 4, seed=2)
        assert len(ex) == 188
        assert {(e.drug, e.disease) for e in ex} == {tuple(p) for p in np.vstack([pos, neg]).tolist()}
        assert all(0 <= e.fold < 4 for e in ex)
        # class ratio per fold within one example of proportional
        for f in range(4):
            n_pos = sum(e.fold == f and e.label == 1 for e in ex)
            n_neg = sum(e.fold == f and e.label == 0 for e in ex)
            assert abs(n_pos - 37 / 4) <= 1 and abs(n_neg - 151 / 4) <= 1

    def test_too_few(self):
        with pytest.raises(DatasetError):
            make_folds(np.zeros((3, 2)), np.zeros((10, 2)), 5, seed=0)
        with pytest.raises(DatasetError):
            make_folds(np.zeros((3, 2)), np.zeros((10, 2)), 1, seed=0)


class TestFeaturize:
    def table(self):
        r = np.array([[1, 2], [3, 4], [5, 6]], dtype=np.float32)
        return EmbeddingTable(r, np.zeros_like(r), kinds=np.array([NodeKind.DRUG, NodeKind.DISEASE, NodeKind.PROTEIN]))

    def test_concatenation(self):
        assert featurize(self.table(), 0, 1).tolist() == [1, 2, 3, 4]

    def test_order_sensitive(self):
        t = self.table()
        t.kinds = None
        assert featurize(t, 0, 1).tolist() != featurize(t, 1, 0).tolist()

    def test_wrong_kind(self):
        with pytest.raises(DatasetError, match="protein"):
            featurize(self.table(), 0, 2)
        with pytest.raises(DatasetError):
            featurize_many(self.table(), [2], [1])

    def test_full_scale_matrix(self):
        g = full_scale_graph()
        ex = make_folds(positive_pairs(g), sample_negatives(g, 30196, seed=1), 5, seed=0)
        d = 4
        t = EmbeddingTable(np.ones((g.num_nodes, d), np.float32), np.zeros((g.num_nodes, d), np.float32),
                           kinds=g.kinds)
        drugs, diseases, _, _ = as_arrays(ex)
        assert featurize_many(t, drugs, diseases).shape == (33032, 2 * d)


def test_csv_round_trip(tmp_path):
    ex = [LinkExample(0, 2, 1, 0), LinkExample(1, 2, 0, 1)]
    names = ["a", "b", "x"]
    write_dataset(ex, tmp_path / "d.csv", names)
    assert (tmp_path / "d.csv").read_text().splitlines() == ["drug_id,disease_id,label,fold", "a,x,1,0", "b,x,0,1"]
    assert read_dataset(tmp_path / "d.csv", names.index) == ex
    write_dataset(ex, tmp_path / "i.csv")
    assert read_dataset(tmp_path / "i.csv") == ex
