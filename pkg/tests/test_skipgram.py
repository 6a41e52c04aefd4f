import math

import numpy as np
import pytest

from relgraph.contexts import Corpus, SamplerConfig, nbne_groups, sample_contexts
from relgraph.graph import View
from relgraph.skipgram import (
    EmbeddingError,
    EmbeddingTable,
    TrainerConfig,
    TrainingDiverged,
    corpus_log_likelihood,
    cosine_matrix,
    group_log_likelihood,
    init_embeddings,
    load_embeddings,
    nearest,
    save_embeddings,
    sg_pair_gradient,
    sg_pair_objective,
    softmax_prob,
    train,
)

from helpers import fd_pair_gradients, random_table, table64
from oracles import corpus_ll_ref, group_ll_ref, rel_err, softmax_ref


class TestInit:
    def test_bounds_and_zero_output(self):
        t = init_embeddings(1, 4, seed=3)
        assert t.r.shape == (1, 4)
        assert np.all(np.abs(t.r) <= 0.125)
        assert np.all(t.r_out == 0)

    def test_deterministic(self):
        assert init_embeddings(10, 8, 5).equals(init_embeddings(10, 8, 5))
        assert not init_embeddings(10, 8, 5).equals(init_embeddings(10, 8, 6))

    def test_mean_near_zero(self):
        t = init_embeddings(1000, 16, seed=9)
        # sd of U(-1/32, 1/32) is 1/(32*sqrt(3)); the mean of 16,000 draws has sd ~1.4e-4
        assert abs(t.r.mean()) < 0.005
        assert np.all(np.abs(t.r) <= 0.5 / 16)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            init_embeddings(0, 4, 1)


class TestSoftmax:
    def test_single_node(self):
        assert softmax_prob(table64([[0.3, -1.0]], [[2.0, 1.0]]), 0, 0) == 1.0

    def test_identical_output_rows(self):
        t = table64([[1.0, 2.0], [-3.0, 0.5]], [[0.7, 0.1], [0.7, 0.1]])
        assert softmax_prob(t, 0, 1) == pytest.approx(0.5, abs=1e-15)
        assert softmax_prob(t, 1, 1) == pytest.approx(0.5, abs=1e-15)

    def test_hand_set_three_nodes(self):
        r = [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]
        r_out = [[0.2, -0.1], [1.0, 0.3], [-0.4, 0.8]]
        # logits for center 2: 0.05, 0.65, 0.2
        z = [0.05, 0.65, 0.2]
        expected = math.exp(0.65) / sum(math.exp(v) for v in z)
        t = table64(r, r_out)
        assert softmax_prob(t, 1, 2) == pytest.approx(expected, abs=1e-12)
        assert softmax_prob(t, 1, 2) == pytest.approx(softmax_ref(r, r_out, 1, 2), abs=1e-12)

    def test_normalization(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 30))
            t = random_table(rng, n, int(rng.integers(1, 9)), scale=2.0)
            c = int(rng.integers(n))
            assert abs(sum(softmax_prob(t, v, c) for v in range(n)) - 1.0) < 1e-9

    def test_overflow_safe(self):
        t = table64([[100.0]], [[100.0]])
        t = table64([[100.0], [1.0]], [[100.0], [99.0]])
        p = softmax_prob(t, 0, 0)
        assert math.isfinite(p) and 0 < p <= 1

    def test_shift_invariance(self, rng):
        t = random_table(rng, 6, 3)
        shift = rng.normal(size=3)
        # adding the same vector to every output row adds one constant to all logits of a center
        shifted = table64(t.r, t.r_out + shift)
        for c in range(6):
            for v in range(6):
                assert softmax_prob(shifted, v, c) == pytest.approx(softmax_prob(t, v, c), rel=1e-10)

    def test_non_finite_rejected(self):
        with pytest.raises(EmbeddingError):
            softmax_prob(table64([[np.nan]], [[1.0]]), 0, 0)


class TestLogLikelihood:
    def test_zero_table_pair(self):
        t = table64(np.zeros((4, 3)), np.zeros((4, 3)))
        # two ordered pairs of log(1/4), divided by the group size 2
        assert group_log_likelihood(t, [0, 1]) == pytest.approx(math.log(1 / 4), abs=1e-15)
        assert group_log_likelihood(t, [1, 3]) == pytest.approx(group_ll_ref(t.r, t.r_out, [1, 3]), abs=1e-12)

    def test_uniform_table_group_invariance(self):
        t = table64(np.ones((6, 2)), np.ones((6, 2)))
        assert group_log_likelihood(t, [0, 1, 2]) == pytest.approx(group_log_likelihood(t, [3, 4, 5]), abs=1e-12)

    def test_rejects_bad_groups(self):
        t = table64(np.zeros((1, 2)), np.zeros((1, 2)))
        with pytest.raises(ValueError):
            group_log_likelihood(t, [0, 0])
        with pytest.raises(ValueError):
            group_log_likelihood(t, [0])

    def test_non_positive(self, rng):
        t = random_table(rng, 8, 3)
        assert group_log_likelihood(t, [1, 4, 6]) <= 0

    def test_matches_brute_force(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 13))
            t = random_table(rng, n, int(rng.integers(1, 6)))
            g = rng.choice(n, size=int(rng.integers(2, min(5, n) + 1)), replace=False).tolist()
            assert abs(group_log_likelihood(t, g) - group_ll_ref(t.r, t.r_out, g)) < 1e-10

    def test_corpus_mean_properties(self, rng):
        t = random_table(rng, 6, 3)
        g = [0, 2, 5]
        assert corpus_log_likelihood(t, [g]) == pytest.approx(group_log_likelihood(t, g), abs=1e-14)
        assert corpus_log_likelihood(t, [g, g]) == pytest.approx(corpus_log_likelihood(t, [g]), abs=1e-14)
        with pytest.raises(ValueError):
            corpus_log_likelihood(t, [])

    def test_toy_corpus_matches_oracle(self, rng):
        corpus = [[0, 1, 2], [3, 4], [5, 0, 3], [1, 4, 5, 2]]
        t = random_table(rng, 6, 4)
        assert abs(corpus_log_likelihood(t, corpus) - corpus_ll_ref(t.r, t.r_out, corpus)) < 1e-10


class TestPairGradient:
    def test_zero_center(self):
        t = table64(np.zeros((3, 2)), np.ones((3, 2)))
        _, g_out = sg_pair_gradient(t, 0, 1, [2])
        assert np.all(g_out[1] == 0)

    def test_hand_case(self):
        t = table64([[1.0], [0.0], [0.0]], [[0.0], [0.0], [0.0]])
        g_c, g_out = sg_pair_gradient(t, 0, 1, [2])
        assert g_out[1][0] == pytest.approx(0.5)
        assert g_out[2][0] == pytest.approx(-0.5)
        assert g_c[0] == pytest.approx(0.0)

    def test_matches_finite_differences(self, rng):
        worst = 0.0
        for _ in range(100):
            n, d = int(rng.integers(3, 10)), int(rng.integers(1, 7))
            t = random_table(rng, n, d, scale=0.8)
            center, target = rng.choice(n, 2, replace=False)
            pool = [v for v in range(n) if v != target]
            negs = rng.choice(pool, size=int(rng.integers(1, 4))).tolist()
            g_c, g_out = sg_pair_gradient(t, center, target, negs)
            n_c, n_out = fd_pair_gradients(t, center, target, negs)
            worst = max(worst, max(rel_err(a, b) for a, b in zip(g_c, n_c)))
            for row, g in g_out.items():
                worst = max(worst, max(rel_err(a, b) for a, b in zip(g, n_out[row])))
        assert worst < 1e-4

    def test_rejects_target_in_negatives(self):
        t = table64(np.zeros((3, 1)), np.zeros((3, 1)))
        with pytest.raises(ValueError):
            sg_pair_gradient(t, 0, 1, [1])
        with pytest.raises(ValueError):
            sg_pair_gradient(t, 0, 1, [])


class TestTrain:
    def test_zero_epochs_unchanged(self):
        t = init_embeddings(4, 4, 1)
        out = train([[0, 1]], TrainerConfig(dim=4, epochs=0, window=6), t)
        assert out.equals(t)

    def test_input_not_mutated(self):
        t = init_embeddings(4, 4, 1)
        before = t.copy()
        train([[0, 1, 2]], TrainerConfig(dim=4, epochs=2), t)
        assert t.equals(before)

    def test_repeated_group_improves_likelihood(self):
        corpus = [[0, 1, 2]] * 20
        t = init_embeddings(4, 4, 2)
        before = corpus_log_likelihood(t, corpus[:1])
        after = corpus_log_likelihood(train(corpus, TrainerConfig(dim=4, epochs=50, seed=3), t), corpus[:1])
        assert after - before >= 0.1

    def test_deterministic_bitwise(self, toy):
        corpus = nbne_groups(toy.view(View.FULL), 3, 10, seed=1)
        cfg = TrainerConfig(dim=8, epochs=3, seed=4)
        a = train(corpus, cfg, init_embeddings(toy.num_nodes, 8, 1))
        b = train(corpus, cfg, init_embeddings(toy.num_nodes, 8, 1))
        assert a.r.tobytes() == b.r.tobytes() and a.r_out.tobytes() == b.r_out.tobytes()

    def test_only_touched_rows_change(self):
        t = init_embeddings(10, 4, 1)
        out = train([[2, 5]], TrainerConfig(dim=4, epochs=3, seed=1), t)
        for i in set(range(10)) - {2, 5}:
            assert np.array_equal(out.r[i], t.r[i]) and np.array_equal(out.r_out[i], t.r_out[i])
        for i in (2, 5):
            assert not np.array_equal(out.r[i], t.r[i]) and not np.array_equal(out.r_out[i], t.r_out[i])

    def test_probe_likelihood_monitored(self, toy):
        corpus = sample_contexts(toy, SamplerConfig(k=5, n=30, seed=2))
        # every k-th group, so the probe spans all roots
        probe = Corpus.from_groups(list(corpus)[::len(corpus) // 40][:40])
        history = []
        train(corpus, TrainerConfig(dim=16, epochs=5, lr=0.025, seed=1), init_embeddings(toy.num_nodes, 16, 3),
              on_epoch=lambda e, tab: history.append(corpus_log_likelihood(tab, probe)))
        assert len(history) == 6
        assert history[-1] >= history[0]

    def test_divergence_aborts(self):
        t = EmbeddingTable(np.full((3, 2), 1e30, dtype=np.float32), np.full((3, 2), 1e30, dtype=np.float32))
        with pytest.raises(TrainingDiverged, match="epoch 0"):
            train([[0, 1]], TrainerConfig(dim=2, epochs=1), t)

    def test_rejects_bad_corpus(self):
        t = init_embeddings(3, 2, 1)
        with pytest.raises(ValueError):
            train([], TrainerConfig(dim=2), t)
        with pytest.raises(ValueError):
            train([[0, 7]], TrainerConfig(dim=2), t)

    def test_config_validation(self):
        for bad in (dict(dim=0), dict(lr=0.0), dict(negatives=0), dict(window=0), dict(mode="gpu")):
            with pytest.raises(ValueError):
                TrainerConfig(**bad)

    def test_two_communities(self, cliques):
        g, comm = cliques
        corpus = nbne_groups(g.view(View.MOA), 5, 30, seed=5)
        t = train(corpus, TrainerConfig(dim=8, epochs=5, seed=5), init_embeddings(g.num_nodes, 8, 5))
        cos = cosine_matrix(t)
        same = comm[:, None] == comm[None, :]
        off = ~np.eye(len(comm), dtype=bool)
        intra, inter = cos[same & off].mean(), cos[~same].mean()
        assert intra > inter
        hits = [comm[nearest(t, v, 1)[0][0]] == comm[v] for v in range(g.num_nodes)]
        assert np.mean(hits) >= 0.9

    def test_parallel_mode_runs(self, cliques):
        g, comm = cliques
        corpus = nbne_groups(g.view(View.MOA), 5, 30, seed=5)
        cfg = TrainerConfig(dim=8, epochs=5, seed=5, mode="parallel-lock-free", threads=2)
        t = train(corpus, cfg, init_embeddings(g.num_nodes, 8, 5))
        cos = cosine_matrix(t)
        same = comm[:, None] == comm[None, :]
        assert cos[same & ~np.eye(len(comm), dtype=bool)].mean() > cos[~same].mean()


class TestNearest:
    def test_duplicate_row_ranks_first(self):
        t = table64([[1.0, 2.0], [0.0, 1.0], [1.0, 2.0]], np.zeros((3, 2)))
        (top, score), = nearest(t, 0, 1)
        assert top == 2 and score == pytest.approx(1.0)

    def test_orthogonal_tie_break(self):
        t = table64(np.eye(4), np.zeros((4, 4)))
        res = nearest(t, 2, 3)
        assert [i for i, _ in res] == [0, 1, 3]
        assert all(s == 0 for _, s in res)

    def test_euclidean(self):
        t = table64([[0.0], [5.0], [1.0]], np.zeros((3, 1)))
        assert [i for i, _ in nearest(t, 0, 2, "euclidean")] == [2, 1]

    def test_zero_query_cosine(self):
        t = table64([[0.0, 0.0], [1.0, 0.0]], np.zeros((2, 2)))
        with pytest.raises(EmbeddingError):
            nearest(t, 0, 1)
        with pytest.raises(ValueError):
            nearest(t, 1, 0)


class TestFiles:
    def test_binary_round_trip_exact(self, tmp_path):
        t = init_embeddings(7, 5, 1)
        t.r_out[:] = t.r * 3
        save_embeddings(t, tmp_path / "e.bin")
        back = load_embeddings(tmp_path / "e.bin")
        assert back.r.tobytes() == t.r.tobytes() and back.r_out.tobytes() == t.r_out.tobytes()

    def test_text_round_trip(self, tmp_path, rng):
        t = EmbeddingTable(rng.normal(size=(5, 3)).astype(np.float32), np.zeros((5, 3), np.float32),
                           names=[f"n{i}" for i in range(5)])
        save_embeddings(t, tmp_path / "e.txt", "text")
        lines = (tmp_path / "e.txt").read_text().splitlines()
        assert lines[0] == "5 3" and lines[1].startswith("n0 ")
        back = load_embeddings(tmp_path / "e.txt")
        assert np.max(np.abs(back.r - t.r)) <= 1e-6
        assert back.names == t.names

    def test_text_truncated(self, tmp_path):
        (tmp_path / "e.txt").write_text("5 2\n" + "".join(f"n{i} 0.1 0.2\n" for i in range(4)))
        with pytest.raises(EmbeddingError, match="truncated"):
            load_embeddings(tmp_path / "e.txt")

    def test_text_dimension_mismatch(self, tmp_path):
        (tmp_path / "e.txt").write_text("2 2\nn0 0.1 0.2\nn1 0.3\n")
        with pytest.raises(EmbeddingError, match="dimension"):
            load_embeddings(tmp_path / "e.txt")

    def test_binary_truncated(self, tmp_path):
        save_embeddings(init_embeddings(3, 2, 1), tmp_path / "e.bin")
        data = (tmp_path / "e.bin").read_bytes()
        (tmp_path / "e.bin").write_bytes(data[:-4])
        with pytest.raises(EmbeddingError, match="truncated"):
            load_embeddings(tmp_path / "e.bin")
