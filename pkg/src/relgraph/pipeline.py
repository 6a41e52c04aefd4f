"""End-to-end helpers shared by the CLI, the demos and the acceptance tests."""
from __future__ import annotations

from dataclasses import asdict

from . import seeding
from .contexts import SamplerConfig, sample_contexts
from .dataset import make_folds, positive_pairs, sample_negatives
from .metrics import cross_validate
from .skipgram import TrainerConfig, init_embeddings, train

# best settings per method from the reference comparison; dim, epochs, lr and negatives are shared
METHOD_DEFAULTS = {
    "nbne": {"window": 6, "n": 30, "k": 5},
    "deepwalk": {"window": 12, "num_walks": 7, "walk_length": 25},
    "node2vec": {"window": 5, "num_walks": 57, "walk_length": 73, "p": 1.0, "q": 1.0},
}

REFERENCE_NEGATIVE_RATIO = 30196 / 2836


def embedding_configs(method, seed, **overrides):
    """``(SamplerConfig, TrainerConfig)`` for ``method`` with defaults filled in.

    ``None`` values in ``overrides`` are ignored.
    """
    params = dict(METHOD_DEFAULTS[method])
    params.update({k: v for k, v in overrides.items() if v is not None})
    sampler_keys = {"k", "n", "num_walks", "walk_length", "p", "q"}
    sampler = SamplerConfig(method=method, seed=seeding.int_seed(seed, "sampler"),
                            **{k: v for k, v in params.items() if k in sampler_keys})
    trainer = TrainerConfig(seed=seeding.int_seed(seed, "trainer"),
                            **{k: v for k, v in params.items() if k not in sampler_keys})
    return sampler, trainer


def embed_graph(graph, method="nbne", seed=42, **overrides):
    """Sample contexts for ``method`` and train an embedding table for ``graph``."""
    sampler, trainer = embedding_configs(method, seed, **overrides)
    corpus = sample_contexts(graph, sampler)
    table = init_embeddings(graph.num_nodes, trainer.dim, seeding.int_seed(seed, "init"))
    table = train(corpus, trainer, table)
    return table.with_graph(graph), {"sampler": asdict(sampler), "trainer": asdict(trainer)}


def default_negative_count(graph, num_positives):
    """Negatives at the reference class ratio (30,196 : 2,836), capped by the complement size."""
    from .dataset import candidate_drugs
    from .graph import NodeKind
    complement = len(candidate_drugs(graph)) * len(graph.nodes_of_kind(NodeKind.DISEASE)) - num_positives
    return int(min(complement, round(num_positives * REFERENCE_NEGATIVE_RATIO)))


def build_dataset(graph, negatives=None, folds=5, seed=42):
    pos = positive_pairs(graph)
    if negatives is None:
        negatives = default_negative_count(graph, len(pos))
    neg = sample_negatives(graph, negatives, seeding.int_seed(seed, "negatives"))
    return make_folds(pos, neg, folds, seeding.int_seed(seed, "folds"))


def evaluate(graph, method="nbne", seed=42, mlp_config=None, negatives=None, folds=5, **overrides):
    table, _ = embed_graph(graph, method, seed, **overrides)
    dataset = build_dataset(graph, negatives, folds, seed)
    return cross_validate(dataset, table, mlp_config)
