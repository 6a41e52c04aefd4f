"""Multi-relation graph embeddings for drug-disease link prediction."""
from .contexts import Corpus, SamplerConfig, deepwalk_walks, nbne_groups, node2vec_walks, sample_contexts
from .dataset import LinkExample, featurize, featurize_many, make_folds, sample_negatives
from .graph import Graph, GraphView, NodeKind, RelationKind, View, graph_stats, load_graph, neighbors
from .metrics import CvReport, RocResult, auroc, cross_validate, roc_curve
from .mlp import MlpConfig, MlpModel, mlp_gradient_check, predict_proba, train_mlp
from .skipgram import (
    EmbeddingTable,
    TrainerConfig,
    corpus_log_likelihood,
    group_log_likelihood,
    init_embeddings,
    load_embeddings,
    nearest,
    save_embeddings,
    sg_pair_gradient,
    softmax_prob,
    train,
)

__version__ = "0.1.0"
