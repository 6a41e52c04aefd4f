"""Supervised drug-disease link data: positives, complement negatives, folds."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import seeding
from .graph import NodeKind, RelationKind


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LinkExample:
    drug: int
    disease: int
    label: int
    fold: int = -1


def positive_pairs(graph):
    """Known drug-disease indications as an ``(E, 2)`` array of (drug, disease) ids."""
    return graph.edges[RelationKind.DRUG_DISEASE].copy()


def candidate_drugs(graph):
    """Drugs with at least one indication or target edge."""
    drugs = graph.nodes_of_kind(NodeKind.DRUG)
    deg = np.zeros(graph.num_nodes, dtype=np.int64)
    for rel in (RelationKind.DRUG_DISEASE, RelationKind.DRUG_PROTEIN):
        deg += np.diff(graph._adj[rel][0])
    return drugs[deg[drugs] > 0]


def sample_negatives(graph, count, seed):
    """``count`` distinct (drug, disease) non-indications, uniform without replacement.

    The universe is every drug with an indication or target edge crossed with
    every disease, minus the known indications.
    """
    drugs = candidate_drugs(graph)
    diseases = graph.nodes_of_kind(NodeKind.DISEASE)
    pos = positive_pairs(graph)
    taken = np.zeros((len(drugs), len(diseases)), dtype=bool)
    if len(pos):
        drug_pos = np.searchsorted(drugs, pos[:, 0])
        dis_pos = np.searchsorted(diseases, pos[:, 1])
        taken[drug_pos, dis_pos] = True
    free = np.flatnonzero(~taken.ravel())
    if count < 1:
        raise DatasetError("negative count must be >= 1")
    if count > len(free):
        raise DatasetError(f"requested {count} negatives but the complement has only {len(free)} pairs")
    rng = seeding.rng(seed, "negatives")
    pick = rng.choice(free, size=count, replace=False)
    return np.stack([drugs[pick // len(diseases)], diseases[pick % len(diseases)]], axis=1)


def make_folds(positives, negatives, k_folds, seed):
    """Shuffle each class and split it into ``k_folds`` nearly equal parts.

    Fold ``f`` holds part ``f`` of both classes, so every fold keeps the global
    class ratio to within one example.
    """
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 2)
    negatives = np.asarray(negatives, dtype=np.int64).reshape(-1, 2)
    if k_folds < 2:
        raise DatasetError("k_folds must be >= 2")
    if len(positives) < k_folds or len(negatives) < k_folds:
        raise DatasetError(
            f"need at least {k_folds} examples per class, got {len(positives)} positive "
            f"and {len(negatives)} negative")
    rng = seeding.rng(seed, "folds")
    examples = []
    for label, pairs in ((1, positives), (0, negatives)):
        order = rng.permutation(len(pairs))
        for fold, part in enumerate(np.array_split(order, k_folds)):
            examples.extend(LinkExample(int(pairs[i, 0]), int(pairs[i, 1]), label, fold) for i in part)
    return examples


def as_arrays(examples):
    """``(drugs, diseases, labels, folds)`` integer arrays."""
    arr = np.array([(e.drug, e.disease, e.label, e.fold) for e in examples], dtype=np.int64).reshape(-1, 4)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


def _check_kind(table, node, kind):
    if not 0 <= node < table.num_nodes:
        raise DatasetError(f"node id {node} outside the embedding table")
    if table.kinds is not None and table.kinds[node] != kind:
        raise DatasetError(f"node {node} is a {NodeKind(int(table.kinds[node])).name.lower()}, "
                           f"expected {kind.name.lower()}")


def featurize(table, drug, disease):
    """``[r[drug] | r[disease]]``, drug first."""
    _check_kind(table, drug, NodeKind.DRUG)
    _check_kind(table, disease, NodeKind.DISEASE)
    return np.concatenate([table.r[drug], table.r[disease]]).astype(np.float64)


def featurize_many(table, drugs, diseases):
    drugs = np.asarray(drugs, dtype=np.int64)
    diseases = np.asarray(diseases, dtype=np.int64)
    if table.kinds is not None:
        bad = np.flatnonzero(table.kinds[drugs] != NodeKind.DRUG)
        if len(bad):
            _check_kind(table, int(drugs[bad[0]]), NodeKind.DRUG)
        bad = np.flatnonzero(table.kinds[diseases] != NodeKind.DISEASE)
        if len(bad):
            _check_kind(table, int(diseases[bad[0]]), NodeKind.DISEASE)
    return np.hstack([table.r[drugs], table.r[diseases]]).astype(np.float64)


def write_dataset(examples, path, names=None):
    """CSV ``drug_id,disease_id,label,fold``; ids are external names when given."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["drug_id", "disease_id", "label", "fold"])
        for e in examples:
            a, b = (names[e.drug], names[e.disease]) if names is not None else (e.drug, e.disease)
            w.writerow([a, b, e.label, e.fold])


def read_dataset(path, lookup=None):
    """Inverse of :func:`write_dataset`; ``lookup`` maps external names to ids."""
    examples = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["drug_id", "disease_id", "label", "fold"]:
            raise DatasetError(f"{path}: unexpected header {reader.fieldnames}")
        for lineno, row in enumerate(reader, 2):
            try:
                if lookup is None:
                    drug, disease = int(row["drug_id"]), int(row["disease_id"])
                else:
                    drug, disease = lookup(row["drug_id"]), lookup(row["disease_id"])
                examples.append(LinkExample(drug, disease, int(row["label"]), int(row["fold"])))
            except (TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from None
    return examples
