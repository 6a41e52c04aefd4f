"""ROC analysis and k-fold cross-validation of the link classifier."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import seeding
from .dataset import as_arrays, featurize_many
from .mlp import MlpConfig, predict_proba, train_mlp


class MetricError(ValueError):
    pass


def _check(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if len(scores) != len(labels):
        raise MetricError("scores and labels differ in length")
    pos = labels == 1
    if not pos.any() or pos.all():
        raise MetricError("AUROC needs both positive and negative labels")
    return scores, pos


def auroc(scores, labels):
    """Probability that a random positive outscores a random negative, ties counted 1/2.

    Mann-Whitney U from midranks; doubled ranks keep the statistic integral.
    """
    scores, pos = _check(scores, labels)
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    twice_ranks = (2 * rankdata(scores, method="average")).astype(np.int64)
    twice_u = int(twice_ranks[pos].sum()) - n_pos * (n_pos + 1)
    return twice_u / (2 * n_pos * n_neg)


@dataclass
class RocResult:
    auroc: float
    fpr: np.ndarray
    tpr: np.ndarray

    @property
    def curve(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def trapezoid_area(self):
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2))


def roc_curve(scores, labels):
    """ROC points from sweeping a threshold down through the distinct scores.

    Tied scores enter as one diagonal step, so the trapezoidal area equals
    :func:`auroc`.
    """
    scores, pos = _check(scores, labels)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = pos[order]
    tp = np.cumsum(p)
    fp = np.cumsum(~p)
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.r_[0, tp[last]]
    fp = np.r_[0, fp[last]]
    n_pos, n_neg = tp[-1], fp[-1]
    # area from integer counts avoids rounding drift against the rank statistic
    twice_area = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    return RocResult(twice_area / (2 * n_pos * n_neg), fp / n_neg, tp / n_pos)


def write_roc(result, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        for x, y in result.curve:
            w.writerow([repr(x), repr(y)])


@dataclass
class CvReport:
    fold_auroc: list
    rocs: list = field(default_factory=list, repr=False)

    @property
    def mean(self):
        return float(np.mean(self.fold_auroc))

    @property
    def std(self):
        return float(np.std(self.fold_auroc, ddof=1)) if len(self.fold_auroc) > 1 else 0.0

    def write(self, path):
        """CSV ``fold,auroc`` with ``mean`` and ``std`` summary rows."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["fold", "auroc"])
            for f, a in enumerate(self.fold_auroc):
                w.writerow([f, repr(float(a))])
            w.writerow(["mean", repr(self.mean)])
            w.writerow(["std", repr(self.std)])


def cross_validate(dataset, table, mlp_config=None):
    """Train a fresh MLP per held-out fold and score that fold's examples."""
    mlp_config = mlp_config or MlpConfig()
    drugs, diseases, labels, folds = as_arrays(dataset)
    folds_present = np.unique(folds)
    if len(folds_present) < 2 or folds_present.min() < 0:
        raise MetricError("dataset needs at least two assigned folds")
    x = featurize_many(table, drugs, diseases)
    report = CvReport([])
    for f in folds_present:
        held = folds == f
        if len(np.unique(labels[held])) < 2 or len(np.unique(labels[~held])) < 2:
            raise MetricError(f"fold {f} lacks one of the classes")
        cfg = MlpConfig(**{**mlp_config.__dict__, "seed": seeding.int_seed(mlp_config.seed, "cv", int(f))})
        model = train_mlp(x[~held], labels[~held], cfg)
        scores = predict_proba(model, x[held])
        roc = roc_curve(scores, labels[held])
        report.fold_auroc.append(roc.auroc)
        report.rocs.append(roc)
    return report
