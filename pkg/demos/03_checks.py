"""
Checking the numerics
=====================

AUROC against pair counting, and backprop against finite differences.
"""

import numpy as np
from relgraph.metrics import auroc, roc_curve
from relgraph.mlp import init_mlp, mlp_gradient_check

rng = np.random.default_rng(0)
scores = rng.integers(0, 5, 40) / 4.0  # many ties
labels = rng.integers(0, 2, 40)

# brute force: every positive against every negative, ties count one half
pos, neg = scores[labels == 1], scores[labels == 0]
pairs = ((pos[:, None] > neg[None, :]) + 0.5 * (pos[:, None] == neg[None, :])).mean()
print("rank AUROC %.6f, pair count %.6f" % (auroc(scores, labels), pairs))

roc = roc_curve(scores, labels)
print("trapezoid area %.6f from %d curve points" % (roc.trapezoid_area(), len(roc.fpr)))

# the classifier's gradients against central differences
model = init_mlp(6, 4, seed=3)
print("max relative gradient error: %.2e" % mlp_gradient_check(model, rng.normal(size=6), 1))
