"""Combining tuned members: voting four ways, then stacking.

Members carry their own view (feature transform) and model. Weighted
modes weight each member by its internal cross-validated accuracy;
stacking trains a softmax meta-learner on strictly out-of-fold member
probabilities so the meta features never leak training rows.
"""

import numpy as np

from stresslab.ensemble import (MemberPipeline, fit_stacking, fit_voting,
                                member_cv_accuracies, predict_stacking,
                                predict_voting)
from stresslab.metrics import accuracy
from stresslab.svm import KernelSvm
from stresslab.synthdata import make_blobs
from stresslab.tree_ensembles import (AdaBoost, Bagging, GradientBoosting,
                                      RandomForest, RegularizedBoosting)

# single draw, every 3rd row held out for the test comparison
X, y = make_blobs(450, 6, 3, spread=2.0, seed=8)
test = np.arange(0, 450, 3)
train = np.setdiff1d(np.arange(450), test)
Xtr, ytr, Xte, yte = X[train], y[train], X[test], y[test]

# a factory takes (params, seed) so folds can refit members reproducibly
members = [
    MemberPipeline(name="random_forest",
                   model_factory=lambda p, s: RandomForest(
                       n_estimators=30, max_depth=8, seed=s), seed=0),
    MemberPipeline(name="bagging",
                   model_factory=lambda p, s: Bagging(
                       n_estimators=30, max_depth=8, seed=s), seed=1),
    MemberPipeline(name="adaboost",
                   model_factory=lambda p, s: AdaBoost(
                       n_estimators=20, max_depth=2, seed=s), seed=2),
    MemberPipeline(name="gradient_boosting",
                   model_factory=lambda p, s: GradientBoosting(
                       n_estimators=20, seed=s), seed=3),
    MemberPipeline(name="regularized_boosting",
                   model_factory=lambda p, s: RegularizedBoosting(
                       n_estimators=20, seed=s), seed=4),
    MemberPipeline(name="svm",
                   model_factory=lambda p, s: KernelSvm(
                       C=10.0, kernel="rbf", seed=s), seed=5),
]

# the weights weighted voting will use
cv_accs = member_cv_accuracies(members, Xtr, ytr, folds=5, seed=42)
print("member CV accuracies (these become the voting weights):")
for m, a in zip(members, cv_accs):
    print(f"  {m.name:22s} {a:.4f}")

print()
for mode in ("hard", "soft", "weighted_hard", "weighted_soft"):
    ens = fit_voting(members, Xtr, ytr, mode=mode, folds=5, seed=42,
                     cv_accuracies=cv_accs)
    labels, _ = predict_voting(ens, Xte)
    print(f"{mode:15s} voting test accuracy {accuracy(yte, labels):.4f}")

# stacking: out-of-fold member probabilities become the meta matrix
stack = fit_stacking(members, Xtr, ytr, folds=5, seed=42)
labels, proba = predict_stacking(stack, Xte)
print(f"{'stacking':15s}        test accuracy {accuracy(yte, labels):.4f}")
print(f"\nmeta-learner input width: {stack.meta.W.shape[1]} "
      f"(6 members x 3 class probabilities)")
print("stacked probabilities for two rows:")
print(np.round(proba[:2], 4))
