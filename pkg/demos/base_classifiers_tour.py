"""The six classifiers, fit directly.

Everything below is implemented from scratch on numpy: CART trees under
both forests, the two boosters, SAMME, and an SMO-trained kernel SVM with
Platt-calibrated probabilities. Same estimator protocol everywhere:
fit(X, y), predict(X), predict_proba(X).
"""

import numpy as np

from stresslab.metrics import evaluate
from stresslab.svm import KernelSvm
from stresslab.synthdata import make_blobs
from stresslab.tree_ensembles import (AdaBoost, Bagging, GradientBoosting,
                                      RandomForest, RegularizedBoosting,
                                      fit_gradient_boosting,
                                      multinomial_log_loss, softmax)

# one draw, then a held-out third (every 3rd row) so train and test
# come from the same class geometry
X, y = make_blobs(360, 5, 3, spread=1.5, seed=3)
test = np.arange(0, 360, 3)
train = np.setdiff1d(np.arange(360), test)
Xtr, ytr, Xte, yte = X[train], y[train], X[test], y[test]

models = {
    "random_forest": RandomForest(n_estimators=40, max_depth=8, seed=0),
    "bagging": Bagging(n_estimators=40, max_depth=8, seed=0),
    "adaboost": AdaBoost(n_estimators=25, max_depth=2, seed=0),
    "gradient_boosting": GradientBoosting(n_estimators=30, seed=0),
    "regularized_boosting": RegularizedBoosting(n_estimators=30, lam=1.0,
                                                seed=0),
    "svm_rbf": KernelSvm(C=10.0, kernel="rbf", gamma="scale", seed=0),
}

print(f"{'model':22s} {'accuracy':>8s} {'macro F1':>9s}")
for name, model in models.items():
    model.fit(Xtr, ytr)
    rep = evaluate(yte, model.predict(Xte), n_classes=3)
    print(f"{name:22s} {rep.accuracy:8.4f} {rep.macro_f1:9.4f}")

# probabilities are real distributions: non-negative, rows sum to 1
P = models["svm_rbf"].predict_proba(Xte[:3])
print("\nSVM probabilities for three test rows:")
print(np.round(P, 4))
print("row sums:", P.sum(axis=1))

# boosting is a staged fit; replaying the rounds shows the training
# loss dropping monotonically from the log-prior starting point
gbm = fit_gradient_boosting(Xtr, ytr, n_rounds=15, learning_rate=0.1)
raw = np.tile(gbm.init_raw, (Xtr.shape[0], 1))
losses = [multinomial_log_loss(ytr, softmax(raw))]
for trees in gbm.rounds:
    for c, tree in enumerate(trees):
        raw[:, c] += tree.predict(Xtr)
    losses.append(multinomial_log_loss(ytr, softmax(raw)))
print("\ngradient boosting training log-loss by round:")
print(np.round(losses, 4).tolist())
