"""Feature selection, stage by stage.

Walks one planted dataset through the three selection mechanisms and PCA,
printing what each one keeps and why.
"""

import warnings

import numpy as np

from stresslab.decomp import apply_pca, fit_pca
from stresslab.featsel import (anova_f_scores, eliminate_to, rfe_cv,
                               select_top_k, tune_k_by_cv)
from stresslab.preprocess import apply_minmax, fit_minmax
from stresslab.synthdata import make_informative

# tiny CV folds make the SVM's optimizer cut off early sometimes; that
# is expected here and not worth the noise
warnings.filterwarnings("ignore", message="SMO stopped")

# 6 features, only columns listed in `informative` separate the classes
X, y, informative = make_informative(200, 6, 3, 3, separation=3.0, seed=11)
print(f"planted informative columns: {informative.tolist()}")

# ANOVA F: between-class variance over within-class variance, per column.
# Informative columns should dominate.
scores = anova_f_scores(X, y)
order = np.argsort(scores.f_values)[::-1]
print("\nANOVA F per column (descending):")
for j in order:
    tag = "  <- planted" if j in informative else ""
    print(f"  q{j + 1}: F = {scores.f_values[j]:10.3f}{tag}")

# pick k by cross-validation, then keep the top-k columns
k = tune_k_by_cv(X, y, folds=5, seed=11)
mask = select_top_k(scores, k)
print(f"\ntuned k = {k}, kept columns {np.flatnonzero(mask.kept).tolist()}")

# recursive elimination: drop the weakest feature (linear SVM weight
# magnitude) one at a time, keep the count that cross-validates best
rfe_mask = rfe_cv(X, y, folds=5, seed=11)
print(f"RFECV kept columns {np.flatnonzero(rfe_mask.kept).tolist()}")

# or eliminate straight down to a requested count
two = eliminate_to(X, y, count=2, seed=11)
print(f"eliminate_to(2) kept {np.flatnonzero(two.kept).tolist()}")

# PCA after min-max scaling: how many directions carry 95% of variance
scaler = fit_minmax(X)
Xs = apply_minmax(X, scaler)
pca = fit_pca(Xs, target_ratio=0.95)
print(f"\nPCA at 95% variance target: {pca.n_components} components "
      f"(cumulative ratio {pca.cumulative_ratio:.4f})")
print("explained variance ratio per component:",
      np.round(pca.explained_variance_ratio, 4).tolist())
Z = apply_pca(Xs, pca)
print(f"projected shape: {Z.shape}")
