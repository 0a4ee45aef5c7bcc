"""Kernel SVM trained by sequential minimal optimization.

Binary machines solve the standard dual

    min_a  0.5 aᵀQa − eᵀa,   0 ≤ a_i ≤ C,  Σ a_i y_i = 0,   Q_ij = y_i y_j K_ij

with maximal-violating-pair working-set selection and an incrementally
maintained gradient. Probabilities come from Platt sigmoids fitted on
out-of-fold decision values; multiclass is one-vs-rest with the per-class
sigmoid outputs normalized to sum to one.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .util import as_labels, as_matrix, derive_seed

_KINDS = ("linear", "rbf", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    gamma: object = "scale"  # positive float, or "scale" = 1/(d * var(X))
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.gamma != "scale":
            if not (isinstance(self.gamma, (int, float)) and self.gamma > 0):
                raise ValueError(f"gamma must be positive or 'scale', got {self.gamma!r}")


def resolve_gamma(spec: KernelSpec, X) -> KernelSpec:
    """Replace gamma='scale' with 1/(d * var(X)) for the fitting matrix."""
    if spec.gamma != "scale":
        return spec
    X = as_matrix(X)
    var = float(X.var())
    gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    return replace(spec, gamma=gamma)


def kernel_eval(A, B, spec: KernelSpec) -> np.ndarray:
    """Gram matrix K[i, j] = k(A_i, B_j)."""
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == "linear":
        return A @ B.T
    if spec.gamma == "scale":
        raise ValueError("gamma='scale' must be resolved before evaluation")
    g = float(spec.gamma)
    if spec.kind == "rbf":
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-g * sq)
    return (g * (A @ B.T) + spec.coef0) ** spec.degree


@dataclass(frozen=True)
class BinarySvm:
    support_vectors: np.ndarray  # (m, d)
    dual_coef: np.ndarray        # (m,) values alpha_i * y_i
    bias: float
    C: float
    kernel: KernelSpec
    n_features: int
    platt: tuple = None          # (A, B) once calibrated
    converged: bool = True
    platt_fallback: bool = False
    n_iter: int = 0


def decision_function(m: BinarySvm, X) -> np.ndarray:
    X = as_matrix(X)
    if m.support_vectors.shape[0] == 0:
        return np.full(X.shape[0], m.bias)
    return kernel_eval(X, m.support_vectors, m.kernel) @ m.dual_coef + m.bias


def smo_train_binary(X, y, C: float, kernel: KernelSpec, tol: float = 1e-3,
                     max_passes: int = None, seed: int = 0) -> BinarySvm:
    """Solve the binary dual; labels must be -1/+1 with both present.

    Terminates when the maximal KKT violation m(a) - M(a) drops to tol, or
    when the pair-update budget (default 10n) runs out, which sets
    converged=False on the model instead of raising.
    """
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.shape[0]
    if X.shape[0] != n:
        raise ValueError("row count mismatch between X and y")
    if not np.isin(y, (-1.0, 1.0)).all():
        raise ValueError("binary labels must be -1 or +1")
    if (y > 0).all() or (y < 0).all():
        raise ValueError("both classes must be present")
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    kernel = resolve_gamma(kernel, X)
    if max_passes is None:
        max_passes = 10 * n

    K = kernel_eval(X, X, kernel)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective at alpha = 0
    eps = 1e-12
    converged = False
    it = 0
    while it < max_passes:
        score = -y * grad
        up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
        low = ((y < 0) & (alpha < C - eps)) | ((y > 0) & (alpha > eps))
        m_val = np.where(up, score, -np.inf)
        M_val = np.where(low, score, np.inf)
        i = int(np.argmax(m_val))
        j = int(np.argmin(M_val))
        gap = m_val[i] - M_val[j]
        if gap <= tol:
            converged = True
            break
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = 1e-12
        delta = gap / quad
        room_i = (C - alpha[i]) if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else (C - alpha[j])
        delta = min(delta, room_i, room_j)
        alpha[i] += y[i] * delta
        alpha[j] -= y[j] * delta
        grad += delta * y * (K[:, i] - K[:, j])
        it += 1
    if not converged:
        warnings.warn(f"SMO stopped after {it} updates without reaching tol={tol}")

    score = -y * grad
    up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
    low = ((y < 0) & (alpha < C - eps)) | ((y > 0) & (alpha > eps))
    m_fin = np.where(up, score, -np.inf).max()
    M_fin = np.where(low, score, np.inf).min()
    if not np.isfinite(m_fin):
        m_fin = M_fin
    if not np.isfinite(M_fin):
        M_fin = m_fin
    bias = float((m_fin + M_fin) / 2.0)

    sv = alpha > 1e-12
    return BinarySvm(
        support_vectors=X[sv].copy(),
        dual_coef=(alpha * y)[sv],
        bias=bias,
        C=float(C),
        kernel=kernel,
        n_features=X.shape[1],
        converged=converged,
        n_iter=it,
    )


def dual_objective(m: BinarySvm, X, y) -> float:
    """0.5 aᵀQa − eᵀa evaluated for the model's multipliers on (X, y)."""
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    coef = np.zeros(y.shape[0])
    # recover alpha on the training rows: dual_coef = alpha * y on SVs
    sv_rows = _match_rows(X, m.support_vectors)
    coef[sv_rows] = m.dual_coef
    alpha = coef * y  # alpha_i = (alpha_i y_i) y_i
    K = kernel_eval(X, X, m.kernel)
    Q = (y[:, None] * y[None, :]) * K
    return float(0.5 * alpha @ Q @ alpha - alpha.sum())


def _match_rows(X, rows) -> np.ndarray:
    idx = []
    used = set()
    for r in rows:
        hit = np.flatnonzero((X == r).all(axis=1))
        hit = [h for h in hit if h not in used]
        if not hit:
            raise ValueError("support vector not found among training rows")
        idx.append(hit[0])
        used.add(hit[0])
    return np.array(idx, dtype=np.int64)


def linear_weights(m: BinarySvm) -> np.ndarray:
    """Primal weight vector w = Σ (alpha_i y_i) x_i; linear kernels only."""
    if m.kernel.kind != "linear":
        raise ValueError("weight vector is only defined for linear kernels")
    if m.support_vectors.shape[0] == 0:
        return np.zeros(m.n_features)
    return m.dual_coef @ m.support_vectors


def _platt_nll(z, t):
    # both where-branches are evaluated on every lane; the clamps keep the
    # discarded lane from overflowing
    return float(np.where(z >= 0,
                          t * z + np.log1p(np.exp(-np.maximum(z, 0))),
                          (t - 1.0) * z + np.log1p(np.exp(np.minimum(z, 0)))).sum())


def fit_platt_sigmoid(scores, y_bin, tol: float = 1e-8, max_iter: int = 100):
    """Fit p(y=1|f) = 1/(1+exp(A f + B)) by damped Newton on the smoothed
    maximum-likelihood problem. Returns (A, B, fallback_flag)."""
    f = np.asarray(scores, dtype=np.float64).ravel()
    y_bin = np.asarray(y_bin, dtype=np.float64).ravel()
    pos = y_bin > 0
    n_pos = int(pos.sum())
    n_neg = int(f.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0 or not np.isfinite(f).all():
        return -1.0, 0.0, True
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(pos, hi, lo)
    A = 0.0
    B = float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    sigma = 1e-12
    F = _platt_nll(A * f + B, t)
    for _ in range(max_iter):
        z = A * f + B
        with np.errstate(over="ignore"):
            p = np.where(z >= 0,
                         np.exp(-np.maximum(z, 0)) / (1.0 + np.exp(-np.maximum(z, 0))),
                         1.0 / (1.0 + np.exp(np.minimum(z, 0))))
        gA = float(((t - p) * f).sum())
        gB = float((t - p).sum())
        if max(abs(gA), abs(gB)) < tol:
            break
        pq = p * (1.0 - p)
        h11 = float((pq * f * f).sum()) + sigma
        h22 = float(pq.sum()) + sigma
        h12 = float((pq * f).sum())
        det = h11 * h22 - h12 * h12
        if det <= 0 or not np.isfinite(det):
            break
        dA = -(h22 * gA - h12 * gB) / det
        dB = -(h11 * gB - h12 * gA) / det
        gd = gA * dA + gB * dB  # < 0: descent direction
        step = 1.0
        while step >= 1e-10:
            F_new = _platt_nll((A + step * dA) * f + (B + step * dB), t)
            if F_new <= F + 1e-4 * step * gd:
                A += step * dA
                B += step * dB
                F = F_new
                break
            step /= 2.0
        else:
            break
    if not (np.isfinite(A) and np.isfinite(B)):
        return -1.0, 0.0, True
    return float(A), float(B), False


def platt_calibrate(m: BinarySvm, X_cal, y_cal) -> BinarySvm:
    """Attach a Platt sigmoid fitted on (decision values, labels)."""
    scores = decision_function(m, X_cal)
    A, B, fb = fit_platt_sigmoid(scores, np.asarray(y_cal, dtype=np.float64))
    return replace(m, platt=(A, B), platt_fallback=fb)


def predict_proba_binary(m: BinarySvm, X) -> np.ndarray:
    if m.platt is None:
        raise RuntimeError("machine is not calibrated")
    A, B = m.platt
    z = A * decision_function(m, X) + B
    with np.errstate(over="ignore"):
        return np.where(z >= 0,
                        np.exp(-np.maximum(z, 0)) / (1.0 + np.exp(-np.maximum(z, 0))),
                        1.0 / (1.0 + np.exp(np.minimum(z, 0))))


@dataclass(frozen=True)
class MulticlassSvm:
    machines: tuple      # one calibrated BinarySvm per class
    n_classes: int
    kernel: KernelSpec   # resolved spec shared by all machines

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.machines)


def _binary_fold_starts(y_bin, k, seed):
    """Stratified fold assignment on a -1/+1 vector; shrinks k to the
    minority count when needed (minimum 2)."""
    n = y_bin.shape[0]
    minority = int(min((y_bin > 0).sum(), (y_bin < 0).sum()))
    k = max(2, min(k, minority))
    assignment = np.empty(n, dtype=np.int64)
    for side, tag in ((y_bin > 0, 1), (y_bin < 0, 0)):
        rows = np.flatnonzero(side)
        rng = np.random.default_rng(derive_seed(seed, "cal", tag))
        rows = rows[rng.permutation(rows.shape[0])]
        assignment[rows] = np.arange(rows.shape[0]) % k
    return assignment, k


def fit_svm_multiclass(X, y, C: float, kernel: KernelSpec, seed: int = 0,
                       tol: float = 1e-3, max_passes: int = None) -> MulticlassSvm:
    """One calibrated one-vs-rest machine per class.

    Sigmoids are fitted on 3-fold out-of-fold decision values so the
    calibration never sees scores from a machine trained on the same rows.
    """
    X = as_matrix(X)
    y = as_labels(y)
    n_classes = int(y.max()) + 1
    if n_classes < 2 or len(np.unique(y)) < 2:
        raise ValueError("multiclass fit needs at least 2 classes present")
    kernel = resolve_gamma(kernel, X)

    machines = []
    for c in range(n_classes):
        y_bin = np.where(y == c, 1.0, -1.0)
        minority = int(min((y_bin > 0).sum(), (y_bin < 0).sum()))
        final = smo_train_binary(X, y_bin, C, kernel, tol=tol,
                                 max_passes=max_passes,
                                 seed=derive_seed(seed, c, "final"))
        if minority < 2:
            # cannot hold out both labels; flagged fallback sigmoid
            machines.append(replace(final, platt=(-1.0, 0.0), platt_fallback=True))
            continue
        assignment, k = _binary_fold_starts(y_bin, 3, derive_seed(seed, c))
        oof = np.empty(X.shape[0])
        for f in range(k):
            tr = assignment != f
            sub = smo_train_binary(X[tr], y_bin[tr], C, kernel, tol=tol,
                                   max_passes=max_passes,
                                   seed=derive_seed(seed, c, f))
            oof[~tr] = decision_function(sub, X[~tr])
        A, B, fb = fit_platt_sigmoid(oof, y_bin)
        machines.append(replace(final, platt=(A, B), platt_fallback=fb))
    return MulticlassSvm(machines=tuple(machines), n_classes=n_classes,
                         kernel=kernel)


def predict_proba_multiclass(model: MulticlassSvm, X) -> np.ndarray:
    X = as_matrix(X)
    cols = [predict_proba_binary(m, X) for m in model.machines]
    P = np.column_stack(cols)
    totals = P.sum(axis=1, keepdims=True)
    uniform = np.full_like(P, 1.0 / model.n_classes)
    with np.errstate(invalid="ignore"):
        out = np.where(totals > 0, P / np.where(totals > 0, totals, 1.0), uniform)
    return out


class KernelSvm:
    """One-vs-rest kernel SVM with Platt-calibrated probabilities."""

    def __init__(self, C=1.0, kernel="rbf", gamma="scale", degree=3,
                 coef0=0.0, tol=1e-3, max_passes=None, seed=0):
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.degree = degree
        self.coef0 = coef0
        self.tol = tol
        self.max_passes = max_passes
        self.seed = seed
        self.model_ = None

    def fit(self, X, y):
        spec = KernelSpec(kind=self.kernel, gamma=self.gamma,
                          degree=self.degree, coef0=self.coef0)
        self.model_ = fit_svm_multiclass(X, y, self.C, spec, seed=self.seed,
                                         tol=self.tol, max_passes=self.max_passes)
        return self

    def predict_proba(self, X):
        if self.model_ is None:
            raise RuntimeError("fit before predict")
        return predict_proba_multiclass(self.model_, X)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def feature_importance(self) -> np.ndarray:
        """Per-feature sum over the one-vs-rest machines of squared linear
        weights; defined for linear kernels only."""
        if self.model_ is None:
            raise RuntimeError("fit before importance")
        total = np.zeros(self.model_.machines[0].n_features)
        for m in self.model_.machines:
            w = linear_weights(m)
            total += w * w
        return total
