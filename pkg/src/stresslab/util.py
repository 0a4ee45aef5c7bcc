"""Small shared helpers: deterministic seed derivation and array checks."""

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Derive a child seed from arbitrary labels, stably across processes.

    Python's builtin hash() is salted per interpreter, so parallel workers
    would disagree with the serial path; sha256 keeps every execution mode
    on the same stream.
    """
    key = "/".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    return X


def as_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("labels must be 1-D")
    return y.astype(np.int64)


def check_consistent(X, y):
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"row count mismatch: X has {X.shape[0]}, y has {y.shape[0]}")


def n_classes_of(y) -> int:
    y = as_labels(y)
    if y.size == 0:
        raise ValueError("empty label vector")
    if y.min() < 0:
        raise ValueError("labels must be non-negative class indices")
    return int(y.max()) + 1


def softmax(raw: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row maximum."""
    raw = np.asarray(raw, dtype=np.float64)
    z = raw - raw.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
