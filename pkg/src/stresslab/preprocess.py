"""Min-max scaling to [0, 1], fitted on training rows only.

Test-time values that fall outside the fitted range are clamped into [0, 1]
rather than extrapolated; RBF kernels and distance-based scores behave badly
on out-of-range survey answers. Constant columns map to 0.0 instead of
erroring, since feature selection removes them downstream anyway.
"""

from dataclasses import dataclass

import numpy as np

from .util import as_matrix


@dataclass(frozen=True)
class ScalerParams:
    col_min: np.ndarray
    col_range: np.ndarray

    @property
    def fitted_on(self) -> int:
        return self.col_min.shape[0]


def fit_minmax(X) -> ScalerParams:
    X = as_matrix(X)
    if X.shape[0] < 1:
        raise ValueError("cannot fit a scaler on an empty matrix")
    lo = X.min(axis=0)
    rng = X.max(axis=0) - lo
    return ScalerParams(col_min=lo, col_range=rng)


def apply_minmax(X, p: ScalerParams) -> np.ndarray:
    X = as_matrix(X)
    if X.shape[1] != p.fitted_on:
        raise ValueError(
            f"scaler fitted on {p.fitted_on} columns, got {X.shape[1]}"
        )
    safe = np.where(p.col_range > 0, p.col_range, 1.0)
    out = (X - p.col_min) / safe
    out[:, p.col_range == 0] = 0.0
    np.clip(out, 0.0, 1.0, out=out)
    return out


class MinMaxScaler:
    """fit/transform wrapper over the functional core."""

    def __init__(self):
        self.params_ = None

    def fit(self, X, y=None):
        self.params_ = fit_minmax(X)
        return self

    def transform(self, X) -> np.ndarray:
        if self.params_ is None:
            raise RuntimeError("scaler is not fitted")
        return apply_minmax(X, self.params_)

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X).transform(X)
