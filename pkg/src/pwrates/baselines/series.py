"""Tensorized trigonometric series regression.

Per axis the basis is ``phi_0 = 1``, ``phi_{2k-1} = sqrt2 sin(2 pi k x)``,
``phi_{2k} = sqrt2 cos(2 pi k x)`` for ``k >= 1``; coefficients are empirical inner
products ``(1/n) sum_i Y_i phi_j(X_i)`` (no least-squares solve).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..piecewise import Dataset
from .kernel import CVResult, fold_ids

SQRT2 = np.sqrt(2.0)


def trig_basis(x: np.ndarray, J: int) -> np.ndarray:
    """Columns ``phi_0 .. phi_J`` evaluated at the 1-D points ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    out = np.empty((x.shape[0], J + 1))
    out[:, 0] = 1.0
    for j in range(1, J + 1):
        k = (j + 1) // 2
        if j % 2 == 0:
            out[:, j] = SQRT2 * np.cos(2 * np.pi * k * x)
        else:
            out[:, j] = SQRT2 * np.sin(2 * np.pi * k * x)
    return out


def tensor_features(X: np.ndarray, J: int) -> np.ndarray:
    """Row-wise Kronecker product of the per-axis bases: ``(n, (J+1)^D)``."""
    X = np.atleast_2d(X)
    feats = trig_basis(X[:, 0], J)
    for d in range(1, X.shape[1]):
        per_axis = trig_basis(X[:, d], J)
        feats = (feats[:, :, None] * per_axis[:, None, :]).reshape(X.shape[0], -1)
    return feats


@dataclass(frozen=True, eq=False)
class SeriesModel:
    dim: int
    J: int
    coef: np.ndarray  # shape (J+1,) * dim

    def __post_init__(self):
        if self.coef.size != (self.J + 1) ** self.dim:
            raise ValueError("coefficient count must be (J+1)^D")

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        single = arr.ndim <= 1
        pts = arr.reshape(-1, self.dim)
        out = tensor_features(pts, self.J) @ self.coef.ravel()
        return float(out[0]) if single else out


def series_fit(J: int, data: Dataset) -> SeriesModel:
    if J < 0:
        raise ValueError("J must be nonnegative")
    feats = tensor_features(data.xs, J)
    coef = feats.T @ data.ys / data.n
    return SeriesModel(data.dim, J, coef.reshape((J + 1,) * data.dim))


def series_cv(Jmax: int, data: Dataset, folds: int = 5) -> CVResult:
    """Pick ``J`` in ``1..Jmax`` by K-fold held-out MSE; returns the refit model as ``best``."""
    ids = fold_ids(data.n, folds)
    scores = []
    means = []
    for J in range(1, Jmax + 1):
        feats = tensor_features(data.xs, J)
        fold_mse = []
        for k in range(folds):
            tr, te = ids != k, ids == k
            coef = feats[tr].T @ data.ys[tr] / tr.sum()
            fold_mse.append(float(np.mean((feats[te] @ coef - data.ys[te]) ** 2)))
        scores.extend((f"series(J={J})", k, m) for k, m in enumerate(fold_mse))
        means.append(np.mean(fold_mse))
    J_best = 1 + int(np.argmin(means))
    return CVResult(series_fit(J_best, data), scores)


def step_coefficients(J: int) -> np.ndarray:
    """Exact coefficients of ``1{x >= 0.5}`` in the basis above.

    ``<f, phi_0> = 1/2``, cosines vanish, and the sine of frequency ``k``
    (index ``2k-1``) has ``-sqrt2 (1 - (-1)^k) / (2 pi k)``.
    """
    out = np.zeros(J + 1)
    out[0] = 0.5
    for j in range(1, J + 1):
        k = (j + 1) // 2
        if j % 2 == 1:
            out[j] = -SQRT2 * (1 - (-1) ** k) / (2 * np.pi * k)
    return out
