"""Linear learners: least squares, ridge and coordinate-descent lasso.

All three fit an intercept by centering x and y; the slopes are learned on
the centered data and the intercept is recovered from the means.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.errors import NumericalError
from src.learners.base import kfold_indices


logger = logging.getLogger(__name__)

RANK_TOL = 1e-10


def _center(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    x_mean = x.mean(axis=0)
    y_mean = float(y.mean())
    return x - x_mean, y - y_mean, x_mean, y_mean


def _qr_lstsq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Least squares by economic QR; raises on numerical rank deficiency."""
    if a.shape[0] < a.shape[1]:
        raise NumericalError(
            f"Design has {a.shape[0]} rows for {a.shape[1]} columns; use ridge or lasso"
        )
    q, r = linalg.qr(a, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.size and diag.min() <= RANK_TOL * max(diag.max(), 1.0):
        raise NumericalError("Design matrix is rank deficient; use ridge or lasso")
    return linalg.solve_triangular(r, q.T @ b, lower=False)


class _LinearModel:
    coef_: np.ndarray
    intercept_: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        return x @ self.coef_ + self.intercept_


class LinearRegression(_LinearModel):
    """Ordinary least squares with intercept."""

    def __init__(
        self, coef: Optional[Sequence[float]] = None, intercept: float = 0.0
    ):
        if coef is not None:
            self.coef_ = np.asarray(coef, dtype=float).copy()
            self.intercept_ = float(intercept)

    def fit(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "LinearRegression":
        xc, yc, x_mean, y_mean = _center(x, y)
        self.coef_ = _qr_lstsq(xc, yc)
        self.intercept_ = y_mean - float(x_mean @ self.coef_)
        return self


class RidgeRegression(_LinearModel):
    """
    Ridge regression minimizing ||y - Xw||^2 + alpha ||w||^2.

    Solved as least squares on the augmented system [X; sqrt(alpha) I],
    so alpha = 0 reduces to the OLS solver.
    """

    def __init__(self, alpha: float = 1.0):
        self.alpha = float(alpha)

    def fit(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "RidgeRegression":
        xc, yc, x_mean, y_mean = _center(x, y)
        p = xc.shape[1]
        if self.alpha > 0:
            a = np.vstack([xc, np.sqrt(self.alpha) * np.eye(p)])
            b = np.concatenate([yc, np.zeros(p)])
        else:
            a, b = xc, yc
        self.coef_ = _qr_lstsq(a, b)
        self.intercept_ = y_mean - float(x_mean @ self.coef_)
        return self


def lasso_alpha_max(gram_rhs: np.ndarray) -> float:
    """Smallest alpha for which the lasso solution is identically zero."""
    return float(np.max(np.abs(gram_rhs), initial=0.0))


def lasso_alpha_grid(alpha_max: float, n_alphas: int = 50, eps: float = 1e-3) -> np.ndarray:
    """Geometric grid from alpha_max down to eps * alpha_max (descending)."""
    if alpha_max <= 0:
        return np.zeros(1)
    return np.geomspace(alpha_max, alpha_max * eps, num=n_alphas)


def lasso_objective(
    gram: np.ndarray, rhs: np.ndarray, w: np.ndarray, alpha: float, y_sq: float = 0.0
) -> float:
    """(1/2n)||y - Xw||^2 + alpha ||w||_1 written through the Gram matrix."""
    return 0.5 * y_sq - float(rhs @ w) + 0.5 * float(w @ gram @ w) + alpha * float(np.abs(w).sum())


def lasso_coordinate_descent(
    gram: np.ndarray,
    rhs: np.ndarray,
    alpha: float,
    w0: Optional[np.ndarray] = None,
    max_iter: int = 1000,
    tol: float = 1e-6,
    history: Optional[List[float]] = None,
) -> np.ndarray:
    """
    Cyclic coordinate descent with covariance updates.

    Minimizes 0.5 w'Gw - c'w + alpha ||w||_1 where G = X'X/n and c = X'y/n
    (centered data). Stops when the largest coefficient change of a sweep
    falls below ``tol``.

    Args:
        gram: G = X'X / n
        rhs: c = X'y / n
        alpha: L1 penalty
        w0: Warm start
        max_iter: Maximum number of sweeps
        tol: Coefficient-change tolerance
        history: If given, the objective after each sweep is appended

    Returns:
        Coefficient vector
    """
    p = rhs.shape[0]
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=float, copy=True)
    diag = np.diag(gram).copy()
    # g = G w, maintained incrementally
    g = gram @ w
    for _ in range(max_iter):
        max_change = 0.0
        for j in range(p):
            if diag[j] <= 0.0:
                if w[j] != 0.0:
                    g -= gram[:, j] * w[j]
                    w[j] = 0.0
                continue
            rho = rhs[j] - g[j] + diag[j] * w[j]
            new = np.sign(rho) * max(abs(rho) - alpha, 0.0) / diag[j]
            delta = new - w[j]
            if delta != 0.0:
                g += gram[:, j] * delta
                w[j] = new
                max_change = max(max_change, abs(delta))
        if history is not None:
            history.append(lasso_objective(gram, rhs, w, alpha))
        if max_change < tol:
            break
    else:
        logger.debug(f"Lasso coordinate descent hit max_iter={max_iter} at alpha={alpha:.3g}")
    return w


def lasso_path(
    gram: np.ndarray,
    rhs: np.ndarray,
    alphas: np.ndarray,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> np.ndarray:
    """Warm-started solutions along a descending alpha grid, shape (len(alphas), p)."""
    coefs = np.zeros((len(alphas), rhs.shape[0]))
    w = None
    for i, alpha in enumerate(alphas):
        w = lasso_coordinate_descent(gram, rhs, float(alpha), w0=w, max_iter=max_iter, tol=tol)
        coefs[i] = w
    return coefs


class LassoRegression(_LinearModel):
    """
    Lasso minimizing (1/2n)||y - Xw||^2 + alpha ||w||_1.

    With a fixed ``alpha`` the problem is solved directly. Otherwise alpha is
    chosen by k-fold cross-validation over ``alphas`` or, by default, a
    geometric grid of ``n_alphas`` values from alpha_max to eps * alpha_max.
    """

    def __init__(
        self,
        alpha: Optional[float] = None,
        alphas: Optional[Sequence[float]] = None,
        n_alphas: int = 50,
        eps: float = 1e-3,
        folds: int = 5,
        max_iter: int = 1000,
        tol: float = 1e-6,
    ):
        self.alpha = alpha
        self.alphas = alphas
        self.n_alphas = n_alphas
        self.eps = eps
        self.folds = folds
        self.max_iter = max_iter
        self.tol = tol
        self.objective_history_: List[float] = []

    @staticmethod
    def _moments(xc: np.ndarray, yc: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = xc.shape[0]
        return xc.T @ xc / n, xc.T @ yc / n

    def _grid(self, rhs: np.ndarray) -> np.ndarray:
        if self.alphas is not None:
            return np.sort(np.asarray(self.alphas, dtype=float))[::-1]
        return lasso_alpha_grid(lasso_alpha_max(rhs), self.n_alphas, self.eps)

    def _cross_validate(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> float:
        xc, yc, _, _ = _center(x, y)
        grid = self._grid(self._moments(xc, yc)[1])
        if grid.size == 1:
            return float(grid[0])
        errors = np.zeros(grid.size)
        for valid in kfold_indices(x.shape[0], self.folds, rng):
            train = np.setdiff1d(np.arange(x.shape[0]), valid, assume_unique=True)
            xt, yt, x_mean, y_mean = _center(x[train], y[train])
            gram, rhs = self._moments(xt, yt)
            coefs = lasso_path(gram, rhs, grid, self.max_iter, self.tol)
            pred = (x[valid] - x_mean) @ coefs.T + y_mean
            errors += np.mean((pred - y[valid, None]) ** 2, axis=0) * valid.size
        best = int(np.argmin(errors))
        logger.debug(f"Lasso CV picked alpha={grid[best]:.4g} ({best + 1}/{grid.size})")
        return float(grid[best])

    def fit(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "LassoRegression":
        if self.alpha is not None:
            chosen = float(self.alpha)
        else:
            chosen = self._cross_validate(x, y, rng)
        xc, yc, x_mean, y_mean = _center(x, y)
        gram, rhs = self._moments(xc, yc)
        # Follow the grid down to the chosen value for a good warm start
        warm = [a for a in self._grid(rhs) if a > chosen] if self.alpha is None else []
        w = lasso_path(gram, rhs, np.asarray(warm), self.max_iter, self.tol)[-1] if warm else None
        self.objective_history_ = []
        self.coef_ = lasso_coordinate_descent(
            gram, rhs, chosen, w0=w, max_iter=self.max_iter, tol=self.tol,
            history=self.objective_history_,
        )
        self.intercept_ = y_mean - float(x_mean @ self.coef_)
        self.alpha_ = chosen
        return self

