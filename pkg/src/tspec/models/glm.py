"""Generalized linear models: ridge least squares and logistic regression."""

from __future__ import annotations

import numpy as np

from ..errors import DataError


def fit_gaussian(X: np.ndarray, y: np.ndarray, ridge: float = 1e-6) -> dict:
    """Closed-form ridge regression on centered data; intercept unpenalized.

    ``ridge=0`` falls back to a least-squares solve, which keeps residuals
    exactly orthogonal to the design columns.
    """
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    xc = X - x_mean
    yc = y - y_mean
    if ridge > 0.0:
        gram = xc.T @ xc + ridge * np.eye(X.shape[1])
        weights = np.linalg.solve(gram, xc.T @ yc)
    else:
        weights, *_ = np.linalg.lstsq(xc, yc, rcond=None)
    intercept = y_mean - float(x_mean @ weights)
    return {"weights": weights, "intercept": intercept}


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit_binomial(
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 1e-4,
    learning_rate: float = 0.1,
    max_iter: int = 500,
    tol: float = 1e-8,
) -> dict:
    """Full-batch gradient descent on mean log loss with L2 on the weights.

    Stops when the loss improvement drops below ``tol`` or after
    ``max_iter`` steps.  Requires both classes to be present.
    """
    classes = np.unique(y)
    if classes.size < 2:
        raise DataError("logistic fit needs both classes present in the labels")

    n, width = X.shape
    weights = np.zeros(width)
    intercept = 0.0
    prev_loss = np.inf
    eps = 1e-12
    for _ in range(max_iter):
        p = _sigmoid(X @ weights + intercept)
        loss = float(
            -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
            + 0.5 * l2 * float(weights @ weights)
        )
        if abs(prev_loss - loss) < tol:
            break
        prev_loss = loss
        grad_w = X.T @ (p - y) / n + l2 * weights
        grad_b = float(np.mean(p - y))
        weights -= learning_rate * grad_w
        intercept -= learning_rate * grad_b
    return {"weights": weights, "intercept": intercept}


def predict_linear(params: dict, X: np.ndarray) -> np.ndarray:
    return X @ np.asarray(params["weights"], dtype=np.float64) + params["intercept"]


def predict_proba(params: dict, X: np.ndarray) -> np.ndarray:
    return _sigmoid(predict_linear(params, X))
