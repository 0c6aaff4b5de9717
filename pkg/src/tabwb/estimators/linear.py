"""Linear models: ridge regression and L2-regularized logistic regression.

Ridge is solved in closed form on centered data. Logistic is solved by
gradient descent with backtracking line search; the objective and gradient
are module-level functions so they can be checked against finite
differences independently of the solver.
"""

from __future__ import annotations

import numpy as np

from ..errors import WorkbenchError
from ..params import FloatRange
from .base import (
    TASK_BINARY,
    TASK_CATEGORICAL,
    TASK_REGRESSION,
    EstimatorInfo,
    FittedEstimator,
    Matrix,
    Predictions,
    Target,
    register,
    SCOPE_ALL,
    MODEL,
)

GRAD_TOL = 1e-8
MAX_ITER = 10_000


def _ridge_fit(info, params, X: Matrix, y: Target) -> FittedEstimator:
    if y.task != TASK_REGRESSION:
        raise WorkbenchError("ridge handles regression targets only")
    A = X.to_numeric("ridge")
    alpha = float(params["alpha"])
    if alpha < 0:
        raise WorkbenchError("ridge: alpha must be >= 0")
    x_mean = A.mean(axis=0)
    y_mean = float(y.values.mean())
    Ac = A - x_mean
    yc = y.values - y_mean
    gram = Ac.T @ Ac + alpha * np.eye(A.shape[1])
    try:
        w = np.linalg.solve(gram, Ac.T @ yc)
    except np.linalg.LinAlgError:
        w = np.linalg.lstsq(Ac, yc, rcond=None)[0]
    b = y_mean - float(x_mean @ w)
    return FittedEstimator(
        "ridge", params, X.schema(), {"w": w, "b": b}
    )


def _ridge_predict(f: FittedEstimator, X: Matrix) -> Predictions:
    A = X.to_numeric("ridge")
    return Predictions(TASK_REGRESSION, A @ f.state["w"] + f.state["b"])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(w, b, A, t, alpha):
    """Objective and gradient of penalized logistic loss.

    Labels t are +/-1. The intercept b is not penalized. Returns
    (value, grad_w, grad_b).
    """
    z = t * (A @ w + b)
    value = float(np.logaddexp(0.0, -z).sum() + 0.5 * alpha * (w @ w))
    s = _sigmoid(-z)
    grad_w = -(A.T @ (t * s)) + alpha * w
    grad_b = -float(np.sum(t * s))
    return value, grad_w, grad_b


def _solve_logistic(A, t, alpha):
    w = np.zeros(A.shape[1])
    b = 0.0
    value, gw, gb = logistic_loss_grad(w, b, A, t, alpha)
    for _ in range(MAX_ITER):
        gnorm2 = float(gw @ gw + gb * gb)
        if np.sqrt(gnorm2) <= GRAD_TOL:
            break
        step = 1.0
        while True:
            w2 = w - step * gw
            b2 = b - step * gb
            v2, gw2, gb2 = logistic_loss_grad(w2, b2, A, t, alpha)
            if v2 <= value - 1e-4 * step * gnorm2 or step < 1e-16:
                break
            step *= 0.5
        w, b, value, gw, gb = w2, b2, v2, gw2, gb2
    return w, b


def _logistic_fit(info, params, X: Matrix, y: Target) -> FittedEstimator:
    if y.task not in (TASK_BINARY, TASK_CATEGORICAL):
        raise WorkbenchError("logistic handles classification targets only")
    A = X.to_numeric("logistic")
    alpha = float(params["alpha"])
    if alpha < 0:
        raise WorkbenchError("logistic: alpha must be >= 0")
    labels = y.values.astype(int)
    n_classes = y.n_classes
    present = np.unique(labels)
    if present.size < 2:
        raise WorkbenchError("logistic: training rows contain a single class")
    if n_classes == 2:
        t = np.where(labels == 1, 1.0, -1.0)
        w, b = _solve_logistic(A, t, alpha)
        ws, bs = w[None, :], np.array([b])
    else:
        # one-vs-rest, one column of weights per class
        ws = np.zeros((n_classes, A.shape[1]))
        bs = np.zeros(n_classes)
        for c in range(n_classes):
            t = np.where(labels == c, 1.0, -1.0)
            ws[c], bs[c] = _solve_logistic(A, t, alpha)
    return FittedEstimator(
        "logistic", params, X.schema(),
        {"ws": ws, "bs": bs, "binary": n_classes == 2},
        target_levels=y.levels,
    )


def _logistic_predict(f: FittedEstimator, X: Matrix) -> Predictions:
    A = X.to_numeric("logistic")
    levels = f.target_levels
    if f.state["binary"]:
        p1 = _sigmoid(A @ f.state["ws"][0] + f.state["bs"][0])
        proba = np.column_stack([1.0 - p1, p1])
    else:
        scores = _sigmoid(A @ f.state["ws"].T + f.state["bs"])
        totals = scores.sum(axis=1, keepdims=True)
        uniform = np.full_like(scores, 1.0 / scores.shape[1])
        proba = np.where(totals > 0, scores / np.where(totals == 0, 1.0, totals), uniform)
    labels = proba.argmax(axis=1)
    task = TASK_BINARY if len(levels) == 2 else TASK_CATEGORICAL
    return Predictions(task, labels, proba=proba, levels=levels)


register(EstimatorInfo(
    estimator_id="ridge",
    kind=MODEL,
    tasks=(TASK_REGRESSION,),
    defaults={"alpha": 1.0},
    preset={"alpha": FloatRange(1e-4, 1e3, "log")},
    default_scope=SCOPE_ALL,
    supervised=True,
    fit=_ridge_fit,
    predict=_ridge_predict,
))

register(EstimatorInfo(
    estimator_id="logistic",
    kind=MODEL,
    tasks=(TASK_BINARY, TASK_CATEGORICAL),
    defaults={"alpha": 1.0},
    preset={"alpha": FloatRange(1e-4, 1e3, "log")},
    default_scope=SCOPE_ALL,
    supervised=True,
    fit=_logistic_fit,
    predict=_logistic_predict,
))
