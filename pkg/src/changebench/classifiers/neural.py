"""Single-hidden-layer sigmoid network with mean-squared-error loss and five
training algorithms: plain batch gradient descent (NGD), momentum (NGDM),
adaptive learning rate with step rejection (NGDA), BFGS quasi-Newton (NNM),
and Levenberg-Marquardt on the residual vector (NLM).

MSE (rather than cross-entropy) keeps a residual formulation available for
the Levenberg-Marquardt trainer; every trainer minimizes the same loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ModelError
from .base import FeatureScaler, TrainedModel, sigmoid, validate_training_data
from .optim import bfgs_minimize, levenberg_marquardt

NN_TRAINERS = ("NGD", "NGDM", "NGDA", "NNM", "NLM")

MAX_CONSECUTIVE_REJECTS = 20


@dataclass(frozen=True)
class NnConfig:
    hidden_units: int = 0  # 0 -> 2 * n_features + 1
    max_epochs: int = 500
    learning_rate: float = 0.01
    momentum: float = 0.9
    lr_adapt_up: float = 1.05
    lr_adapt_down: float = 0.7
    lm_lambda0: float = 1e-3
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.learning_rate <= 0 or self.lr_adapt_up <= 0 or self.lr_adapt_down <= 0:
            raise ModelError("all rates must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ModelError("momentum must be in [0, 1)")

    def resolve_hidden(self, n_features: int) -> int:
        return self.hidden_units if self.hidden_units > 0 else 2 * n_features + 1


def _unpack(theta: np.ndarray, d: int, h: int):
    w1 = theta[: d * h].reshape(d, h)
    b1 = theta[d * h : d * h + h]
    w2 = theta[d * h + h : d * h + 2 * h]
    b2 = theta[-1]
    return w1, b1, w2, b2


def _forward(theta, X, d, h):
    w1, b1, w2, b2 = _unpack(theta, d, h)
    hidden = sigmoid(X @ w1 + b1)
    out = sigmoid(hidden @ w2 + b2)
    return out, hidden


def nn_loss(theta, X, y, d, h) -> float:
    out, _ = _forward(theta, X, d, h)
    return float(np.mean((out - y) ** 2))


def nn_gradient(theta, X, y, d, h) -> np.ndarray:
    """Backpropagated gradient of the mean-squared-error loss."""
    n = X.shape[0]
    w1, b1, w2, b2 = _unpack(theta, d, h)
    hidden = sigmoid(X @ w1 + b1)
    out = sigmoid(hidden @ w2 + b2)
    delta_out = 2.0 * (out - y) / n * out * (1.0 - out)
    g_w2 = hidden.T @ delta_out
    g_b2 = delta_out.sum()
    delta_hidden = np.outer(delta_out, w2) * hidden * (1.0 - hidden)
    g_w1 = X.T @ delta_hidden
    g_b1 = delta_hidden.sum(axis=0)
    return np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])


def nn_residuals(theta, X, y, d, h) -> np.ndarray:
    out, _ = _forward(theta, X, d, h)
    return out - y


def nn_jacobian(theta, X, y, d, h) -> np.ndarray:
    """Jacobian of the residual vector with respect to the packed parameters."""
    n = X.shape[0]
    w1, b1, w2, b2 = _unpack(theta, d, h)
    hidden = sigmoid(X @ w1 + b1)
    out = sigmoid(hidden @ w2 + b2)
    s_out = out * (1.0 - out)  # (n,)
    j_w2 = s_out[:, None] * hidden  # (n, h)
    j_b2 = s_out[:, None]  # (n, 1)
    d_hidden = s_out[:, None] * w2[None, :] * hidden * (1.0 - hidden)  # (n, h)
    j_w1 = np.einsum("ni,nh->nih", X, d_hidden).reshape(n, d * h)
    return np.hstack([j_w1, d_hidden, j_w2, j_b2])


def _init_params(d: int, h: int, seed: int) -> np.ndarray:
    """Seeded uniform Xavier-style init; biases start at zero."""
    rng = np.random.default_rng(seed)
    w1 = rng.uniform(-1.0, 1.0, (d, h)) * np.sqrt(6.0 / (d + h))
    w2 = rng.uniform(-1.0, 1.0, h) * np.sqrt(6.0 / (h + 1))
    return np.concatenate([w1.ravel(), np.zeros(h), w2, [0.0]])


def _train_gd_family(trainer, theta, loss_fn, grad_fn, cfg: NnConfig):
    lr = cfg.learning_rate
    velocity = np.zeros_like(theta)
    loss = loss_fn(theta)
    best_theta, best_loss = theta.copy(), loss
    rejects = 0
    flag = None
    for _ in range(cfg.max_epochs):
        g = grad_fn(theta)
        if trainer == "NGDM":
            velocity = cfg.momentum * velocity - lr * g
            candidate = theta + velocity
        else:
            candidate = theta - lr * g
        new_loss = loss_fn(candidate)
        if not np.isfinite(new_loss):
            lr *= 0.5
            velocity[:] = 0.0
            rejects += 1
            if rejects >= MAX_CONSECUTIVE_REJECTS:
                flag = "non-finite loss; aborted after 20 consecutive rejections"
                break
            continue
        if trainer == "NGDA":
            if new_loss < loss:
                theta = candidate
                improvement = loss - new_loss
                loss = new_loss
                lr *= cfg.lr_adapt_up
                rejects = 0
                if improvement < cfg.tolerance:
                    break
            else:
                lr *= cfg.lr_adapt_down  # reject the increasing step
                rejects += 1
                if rejects >= MAX_CONSECUTIVE_REJECTS:
                    flag = "aborted after 20 consecutive rejected steps"
                    break
        else:
            improvement = loss - new_loss
            theta = candidate
            loss = new_loss
            rejects = 0
            if abs(improvement) < cfg.tolerance:
                break
        if loss < best_loss:
            best_loss = loss
            best_theta = theta.copy()
    if loss < best_loss:
        best_loss, best_theta = loss, theta.copy()
    return best_theta, flag


class NeuralModel(TrainedModel):
    def __init__(self, kind, scaler, n_features, hidden, theta, flags=()):
        super().__init__(kind, scaler, n_features, flags=flags)
        self.hidden = hidden
        self.theta = theta

    def _score(self, Xs):
        out, _ = _forward(self.theta, Xs, self.n_features, self.hidden)
        return out

    def _state_json(self):
        return {"hidden": self.hidden, "theta": self.theta.tolist()}


def fit_neural_net(X, y, trainer: str, cfg: NnConfig | None = None,
                   seed: int = 0) -> NeuralModel:
    if trainer not in NN_TRAINERS:
        raise ModelError(f"unknown trainer {trainer!r}")
    cfg = cfg or NnConfig()
    X, y = validate_training_data(X, y)
    scaler = FeatureScaler.fit(X)
    Xs = scaler.transform(X)
    yf = y.astype(float)
    d = Xs.shape[1]
    h = cfg.resolve_hidden(d)
    theta0 = _init_params(d, h, seed)

    def loss_fn(t):
        return nn_loss(t, Xs, yf, d, h)

    def grad_fn(t):
        return nn_gradient(t, Xs, yf, d, h)

    flags: tuple[str, ...] = ()
    if trainer in ("NGD", "NGDM", "NGDA"):
        theta, flag = _train_gd_family(trainer, theta0, loss_fn, grad_fn, cfg)
        if flag:
            flags = (flag,)
    elif trainer == "NNM":
        res = bfgs_minimize(loss_fn, grad_fn, theta0, max_iter=cfg.max_epochs,
                            gtol=1e-10, ftol=cfg.tolerance)
        theta = res.x
        if res.flag:
            flags = (res.flag,)
    else:  # NLM
        n = Xs.shape[0]

        def residual(t):
            return nn_residuals(t, Xs, yf, d, h)

        def jacobian(t):
            return nn_jacobian(t, Xs, yf, d, h)

        # LM works on the SSE; scale the mean-loss tolerance accordingly
        res = levenberg_marquardt(residual, jacobian, theta0,
                                  lambda0=cfg.lm_lambda0, max_iter=cfg.max_epochs,
                                  tol=cfg.tolerance * n,
                                  max_rejects=MAX_CONSECUTIVE_REJECTS)
        theta = res.x
        if res.flag:
            flags = (res.flag,)
    return NeuralModel(trainer, scaler, d, h, theta, flags=flags)
