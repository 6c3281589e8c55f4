"""Binary logistic regression trained by full-batch gradient descent.

Arithmetic runs in the precision of the training matrix: an F32 matrix is
trained entirely in float32, F64 in float64. I32 features are widened to
float32 once at the start of ``fit`` (storage stays 4 bytes per element and
compute stays 32-bit).

Objective::

    mean_i[ log(1 + exp(z_i)) - y_i * z_i ] + l2 / (2 n) * ||w||^2,   z = Xw + b

The bias is not penalized. The optimizer is gradient descent from zero with a
fixed step ``min(learning_rate, 1 / L)`` where ``L`` is a Frobenius-norm bound
on the gradient's Lipschitz constant, optionally with Nesterov momentum and
gradient-based restarts. It stops when the gradient's infinity norm drops to
``tolerance`` or after ``max_iters`` steps.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import serial
from .core import Matrix, Precision, as_labels
from .errors import DataError, ParameterError, ShapeError


@dataclass(frozen=True)
class LRConfig:
    l2_strength: float = 1.0
    learning_rate: float = 0.1
    max_iters: int = 1000
    tolerance: float = 1e-6
    seed: int = 0  # reserved; zero init makes training seed-free
    momentum: bool = True
    record_loss: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ParameterError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.l2_strength < 0:
            raise ParameterError(f"l2_strength must be >= 0, got {self.l2_strength}")
        if self.tolerance < 0:
            raise ParameterError(f"tolerance must be >= 0, got {self.tolerance}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "LRConfig":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown lr config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True, eq=False)
class LRModel:
    weights: np.ndarray
    bias: float
    compute_precision: Precision
    iterations_run: int
    final_loss: float
    converged: bool
    config: LRConfig = field(default_factory=LRConfig)
    step_size: float = 0.0
    loss_history: tuple = ()

    kind = "lr_model"

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def to_dict(self) -> dict:
        return serial.envelope(self.kind, {
            "weights": serial.enc_list(self.weights),
            "bias": serial.enc(self.bias),
            "compute_precision": self.compute_precision.value,
            "iterations_run": self.iterations_run,
            "final_loss": serial.enc(self.final_loss),
            "converged": self.converged,
            "step_size": serial.enc(self.step_size),
            "config": self.config.to_dict(),
        })

    @classmethod
    def from_dict(cls, doc: dict) -> "LRModel":
        doc = serial.open_envelope(doc, cls.kind)
        prec = Precision.parse(doc["compute_precision"])
        w = serial.dec_array(doc["weights"]).astype(prec.dtype)
        w.flags.writeable = False
        return cls(
            weights=w,
            bias=serial.dec(doc["bias"]),
            compute_precision=prec,
            iterations_run=int(doc["iterations_run"]),
            final_loss=serial.dec(doc["final_loss"]),
            converged=bool(doc["converged"]),
            config=LRConfig.from_dict(doc["config"]),
            step_size=serial.dec(doc["step_size"]),
        )


def sigmoid(z):
    """Logistic function without overflow: exp is only taken of -|z|."""
    z = np.asarray(z)
    if z.dtype.kind != "f":
        z = z.astype(np.float64)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(z.dtype, copy=False)
    return out if out.ndim else out[()]


def _softplus(z):
    return np.maximum(z, 0) + np.log1p(np.exp(-np.abs(z)))


def compute_dtype(precision: Precision) -> np.dtype:
    return np.dtype(np.float64) if precision is Precision.F64 else np.dtype(np.float32)


def loss_and_grad(x: np.ndarray, y: np.ndarray, w: np.ndarray, b, l2: float):
    """Regularized mean cross-entropy and its gradient (w, b), in x's dtype."""
    n = x.shape[0]
    dt = x.dtype
    z = x @ w + dt.type(b)
    lam = dt.type(l2 / n)
    loss = np.mean(_softplus(z) - y * z) + lam / dt.type(2) * np.dot(w, w)
    r = sigmoid(z) - y
    gw = x.T @ r / dt.type(n) + lam * w
    gb = np.mean(r)
    return loss, gw, gb


def _gradient(x, y, w, b, lam, inv_n):
    r = sigmoid(x @ w + b) - y
    return x.T @ r * inv_n + lam * w, np.mean(r)


def lipschitz_bound(x: np.ndarray, l2: float) -> float:
    """Upper bound on the gradient's Lipschitz constant, 0.25*||[X 1]||_F^2/n + l2/n."""
    n = x.shape[0]
    sq = float(np.einsum("ij,ij->", x, x, dtype=np.float64))
    return 0.25 * (sq + n) / n + l2 / n


def _training_arrays(x: Matrix, y) -> tuple[np.ndarray, np.ndarray, Precision]:
    labels = as_labels(y, x.rows)
    if x.rows == 0 or x.cols == 0:
        raise ShapeError(f"cannot train on an empty matrix {x.shape}")
    prec = x.precision
    dt = compute_dtype(prec)
    data = x.data
    if prec.is_float and not np.isfinite(data).all():
        raise DataError("training matrix contains NaN or infinite values")
    arr = data if data.dtype == dt else data.astype(dt)
    return arr, labels.astype(dt), (Precision.F64 if dt == np.float64 else Precision.F32)


def fit(x: Matrix, y, cfg: LRConfig | None = None) -> LRModel:
    cfg = cfg or LRConfig()
    arr, yv, prec = _training_arrays(x, y)
    dt = arr.dtype
    n, d = arr.shape
    step = dt.type(min(cfg.learning_rate, 1.0 / lipschitz_bound(arr, cfg.l2_strength)))
    lam = dt.type(cfg.l2_strength / n)
    inv_n = dt.type(1.0 / n)
    tol = cfg.tolerance

    w = np.zeros(d, dtype=dt)
    b = dt.type(0)
    yw, yb = w, b  # point where the gradient is taken
    t = 1.0
    converged = False
    history = []
    it = 0
    for it in range(1, cfg.max_iters + 1):
        gw, gb = _gradient(arr, yv, yw, yb, lam, inv_n)
        if max(float(np.max(np.abs(gw))), abs(float(gb))) <= tol:
            w, b = yw, yb
            converged = True
            it -= 1
            break
        nw = yw - step * gw
        nb = dt.type(yb - step * gb)
        if cfg.momentum:
            if float(np.dot(gw, nw - w)) + float(gb) * float(nb - b) > 0:
                t = 1.0  # momentum is pushing uphill: restart
                yw, yb = nw, nb
            else:
                t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
                beta = dt.type((t - 1.0) / t_next)
                yw = nw + beta * (nw - w)
                yb = dt.type(nb + beta * (nb - b))
                t = t_next
        else:
            yw, yb = nw, nb
        w, b = nw, nb
        if cfg.record_loss:
            history.append(float(loss_and_grad(arr, yv, w, b, cfg.l2_strength)[0]))

    loss = float(loss_and_grad(arr, yv, w, b, cfg.l2_strength)[0])
    w = np.array(w, copy=True)
    w.flags.writeable = False
    return LRModel(
        weights=w,
        bias=float(b),
        compute_precision=prec,
        iterations_run=it,
        final_loss=max(loss, 0.0),
        converged=converged,
        config=cfg,
        step_size=float(step),
        loss_history=tuple(history),
    )


def decision_function(model: LRModel, x: Matrix) -> np.ndarray:
    if x.cols != model.n_features:
        raise ShapeError(f"model expects {model.n_features} features, got {x.cols}")
    dt = compute_dtype(model.compute_precision)
    arr = x.data if x.data.dtype == dt else x.data.astype(dt)
    return arr @ model.weights.astype(dt, copy=False) + dt.type(model.bias)


def predict_proba(model: LRModel, x: Matrix) -> np.ndarray:
    return sigmoid(decision_function(model, x))


def predict(model: LRModel, x: Matrix) -> np.ndarray:
    """Hard labels; sigmoid(z) >= 0.5 exactly when z >= 0, so threshold z."""
    return as_labels((decision_function(model, x) >= 0).astype(np.int64))


def accuracy(pred, truth) -> float:
    pred = as_labels(pred)
    truth = as_labels(truth)
    if pred.shape != truth.shape:
        raise ShapeError(f"{pred.shape[0]} predictions vs {truth.shape[0]} labels")
    if pred.size == 0:
        raise ShapeError("accuracy of an empty label vector is undefined")
    return float(np.mean(pred == truth))
