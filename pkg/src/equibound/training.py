"""Losses, exact subgradients, norm-ball projection, and first-order training.

Gradients are hand-derived reverse mode per variant (one hidden layer, four
variants: the closed forms are small and a finite-difference oracle covers
them).  Subgradient conventions, shared with the Rademacher sup-solver:
ReLU takes 0 at its kink, max-pooling ties resolve to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import (ModelSpec, Params, PreparedInputs, _drelu, _pooled,
                     _preactivations, _relu, init_params, pool_grad,
                     prepare_inputs)
from .seeding import STREAM_INIT, STREAM_SHUFFLE, rng_from
from .spectral import fourier_basis

__all__ = [
    "hinge_loss",
    "logistic_loss",
    "LOSSES",
    "TrainConfig",
    "grad",
    "batch_loss_and_grad",
    "weighted_score_grad",
    "project_norm_ball",
    "train",
]


def hinge_loss(s: np.ndarray, y: np.ndarray):
    """max(0, 1 - y s) and its subgradient in s (0 on the flat side and kink)."""
    margin = 1.0 - y * s
    value = np.maximum(margin, 0.0)
    dscore = np.where(margin > 0, -y, 0.0)
    return value, dscore


def logistic_loss(s: np.ndarray, y: np.ndarray):
    """log(1 + exp(-y s)) and its derivative in s."""
    z = -y * s
    value = np.logaddexp(0.0, z)
    dscore = -y / (1.0 + np.exp(-z))
    return value, dscore


LOSSES = {"hinge": hinge_loss, "logistic": logistic_loss}


@dataclass
class TrainConfig:
    steps: int = 300
    step_size: float = 1e-2
    batch: int = 0          # 0 = full batch
    seed: int = 0
    loss: str = "hinge"
    constraint: tuple[float, float] | None = None   # (M1, M2) projection radii
    optimizer: str = "adam"                         # "sgd" | "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.step_size <= 0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}; "
                             f"expected one of {sorted(LOSSES)}")


def _forward_cache(spec: ModelSpec, p: Params, prep: PreparedInputs):
    pre = _preactivations(p, prep)
    z = _relu(pre)
    pooled = _pooled(spec.pooling, z)
    return pre, z, pooled, pooled @ p.u


def _backward(spec: ModelSpec, p: Params, prep: PreparedInputs, cache,
              coef: np.ndarray) -> Params:
    """Gradient of ``sum_i coef_i * score_i`` over (u, w)."""
    pre, z, pooled, _ = cache
    grad_u = coef @ pooled
    delta = coef[:, None, None] * p.u[None, :, None] \
        * pool_grad(spec.pooling, z) * _drelu(pre)
    if spec.variant == "spatial":
        grad_w = np.einsum("mjg,mgkc->jck", delta, prep.T)
    elif spec.variant == "frequency":
        # complex gradient (d/dRe + i d/dIm) of the real-part read-out
        e = np.einsum("kg,mjg->mjk", prep.F, delta)
        grad_w = np.einsum("mjk,mkc->jck", e, np.conj(prep.Xh))
    elif spec.variant == "weightshare":
        grad_w = np.einsum("mja,kmac->jck", delta, prep.BX)
    else:  # local
        grad_w = np.einsum("mjl,mlnc->jcn", delta, prep.P)
    return Params(u=grad_u, w=grad_w)


def weighted_score_grad(spec: ModelSpec, p: Params, prep: PreparedInputs,
                        coef: np.ndarray):
    """(objective, gradient) for the linear functional sum_i coef_i score_i."""
    coef = np.asarray(coef, dtype=np.float64)
    cache = _forward_cache(spec, p, prep)
    return float(coef @ cache[3]), _backward(spec, p, prep, cache, coef)


def batch_loss_and_grad(spec: ModelSpec, p: Params, prep: PreparedInputs,
                        y: np.ndarray, loss: str):
    """Mean loss over the batch and its gradient over (u, w)."""
    cache = _forward_cache(spec, p, prep)
    value, dscore = LOSSES[loss](cache[3], np.asarray(y, dtype=np.float64))
    g = _backward(spec, p, prep, cache, dscore / prep.m)
    return float(np.mean(value)), g


def grad(spec: ModelSpec, p: Params, x, y: float, loss: str = "hinge") -> Params:
    """Exact subgradient of loss(forward(p, x), y) for a single sample."""
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; expected one of {sorted(LOSSES)}")
    if not (np.all(np.isfinite(p.u)) and np.all(np.isfinite(p.w))):
        raise ValueError("parameters contain NaN or infinite entries")
    prep = prepare_inputs(spec, np.asarray(getattr(x, "values", x))[None])
    _, g = batch_loss_and_grad(spec, p, prep, np.array([y], dtype=np.float64), loss)
    return g


def project_norm_ball(p: Params, m1: float, m2: float) -> Params:
    """Radially project (u, w) into the ball ||u|| <= M1, ||w|| <= M2.

    Interior points are returned unchanged (same arrays, bit for bit);
    the projection is idempotent.
    """
    if m1 <= 0 or m2 <= 0:
        raise ValueError("projection radii must be positive")
    u, w = p.u, p.w
    nu = float(np.linalg.norm(u))
    if nu > m1:
        u = u * (m1 / nu)
    nw = float(np.linalg.norm(w))
    if nw > m2:
        w = w * (m2 / nw)
    if u is p.u and w is p.w:
        return p
    return Params(u=u, w=w)


def _as_real_vector(p: Params) -> np.ndarray:
    """Flatten params to a real vector (complex filters as interleaved re/im)."""
    w = p.w.ravel()
    if np.iscomplexobj(w):
        w = np.ascontiguousarray(w).view(np.float64)
    return np.concatenate([p.u.ravel(), w])


def _from_real_vector(vec: np.ndarray, template: Params) -> Params:
    c1 = template.u.size
    u = vec[:c1].copy()
    rest = vec[c1:]
    if np.iscomplexobj(template.w):
        w = np.ascontiguousarray(rest).view(np.complex128).reshape(template.w.shape)
    else:
        w = rest.reshape(template.w.shape)
    return Params(u=u, w=w.copy())


def train(spec: ModelSpec, data, cfg: TrainConfig):
    """First-order training, deterministic given cfg.seed.

    ``data`` is anything with .X (m, |G|, c0) and .y (m,) attributes, or an
    (X, y) pair.  Returns (params, history); history[k] is (step, loss on
    the full training set before that step's update), with a final entry
    after the last update.  With cfg.constraint set every iterate is
    projected back into the norm ball.  Divergence aborts with a diagnostic.
    """
    if hasattr(data, "X"):
        X, y = data.X, data.y
    else:
        X, y = data
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("training data is empty")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} inputs vs {y.shape[0]} labels")
    prep_full = prepare_inputs(spec, X)
    p = init_params(spec, rng_from(cfg.seed, STREAM_INIT))
    if cfg.constraint is not None:
        p = project_norm_ball(p, *cfg.constraint)
    shuffle_rng = rng_from(cfg.seed, STREAM_SHUFFLE)
    m = X.shape[0]
    batch = m if cfg.batch in (0, None) else min(cfg.batch, m)
    order = np.arange(m)
    cursor = m  # forces a reshuffle on the first minibatch step
    vel = np.zeros_like(_as_real_vector(p))
    sq = np.zeros_like(vel)
    conj_pair = fourier_basis(spec.group).conj_pair \
        if spec.variant == "frequency" else None
    history = []
    for step in range(cfg.steps):
        full_loss = _mean_loss(spec, p, prep_full, y, cfg.loss)
        history.append((step, full_loss))
        if not np.isfinite(full_loss):
            raise RuntimeError(
                f"training diverged at step {step}: loss={full_loss!r} "
                f"(step_size={cfg.step_size}, optimizer={cfg.optimizer})")
        if batch == m:
            _, g = batch_loss_and_grad(spec, p, prep_full, y, cfg.loss)
        else:
            if cursor + batch > m:
                order = shuffle_rng.permutation(m)
                cursor = 0
            idx = order[cursor:cursor + batch]
            cursor += batch
            prep = prepare_inputs(spec, X[idx])
            _, g = batch_loss_and_grad(spec, p, prep, y[idx], cfg.loss)
        vec = _as_real_vector(p)
        gvec = _as_real_vector(g)
        if cfg.optimizer == "sgd":
            vec = vec - cfg.step_size * gvec
        else:
            t = step + 1
            vel = cfg.beta1 * vel + (1 - cfg.beta1) * gvec
            sq = cfg.beta2 * sq + (1 - cfg.beta2) * gvec * gvec
            vhat = vel / (1 - cfg.beta1 ** t)
            shat = sq / (1 - cfg.beta2 ** t)
            vec = vec - cfg.step_size * vhat / (np.sqrt(shat) + cfg.eps)
        p = _from_real_vector(vec, p)
        if conj_pair is not None:
            # keep the spectrum conjugate-symmetric against rounding drift
            p = Params(u=p.u, w=0.5 * (p.w + np.conj(p.w[..., conj_pair])))
        if cfg.constraint is not None:
            p = project_norm_ball(p, *cfg.constraint)
    history.append((cfg.steps, _mean_loss(spec, p, prep_full, y, cfg.loss)))
    return p, history


def _mean_loss(spec: ModelSpec, p: Params, prep: PreparedInputs, y,
               loss: str) -> float:
    cache = _forward_cache(spec, p, prep)
    value, _ = LOSSES[loss](cache[3], np.asarray(y, dtype=np.float64))
    return float(np.mean(value))
