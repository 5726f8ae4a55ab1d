"""Monte-Carlo empirical Rademacher complexity and the analytic witness.

`estimate_rc` replaces the expectation over sign vectors by a Monte-Carlo
mean and the supremum over the norm ball by projected gradient ascent with
restarts, so it is a LOWER estimate of the true empirical complexity
(solver suboptimality only pulls it down; each per-sign supremum is clamped
at 0, which the zero hypothesis always attains).

Sign vectors are derived from (seed, sample index) only, so two calls with
the same seed but different ball radii or solver settings see identical
signs (common random numbers; makes monotonicity comparisons meaningful at
small n_mc).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .groups import FiniteGroup
from .models import ModelSpec, Params, init_params, prepare_inputs
from .seeding import (STREAM_ORTHANT_DATA, STREAM_RC_RESTART, STREAM_RC_SIGNS,
                      rng_from, sign_vector)
from .training import project_norm_ball, weighted_score_grad

__all__ = [
    "SolverConfig",
    "RademacherEstimate",
    "WitnessEstimate",
    "estimate_rc",
    "lower_bound_witness",
    "make_positive_orthant_dataset",
    "KHINTCHINE_CONSTANT",
]

# Constant c in the vector Khintchine lower bound
# E || sum_i eps_i v_i || >= c (sum_i ||v_i||^2)^(1/2).
KHINTCHINE_CONSTANT = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class SolverConfig:
    restarts: int = 8
    steps: int = 300
    step_size: float = 0.05
    decay: float = 0.5
    decay_every: int = 100

    def __post_init__(self):
        if self.restarts < 1 or self.steps < 1:
            raise ValueError("restarts and steps must be >= 1")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")


@dataclass(frozen=True)
class RademacherEstimate:
    mean: float
    std_error: float
    n_mc: int
    sup_solver_restarts: int
    sup_values: np.ndarray
    witness_value: float | None = None


@dataclass(frozen=True)
class WitnessEstimate:
    mean: float
    std_error: float
    n_mc: int
    samples: np.ndarray


def _boundary_init(spec: ModelSpec, m1: float, m2: float,
                   rng: np.random.Generator) -> Params:
    """Uniform direction on the ball boundary (the optimum lies there,
    by positive homogeneity of the class)."""
    p = init_params(spec, rng)
    nu = np.linalg.norm(p.u)
    nw = np.linalg.norm(p.w)
    u = p.u * (m1 / nu) if nu > 0 else p.u
    w = p.w * (m2 / nw) if nw > 0 else p.w
    return Params(u=u, w=w)


def estimate_rc(spec: ModelSpec, m1: float, m2: float, dataset,
                n_mc: int = 64, solver: SolverConfig | None = None,
                seed: int = 0) -> RademacherEstimate:
    """Monte-Carlo lower estimate of the empirical Rademacher complexity.

    For each sign vector eps, maximizes ``(1/m) sum_i eps_i score(x_i)``
    over the (M1, M2) ball by projected gradient ascent with restarts.
    """
    if n_mc < 1:
        raise ValueError(f"n_mc must be >= 1, got {n_mc}")
    solver = solver or SolverConfig()
    X = np.asarray(dataset.X if hasattr(dataset, "X") else dataset,
                   dtype=np.float64)
    m = X.shape[0]
    sups = np.zeros(n_mc)
    if m1 > 0 and m2 > 0:
        prep = prepare_inputs(spec, X)
        for i in range(n_mc):
            eps = sign_vector(rng_from(seed, STREAM_RC_SIGNS, i), m)
            coef = eps / m
            best = 0.0
            for r in range(solver.restarts):
                rng = rng_from(seed, STREAM_RC_RESTART, i, r)
                p = _boundary_init(spec, m1, m2, rng)
                lr = solver.step_size
                for step in range(solver.steps):
                    if step and step % solver.decay_every == 0:
                        lr *= solver.decay
                    value, g = weighted_score_grad(spec, p, prep, coef)
                    best = max(best, value)
                    p = Params(u=p.u + lr * g.u, w=p.w + lr * g.w)
                    p = project_norm_ball(p, m1, m2)
                value, _ = weighted_score_grad(spec, p, prep, coef)
                best = max(best, value)
            sups[i] = best
    mean = float(sups.mean())
    se = float(sups.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
    return RademacherEstimate(mean=mean, std_error=se, n_mc=n_mc,
                              sup_solver_restarts=solver.restarts,
                              sup_values=sups)


def channel_sums(X: np.ndarray) -> np.ndarray:
    """t_i = vector of per-channel sums of sample i; shape (m, c0)."""
    return np.asarray(X, dtype=np.float64).sum(axis=1)


def lower_bound_witness(group: FiniteGroup, c0: int, m1: float, m2: float,
                        dataset, n_mc: int = 64, seed: int = 0,
                        norm_tol: float = 1e-9) -> WitnessEstimate:
    """Monte-Carlo mean of ``(M1 M2 / m) ||sum_i eps_i t_i||``.

    t_i stacks the per-channel sums of sample i.  Requires the witness
    construction's data assumptions: every entry nonnegative and every
    sample at the common norm b_x.  Only meaningful against the average
    pooling + ReLU class.  Satisfies the Khintchine floor
    ``>= KHINTCHINE_CONSTANT * sqrt(sum ||t_i||^2) * M1 M2 / m`` up to
    Monte-Carlo error.
    """
    if n_mc < 1:
        raise ValueError(f"n_mc must be >= 1, got {n_mc}")
    X = np.asarray(dataset.X if hasattr(dataset, "X") else dataset,
                   dtype=np.float64)
    if X.ndim != 3 or X.shape[1] != group.order or X.shape[2] != c0:
        raise ValueError(f"expected data of shape (m, {group.order}, {c0}), "
                         f"got {X.shape}")
    m = X.shape[0]
    if X.min() < -1e-12:
        raise ValueError("witness construction needs entrywise nonnegative "
                         f"data; min entry is {X.min():.3e}")
    norms = np.linalg.norm(X.reshape(m, -1), axis=1)
    b_x = norms.max()
    if (b_x - norms.min()) > norm_tol * max(b_x, 1.0):
        raise ValueError("witness construction needs every sample at the "
                         f"common norm; norms span [{norms.min():.12g}, "
                         f"{b_x:.12g}]")
    t = channel_sums(X)
    samples = np.zeros(n_mc)
    for i in range(n_mc):
        eps = sign_vector(rng_from(seed, STREAM_RC_SIGNS, i), m)
        samples[i] = (m1 * m2 / m) * float(np.linalg.norm(eps @ t))
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
    return WitnessEstimate(mean=mean, std_error=se, n_mc=n_mc, samples=samples)


def make_positive_orthant_dataset(group: FiniteGroup, c0: int, m: int,
                                  b_x: float, seed: int = 0) -> np.ndarray:
    """Entrywise-nonnegative signals rescaled to norm exactly b_x; (m, |G|, c0)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = rng_from(seed, STREAM_ORTHANT_DATA)
    X = np.abs(rng.normal(size=(m, group.order, c0)))
    norms = np.linalg.norm(X.reshape(m, -1), axis=1)
    return X * (b_x / norms)[:, None, None]
