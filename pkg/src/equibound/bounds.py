"""Norm-based generalization bounds evaluated from measured quantities.

All bounds share the confidence term ``4 sqrt(2 log(4/delta) / m)`` (loss
bound c = 1, matching the 1-Lipschitz loss assumption) and differ in the
complexity term:

* general/average pooling:  ``2 b_x M1 M2 / sqrt(m)``
* max pooling:              ``2 M1 M2 g(X) / sqrt(m)`` with the
  data-dependent ``g(X)`` built from the worst-case translated Gram norm
* locality:                 ``sqrt(O_phi / |G|)`` times the general term
* band-limited floor:       locality at the uncertainty-principle minimum
  spatial support ``ceil(|G| / B)``
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .groups import FiniteGroup
from .models import ModelSpec, Params, SharingBasis, spatial_equivalent_m2
from .seeding import rng_from

__all__ = [
    "BoundInputs",
    "BoundReport",
    "bound_general_pooling",
    "bound_maxpool",
    "bound_locality",
    "bound_bandlimited_floor",
    "weight_share_norm",
    "measure_inputs",
    "bound_for_model",
    "power_iteration_norm",
    "max_translate_gram_norm",
    "EXACT_ASSIGNMENT_BUDGET",
]

EXACT_ASSIGNMENT_BUDGET = 10 ** 6


@dataclass(frozen=True)
class BoundInputs:
    """Measured quantities feeding the bound formulas."""

    M1: float
    M2: float
    b_x: float
    m: int
    delta: float
    group_order: int
    o_phi: int | None = None
    band_limit: int | None = None

    def __post_init__(self):
        if min(self.M1, self.M2, self.b_x) < 0:
            raise ValueError("M1, M2, b_x must be nonnegative")
        if self.m < 1:
            raise ValueError(f"sample count must be >= 1, got {self.m}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.group_order < 1:
            raise ValueError("group order must be positive")
        if self.o_phi is not None and not 1 <= self.o_phi <= self.group_order:
            raise ValueError(f"o_phi must lie in [1, {self.group_order}], "
                             f"got {self.o_phi}")
        if self.band_limit is not None and \
                not 1 <= self.band_limit <= self.group_order:
            raise ValueError(f"band limit must lie in [1, {self.group_order}], "
                             f"got {self.band_limit}")


@dataclass(frozen=True)
class BoundReport:
    complexity_term: float
    confidence_term: float
    total: float
    variant_tag: str
    mmax: float | None = None
    mmax_is_exact: bool | None = None


def _confidence(m: int, delta: float) -> float:
    return 4.0 * math.sqrt(2.0 * math.log(4.0 / delta) / m)


def bound_general_pooling(bi: BoundInputs) -> BoundReport:
    """``2 b_x M1 M2 / sqrt(m)`` plus the confidence term."""
    complexity = 2.0 * bi.b_x * bi.M1 * bi.M2 / math.sqrt(bi.m)
    confidence = _confidence(bi.m, bi.delta)
    return BoundReport(complexity_term=complexity, confidence_term=confidence,
                       total=complexity + confidence, variant_tag="general")


def power_iteration_norm(A: np.ndarray, tol: float = 1e-8,
                         max_iter: int = 1000) -> float:
    """Spectral norm of a PSD matrix by power iteration.

    Deterministic all-ones start; stops when the Rayleigh quotient moves by
    less than ``tol`` relatively.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if n == 1:
        return float(abs(A[0, 0]))
    v = np.full(n, 1.0 / math.sqrt(n))
    lam = float(v @ A @ v)
    for _ in range(max_iter):
        av = A @ v
        norm = float(np.linalg.norm(av))
        if norm == 0.0:
            return 0.0
        v = av / norm
        new_lam = float(v @ A @ v)
        if abs(new_lam - lam) <= tol * max(abs(new_lam), 1e-300):
            return new_lam
        lam = new_lam
    return lam


def _translate_gram_table(group: FiniteGroup, X: np.ndarray) -> np.ndarray:
    """Q[c, i, j] = <x_i, (translate by c) x_j>, channel-wise on (m, |G|, c0).

    Translation invariance gives <T_a x_i, T_b x_j> = Q[a^-1 b, i, j], so
    this table is all that is needed to assemble any assignment's Gram.
    """
    m = X.shape[0]
    flat = X.reshape(m, -1)
    Q = np.empty((group.order, m, m))
    for c in range(group.order):
        shifted = X[:, group.cayley[group.inv[c]], :].reshape(m, -1)
        Q[c] = flat @ shifted.T
    return Q


def _gram_for_assignment(group: FiniteGroup, Q: np.ndarray,
                         l: np.ndarray) -> np.ndarray:
    rel = group.cayley[group.inv[l]][:, l]   # rel[i, j] = l_i^-1 l_j
    i_idx, j_idx = np.indices(rel.shape)
    return Q[rel, i_idx, j_idx]


def max_translate_gram_norm(group: FiniteGroup, X: np.ndarray, mode,
                            seed: int = 0) -> tuple[float, bool]:
    """Worst translated-Gram spectral norm over per-sample group assignments.

    ``mode`` is "exact" (enumerates all |G|^m assignments, rejected above
    the budget) or ("sampled", k) (k random assignments plus the identity
    one; a certified lower estimate).  Returns (value, is_exact).
    """
    X = np.asarray(X, dtype=np.float64)
    m = X.shape[0]
    Q = _translate_gram_table(group, X)
    if mode == "exact":
        n_assign = group.order ** m
        if n_assign > EXACT_ASSIGNMENT_BUDGET:
            k = 10 * EXACT_ASSIGNMENT_BUDGET // max(m, 1)
            raise ValueError(
                f"exact mode needs {group.order}^{m} = {n_assign} assignments, "
                f"over the {EXACT_ASSIGNMENT_BUDGET} budget; use "
                f"mode=('sampled', k), e.g. k={min(k, 100000)}")
        best = 0.0
        for l in itertools.product(range(group.order), repeat=m):
            gram = _gram_for_assignment(group, Q, np.array(l, dtype=np.int64))
            best = max(best, power_iteration_norm(gram))
        return best, True
    kind, k = mode
    if kind != "sampled" or k < 1:
        raise ValueError(f"mode must be 'exact' or ('sampled', k>=1), got {mode!r}")
    rng = rng_from(seed, 0xA551)
    best = power_iteration_norm(
        _gram_for_assignment(group, Q, np.zeros(m, dtype=np.int64)))
    for _ in range(k):
        l = rng.integers(0, group.order, size=m)
        gram = _gram_for_assignment(group, Q, l)
        best = max(best, power_iteration_norm(gram))
    return best, False


def _g_of_x(mmax: float, b_x: float, order: int) -> float:
    core = 8.0 * math.log(order) * mmax
    return math.sqrt(core + b_x ** 2 + math.sqrt(core * b_x ** 2))


def bound_maxpool(bi: BoundInputs, group: FiniteGroup, X: np.ndarray,
                  mmax_mode="exact", seed: int = 0) -> BoundReport:
    """Max-pooling bound ``2 M1 M2 g(X) / sqrt(m)``.

    ``g(X)`` combines b_x with the worst-case spectral norm of the Gram of
    per-sample group translates of the training matrix.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != bi.m:
        raise ValueError(f"X has {X.shape[0]} samples, inputs say m={bi.m}")
    mmax, exact = max_translate_gram_norm(group, X, mmax_mode, seed=seed)
    complexity = 2.0 * bi.M1 * bi.M2 * _g_of_x(mmax, bi.b_x, group.order) \
        / math.sqrt(bi.m)
    confidence = _confidence(bi.m, bi.delta)
    return BoundReport(complexity_term=complexity, confidence_term=confidence,
                       total=complexity + confidence, variant_tag="maxpool",
                       mmax=mmax, mmax_is_exact=exact)


def weight_share_norm(basis: SharingBasis, coeffs: np.ndarray) -> float:
    """The sharing-scheme norm: worst row-slot Frobenius norm.

    For each row index l, stack the vectors ``sum_k w[j,c,k] b_{k,l}`` over
    all channel pairs (j, c) and take the Frobenius norm; return the max
    over l.  Equals the plain coefficient norm when the rows ``{b_{k,l}}_k``
    are orthonormal for every l (the circulant basis in particular).
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 3 or coeffs.shape[2] != basis.mats.shape[0]:
        raise ValueError(f"coefficients must have shape (c1, c0, {basis.mats.shape[0]}),"
                         f" got {coeffs.shape}")
    # rows[k, l, :] = b_{k,l};  v[j, c, l, :] = sum_k w[j,c,k] b_{k,l}
    v = np.einsum("jck,klh->jclh", coeffs, basis.mats)
    per_l = np.sqrt(np.einsum("jclh,jclh->l", v, v))
    return float(per_l.max())


def bound_locality(bi: BoundInputs) -> BoundReport:
    """Locality bound: the general complexity term scaled by sqrt(O_phi/|G|).

    Computed literally as that product so the scaling identity against
    `bound_general_pooling` is exact in floating point.
    """
    if bi.o_phi is None:
        raise ValueError("bound_locality needs o_phi")
    base = bound_general_pooling(bi)
    factor = math.sqrt(bi.o_phi / bi.group_order)
    complexity = factor * base.complexity_term
    return BoundReport(complexity_term=complexity,
                       confidence_term=base.confidence_term,
                       total=complexity + base.confidence_term,
                       variant_tag="locality")


def bound_bandlimited_floor(bi: BoundInputs) -> BoundReport:
    """Smallest locality bound a B-band-limited filter can achieve.

    The uncertainty principle forces at least ceil(|G| / B) nonzero spatial
    entries, so O_phi is pinned to that floor (ceil keeps the bound valid
    when B does not divide |G|).
    """
    if bi.band_limit is None:
        raise ValueError("bound_bandlimited_floor needs band_limit")
    floor = -(-bi.group_order // bi.band_limit)
    pinned = BoundInputs(M1=bi.M1, M2=bi.M2, b_x=bi.b_x, m=bi.m,
                         delta=bi.delta, group_order=bi.group_order,
                         o_phi=floor, band_limit=bi.band_limit)
    report = bound_locality(pinned)
    return BoundReport(complexity_term=report.complexity_term,
                       confidence_term=report.confidence_term,
                       total=report.total, variant_tag="bandlimit")


def measure_inputs(spec: ModelSpec, p: Params, dataset, delta: float) -> BoundInputs:
    """BoundInputs from trained params and a dataset.

    M2 is the plain coefficient norm, except: weight-share models use the
    sharing-scheme norm, and frequency models divide out the sqrt(|G|)
    Parseval factor so the bound matches the equivalent spatial model.
    """
    X = np.asarray(dataset.X if hasattr(dataset, "X") else dataset,
                   dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("dataset is empty")
    m1 = float(np.linalg.norm(p.u))
    if spec.variant == "weightshare":
        m2 = weight_share_norm(spec.basis, p.w)
    else:
        m2 = spatial_equivalent_m2(spec, p)
    b_x = float(np.linalg.norm(X.reshape(X.shape[0], -1), axis=1).max())
    o_phi = spec.patches.o_phi if spec.variant == "local" else None
    return BoundInputs(M1=m1, M2=m2, b_x=b_x, m=X.shape[0], delta=delta,
                       group_order=spec.group.order, o_phi=o_phi)


def bound_for_model(spec: ModelSpec, p: Params, dataset, delta: float,
                    mmax_mode=("sampled", 1000), seed: int = 0) -> BoundReport:
    """The bound matching the model's pooling and variant."""
    bi = measure_inputs(spec, p, dataset, delta)
    if spec.pooling.kind == "max":
        X = dataset.X if hasattr(dataset, "X") else dataset
        return bound_maxpool(bi, spec.group, X, mmax_mode=mmax_mode, seed=seed)
    if spec.variant == "local":
        return bound_locality(bi)
    return bound_general_pooling(bi)
