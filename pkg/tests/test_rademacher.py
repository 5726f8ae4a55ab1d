import math

import numpy as np
import pytest

from equibound.groups import make_cyclic
from equibound.models import ModelSpec, Pooling
from equibound.rademacher import (KHINTCHINE_CONSTANT, SolverConfig,
                                  channel_sums, estimate_rc,
                                  lower_bound_witness,
                                  make_positive_orthant_dataset)

AVG = Pooling("average")

FAST_SOLVER = SolverConfig(restarts=3, steps=120, step_size=0.05)


def avg_spec(group, c0=2, c1=3):
    return ModelSpec("spatial", group, c0, c1, AVG)


def test_positive_orthant_dataset_contract():
    c4 = make_cyclic(4)
    X = make_positive_orthant_dataset(c4, c0=2, m=3, b_x=1.5, seed=0)
    assert X.shape == (3, 4, 2)
    assert X.min() >= 0.0
    norms = np.linalg.norm(X.reshape(3, -1), axis=1)
    assert np.abs(norms - 1.5).max() < 1e-12
    X2 = make_positive_orthant_dataset(c4, c0=2, m=3, b_x=1.5, seed=0)
    assert np.array_equal(X, X2)
    with pytest.raises(ValueError):
        make_positive_orthant_dataset(c4, 2, 0, 1.0)


def test_zero_radius_gives_zero():
    c4 = make_cyclic(4)
    X = make_positive_orthant_dataset(c4, 2, 8, 1.0, seed=1)
    est = estimate_rc(avg_spec(c4), 0.0, 1.0, X, n_mc=4, solver=FAST_SOLVER)
    assert est.mean == 0.0 and est.std_error == 0.0
    est = estimate_rc(avg_spec(c4), 1.0, 0.0, X, n_mc=4, solver=FAST_SOLVER)
    assert np.all(est.sup_values == 0.0)


def test_estimate_is_deterministic():
    c4 = make_cyclic(4)
    X = make_positive_orthant_dataset(c4, 2, 8, 1.0, seed=2)
    a = estimate_rc(avg_spec(c4), 1.0, 1.0, X, n_mc=3, solver=FAST_SOLVER, seed=7)
    b = estimate_rc(avg_spec(c4), 1.0, 1.0, X, n_mc=3, solver=FAST_SOLVER, seed=7)
    assert np.array_equal(a.sup_values, b.sup_values)


def test_estimate_upper_consistency_and_monotonicity():
    c4 = make_cyclic(4)
    X = make_positive_orthant_dataset(c4, 2, 16, 1.0, seed=3)
    est = estimate_rc(avg_spec(c4), 1.0, 1.0, X, n_mc=16, solver=FAST_SOLVER,
                      seed=5)
    upper = 1.0 / math.sqrt(16)
    assert est.mean - 2 * est.std_error <= upper
    # shared sign vectors: a larger ball can only help the solver
    bigger = estimate_rc(avg_spec(c4), 2.0, 1.0, X, n_mc=16,
                         solver=FAST_SOLVER, seed=5)
    assert bigger.mean >= est.mean - 1e-9
    bigger2 = estimate_rc(avg_spec(c4), 1.0, 2.0, X, n_mc=16,
                          solver=FAST_SOLVER, seed=5)
    assert bigger2.mean >= est.mean - 1e-9


def test_estimate_scales_with_data():
    # homogeneity in x; needs the full default solver to hold at 5%
    c4 = make_cyclic(4)
    X = make_positive_orthant_dataset(c4, 2, 8, 1.0, seed=4)
    a = estimate_rc(avg_spec(c4), 1.0, 1.0, X, n_mc=8, seed=9)
    b = estimate_rc(avg_spec(c4), 1.0, 1.0, 2.0 * X, n_mc=8, seed=9)
    assert abs(b.mean - 2.0 * a.mean) <= 0.05 * max(b.mean, 2.0 * a.mean)


def test_witness_single_sample_closed_form():
    c4 = make_cyclic(4)
    X = make_positive_orthant_dataset(c4, 2, 1, 1.0, seed=5)
    t = channel_sums(X)
    wit = lower_bound_witness(c4, 2, 1.5, 2.0, X, n_mc=8, seed=0)
    expected = 1.5 * 2.0 * float(np.linalg.norm(t[0]))
    assert np.abs(wit.samples - expected).max() < 1e-12
    assert wit.std_error == 0.0 or wit.std_error < 1e-12


def test_witness_khintchine_floor():
    c4 = make_cyclic(4)
    for seed in range(20):
        X = make_positive_orthant_dataset(c4, 2, 16, 1.0, seed=seed)
        t = channel_sums(X)
        wit = lower_bound_witness(c4, 2, 1.0, 1.0, X, n_mc=64, seed=seed)
        floor = KHINTCHINE_CONSTANT * math.sqrt(float((t ** 2).sum())) / 16
        assert wit.mean >= floor - 3 * wit.std_error


def test_witness_preconditions():
    c4 = make_cyclic(4)
    X = make_positive_orthant_dataset(c4, 2, 4, 1.0, seed=6)
    bad = X.copy()
    bad[0, 0, 0] = -0.5
    with pytest.raises(ValueError, match="nonnegative"):
        lower_bound_witness(c4, 2, 1.0, 1.0, bad)
    uneven = X.copy()
    uneven[0] *= 0.5
    with pytest.raises(ValueError, match="common norm"):
        lower_bound_witness(c4, 2, 1.0, 1.0, uneven)
    with pytest.raises(ValueError):
        lower_bound_witness(c4, 3, 1.0, 1.0, X)   # wrong channel count


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(restarts=0)
    with pytest.raises(ValueError):
        SolverConfig(step_size=0.0)
    c4 = make_cyclic(4)
    X = make_positive_orthant_dataset(c4, 2, 4, 1.0, seed=7)
    with pytest.raises(ValueError):
        estimate_rc(avg_spec(c4), 1.0, 1.0, X, n_mc=0)
