import numpy as np
import pytest

from equibound.groups import make_cyclic, parse_group_spec
from equibound.models import (ModelSpec, Params, Pooling, forward,
                              init_params, make_circulant_basis,
                              make_contiguous_patches)
from equibound.seeding import rng_from
from equibound.spectral import fourier_basis, hermitian_project
from equibound.training import (LOSSES, TrainConfig, batch_loss_and_grad,
                                grad, hinge_loss, logistic_loss,
                                project_norm_ball, train)
from equibound.models import prepare_inputs

AVG = Pooling("average")
MAX = Pooling("max")
GEN = Pooling("general", rho="relu", phi="abs")


def make_specs(group):
    return [
        ModelSpec("spatial", group, 2, 3, AVG),
        ModelSpec("spatial", group, 2, 3, MAX),
        ModelSpec("spatial", group, 2, 3, GEN),
        ModelSpec("frequency", group, 2, 3, AVG),
        ModelSpec("frequency", group, 2, 3, MAX),
        ModelSpec("weightshare", group, 2, 3, AVG,
                  basis=make_circulant_basis(group)),
        ModelSpec("weightshare", group, 2, 3, MAX,
                  basis=make_circulant_basis(group)),
        ModelSpec("local", group, 2, 3, AVG,
                  patches=make_contiguous_patches(group, 3)),
        ModelSpec("local", group, 2, 3, GEN,
                  patches=make_contiguous_patches(group, 3)),
    ]


def test_loss_values_and_derivatives():
    s = np.array([0.5, 2.0, -0.3])
    y = np.array([1.0, 1.0, -1.0])
    v, d = hinge_loss(s, y)
    assert np.allclose(v, [0.5, 0.0, 0.7])
    assert np.allclose(d, [-1.0, 0.0, 1.0])
    v, d = logistic_loss(np.array([0.0]), np.array([1.0]))
    assert np.allclose(v, [np.log(2.0)])
    assert np.allclose(d, [-0.5])


def test_hinge_flat_region_zero_grad():
    spec = ModelSpec("spatial", make_cyclic(4), 1, 2, AVG)
    p = init_params(spec, rng_from(0, 1))
    x = np.abs(np.random.default_rng(0).normal(size=(4, 1)))
    s = forward(spec, p, x)
    y = 1.0 if s > 0 else -1.0
    scale = 2.0 / abs(s)  # pushes y*s to 2 > 1
    p2 = Params(u=scale * p.u, w=p.w)
    g = grad(spec, p2, x, y, "hinge")
    assert np.all(g.u == 0) and np.all(g.w == 0)


def test_zero_u_kills_filter_grad():
    spec = ModelSpec("spatial", make_cyclic(4), 1, 2, AVG)
    p = init_params(spec, rng_from(0, 2))
    p = Params(u=np.zeros(2), w=np.abs(p.w))  # positive filters: live ReLUs
    g = grad(spec, p, np.ones((4, 1)), 1.0, "hinge")
    assert np.all(g.w == 0)
    assert np.any(g.u != 0)


def _perturbation(spec, shape_like, rng):
    """Random direction in the valid parameter manifold (conjugate-symmetric
    for frequency filters, so forward stays well-defined along the line)."""
    du = rng.normal(size=shape_like.u.shape)
    if np.iscomplexobj(shape_like.w):
        basis = fourier_basis(spec.group)
        dw = rng.normal(size=shape_like.w.shape) \
            + 1j * rng.normal(size=shape_like.w.shape)
        dw = hermitian_project(basis, dw)
    else:
        dw = rng.normal(size=shape_like.w.shape)
    return Params(u=du, w=dw)


def _directional(analytic: Params, direction: Params) -> float:
    d = float(analytic.u @ direction.u)
    if np.iscomplexobj(analytic.w):
        # complex grad packs (d/dRe, d/dIm); real inner product of the pair
        d += float(np.sum(analytic.w.real * direction.w.real
                          + analytic.w.imag * direction.w.imag))
    else:
        d += float(np.sum(analytic.w * direction.w))
    return d


def _is_smooth_point(spec, p, x, y, loss, margin=1e-3):
    """Keep sampled points well away from every kink crossed by the network."""
    from equibound.models import SCALAR_MAPS, _preactivations, _relu
    prep = prepare_inputs(spec, x[None])
    pre = _preactivations(p, prep)
    if np.abs(pre).min() < margin:
        return False
    z = _relu(pre)
    if spec.pooling.kind == "max":
        top2 = np.sort(z[0], axis=-1)[:, -2:]
        if (top2[:, 1] - top2[:, 0]).min() < margin:
            return False
    if spec.pooling.kind == "general":
        # rho kinks sit where pre does (already excluded); phi kinks at 0
        inner = np.mean(SCALAR_MAPS[spec.pooling.rho][0](z[0]), axis=-1)
        if np.abs(inner).min() < margin:
            return False
    s = forward(spec, p, x)
    if loss == "hinge" and abs(1.0 - y * s) < margin:
        return False
    return True


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(42)
    group = make_cyclic(8)
    eps = 1e-6
    checked = 0
    for spec in make_specs(group):
        for loss in ("hinge", "logistic"):
            trials = 0
            while trials < 3:
                p = init_params(spec, rng_from(int(rng.integers(1 << 30)), 3))
                x = rng.normal(size=(8, 2))
                y = float(rng.choice([-1.0, 1.0]))
                if not _is_smooth_point(spec, p, x, y, loss):
                    continue
                g = grad(spec, p, x, y, loss)
                direction = _perturbation(spec, p, rng)
                analytic = _directional(g, direction)
                f = lambda t: LOSSES[loss](
                    np.array([forward(spec, Params(u=p.u + t * direction.u,
                                                   w=p.w + t * direction.w), x)]),
                    np.array([y]))[0][0]
                fd = (f(eps) - f(-eps)) / (2 * eps)
                if abs(fd) < 1e-3:
                    continue
                assert abs(analytic - fd) / abs(fd) < 1e-5, (spec.variant, loss)
                trials += 1
                checked += 1
    assert checked >= 48


def test_project_norm_ball():
    p = Params(u=np.array([3.0, 4.0]), w=np.ones((1, 1, 4)))
    proj = project_norm_ball(p, 2.5, 10.0)
    assert np.linalg.norm(proj.u) == 2.5       # scaled by exactly 1/2
    assert proj.w is p.w                        # untouched side
    inside = project_norm_ball(proj, 2.5, 10.0)
    assert inside.u is proj.u and inside.w is proj.w   # idempotent, bit-for-bit
    with pytest.raises(ValueError):
        project_norm_ball(p, 0.0, 1.0)


def test_projection_is_nearest_point_on_grid():
    # brute-force nearest point of a 2-d toy instance over a grid of the disk
    target = np.array([3.0, 1.0])
    proj = project_norm_ball(Params(u=target, w=np.zeros((1, 1, 1))), 1.0, 1.0)
    grid = []
    for a in np.linspace(-1, 1, 401):
        for b in np.linspace(-1, 1, 401):
            if a * a + b * b <= 1.0:
                grid.append((a, b))
    grid = np.array(grid)
    dists = np.linalg.norm(grid - target, axis=1)
    best = grid[dists.argmin()]
    assert np.linalg.norm(proj.u - best) < 1e-2  # grid pitch is 5e-3


def test_train_separable_toy():
    # the two points sit on different group orbits, so an invariant model
    # can separate them (points on one orbit provably cannot be split)
    c2 = make_cyclic(2)
    spec = ModelSpec("spatial", c2, 1, 2, AVG)
    X = np.array([[[1.0], [0.5]], [[-0.5], [-1.0]]])
    y = np.array([1.0, -1.0])
    cfg = TrainConfig(steps=500, step_size=1e-2, seed=0, loss="hinge")
    p, history = train(spec, (X, y), cfg)
    assert history[-1][1] < 0.01
    assert history[-1][0] == 500


def test_train_determinism():
    group = parse_group_spec("c4")
    spec = ModelSpec("spatial", group, 1, 2, AVG)
    rng = np.random.default_rng(5)
    X = rng.normal(size=(10, 4, 1))
    y = np.where(rng.normal(size=10) > 0, 1.0, -1.0)
    cfg = TrainConfig(steps=50, step_size=1e-2, seed=11, batch=4)
    p1, h1 = train(spec, (X, y), cfg)
    p2, h2 = train(spec, (X, y), cfg)
    assert np.array_equal(p1.u, p2.u) and np.array_equal(p1.w, p2.w)
    assert h1 == h2


def test_train_respects_constraint():
    group = make_cyclic(4)
    spec = ModelSpec("spatial", group, 1, 2, AVG)
    rng = np.random.default_rng(6)
    X = rng.normal(size=(8, 4, 1))
    y = np.where(rng.normal(size=8) > 0, 1.0, -1.0)
    cfg = TrainConfig(steps=40, step_size=0.5, seed=1, optimizer="sgd",
                      constraint=(0.5, 0.25))
    p, _ = train(spec, (X, y), cfg)
    m1, m2 = p.norms()
    assert m1 <= 0.5 + 1e-12 and m2 <= 0.25 + 1e-12


def test_train_validates_config():
    with pytest.raises(ValueError):
        TrainConfig(steps=0)
    with pytest.raises(ValueError):
        TrainConfig(step_size=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(loss="mse")
    spec = ModelSpec("spatial", make_cyclic(2), 1, 1, AVG)
    with pytest.raises(ValueError):
        train(spec, (np.zeros((0, 2, 1)), np.zeros(0)), TrainConfig())
