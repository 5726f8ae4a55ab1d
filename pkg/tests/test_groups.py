import numpy as np
import pytest

from equibound.groups import (FiniteGroup, GroupSignal, act, direct_product,
                              group_convolve, make_cyclic, make_dihedral,
                              parse_group_spec, regular_perm, translate)

SMALL_GROUPS = ["c1", "c2", "c4", "c8", "c16", "d2", "d4", "d8"]


def groups_under_test():
    return [parse_group_spec(s) for s in SMALL_GROUPS]


def test_cyclic_table_values():
    g = make_cyclic(4)
    assert g.cayley[3, 2] == 1          # (3 + 2) mod 4
    assert g.inv[3] == 1                # (4 - 3) mod 4
    assert g.abelian


def test_trivial_group():
    g = make_cyclic(1)
    assert g.order == 1
    assert g.cayley[0, 0] == 0


def test_c2_self_inverse():
    g = make_cyclic(2)
    assert g.abelian
    assert g.inv[1] == 1


def test_zero_order_rejected():
    with pytest.raises(ValueError):
        make_cyclic(0)
    with pytest.raises(ValueError):
        make_dihedral(0)


def test_dihedral_orders_and_commutativity():
    assert make_dihedral(1).order == 2
    assert make_dihedral(1).abelian
    assert make_dihedral(2).abelian
    d3 = make_dihedral(3)
    assert d3.order == 6
    assert not d3.abelian


def test_dihedral_presentation_relations():
    # indices: r^a -> a, s r^a -> n + a
    d4 = make_dihedral(4)
    s, r = 4, 1
    assert d4.mul(s, r) == 4 + 1        # s . r = s r
    assert d4.mul(r, s) == 4 + 3        # r . s = s r^3
    assert d4.mul(s, r) != d4.mul(r, s)


def test_group_axioms_exhaustive():
    for g in groups_under_test() + [parse_group_spec("c2xc4"),
                                    parse_group_spec("c4xc4"),
                                    make_cyclic(64)]:
        n = g.order
        assert np.array_equal(g.cayley[0], np.arange(n))
        assert np.array_equal(g.cayley[:, 0], np.arange(n))
        assert np.array_equal(g.cayley[np.arange(n), g.inv], np.zeros(n))
        assert np.array_equal(g.cayley[g.inv, np.arange(n)], np.zeros(n))
        # (a b) c == a (b c) for all triples
        ab_c = g.cayley[g.cayley]                       # [a, b, c]
        a_bc = g.cayley[:, g.cayley]                    # [a, b, c]
        assert np.array_equal(ab_c, a_bc)
        assert g.abelian == np.array_equal(g.cayley, g.cayley.T)


def test_direct_product_indexing():
    g = parse_group_spec("c2xc4")
    assert g.order == 8
    assert g.abelian
    # (1, 2) * (1, 3) = (0, 1): indices 1*4+2=6, 1*4+3=7 -> 0*4+1=1
    assert g.mul(6, 7) == 1


def test_parse_group_spec_errors():
    for bad in ["", "x", "c", "q4", "c4x", "c-3"]:
        with pytest.raises(ValueError):
            parse_group_spec(bad)


def test_regular_perm_identity_and_shift():
    c4 = make_cyclic(4)
    assert np.array_equal(regular_perm(c4, 0), np.arange(4))
    assert np.array_equal(regular_perm(c4, 1), np.array([1, 2, 3, 0]))
    with pytest.raises(ValueError):
        regular_perm(c4, 4)


def test_regular_perm_matches_action_on_deltas():
    # applying the permutation to a delta at e puts the mass at g
    c4 = make_cyclic(4)
    for g in range(4):
        delta = np.zeros(4)
        delta[0] = 1.0
        moved = translate(c4, g, delta)
        assert moved[regular_perm(c4, g)[0]] == 1.0


def test_regular_perm_is_homomorphism():
    rng = np.random.default_rng(0)
    for g in groups_under_test():
        n = g.order
        pairs = [(a, b) for a in range(n) for b in range(n)] if n <= 16 \
            else [tuple(rng.integers(0, n, 2)) for _ in range(64)]
        for a, b in pairs:
            pa, pb = regular_perm(g, a), regular_perm(g, b)
            assert np.array_equal(pa[pb], regular_perm(g, g.mul(a, b)))


def test_act_axioms_and_isometry():
    rng = np.random.default_rng(1)
    for g in groups_under_test():
        x = GroupSignal(g, rng.normal(size=(g.order, 3)))
        assert np.array_equal(act(g, 0, x).values, x.values)
        for _ in range(10):
            a, b = rng.integers(0, g.order, 2)
            gx = act(g, int(a), x)
            assert gx.norm() == x.norm()        # permutation, 0 ulp
            lhs = act(g, int(a), act(g, int(b), x)).values
            rhs = act(g, g.mul(int(a), int(b)), x).values
            assert np.array_equal(lhs, rhs)
            # per-channel multisets preserved
            assert np.array_equal(np.sort(gx.values, axis=0),
                                  np.sort(x.values, axis=0))


def test_act_group_mismatch_rejected():
    x = GroupSignal(make_cyclic(4), np.ones((4, 1)))
    with pytest.raises(ValueError):
        act(make_cyclic(8), 1, x)


def test_signal_validation():
    with pytest.raises(ValueError):
        GroupSignal(make_cyclic(4), np.ones((3, 1)))
    with pytest.raises(ValueError):
        GroupSignal(make_cyclic(4), np.array([1.0, np.nan, 0.0, 0.0]))


def test_group_convolve_delta_fixture():
    # y(g) = w(g^-1) for x = delta_e, on C_4
    c4 = make_cyclic(4)
    y = group_convolve(c4, np.array([1.0, 2.0, 0.0, 0.0]),
                       np.array([1.0, 0.0, 0.0, 0.0]))
    assert np.array_equal(y, np.array([1.0, 0.0, 0.0, 2.0]))


def test_group_convolve_identity_filter():
    rng = np.random.default_rng(2)
    for g in groups_under_test():
        delta = np.zeros(g.order)
        delta[0] = 1.0
        x = rng.normal(size=g.order)
        assert np.array_equal(group_convolve(g, delta, x), x)


def test_group_convolve_equivariance_bitwise():
    # conv(w, g.x) == g.conv(w, x) bit for bit: the summation order along
    # the filter index is position-independent.
    rng = np.random.default_rng(3)
    for g in groups_under_test():
        for _ in range(100):
            w = rng.normal(size=g.order)
            x = rng.normal(size=g.order)
            a = int(rng.integers(0, g.order))
            lhs = group_convolve(g, w, translate(g, a, x))
            rhs = translate(g, a, group_convolve(g, w, x))
            assert np.array_equal(lhs, rhs)


def test_group_convolve_shape_errors():
    c4 = make_cyclic(4)
    with pytest.raises(ValueError):
        group_convolve(c4, np.ones(3), np.ones(4))
