import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from peellab.errors import NonPositiveCoordinate
from peellab.rescaled_conelike import (G, Grain, basis, coords_l, cone_peel, grad_bound, halfspace_to_grain,
                                       height_tail_estimate, in_halfspace, inverse_transform, layer1_vertex_at_axis,
                                       norm_constants, on_down_boundary, on_up_boundary, scaling_transform, score,
                                       stabilization_radius)
from peellab.sampling import LimitWindow, Seed, sample_limit_process
from oracles import cone_peel_oracle_2d


def test_basis_orthonormal():
    for d in (2, 3, 5):
        B = basis(d)
        assert np.allclose(B.T @ B, np.eye(d - 1)) and np.allclose(B.sum(axis=0), 0)


def test_G_zero_and_bounds():
    assert G(np.zeros(2)) == pytest.approx(0)
    rng = np.random.default_rng(0)
    for d in (2, 3, 4):
        v = rng.normal(size=(2000, d - 1)) * 3
        g = G(v)
        mx = coords_l(v).max(axis=1)
        assert np.all(mx - math.log(d) <= g + 1e-12) and np.all(g <= mx + 1e-12)
        lo, hi = norm_constants(d)
        nv = np.linalg.norm(v, axis=1)
        assert np.all(lo * nv - math.log(d) <= g + 1e-12) and np.all(g <= hi * nv + 1e-12)


def test_norm_constants_are_sharp():
    # c_low and c_high are the min and max of max_i l_i over the unit sphere
    for d in (2, 3):
        rng = np.random.default_rng(d)
        v = rng.normal(size=(200000, d - 1))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        mx = coords_l(v).max(axis=1)
        lo, hi = norm_constants(d)
        assert mx.min() >= lo - 1e-12 and mx.min() < lo + 1e-2
        assert mx.max() <= hi + 1e-12 and mx.max() > hi - 1e-2


def test_gradient_bound():
    rng = np.random.default_rng(1)
    for d in (2, 3, 5):
        _, g = G(rng.normal(size=(1000, d - 1)) * 5, grad=True)
        assert np.all(np.linalg.norm(g, axis=1) <= grad_bound(d) + 1e-12)


def test_transform_level_sets_and_origin():
    lam = 1e4
    for d in (2, 3):
        z = np.full(d, lam ** (-1 / d))
        assert np.allclose(scaling_transform(z, lam), 0, atol=1e-12)
        c = 7.0
        rng = np.random.default_rng(d)
        z = np.exp(rng.normal(size=d))
        z *= (c / lam / z.prod()) ** (1 / d)
        assert scaling_transform(z, lam)[-1] == pytest.approx(math.log(c) / d)


def test_transform_round_trip():
    rng = np.random.default_rng(2)
    for d in (2, 3):
        z = np.exp(rng.uniform(-8, 0, size=(1000, d)))
        back = inverse_transform(scaling_transform(z, 1e5), 1e5)
        assert np.max(np.abs(back - z)) < 1e-12
    with pytest.raises(NonPositiveCoordinate):
        scaling_transform([0.0, 1.0], 10)


def test_grain_apex():
    lam = 1e3
    g = halfspace_to_grain([0.01, 0.01, 0.01], lam)
    assert np.allclose(g.apex[:-1], 0, atol=1e-12)
    z0 = np.array([0.02, 0.05])
    assert halfspace_to_grain(z0, lam).apex[-1] == pytest.approx(math.log(lam * z0.prod()) / 2)


def test_boundary_duality():
    rng = np.random.default_rng(3)
    for _ in range(100):
        w1 = rng.normal(size=3)
        v = rng.normal(size=2)
        w = np.append(v, w1[-1] + G(w1[:-1] - v))  # on the boundary of the up grain at w1
        assert on_up_boundary(w, w1) and on_down_boundary(w1, w)
        w_off = w + np.array([0, 0, 0.3])
        assert not on_up_boundary(w_off, w1) and not on_down_boundary(w1, w_off)


def test_grain_dual_and_contains():
    g = Grain((0.0, 0.0))
    assert g.contains([[0.0, -1.0]])[0] and not g.contains([[0.0, 1.0]])[0]
    up = g.dual()
    assert up.contains([[0.0, 1.0]])[0] and not up.contains([[0.0, -1.0]])[0]
    # a point w sees w' inside its up grain iff w is inside the down grain at w'
    rng = np.random.default_rng(5)
    for _ in range(200):
        w, wp = rng.normal(size=3), rng.normal(size=3)
        assert Grain(tuple(w), "up").contains(wp[None])[0] == Grain(tuple(wp)).contains(w[None])[0]


def test_cone_peel_single_point():
    assert cone_peel(np.array([[0.3, -1.0]])).labels.tolist() == [1]


def test_cone_peel_grain_domination():
    w = np.array([0.0, 0.0])
    w_below = np.array([0.1, -2.0])
    assert Grain(tuple(w)).contains(w_below[None])[0]
    # the point inside the down grain at w is extreme; w is peeled after it
    assert cone_peel(np.vstack([w, w_below])).labels.tolist() == [2, 1]


@pytest.mark.parametrize("seed", range(10))
def test_cone_peel_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    Y = np.column_stack([rng.uniform(-2, 2, 15), rng.uniform(-2, 1, 15)])
    Z = inverse_transform(Y, 1.0)
    assert np.array_equal(cone_peel(Y).labels, cone_peel_oracle_2d(Z))


def test_cone_peel_3d_vs_lp():
    from scipy.optimize import linprog
    rng = np.random.default_rng(4)
    Y = np.column_stack([rng.normal(size=(20, 2)), rng.uniform(-2, 1, 20)])
    res = cone_peel(Y)
    Z = inverse_transform(Y, 1.0)
    alive = res.labels >= 1
    # layer 1 = points minimising a strictly positive functional
    for i in range(len(Z)):
        D = Z - Z[i]
        r = linprog(np.zeros(3), A_ub=-D, b_ub=np.zeros(len(Z)), bounds=[(1, None)] * 3, method="highs")
        assert (r.status == 0) == (res.labels[i] == 1)
    assert alive.all()


def test_lambda_invariance_of_labels():
    Y = sample_limit_process(LimitWindow(3.0, -3.0, 1.0), Seed(1)).coords
    a = cone_peel(Y).labels
    assert np.array_equal(a, cone_peel(Y, lam=1e6).labels)
    assert np.array_equal(a, cone_peel(Y + np.array([0.0, 0.7])).labels)


def test_score_and_axis_vertex():
    Y = sample_limit_process(LimitWindow(4.0, -5.0, 1.0), Seed(2)).coords
    hs = np.linspace(-3, 0.5, 15)
    fast = layer1_vertex_at_axis(Y, hs)
    for h, f in zip(hs, fast):
        res = cone_peel(np.vstack([Y, [0.0, h]]), max_layers=1)
        assert score(res, len(Y), 1, 0) == float(f)


def test_height_tail_monotone():
    win = LimitWindow(5.0, -6.0, 2.0)
    t = np.linspace(-3, 2, 11)
    out = height_tail_estimate(win, 1, 60, t, 3)
    tail = np.array(out["tail"])
    assert np.all(np.diff(tail) <= 0) and tail[-1] == 0
    assert out["slope"] is None or out["slope"] > 0


def test_stabilization_radius():
    w0 = np.array([0.0, -1.0])
    assert stabilization_radius(w0, np.zeros((0, 2)), ("layer", 1), [0.5, 1, 2]) == 0.5
    win = LimitWindow(4.0, -4.0, 1.0)
    rs = [0.5, 1, 1.5, 2, 3, 4]
    R = [stabilization_radius(np.array([0.0, -0.5]), sample_limit_process(win, Seed(7, r)).coords,
                              ("layer", 2), rs) for r in range(40)]
    surv = [np.mean(np.array(R) >= r) for r in rs]
    assert all(a >= b for a, b in zip(surv, surv[1:]))


@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.just(2)),
              elements=st.floats(-3, 1, allow_nan=False, width=32)),
       st.floats(-3, 1, width=32), st.floats(-3, 1, width=32))
def test_cone_monotone_under_insertion(Y, v, h):
    # adding points never lowers a label
    a = cone_peel(Y).labels
    b = cone_peel(np.vstack([Y, [v, h]])).labels[:-1]
    assert np.all(b >= a)


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=4))
def test_G_convex_midpoint(xs):
    d = len(xs) + 1
    v = np.array(xs)
    w = -v[::-1]
    assert G((v + w) / 2) <= (G(v) + G(w)) / 2 + 1e-12
