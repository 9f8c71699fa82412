import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from peellab.errors import BoundaryPoint, NonIntegerLevel
from peellab.floating_sandwich import v_cube_corner
from peellab.macbeath_caps import (cap_cover_check, convex_position_prob, dyadic_level, dyadic_net,
                                   layers_in_mregions, macbeath_region, minimal_cap_cube_corner,
                                   exact_convex_position_log_p, wilson)
from peellab.polytope_model import cube, triangle
from oracles import min_cap_direction_search


def test_macbeath_centre():
    for d in (2, 3):
        r = macbeath_region(cube(d), np.full(d, 0.5), 0.5)
        assert np.allclose(r.box[0], 0.25) and np.allclose(r.box[1], 0.75)


def test_macbeath_off_centre():
    r = macbeath_region(cube(2), [1 / 8, 1 / 4], 0.5)
    assert np.allclose(r.box[0], [1 / 16, 1 / 8]) and np.allclose(r.box[1], [3 / 16, 3 / 8])
    with pytest.raises(BoundaryPoint):
        macbeath_region(cube(2), [0.0, 0.5], 0.5)


def test_dyadic_net_enumeration():
    d, delta, L = 2, 0.4, -4
    T = d ** d * delta ** d * 3.0 ** L / math.factorial(d)
    net = dyadic_net(d, delta, T)
    brute = sorted((a, b) for a, b in product(range(-10, 1), repeat=2)
                   if a + b == L and 3.0 ** a < 1 / (3 * delta) and 3.0 ** b < 1 / (3 * delta))
    assert sorted(tuple(r.k) for r in net) == brute and len(net) == 3
    for r in net:
        assert np.prod(r.center) == pytest.approx(math.factorial(d) * T / d ** d)
        assert np.allclose(r.box[0], r.center / 2) and np.allclose(r.box[1], 1.5 * r.center)
    for r1, r2 in product(net, repeat=2):
        if r1 is not r2:
            overlap = np.prod(np.clip(np.minimum(r1.box[1], r2.box[1]) - np.maximum(r1.box[0], r2.box[0]), 0, None))
            assert overlap == 0


def test_dyadic_level_non_integer():
    with pytest.raises(NonIntegerLevel):
        dyadic_level(2, 0.4, 0.001)


def test_minimal_cap_example():
    u, c, vol = minimal_cap_cube_corner([0.25, 0.25])
    assert np.allclose(u, [1 / math.sqrt(2)] * 2) and c * math.sqrt(2) == pytest.approx(0.5)
    assert vol == pytest.approx(1 / 8) == v_cube_corner([0.25, 0.25])


def test_minimal_cap_is_minimal_on_grid():
    zs = np.linspace(0.02, 0.5, 10)
    for a in zs:
        for b in zs:
            _, _, vol = minimal_cap_cube_corner([a, b])
            assert min_cap_direction_search(np.array([a, b]), grid=91, refine=False) >= vol - 1e-6


@pytest.mark.parametrize("level", [-8, -6])
def test_cap_cover_bounds(level):
    rep = cap_cover_check(d=2, delta=Fraction(1, 6), level=level, n_check=300)
    assert rep.ok, rep.violations
    s = rep.s
    for row in rep.rows:
        assert s <= row["vol_Ki"] <= 36 * s
        assert Fraction(1, 4) * s / row["vol_Kp"] >= 1
    assert rep.inclusion_checked > 0


def test_cap_cover_from_s_and_warning():
    rep = cap_cover_check(d=2, s=1e-5, n_check=50)
    assert rep.ok and abs(float(rep.s) - 1e-5) / 1e-5 < 1e-9
    with pytest.warns(UserWarning):
        cap_cover_check(d=2, s=0.01, n_check=0)


def test_layers_in_mregions_smoke():
    out = layers_in_mregions(1e5, 2, 3, d=2, alpha_override=50)
    assert out["n_regions"] == len(out["L"]) > 0
    assert (out["L"] >= 0).all()
    assert out["success"] == bool(out["min_L"] > 2)


def test_convex_position_small_n():
    assert convex_position_prob(triangle(), 3, 500, 1)["p"] == 1.0
    with pytest.raises(ValueError):
        convex_position_prob(triangle(), 2, 10, 1)


def test_exact_convex_position_values():
    assert math.exp(exact_convex_position_log_p(4, "triangle")) == pytest.approx(2 / 3)
    assert math.exp(exact_convex_position_log_p(4, "square")) == pytest.approx(25 / 36)


def test_mc_square_matches_exact():
    r = convex_position_prob(cube(2), 5, 40000, 2, method="mc")
    lo, hi = r["ci"]
    p = math.exp(exact_convex_position_log_p(5, "square"))
    assert lo - 0.005 <= p <= hi + 0.005


@pytest.mark.parametrize("method", ["is", "sis"])
def test_sequential_estimators_match_exact(method):
    r = convex_position_prob(triangle(), 10, 4000, 5, method=method)
    assert abs(r["log_p"] - exact_convex_position_log_p(10, "triangle")) < 0.15


def test_wilson_interval():
    lo, hi = wilson(50, 100)
    assert lo < 0.5 < hi and wilson(0, 0) == (0.0, 1.0)
