import math

import numpy as np
import pytest
from scipy import stats

from peellab.polytope_model import cube, simplex, truncated_cube
from peellab.sampling import (LimitWindow, Seed, load_npz, read_csv, sample_binomial, sample_heights,
                              sample_limit_process, sample_poisson, save_npz, thin, uniform_in, write_csv)


def test_zero_intensity_empty():
    assert len(sample_poisson(cube(2), 0, Seed(1))) == 0


def test_poisson_count_concentration():
    lam = 1000
    counts = [len(sample_poisson(cube(2), lam, Seed(5, r))) for r in range(500)]
    m = np.mean(counts)
    assert lam - 4 * math.sqrt(lam) <= m <= lam + 4 * math.sqrt(lam)


def test_determinism_bit_identical():
    a = sample_poisson(truncated_cube(3), 500, Seed(9, 3))
    b = sample_poisson(truncated_cube(3), 500, Seed(9, 3))
    assert np.array_equal(a.coords, b.coords) and np.array_equal(a.ids, b.ids)
    c = sample_poisson(truncated_cube(3), 500, Seed(9, 4))
    assert not np.array_equal(a.coords[:10], c.coords[:10])


def test_binomial_singleton_inside():
    ps = sample_binomial(simplex(3), 1, Seed(2))
    assert len(ps) == 1 and simplex(3).contains(ps.coords)[0]


def test_binomial_uniform_mean():
    X = sample_binomial(cube(2), 10 ** 4, Seed(4)).coords
    assert np.all(np.abs(X.mean(axis=0) - 0.5) < 0.02)


def test_binomial_chi_square():
    X = sample_binomial(cube(2), 10 ** 5, Seed(11)).coords
    H, _, _ = np.histogram2d(X[:, 0], X[:, 1], bins=10, range=[[0, 1], [0, 1]])
    assert stats.chisquare(H.ravel()).pvalue > 0.001


def test_uniform_in_simplex_inside():
    X = uniform_in(simplex(3), 2000, np.random.default_rng(0))
    assert simplex(3).contains(X).all()


def test_limit_process_mean_count():
    win = LimitWindow(2.0, -1.0, 0.5)
    counts = np.array([len(sample_limit_process(win, Seed(3, r))) for r in range(10 ** 4)])
    se = counts.std(ddof=1) / math.sqrt(len(counts))
    assert abs(counts.mean() - win.expected_count()) < 3 * se


def test_limit_process_collapsing_window():
    win = LimitWindow(1.0, 0.0, 1e-9)
    assert win.expected_count() < 1e-8
    assert len(sample_limit_process(win, Seed(0))) == 0


def test_height_marginal_cdf():
    win = LimitWindow(3.0, -2.0, 1.0, dim=3)
    h = sample_heights(win, 5000, np.random.default_rng(8))
    d = win.dim
    cdf = lambda x: (np.exp(d * x) - math.exp(d * win.h_min)) / (math.exp(d * win.h_max) - math.exp(d * win.h_min))
    assert stats.kstest(h, cdf).pvalue > 0.001


def test_limit_process_inside_window():
    win = LimitWindow(1.5, -1.0, 1.0, dim=3)
    Y = sample_limit_process(win, Seed(1)).coords
    assert len(Y) > 0 and win.contains(Y).all()


def test_window_validation():
    with pytest.raises(ValueError):
        LimitWindow(1.0, 1.0, 0.0)


def test_thin_fraction():
    ps = sample_binomial(cube(2), 20000, Seed(1))
    assert abs(len(thin(ps, 0.25, Seed(2))) / 20000 - 0.25) < 0.02


def test_csv_and_npz_roundtrip(tmp_path):
    ps = sample_poisson(cube(3), 100, Seed(6))
    write_csv(ps, tmp_path / "p.csv")
    q = read_csv(tmp_path / "p.csv")
    assert np.array_equal(ps.coords, q.coords) and np.array_equal(ps.ids, q.ids)
    save_npz(ps, tmp_path / "p.npz")
    r = load_npz(tmp_path / "p.npz")
    assert np.array_equal(ps.coords, r.coords)
