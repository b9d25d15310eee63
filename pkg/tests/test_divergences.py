import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg, stats

from boltgan import divergences as dv
from boltgan.problems import DiscreteDist, GaussianMixture
from boltgan.verify import random_discrete_pair, random_metric_instance

PIS = np.round(np.arange(1, 10) / 10, 1)


def dist(support, pmf):
    return DiscreteDist(np.asarray(support, dtype=float), pmf)


def two_point():
    space = dv.FiniteMetricSpace.euclidean([[0.0], [0.4]])
    return dist([0.0], [1.0]), dist([0.4], [1.0]), space


def test_tv_discrete_examples():
    p = dist([0.0, 1.0], [0.5, 0.5])
    assert dv.tv_discrete(p, p) == 0.0
    assert dv.tv_discrete(p, dist([0.0], [1.0])) == pytest.approx(0.5)
    assert dv.tv_discrete(dist([0.0, 1.0], [0.7, 0.3]), dist([0.0, 1.0], [0.2, 0.8])) == pytest.approx(0.5)


def test_tv_gaussians():
    a = GaussianMixture.normal(0.0, 1.0)
    assert dv.tv_quadrature(a, a) == pytest.approx(0.0, abs=1e-9)
    assert dv.tv_quadrature(a, GaussianMixture.normal(1.0, 1.0)) == pytest.approx(2 * stats.norm.cdf(0.5) - 1, abs=1e-8)
    values = [dv.tv_quadrature(a, GaussianMixture.normal(m, 1.0)) for m in (1, 2, 4, 8)]
    assert all(x < y for x, y in zip(values, values[1:])) and values[-1] > 0.99


def test_tv_histogram():
    rng = np.random.default_rng(0)
    a = rng.normal(size=5000)
    assert dv.tv_histogram(a, a) == 0.0
    assert dv.tv_histogram(a, a + 100) == pytest.approx(1.0)


def test_w1_1d_examples():
    assert dv.w1_1d(dist([1.0], [1.0]), dist([3.5], [1.0])) == pytest.approx(2.5)
    assert dv.w1_1d(dist([0.0, 1.0], [0.5, 0.5]), dist([1.0, 2.0], [0.5, 0.5])) == pytest.approx(1.0)
    p = dist([0.0, 2.0], [0.3, 0.7])
    assert dv.w1_1d(p, p) == 0.0
    n0, n1 = GaussianMixture.normal(0.0, 1.0), GaussianMixture.normal(1.0, 1.0)
    assert dv.w1_1d(n0, n1) == pytest.approx(1.0, abs=1e-7)
    assert dv.w1_1d(n0, dist([0.0], [1.0])) == pytest.approx(np.sqrt(2 / np.pi), abs=1e-7)


def test_w1_samples_matches_scipy():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=300), rng.exponential(size=200)
    assert dv.w1_samples(a, b) == pytest.approx(stats.wasserstein_distance(a, b), abs=1e-12)


def test_w1_exact_examples():
    p, q, space = two_point()
    assert dv.w1_discrete_exact(p, p, space) == 0.0
    assert dv.w1_discrete_exact(p, q, space) == pytest.approx(0.4)
    with pytest.raises(ValueError, match="not in the metric space"):
        dv.w1_discrete_exact(dist([5.0], [1.0]), q, space)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_w1_exact_agrees_with_1d_formula(seed):
    rng = np.random.default_rng(seed)
    p, q = random_discrete_pair(rng, max_support=8)
    space = dv.FiniteMetricSpace.euclidean(np.unique(np.vstack([p.support, q.support]), axis=0))
    assert dv.w1_discrete_exact(p, q, space) == pytest.approx(dv.w1_1d(p, q), abs=1e-9)


def test_d_pi_examples():
    p = dist([0.0, 1.0], [0.5, 0.5])
    assert dv.d_pi_closed_form(p, p, 0.5) == 0.0
    assert dv.d_pi_closed_form(dist([0.0], [1.0]), dist([1.0], [1.0]), 0.3) == pytest.approx(0.3)
    assert dv.d_pi_closed_form(p, dist([0.0], [1.0]), 0.5) == pytest.approx(0.25)


def test_lipschitz_lp_examples():
    p, q, space = two_point()
    assert dv.d_pi_lip_lp(p, p, 0.3, space) == pytest.approx(0.0, abs=1e-12)
    assert dv.d_pi_lip_lp(p, q, 0.5, space) == pytest.approx(0.2)
    assert dv.sigma_lip_lp(p, p, space) == pytest.approx(0.0, abs=1e-12)
    assert dv.sigma_lip_lp(p, q, space) == pytest.approx(0.4)


def test_l_bg_examples():
    p, q = dist([0.0, 1.0], [0.5, 0.5]), dist([1.0, 2.0], [0.25, 0.75])
    assert dv.l_bg(0.3, np.zeros(3), p, q) == 0.0
    assert dv.l_bg(0.3, np.ones(3), p, q) == pytest.approx(2 * 0.3 - 1)
    with pytest.raises(ValueError):
        dv.l_bg(0.3, np.ones(2), p, q)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_l_bg_range(seed, pi):
    rng = np.random.default_rng(seed)
    p, q = random_discrete_pair(rng)
    n = np.unique(np.vstack([p.support, q.support]), axis=0).shape[0]
    value = dv.l_bg(pi, rng.random(n), p, q)
    assert pi - 1 - 1e-12 <= value <= pi + 1e-12


def test_frechet_examples():
    assert dv.frechet_gaussian(0.0, 1.0, 0.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert dv.frechet_gaussian(0.0, 1.0, 1.0, 1.0) == pytest.approx(1.0)
    assert dv.frechet_gaussian(0.0, 4.0, 0.0, 0.25) == pytest.approx((2.0 - 0.5) ** 2)


def test_frechet_matches_sqrtm_oracle():
    rng = np.random.default_rng(2)
    for _ in range(10):
        a, b = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
        c1, c2 = a @ a.T + 0.1 * np.eye(3), b @ b.T + 0.1 * np.eye(3)
        m1, m2 = rng.normal(size=3), rng.normal(size=3)
        ref = ((m1 - m2) ** 2).sum() + np.trace(c1 + c2 - 2 * linalg.sqrtm(c1 @ c2).real)
        assert dv.frechet_gaussian(m1, c1, m2, c2) == pytest.approx(ref, rel=1e-8)


def test_metric_space_validation():
    with pytest.raises(ValueError, match="triangle"):
        dv.FiniteMetricSpace(np.zeros((3, 1)), np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float))
    with pytest.raises(ValueError, match="symmetric"):
        dv.FiniteMetricSpace(np.zeros((2, 1)), np.array([[0, 1], [2, 0]], dtype=float))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tv_identities(seed):
    p, q = random_discrete_pair(np.random.default_rng(seed))
    tv = dv.tv_discrete(p, q)
    assert abs(2 * dv.d_pi_closed_form(p, q, 0.5) - tv) <= 1e-10
    for pi in PIS:
        a, b = dv.d_pi_closed_form(p, q, pi), dv.d_pi_closed_form(p, q, 1 - pi)
        assert a + b >= tv - 1e-10
        assert 2 * max(a, b) >= tv - 1e-10
    grid = [dv.d_pi_closed_form(p, q, pi) for pi in np.linspace(0, 1, 11)]
    assert all(x <= y + 1e-15 for x, y in zip(grid, grid[1:]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lipschitz_lp_properties(seed):
    rng = np.random.default_rng(seed)
    space, p, q = random_metric_instance(rng)
    w1 = dv.w1_discrete_exact(p, q, space)
    sigma = dv.sigma_lip_lp(p, q, space)
    tv = float(0.5 * np.abs(p - q).sum())
    assert sigma <= min(tv, w1) + 1e-9
    assert w1 <= space.diameter * tv + 1e-9
    for pi in (0.1, 0.3, 0.5):
        d = dv.d_pi_lip_lp(p, q, pi, space)
        assert d <= w1 + 1e-8
        assert d <= sigma + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.5))
def test_pointwise_dominance(a, b, pi):
    assert max(a - b, b - a) >= pi * a - (1 - pi) * b


def test_kantorovich_duality_in_one_dimension():
    rng = np.random.default_rng(6)
    for _ in range(10):
        pts = np.sort(rng.choice(np.arange(0.0, 4.0, 0.25), size=6, replace=False))
        space = dv.FiniteMetricSpace.euclidean(pts)
        p, q = rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(6))
        dual = dv.sigma_lip_lp(p, q, space, h_max=max(space.diameter, 1.0))
        assert dual == pytest.approx(dv.w1_1d(dist(pts, p), dist(pts, q)), abs=1e-6)


def test_divergence_report(tmp_path):
    p, q = dist([0.0, 1.0], [0.5, 0.5]), dist([0.0], [1.0])
    report = dv.divergence_report(p, q, 0.5)
    assert report.tv == pytest.approx(0.5) and report.d_pi == pytest.approx(0.25)
    path = tmp_path / "r.csv"
    dv.write_reports_csv([report], path)
    assert path.read_text().splitlines()[0] == ",".join(dv.REPORT_COLUMNS)
