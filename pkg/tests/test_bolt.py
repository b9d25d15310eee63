import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from boltgan import bolt
from boltgan.problems import (
    BinaryProblem,
    DiscreteDist,
    GaussianMixture,
    bayes_error_exact,
    expectation,
    gaussian_pair,
    likelihood_ratio,
)
from boltgan.verify import random_discrete_problem, table_function


def test_bolt_loss_examples():
    assert bolt.bolt_loss(-0.3, 1) == pytest.approx(0.3)
    assert bolt.bolt_loss(-0.3, 2) == pytest.approx(-0.3)
    assert bolt.bolt_loss(0.0, 1) == 0.0 and bolt.bolt_loss(0.0, 2) == 0.0


def test_bolt_loss_range_handling():
    with pytest.warns(RuntimeWarning, match="clamped"):
        assert bolt.bolt_loss(1e-10, 1) == 0.0
    with pytest.raises(ValueError):
        bolt.bolt_loss(0.1, 1)
    with pytest.raises(ValueError, match="labels"):
        bolt.bolt_loss(-0.5, 3)


def test_empirical_risk_examples():
    with pytest.raises(ValueError, match="empty"):
        bolt.empirical_risk(lambda x: np.zeros(len(x)), [])
    data = [bolt.LabeledSample(np.array([0.0]), 1), bolt.LabeledSample(np.array([1.0]), 2)]
    assert bolt.empirical_risk(lambda x: np.zeros(len(x)), data) == 0.0
    assert bolt.empirical_risk(lambda x: -np.ones(len(x)), data) == 0.0
    x = np.array([[0.0], [1.0], [2.0]])
    assert bolt.empirical_risk(lambda x: -np.ones(len(x)), x, np.array([1, 1, 2])) == pytest.approx(1 / 3)


def test_bound_of_constant_scorers():
    p = random_discrete_problem(np.random.default_rng(0))
    assert bolt.bolt_bound(lambda x: np.zeros(len(x)), p) == pytest.approx(p.q2, abs=1e-15)
    assert bolt.bolt_bound(lambda x: -np.ones(len(x)), p) == pytest.approx(p.q1, abs=1e-15)


def test_hstar_threshold():
    p = BinaryProblem(0.5, DiscreteDist([0.0, 1.0, 2.0], [1 / 6, 2 / 3, 1 / 6]), DiscreteDist([0.0, 1.0, 2.0], [1 / 3, 1 / 3, 1 / 3]))
    # U = 0.5, 2, 0.5 with tau = 1
    assert np.array_equal(bolt.hstar(p, np.array([0.0, 1.0, 2.0])), [-1.0, 0.0, -1.0])
    tie = BinaryProblem(0.5, DiscreteDist.point_mass(0.0), DiscreteDist.point_mass(0.0))
    assert bolt.hstar(tie, 0.0) == 0.0


def test_hstar_is_tight_on_gaussians():
    p = gaussian_pair(1.0, 1.0, 0.5)
    assert bolt.bolt_bound(bolt.hstar_fn(p), p) == pytest.approx(stats.norm.cdf(-1.0), abs=1e-8)


def test_plugin_classifier():
    assert bolt.plugin_classifier(-0.2) == 1
    assert bolt.plugin_classifier(-0.8) == 2
    assert bolt.plugin_classifier(-0.5) == 1
    assert bolt.plugin_classifier(0.5, "[0,1]") == 1
    assert bolt.plugin_classifier(0.49, "[0,1]") == 2
    with pytest.raises(ValueError):
        bolt.plugin_classifier(0.5, "[0,2]")
    h = np.linspace(-1, 0, 21)
    assert np.array_equal(bolt.plugin_classifier(h), bolt.plugin_classifier(bolt.to_unit_interval(h), "[0,1]"))


def test_hinge_examples():
    assert bolt.hinge_t0(0.6, 0.5, 0.5) == pytest.approx(0.2)
    assert bolt.hinge_t0(2.0, 0.5, 0.5) == 0.0
    assert bolt.hinge_t0(0.0, 0.3, 0.7) == 0.7


def test_plugin_estimate_examples():
    x2 = np.ones((10, 1))
    assert bolt.bolt_plugin_estimate(lambda x: np.zeros(len(x)), x2, 10) == 0.0
    p = BinaryProblem(0.5, DiscreteDist.point_mass(0.0), DiscreteDist.point_mass(1.0))
    est = bolt.bolt_plugin_estimate(lambda x: likelihood_ratio(p, x), p.p2.sample(50, 0), 50)
    assert est == 0.0
    with pytest.raises(ValueError):
        bolt.bolt_plugin_estimate(lambda x: x, np.zeros((0, 1)), 5)
    with pytest.raises(ValueError):
        bolt.bolt_plugin_estimate(lambda x: x, np.zeros((3, 1)), 5, m2=4)


def test_plugin_estimate_on_gaussian_pair():
    p = gaussian_pair()
    rng = np.random.default_rng(1)
    m2 = int(rng.binomial(10**5, 0.5))
    x2 = p.p2.sample(m2, rng)
    est = bolt.bolt_plugin_estimate(lambda x: likelihood_ratio(p, x), x2, 10**5 - m2)
    assert abs(est - 0.158655) <= 0.01


def test_perturbed_ratio_is_within_eps():
    p = gaussian_pair()
    x = np.linspace(-5, 5, 101)
    for sign in (1.0, -1.0):
        u_hat = bolt.perturbed_ratio(p, 0.1, sign)
        u = likelihood_ratio(p, x)
        assert np.all(np.abs(u_hat(x) - u) <= 0.1 + 1e-15 * np.maximum(u, 1.0))
        assert np.all(u_hat(x) >= 0)


def test_bias_variance_small_grid(tmp_path):
    rows, slope = bolt.bias_variance_experiment(gaussian_pair(), None, [200, 2000], 60, seed=3)
    assert [r.m for r in rows] == [200, 2000]
    assert rows[1].variance < rows[0].variance
    assert -1.6 < slope < -0.4
    assert abs(rows[1].bias) < 0.01
    path = tmp_path / "bv.csv"
    bolt.write_bias_variance_csv(rows, path)
    assert path.read_text().splitlines()[0] == "M,mean,bias,variance,repeats"
    again, _ = bolt.bias_variance_experiment(gaussian_pair(), None, [200, 2000], 60, seed=3)
    assert again == rows


def test_variance_slope_nan_on_zero_variance():
    rows = [bolt.BiasVarianceRow(10, 0.0, 0.0, 0.0, 5), bolt.BiasVarianceRow(100, 0.0, 0.0, 0.0, 5)]
    assert np.isnan(bolt.variance_slope(rows))


def test_classifier_on_separable_problem():
    p = BinaryProblem(0.5, GaussianMixture.normal(-4.0, 0.25), GaussianMixture.normal(4.0, 0.25))
    clf = bolt.train_bolt_classifier(p, steps=2000, seed=0)
    assert bolt.test_error(clf, p, 20000, 1) <= 0.01


def test_classifier_on_identical_classes():
    p = BinaryProblem(0.3, GaussianMixture.normal(0.0, 1.0), GaussianMixture.normal(0.0, 1.0))
    clf = bolt.train_bolt_classifier(p, steps=500, seed=0)
    assert abs(bolt.test_error(clf, p, 50000, 2) - 0.3) <= 0.02


def test_classifier_is_deterministic():
    p = gaussian_pair()
    a = bolt.train_bolt_classifier(p, steps=50, seed=5)
    b = bolt.train_bolt_classifier(p, steps=50, seed=5)
    for x, y in zip(a.params.arrays(), b.params.arrays()):
        assert x.tobytes() == y.tobytes()
    assert a.final_risk == b.final_risk


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bound_and_tightness_on_random_problems(seed):
    rng = np.random.default_rng(seed)
    p = random_discrete_problem(rng)
    eps = bayes_error_exact(p)
    assert abs(bolt.bolt_bound(bolt.hstar_fn(p), p) - eps) <= 1e-12
    pts = p.union_support()
    h = table_function(pts, -rng.random(len(pts)))
    assert bolt.bolt_bound(h, p) >= eps - 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hinge_identity_on_random_problems(seed):
    p = random_discrete_problem(np.random.default_rng(seed))
    u = likelihood_ratio(p, p.p2.support)
    value = p.q2 - p.p2.pmf @ bolt.hinge_t0(u, p.q1, p.q2)
    assert abs(value - bayes_error_exact(p)) <= 1e-12


def test_hinge_identity_on_gaussians():
    p = gaussian_pair(0.7, 1.3, 0.4)
    value = p.q2 - expectation(p.p2, lambda x: bolt.hinge_t0(likelihood_ratio(p, x[:, 0]), p.q1, p.q2))
    assert value == pytest.approx(bayes_error_exact(p), abs=1e-9)


@settings(max_examples=500, deadline=None)
@given(st.floats(0, 50), st.floats(0, 50), st.floats(0.01, 0.99))
def test_hinge_is_q1_lipschitz(u, v, q1):
    gap = abs(bolt.hinge_t0(u, q1, 1 - q1) - bolt.hinge_t0(v, q1, 1 - q1))
    assert gap <= q1 * abs(u - v) + 8 * np.finfo(float).eps * max(1.0, q1 * max(u, v))


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1).filter(lambda e: e != 0.5))
def test_conditional_risk_argmin(eta):
    risks = {z: (1 - 2 * eta) * z for z in (-1.0, 0.0)}
    best = min(risks, key=risks.get)
    assert best == (0.0 if eta > 0.5 else -1.0)
