"""Estimating the Bayes error of a two-class Gaussian problem three ways.

Run with ``python demos/bayes_error_plugin.py``.
"""
import numpy as np

from boltgan import bolt
from boltgan.problems import bayes_error_exact, expectation, gaussian_pair, likelihood_ratio

# Class 1 ~ N(-1, 1), class 2 ~ N(+1, 1), equal priors.
problem = gaussian_pair(mu=1.0, var=1.0, q1=0.5)
oracle = bayes_error_exact(problem)
print(f"quadrature oracle          {oracle:.6f}")

# The optimal bounding function h* (-1 where class 1 is more likely) makes
# the upper bound exact.
print(f"bound at h*                {bolt.bolt_bound(bolt.hstar_fn(problem), problem):.6f}")

# Any other h in [-1, 0] gives something larger, e.g. a soft ramp.
ramp = lambda x: -1.0 / (1.0 + np.exp(3.0 * x[:, 0]))  # noqa: E731
print(f"bound at a soft ramp       {bolt.bolt_bound(ramp, problem):.6f}")

# The same number written as a hinge of the likelihood ratio over class 2.
hinge = expectation(problem.p2, lambda x: bolt.hinge_t0(likelihood_ratio(problem, x[:, 0]), problem.q1, problem.q2))
print(f"q2 - E_P2[t0(U)]           {problem.q2 - hinge:.6f}")

# Plug-in estimates from class-2 samples only, with the exact ratio.
print("\nplug-in estimate, 200 repeats per M")
rows, slope = bolt.bias_variance_experiment(problem, None, [100, 1000, 10000], repeats=200, seed=0)
for r in rows:
    print(f"  M={r.m:<6d} mean {r.mean:.5f}  bias {r.bias:+.1e}  variance {r.variance:.2e}")
print(f"  variance falls like M^{slope:.2f}")

# Finally, learn a scorer by minimizing the empirical risk and threshold it.
clf = bolt.train_bolt_classifier(problem, steps=2000, seed=0)
print(f"\ntrained classifier error   {bolt.test_error(clf, problem, 200_000, seed=1):.5f}")
