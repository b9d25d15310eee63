"""Prior-weighted critic gaps against TV and W1 on small discrete examples.

Run with ``python demos/divergence_oracles.py``.
"""

from boltgan import divergences as dv
from boltgan.problems import DiscreteDist

data = DiscreteDist([0.0, 1.0, 2.0], [0.5, 0.3, 0.2])
model = DiscreteDist([0.0, 1.0, 2.0], [0.2, 0.2, 0.6])
space = dv.FiniteMetricSpace.euclidean(data.support)

tv = dv.tv_discrete(data, model)
w1 = dv.w1_discrete_exact(data, model, space)
print(f"TV {tv:.4f}   W1 {w1:.4f}   W1 by CDFs {dv.w1_1d(data, model):.4f}")

# Unconstrained critics in [0, 1]: the two gaps add up to TV at pi = 1/2
# and to at least TV elsewhere.
print("\n pi    D(pi)   D(1-pi)  sum    D_Lip(pi)")
for pi in (0.1, 0.3, 0.5):
    a, b = dv.d_pi_closed_form(data, model, pi), dv.d_pi_closed_form(data, model, 1 - pi)
    lip = dv.d_pi_lip_lp(data, model, pi, space)
    print(f" {pi:.1f}  {a:.4f}  {b:.4f}   {a + b:.4f}  {lip:.4f}")

# 1-Lipschitz critics bounded to [0, 1] never beat W1; dropping the range
# restriction recovers W1 itself.
print(f"\nbalanced Lipschitz gap, h in [0, 1]     {dv.sigma_lip_lp(data, model, space):.4f}")
print(f"same with h in [0, diameter]            {dv.sigma_lip_lp(data, model, space, h_max=space.diameter):.4f}")

# The Frechet proxy only sees the first two moments.
print(f"Frechet proxy                           {dv.frechet_gaussian(data.mean(), data.cov(), model.mean(), model.cov()):.4f}")

# On far-apart supports TV saturates while W1 keeps growing.
for shift in (1.0, 5.0, 25.0):
    far = DiscreteDist(model.support[:, 0] + shift, model.pmf)
    print(f"shift {shift:>4}: TV {dv.tv_discrete(data, far):.3f}  W1 {dv.w1_1d(data, far):.3f}")
