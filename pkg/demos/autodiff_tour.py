"""The tape-based autodiff engine, ending with a gradient penalty that
needs a derivative of a derivative.

Run with ``python demos/autodiff_tour.py``.
"""
import numpy as np

from boltgan import autodiff as ad
from boltgan.verify import finite_difference

x = ad.variable(np.array(2.0))
y = ad.mul(ad.mul(x, x), x)
(dy,) = ad.backward(y, [x], create_graph=True)
(d2y,) = ad.backward(dy, [x])
print(f"x^3 at 2: value {y.value}, first derivative {dy.value}, second {d2y.value}")

# A one-hidden-layer critic and the penalty (||d critic/dx|| - 1)^2 averaged
# over a few points, differentiated with respect to the weights.
rng = np.random.default_rng(0)
w1, b1, w2 = rng.normal(size=(4, 1)), rng.normal(size=4), rng.normal(size=(1, 4))
pts = rng.normal(size=(5, 1))


def penalty(weights, trainable):
    make = ad.variable if trainable else ad.constant
    nodes = [make(w) for w in weights]
    xin = ad.variable(pts)
    score = ad.sum(ad.matmul(ad.tanh(ad.affine(xin, nodes[0], nodes[1])), ad.transpose(nodes[2])))
    (g,) = ad.backward(score, [xin], create_graph=True)
    return nodes, ad.mean(ad.square(ad.sub(ad.norm(g, axis=1), 1.0)))


nodes, gp = penalty([w1, b1, w2], True)
grads = [n.value for n in ad.backward(gp, nodes)]
fd = finite_difference(lambda ws: float(penalty(ws, False)[1].value), [w1, b1, w2])
print(f"penalty {gp.value:.6f}")
for name, g, f in zip(("W1", "b1", "W2"), grads, fd):
    print(f"  d/d{name}: max |analytic - finite difference| = {np.abs(g - f).max():.1e}")
