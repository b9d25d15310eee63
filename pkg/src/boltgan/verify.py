"""Property suites behind ``boltgan verify``.

Each suite draws random instances from a seeded generator, checks a family
of identities or inequalities against the exact oracles and reports how
many checks ran and the worst slack observed.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autodiff as ad
from . import bolt, divergences as dv, nn
from .problems import BinaryProblem, DiscreteDist, bayes_error_exact, map_classify
from .seeding import derive_seed


# a few units in the last place, for bounds that hold with equality
ULP_SLACK = 8 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    checks: int
    detail: str
    seconds: float


# ---------------------------------------------------------------------------
# random instances shared with the test-suite


def random_pmf(rng, n: int, sparse: bool = False) -> np.ndarray:
    p = rng.dirichlet(np.ones(n))
    if sparse and n > 1:
        p[rng.random(n) < 0.3] = 0.0
        if p.sum() == 0:
            p[rng.integers(n)] = 1.0
        p /= p.sum()
    return p


def random_discrete_pair(rng, max_support: int = 32) -> tuple[DiscreteDist, DiscreteDist]:
    """Two pmfs on a common grid {0, ..., n-1}, zeros allowed."""
    n = int(rng.integers(1, max_support + 1))
    pts = np.arange(n, dtype=np.float64).reshape(-1, 1)
    sparse = bool(rng.random() < 0.5)
    return DiscreteDist(pts, random_pmf(rng, n, sparse)), DiscreteDist(pts, random_pmf(rng, n, sparse))


def random_discrete_problem(rng, max_support: int = 12) -> BinaryProblem:
    p1, p2 = random_discrete_pair(rng, max_support)
    return BinaryProblem(float(rng.uniform(0.05, 0.95)), p1, p2)


def table_function(points: np.ndarray, values: np.ndarray) -> Callable:
    """Function on a finite set, looked up by exact row match."""
    points = np.asarray(points, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)

    def f(x):
        x = np.asarray(x, dtype=np.float64).reshape(-1, points.shape[1])
        out = np.zeros(x.shape[0])
        for p, v in zip(points, values):
            out[np.all(x == p, axis=1)] = v
        return out

    return f


def random_metric_instance(rng, max_points: int = 12):
    """Random Euclidean point cloud in the plane with two pmfs on it."""
    n = int(rng.integers(2, max_points + 1))
    space = dv.FiniteMetricSpace.euclidean(rng.uniform(0.0, 1.0, size=(n, 2)))
    return space, random_pmf(rng, n), random_pmf(rng, n)


# smooth unary and binary ops for random-graph gradient checks
_UNARY = (
    ("square", ad.square),
    ("sigmoid", ad.sigmoid),
    ("tanh", ad.tanh),
    ("soft-sqrt", lambda a: ad.sqrt(ad.add(ad.square(a), 1.0))),
    ("soft-recip", lambda a: ad.reciprocal(ad.add(ad.square(a), 1.0))),
    ("scale", lambda a: ad.scale(a, -0.7)),
    ("transpose-twice", lambda a: ad.transpose(ad.transpose(a))),
    ("relu", ad.relu),
    ("leaky-relu", lambda a: ad.leaky_relu(a, 0.2)),
    ("concat-slice", lambda a: ad.slice_rows(ad.concat([a, ad.scale(a, 2.0)], axis=0), a.shape[0], 2 * a.shape[0])),
)
_BINARY = (("add", ad.add), ("sub", ad.sub), ("mul", ad.mul))


def random_graph(rng, n_ops: int | None = None):
    """A random scalar function of 2 or 3 same-shape matrices with entries
    in [-2, 2]: two to four unary or binary steps, then a matmul and a
    reduction.

    Returns ``(f, inputs)`` where ``f`` maps a list of nodes to a scalar node.
    """
    rows, cols = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    n_in = int(rng.integers(2, 4))
    inputs = [rng.uniform(-2.0, 2.0, size=(rows, cols)) for _ in range(n_in)]
    n_ops = n_ops or int(rng.integers(2, 5))
    plan = []
    for _ in range(n_ops):
        if rng.random() < 0.5:
            plan.append(("u", int(rng.integers(len(_UNARY))), None))
        else:
            plan.append(("b", int(rng.integers(len(_BINARY))), None))
    mat = rng.normal(size=(cols, int(rng.integers(1, 4))))
    reducer = int(rng.integers(3))
    picks = [int(rng.integers(10**6)) for _ in range(n_ops)]

    def f(nodes):
        pool = list(nodes)
        cur = pool[0]
        for (kind, k, _), pick in zip(plan, picks):
            if kind == "u":
                cur = _UNARY[k][1](cur)
            else:
                cur = _BINARY[k][1](cur, pool[pick % len(pool)])
            pool.append(cur)
        out = ad.matmul(cur, ad.constant(mat))
        if reducer == 0:
            return ad.sum(out)
        if reducer == 1:
            return ad.mean(ad.tanh(out))
        return ad.sum(ad.norm(ad.add(out, 3.0), axis=1))

    return f, inputs


def finite_difference(f: Callable[[list[np.ndarray]], float], arrays: list[np.ndarray], eps: float = 1e-5):
    """Central differences, one coordinate at a time."""
    out = []
    for k, a in enumerate(arrays):
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            plus = [b.copy() for b in arrays]
            minus = [b.copy() for b in arrays]
            plus[k][idx] += eps
            minus[k][idx] -= eps
            g[idx] = (f(plus) - f(minus)) / (2 * eps)
        out.append(g)
    return out


def relative_error(a: list[np.ndarray], b: list[np.ndarray]) -> float:
    num = np.sqrt(sum(float(np.sum((x - y) ** 2)) for x, y in zip(a, b)))
    den = max(
        np.sqrt(sum(float(np.sum(x * x)) for x in a)),
        np.sqrt(sum(float(np.sum(y * y)) for y in b)),
        1e-12,
    )
    return num / den


def graph_gradient_error(f, inputs, rel: float = 1e-6, abs_floor: float = 1e-9) -> float:
    """Worst component error in units of the tolerance ``max(rel*|fd|, abs_floor)``;
    the check passes when the result is at most 1."""
    leaves = [ad.variable(a) for a in inputs]
    grads = [g.value for g in ad.backward(f(leaves), leaves)]
    fd = finite_difference(lambda arrs: float(f([ad.constant(a) for a in arrs]).value), inputs)
    return max(float(np.max(np.abs(g - d) / np.maximum(rel * np.abs(d), abs_floor))) for g, d in zip(grads, fd))


def gp_gradient_error(seed: int = 0, lam: float = 10.0) -> float:
    """Relative error of d(penalty)/d(params) against finite differences on
    a small 1-4-1 tanh critic (smooth, so the differences are clean)."""
    from . import gan  # local import: gan depends on this module's siblings only

    rng = np.random.default_rng(seed)
    cfg = nn.MLPConfig((1, 4, 1), activation="tanh", head="sigmoid")
    params = nn.init_params(cfg, seed)
    # nonzero biases so the check exercises every parameter
    params.biases = [rng.normal(size=b.shape) * 0.5 for b in params.biases]
    real = rng.normal(2.0, 0.5, size=(8, 1))
    fake = rng.normal(0.0, 1.0, size=(8, 1))
    alpha_seed = int(rng.integers(2**31))

    def penalty(arrays, trainable):
        critic = gan.Critic(nn.MLPParams.from_arrays(arrays), cfg, trainable=trainable)
        return critic, gan.gradient_penalty(critic, real, fake, lam, np.random.default_rng(alpha_seed))

    critic, pen = penalty(params.arrays(), True)
    grads = [g.value for g in ad.backward(pen, critic.nodes)]
    fd = finite_difference(lambda arrs: float(penalty(arrs, False)[1].value), params.arrays())
    return relative_error(grads, fd)


# ---------------------------------------------------------------------------
# suites


def _suite_bound(rng, n: int = 500):
    worst_tight, worst_slack = 0.0, np.inf
    for _ in range(n):
        prob = random_discrete_problem(rng)
        eps = bayes_error_exact(prob)
        pts = prob.union_support()
        worst_tight = max(worst_tight, abs(bolt.bolt_bound(bolt.hstar_fn(prob), prob) - eps))
        h = table_function(pts, -rng.random(pts.shape[0]))
        worst_slack = min(worst_slack, bolt.bolt_bound(h, prob) - eps)
    ok = worst_tight <= 1e-12 and worst_slack >= -1e-9
    return ok, 2 * n, f"max |bound(h*) - eps| = {worst_tight:.2e}, min bound(h) - eps = {worst_slack:.2e}"


def _suite_plugin(rng, n: int = 300):
    mismatches, worst = 0, 0.0
    for _ in range(n):
        prob = random_discrete_problem(rng)
        pts = prob.union_support()
        decide = bolt.plugin_classifier(bolt.hstar(prob, pts))
        p1, p2 = prob.p1.density(pts), prob.p2.density(pts)
        # exact ties (including zero mass under both classes) admit either label
        strict = np.abs(prob.q1 * p1 - prob.q2 * p2) > 1e-15
        mismatches += int(np.sum((decide != map_classify(prob, pts)) & strict))
        # 0-1 risk of the thresholded optimal scorer equals the Bayes error
        risk = float(np.sum(np.where(decide == 1, prob.q2 * p2, prob.q1 * p1)))
        worst = max(worst, abs(risk - bayes_error_exact(prob)))
        # hinge form of the Bayes error
        u = np.atleast_1d(bolt.likelihood_ratio(prob, prob.p2.support))
        hinge = prob.q2 - float(prob.p2.pmf @ bolt.hinge_t0(u, prob.q1, prob.q2))
        worst = max(worst, abs(hinge - bayes_error_exact(prob)))
    ok = mismatches == 0 and worst <= 1e-12
    return ok, 3 * n, f"{mismatches} MAP mismatches, max risk/hinge gap {worst:.2e}"


def _suite_tv(rng, n: int = 1000):
    worst_eq, worst_ineq = 0.0, np.inf
    for _ in range(n):
        P, Q = random_discrete_pair(rng)
        tv = dv.tv_discrete(P, Q)
        worst_eq = max(worst_eq, abs(2 * dv.d_pi_closed_form(P, Q, 0.5) - tv))
        for pi in np.round(np.arange(0.1, 1.0, 0.1), 10):
            a, b = dv.d_pi_closed_form(P, Q, pi), dv.d_pi_closed_form(P, Q, 1 - pi)
            worst_ineq = min(worst_ineq, a + b - tv, 2 * max(a, b) - tv)
    ok = worst_eq <= 1e-10 and worst_ineq >= -1e-10
    return ok, n * 19, f"max equality gap {worst_eq:.2e}, min inequality slack {worst_ineq:.2e}"


def _suite_w1(rng, n: int = 200):
    worst, worst_kr, worst_dom = -np.inf, 0.0, -np.inf
    for _ in range(n):
        space, p, q = random_metric_instance(rng)
        w1 = dv.w1_discrete_exact(p, q, space)
        sigma = dv.sigma_lip_lp(p, q, space)
        for pi in (0.1, 0.2, 0.3, 0.4, 0.5):
            d = dv.d_pi_lip_lp(p, q, pi, space)
            worst = max(worst, d - w1)
            worst_dom = max(worst_dom, d - sigma)
        # widening the box to the diameter recovers W1 exactly
        worst_kr = max(worst_kr, abs(dv.sigma_lip_lp(p, q, space, h_max=space.diameter) - w1))
    ok = worst <= 1e-8 and worst_dom <= 1e-9 and worst_kr <= 1e-8
    return ok, n * 11, f"max D_Lip - W1 = {worst:.2e}, max D_Lip - Sigma_Lip = {worst_dom:.2e}, KR gap {worst_kr:.2e}"


def _suite_hinge(rng, n: int = 100_000):
    u, v = rng.uniform(0, 10, n), rng.uniform(0, 10, n)
    q1 = rng.uniform(0, 1, n)
    gap = np.abs(bolt.hinge_t0(u, q1, 1 - q1) - bolt.hinge_t0(v, q1, 1 - q1)) - q1 * np.abs(u - v)
    worst = float(gap.max())
    # equality cases can differ by rounding only
    return worst <= ULP_SLACK * 10.0, n, f"max |t0(u)-t0(v)| - q1|u-v| = {worst:.2e}"


def _suite_prior_gap(rng, n: int = 300):
    fails = 0
    for _ in range(n):
        P, Q = random_discrete_pair(rng, 12)
        pi = float(rng.uniform(0.01, 1.0))
        pts = np.unique(np.vstack([P.support, Q.support]), axis=0)
        value = dv.l_bg(pi, rng.random(pts.shape[0]), P, Q)
        fails += not (pi - 1 - 1e-12 <= value <= pi + 1e-12)
        grid = [dv.d_pi_closed_form(P, Q, t) for t in np.linspace(0, 1, 11)]
        fails += int(np.any(np.diff(grid) < -1e-12))
    a, b = rng.random(100_000), rng.random(100_000)
    pis = rng.uniform(0, 0.5, 100_000)
    fails += int(np.sum(np.abs(a - b) < pis * a - (1 - pis) * b))
    return fails == 0, 2 * n + 100_000, f"{fails} violations"


def _suite_lipschitz(rng, n: int = 100):
    fails = 0
    for k in range(n):
        m, n_in = int(rng.integers(1, 17)), int(rng.integers(1, 17))
        c = float(rng.uniform(0.01, 1.0))
        w = nn.weight_clip(nn.MLPParams([rng.normal(size=(m, n_in)) * 3], [np.zeros(m)]), c).weights[0]
        fails += int(np.linalg.norm(w, 2) > np.sqrt(m * n_in) * c * (1 + ULP_SLACK))
    for k in range(20):
        cfg = nn.MLPConfig((2, 8, 8, 1), activation=("relu", "leaky_relu", "tanh")[k % 3], head="raw")
        params = nn.init_params(cfg, derive_seed(0, "verify/lipschitz", k))
        with warnings.catch_warnings():
            # an approximate bound is still checked empirically below
            warnings.simplefilter("ignore", RuntimeWarning)
            bound = nn.lipschitz_upper_bound(params, cfg).value
        x = rng.normal(size=(200, 2))
        y = x + rng.normal(size=(200, 2)) * 1e-3
        fx, fy = nn.forward(params, cfg, x)[:, 0], nn.forward(params, cfg, y)[:, 0]
        slope = np.abs(fx - fy) / np.linalg.norm(x - y, axis=1)
        fails += int(slope.max() > bound * (1 + 1e-9))
    return fails == 0, n + 20, f"{fails} violations"


def _suite_autodiff(rng, n: int = 200):
    worst = max(graph_gradient_error(*random_graph(rng)) for _ in range(n))
    gp = gp_gradient_error(int(rng.integers(2**31)))
    ok = worst <= 1.0 and gp <= 1e-4
    return ok, n + 1, f"worst graph error {worst:.2f} x tolerance, penalty double-backprop rel err {gp:.2e}"


SUITES: dict[str, tuple[str, Callable]] = {
    "bound": ("Bayes-error upper bound and its tightness at h*", _suite_bound),
    "plugin": ("plug-in MAP classifier and hinge identity", _suite_plugin),
    "tv": ("prior-weighted gaps versus total variation", _suite_tv),
    "w1": ("Lipschitz gaps versus Wasserstein-1", _suite_w1),
    "hinge": ("Lipschitz property of the hinge", _suite_hinge),
    "prior-gap": ("range, monotonicity and pointwise dominance of the prior-weighted gap", _suite_prior_gap),
    "lipschitz": ("clipping and layerwise Lipschitz bounds", _suite_lipschitz),
    "autodiff": ("reverse-mode gradients against finite differences", _suite_autodiff),
}

# names used by the published experiment list
ALIASES = {
    "theorem1": "bound",
    "theorem2": "plugin",
    "theorem3": "tv",
    "theorem4": "w1",
    "lemma-s3": "hinge",
    "lemma-s4": "prior-gap",
    "lemma-s5": "lipschitz",
}


def resolve(suite_filter: str | None) -> list[str]:
    """Suite names matching ``suite_filter`` (all when None)."""
    if suite_filter is None:
        return list(SUITES)
    key = suite_filter.strip().lower()
    key = ALIASES.get(key, key)
    if key not in SUITES:
        names = ", ".join(list(SUITES) + list(ALIASES))
        raise KeyError(f"unknown suite {suite_filter!r}; available: {names}")
    return [key]


def run_suites(suite_filter: str | None = None, seed: int = 0) -> list[SuiteResult]:
    results = []
    for name in resolve(suite_filter):
        rng = np.random.default_rng(derive_seed(seed, f"verify/{name}"))
        t0 = time.perf_counter()
        ok, checks, detail = SUITES[name][1](rng)
        results.append(SuiteResult(name, bool(ok), checks, detail, time.perf_counter() - t0))
    return results
