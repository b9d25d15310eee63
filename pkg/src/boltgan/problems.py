"""Synthetic binary problems with exact densities and a Bayes-error oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

QUAD_TOL = 1e-10
GRID_TOL = 1e-6
BRACKET_SIGMAS = 12.0


def _points(x, dim: int) -> np.ndarray:
    """Coerce scalars / vectors / batches to an (n, dim) array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if dim == 1 else x.reshape(1, -1)
    if x.shape[1] != dim:
        raise ValueError(f"points of dimension {x.shape[1]} given to a {dim}-D distribution")
    return x


def _squeeze(values: np.ndarray, x) -> np.ndarray | float:
    if np.ndim(x) == 0:
        return float(values[0])
    return values


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    """Finitely supported distribution; ``support`` has shape (n, d)."""

    support: np.ndarray
    pmf: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.float64)
        if support.ndim == 1:
            support = support.reshape(-1, 1)
        pmf = np.asarray(self.pmf, dtype=np.float64).ravel()
        if support.shape[0] != pmf.size:
            raise ValueError(f"{support.shape[0]} support points but {pmf.size} probabilities")
        if pmf.size == 0:
            raise ValueError("empty support")
        if np.any(pmf < 0):
            raise ValueError("negative probability mass")
        if abs(pmf.sum() - 1.0) > 1e-12:
            raise ValueError(f"pmf sums to {pmf.sum()!r}, not 1")
        if np.unique(support, axis=0).shape[0] != support.shape[0]:
            raise ValueError("support points must be distinct")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "pmf", pmf)

    @classmethod
    def point_mass(cls, a) -> "DiscreteDist":
        return cls(np.atleast_1d(np.asarray(a, dtype=np.float64)).reshape(1, -1), [1.0])

    @classmethod
    def uniform(cls, points) -> "DiscreteDist":
        points = np.asarray(points, dtype=np.float64)
        n = points.shape[0]
        return cls(points, np.full(n, 1.0 / n))

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    def sample(self, n: int, rng) -> np.ndarray:
        rng = np.random.default_rng(rng)
        idx = rng.choice(self.pmf.size, size=n, p=self.pmf)
        return self.support[idx]

    def density(self, x):
        """Probability mass at ``x``; zero off the support."""
        pts = _points(x, self.dim)
        out = np.zeros(pts.shape[0])
        for s, p in zip(self.support, self.pmf):
            out[np.all(pts == s, axis=1)] += p
        return _squeeze(out, x)

    def mean(self) -> np.ndarray:
        return self.pmf @ self.support

    def cov(self) -> np.ndarray:
        c = self.support - self.mean()
        return (c * self.pmf[:, None]).T @ c


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Mixture of Gaussians in one or two dimensions.

    ``covs`` may be per-component variances (1-D), diagonal vectors, or full
    (d, d) matrices.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        means = np.asarray(self.means, dtype=np.float64)
        if means.ndim == 1:
            means = means.reshape(-1, 1)
        k, d = means.shape
        covs = np.asarray(self.covs, dtype=np.float64)
        if covs.shape == (k,) and d == 1:
            covs = covs.reshape(k, 1, 1)
        elif covs.shape == (k, d):
            covs = np.stack([np.diag(c) for c in covs])
        if covs.shape != (k, d, d):
            raise ValueError(f"covariances of shape {covs.shape} do not fit {k} components in {d}-D")
        if w.size != k:
            raise ValueError(f"{w.size} weights for {k} components")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        try:
            chol = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariances must be positive definite") from exc
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        object.__setattr__(self, "_chol", chol)

    @classmethod
    def normal(cls, mean, var) -> "GaussianMixture":
        """Single Gaussian; ``var`` is the variance (or covariance matrix)."""
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        var = np.asarray(var, dtype=np.float64)
        if var.ndim == 0:
            var = np.eye(mean.size) * var
        return cls([1.0], mean.reshape(1, -1), var.reshape(1, mean.size, mean.size))

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def sample(self, n: int, rng) -> np.ndarray:
        rng = np.random.default_rng(rng)
        comp = rng.choice(self.weights.size, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        return self.means[comp] + np.einsum("nij,nj->ni", self._chol[comp], z)

    def density(self, x):
        pts = _points(x, self.dim)
        out = np.zeros(pts.shape[0])
        d = self.dim
        for w, m, L in zip(self.weights, self.means, self._chol):
            y = np.linalg.solve(L, (pts - m).T)
            log_det = 2.0 * np.log(np.diag(L)).sum()
            out += w * np.exp(-0.5 * (y * y).sum(axis=0) - 0.5 * (d * np.log(2 * np.pi) + log_det))
        return _squeeze(out, x)

    def cdf(self, x):
        """1-D cumulative distribution function."""
        if self.dim != 1:
            raise ValueError("cdf is only defined for 1-D mixtures")
        x = np.asarray(x, dtype=np.float64)
        sd = np.sqrt(self.covs[:, 0, 0])
        z = (x[..., None] - self.means[:, 0]) / sd
        return (self.weights * special.ndtr(z)).sum(axis=-1)

    def bracket(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis integration box: +-12 standard deviations past the extreme means."""
        sd = np.sqrt(np.diagonal(self.covs, axis1=1, axis2=2))
        lo = (self.means - BRACKET_SIGMAS * sd).min(axis=0)
        hi = (self.means + BRACKET_SIGMAS * sd).max(axis=0)
        return lo, hi

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def cov(self) -> np.ndarray:
        mu = self.mean()
        c = self.means - mu
        return np.einsum("k,kij->ij", self.weights, self.covs) + (c * self.weights[:, None]).T @ c


Distribution = DiscreteDist | GaussianMixture


@dataclass(frozen=True, eq=False)
class BinaryProblem:
    q1: float
    p1: Distribution
    p2: Distribution

    def __post_init__(self):
        if not 0.0 < self.q1 < 1.0:
            raise ValueError(f"prior q1 must lie in (0, 1), got {self.q1}")
        if type(self.p1) is not type(self.p2):
            raise ValueError("class-conditional distributions must be of the same kind")
        if self.p1.dim != self.p2.dim:
            raise ValueError("class-conditional distributions must share a dimension")

    @property
    def q2(self) -> float:
        return 1.0 - self.q1

    @property
    def tau(self) -> float:
        """Prior threshold q2 / q1 on the likelihood ratio."""
        return self.q2 / self.q1

    @property
    def dim(self) -> int:
        return self.p1.dim

    @property
    def discrete(self) -> bool:
        return isinstance(self.p1, DiscreteDist)

    def union_support(self) -> np.ndarray:
        if not self.discrete:
            raise TypeError("union_support needs discrete class conditionals")
        return np.unique(np.vstack([self.p1.support, self.p2.support]), axis=0)

    def sample_labeled(self, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
        """``n`` i.i.d. pairs; labels are 1 or 2."""
        rng = np.random.default_rng(rng)
        labels = np.where(rng.random(n) < self.q1, 1, 2)
        x = np.empty((n, self.dim))
        n1 = int((labels == 1).sum())
        x[labels == 1] = self.p1.sample(n1, rng)
        x[labels == 2] = self.p2.sample(n - n1, rng)
        return x, labels


def sample(dist: Distribution, n: int, seed) -> np.ndarray:
    if n < 0:
        raise ValueError("sample size must be non-negative")
    return dist.sample(n, seed)


def density(dist: Distribution, x):
    return dist.density(x)


def likelihood_ratio(problem: BinaryProblem, x):
    """p1(x) / p2(x): +inf where only p1 is positive, 1 where both vanish."""
    p1 = np.atleast_1d(problem.p1.density(x))
    p2 = np.atleast_1d(problem.p2.density(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(p2 > 0, p1 / np.where(p2 > 0, p2, 1.0), np.where(p1 > 0, np.inf, 1.0))
    return _squeeze(u, x)


def posterior(problem: BinaryProblem, x):
    """Pr(Y=1 | X=x); q1 where both densities vanish."""
    a = problem.q1 * np.atleast_1d(problem.p1.density(x))
    b = problem.q2 * np.atleast_1d(problem.p2.density(x))
    tot = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        eta = np.where(tot > 0, a / np.where(tot > 0, tot, 1.0), problem.q1)
    return _squeeze(eta, x)


def map_classify(problem: BinaryProblem, x):
    """argmax_k q_k p_k(x); ties go to class 1."""
    a = problem.q1 * np.atleast_1d(problem.p1.density(x))
    b = problem.q2 * np.atleast_1d(problem.p2.density(x))
    cls = np.where(a >= b, 1, 2)
    return int(cls[0]) if np.ndim(x) == 0 else cls


# ---------------------------------------------------------------------------
# quadrature helpers shared with bolt and divergences


def _breakpoints_1d(*dists: GaussianMixture) -> np.ndarray:
    pts = np.concatenate([d.means[:, 0] for d in dists])
    return np.unique(pts)


def bracket_1d(*dists: GaussianMixture) -> tuple[float, float]:
    lo = min(d.bracket()[0][0] for d in dists)
    hi = max(d.bracket()[1][0] for d in dists)
    return float(lo), float(hi)


def integrate_1d(f, *dists: GaussianMixture, tol: float = QUAD_TOL, extra_points=(), bounds=None) -> float:
    """Adaptive quadrature of ``f`` over the joint bracket (or ``bounds``),
    split at component means and at ``extra_points`` so kinks and jumps land
    on panel edges."""
    lo, hi = bracket_1d(*dists) if bounds is None else bounds
    cuts = np.concatenate([_breakpoints_1d(*dists), np.asarray(extra_points, dtype=float)])
    cuts = np.unique(np.clip(cuts, lo, hi))
    edges = np.unique(np.concatenate([[lo], cuts, [hi]]))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        val, _ = integrate.quad(lambda t: float(f(t)), a, b, epsabs=tol / len(edges), epsrel=1e-12, limit=500)
        total += val
    return total


def integrate_2d(f, *dists: GaussianMixture, tol: float = GRID_TOL) -> float:
    """Tensor-product Gauss-Legendre quadrature, refined until two successive
    grids agree within ``tol``. ``f`` takes an (n, 2) array."""
    los, his = zip(*(d.bracket() for d in dists))
    lo = np.min(los, axis=0)
    hi = np.max(his, axis=0)
    nodes, w = np.polynomial.legendre.leggauss(8)
    prev = None
    panels = 32
    while panels <= 1024:
        ex = np.linspace(lo[0], hi[0], panels + 1)
        ey = np.linspace(lo[1], hi[1], panels + 1)
        xs, wx = _composite(ex, nodes, w)
        ys, wy = _composite(ey, nodes, w)
        total = 0.0
        for y, wyy in zip(np.array_split(ys, max(1, ys.size // 256)), np.array_split(wy, max(1, ys.size // 256))):
            X, Y = np.meshgrid(xs, y, indexing="ij")
            vals = np.asarray(f(np.column_stack([X.ravel(), Y.ravel()]))).reshape(X.shape)
            total += wx @ vals @ wyy
        if prev is not None and abs(total - prev) < tol:
            return float(total)
        prev = total
        panels *= 2
    return float(prev)


def _composite(edges, nodes, w):
    a, b = edges[:-1, None], edges[1:, None]
    half = (b - a) / 2
    pts = (a + b) / 2 + half * nodes
    return pts.ravel(), (half * w).ravel()


def expectation(dist: Distribution, f) -> float:
    """E_dist[f(X)] exactly on finite supports, by quadrature otherwise."""
    if isinstance(dist, DiscreteDist):
        return float(dist.pmf @ np.asarray(f(dist.support), dtype=float).ravel())
    if dist.dim == 1:
        return integrate_1d(lambda t: f(np.array([[t]]))[0] * dist.density(t), dist)
    if dist.dim == 2:
        return integrate_2d(lambda pts: np.asarray(f(pts)).ravel() * dist.density(pts), dist)
    raise ValueError("expectations are supported in one or two dimensions")


def bayes_error_exact(problem: BinaryProblem) -> float:
    """Exact minimum error 1 - integral of max_k q_k p_k.

    Discrete problems are summed exactly; mixtures integrate the equivalent
    ``min(q1 p1, q2 p2)``, which avoids cancellation against 1.
    """
    q1, q2 = problem.q1, problem.q2
    if problem.discrete:
        pts = problem.union_support()
        a = q1 * problem.p1.density(pts)
        b = q2 * problem.p2.density(pts)
        return float(max(0.0, 1.0 - np.maximum(a, b).sum()))
    if problem.dim == 1:

        def f(t):
            return min(q1 * problem.p1.density(t), q2 * problem.p2.density(t))

        return integrate_1d(f, problem.p1, problem.p2, extra_points=_crossings_1d(problem))
    if problem.dim == 2:

        def g(pts):
            return np.minimum(q1 * problem.p1.density(pts), q2 * problem.p2.density(pts))

        return integrate_2d(g, problem.p1, problem.p2)
    raise ValueError(f"Bayes error oracle supports dimensions 1 and 2, not {problem.dim}")


def _crossings_1d(problem: BinaryProblem) -> np.ndarray:
    """Approximate roots of q1 p1 - q2 p2 located on a fine grid."""
    lo, hi = bracket_1d(problem.p1, problem.p2)
    t = np.linspace(lo, hi, 4001)
    d = problem.q1 * problem.p1.density(t) - problem.q2 * problem.p2.density(t)
    s = np.sign(d)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    roots = []
    for i in idx:
        roots.append(_bisect(lambda u: problem.q1 * problem.p1.density(u) - problem.q2 * problem.p2.density(u), t[i], t[i + 1]))
    return np.asarray(roots)


def _bisect(f, a, b, iters=200):
    fa = f(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0 or b - a < 1e-15:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def gaussian_pair(mu: float = 1.0, var: float = 1.0, q1: float = 0.5) -> BinaryProblem:
    """Class 1 ~ N(-mu, var), class 2 ~ N(+mu, var)."""
    return BinaryProblem(q1, GaussianMixture.normal(-mu, var), GaussianMixture.normal(mu, var))
