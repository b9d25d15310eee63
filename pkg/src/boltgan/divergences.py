"""Exact oracles for total variation, Wasserstein-1 and the prior-weighted
critic gaps, plus a Frechet-Gaussian proxy metric.

The Lipschitz-constrained gaps are solved as linear programs over a finite
metric space: one variable per point for the critic value, box constraints
for its range and one inequality per ordered pair for the Lipschitz
condition.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields

import numpy as np

from .lp import LPError, LPProblem, lp_solve
from .problems import DiscreteDist, GaussianMixture, bracket_1d, integrate_1d

QUAD_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    points: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        d = np.asarray(self.distances, dtype=np.float64)
        n = pts.shape[0]
        if d.shape != (n, n):
            raise ValueError(f"distance matrix {d.shape} does not match {n} points")
        if not np.allclose(d, d.T, rtol=0, atol=1e-12) or np.any(np.abs(np.diag(d)) > 1e-12):
            raise ValueError("distances must be symmetric with a zero diagonal")
        # d[i, k] <= d[i, j] + d[j, k] for all i, j, k
        if n and np.any(d[:, None, :] > d[:, :, None] + d[None, :, :] + 1e-12):
            raise ValueError("distances violate the triangle inequality")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "distances", d)

    @classmethod
    def euclidean(cls, points) -> "FiniteMetricSpace":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        diff = pts[:, None, :] - pts[None, :, :]
        return cls(pts, np.sqrt((diff * diff).sum(axis=-1)))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.distances.max()) if self.size else 0.0

    def weights_of(self, dist) -> np.ndarray:
        """Probability vector of ``dist`` indexed by the space's points."""
        if not isinstance(dist, DiscreteDist):
            w = np.asarray(dist, dtype=np.float64).ravel()
            if w.size != self.size:
                raise ValueError(f"{w.size} weights for a space of {self.size} points")
            return w
        if dist.dim != self.points.shape[1]:
            raise ValueError("distribution and space have different dimensions")
        w = np.zeros(self.size)
        for s, p in zip(dist.support, dist.pmf):
            hit = np.nonzero(np.all(self.points == s, axis=1))[0]
            if hit.size == 0:
                raise ValueError(f"support point {s} is not in the metric space")
            w[hit[0]] += p
        return w


def _aligned(P: DiscreteDist, Q: DiscreteDist) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Both pmfs on the union of supports (zero-padded)."""
    if P.dim != Q.dim:
        raise ValueError("distributions have different dimensions")
    pts = np.unique(np.vstack([P.support, Q.support]), axis=0)
    return pts, np.atleast_1d(P.density(pts)), np.atleast_1d(Q.density(pts))


# ---------------------------------------------------------------------------
# total variation


def tv_discrete(P: DiscreteDist, Q: DiscreteDist) -> float:
    _, p, q = _aligned(P, Q)
    return float(0.5 * np.abs(p - q).sum())


def tv_quadrature(P: GaussianMixture, Q: GaussianMixture, tol: float = QUAD_TOL) -> float:
    if P.dim != 1 or Q.dim != 1:
        raise ValueError("tv_quadrature handles 1-D mixtures")
    return 0.5 * integrate_1d(lambda t: abs(P.density(t) - Q.density(t)), P, Q, tol=tol)


def tv_histogram(a, b, bins: int = 64) -> float:
    """TV between two samples binned on a shared histogram grid."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:
        a, b = a[:, None], b[:, None]
    both = np.vstack([a, b])
    lo, hi = both.min(axis=0), both.max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)
    edges = [np.linspace(l, h, bins + 1) for l, h in zip(lo, hi)]
    ha, _ = np.histogramdd(a, bins=edges)
    hb, _ = np.histogramdd(b, bins=edges)
    return float(0.5 * np.abs(ha / a.shape[0] - hb / b.shape[0]).sum())


# ---------------------------------------------------------------------------
# Wasserstein-1


def _w1_weighted(xa, wa, xb, wb) -> float:
    """Integral of |F - G| for two weighted 1-D point sets (duplicates allowed)."""
    xs = np.concatenate([xa, xb])
    ws = np.concatenate([wa, -np.asarray(wb, dtype=np.float64)])
    order = np.argsort(xs, kind="stable")
    xs, ws = xs[order], ws[order]
    cdf_gap = np.cumsum(ws)[:-1]
    return float(np.abs(cdf_gap) @ np.diff(xs))


def w1_samples(a, b) -> float:
    """Exact W1 between the empirical distributions of two 1-D samples."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    return _w1_weighted(a, np.full(a.size, 1.0 / a.size), b, np.full(b.size, 1.0 / b.size))


def w1_1d(P, Q, tol: float = QUAD_TOL) -> float:
    """W1 on the line as the integral of |F - G|; exact for finite supports,
    adaptive quadrature when either side is a mixture."""
    if P.dim != 1 or Q.dim != 1:
        raise ValueError("w1_1d handles 1-D distributions")
    if isinstance(P, DiscreteDist) and isinstance(Q, DiscreteDist):
        return _w1_weighted(P.support[:, 0], P.pmf, Q.support[:, 0], Q.pmf)
    mixtures = [d for d in (P, Q) if isinstance(d, GaussianMixture)]
    atoms = np.concatenate([d.support[:, 0] for d in (P, Q) if isinstance(d, DiscreteDist)] or [np.zeros(0)])
    lo, hi = bracket_1d(*mixtures)
    if atoms.size:
        lo, hi = min(lo, atoms.min()), max(hi, atoms.max())

    def cdf(d, t):
        if isinstance(d, GaussianMixture):
            return d.cdf(t)
        return d.pmf[d.support[:, 0] <= t].sum()

    return integrate_1d(lambda t: abs(cdf(P, t) - cdf(Q, t)), *mixtures, tol=tol, extra_points=atoms, bounds=(lo, hi))


def w1_discrete_exact(P, Q, space: FiniteMetricSpace) -> float:
    """Optimal transport cost min <gamma, d> over couplings, as an LP."""
    p = space.weights_of(P)
    q = space.weights_of(Q)
    n = space.size
    A_eq = np.zeros((2 * n, n * n))
    for i in range(n):
        A_eq[i, i * n : (i + 1) * n] = 1.0
        A_eq[n + i, i::n] = 1.0
    res = _solve(LPProblem(space.distances.ravel(), A_eq=A_eq, b_eq=np.concatenate([p, q])))
    return max(0.0, res.value)


# ---------------------------------------------------------------------------
# prior-weighted gaps


def d_pi_closed_form(P_data: DiscreteDist, P_g: DiscreteDist, pi: float) -> float:
    """Supremum of pi E_data[h] - (1 - pi) E_g[h] over all h with values in [0, 1]."""
    _, p, q = _aligned(P_data, P_g)
    return float(np.maximum(pi * p - (1.0 - pi) * q, 0.0).sum())


def _lipschitz_rows(space: FiniteMetricSpace) -> tuple[np.ndarray, np.ndarray]:
    n = space.size
    i, j = np.nonzero(~np.eye(n, dtype=bool))
    A = np.zeros((i.size, n))
    A[np.arange(i.size), i] = 1.0
    A[np.arange(i.size), j] = -1.0
    return A, space.distances[i, j]


def _max_linear_over_lip(coef: np.ndarray, space: FiniteMetricSpace, h_max: float = 1.0) -> float:
    A, b = _lipschitz_rows(space)
    res = _solve(LPProblem(coef, A_ub=A, b_ub=b, bounds=(0.0, h_max), maximize=True))
    return res.value


def _solve(problem: LPProblem):
    try:
        return lp_solve(problem)
    except LPError as exc:
        raise RuntimeError(f"internal LP failure: {exc}") from exc


def d_pi_lip_lp(P_data, P_g, pi: float, space: FiniteMetricSpace) -> float:
    """Max of pi E_data[h] - (1 - pi) E_g[h] over 1-Lipschitz h: space -> [0, 1]."""
    p = space.weights_of(P_data)
    q = space.weights_of(P_g)
    return _max_linear_over_lip(pi * p - (1.0 - pi) * q, space)


def sigma_lip_lp(P_data, P_g, space: FiniteMetricSpace, h_max: float = 1.0) -> float:
    """Max of E_data[h] - E_g[h] over 1-Lipschitz h with values in [0, h_max].

    With ``h_max`` at least the diameter the range constraint is inactive
    and the value equals W1.
    """
    p = space.weights_of(P_data)
    q = space.weights_of(P_g)
    return _max_linear_over_lip(p - q, space, h_max)


def l_bg(pi: float, h_values, P_data: DiscreteDist, P_g: DiscreteDist) -> float:
    """pi E_data[h] - (1 - pi) E_g[h] for a critic given on the union support.

    ``h_values`` is either a callable on points or an array aligned with the
    sorted union of both supports.
    """
    pts, p, q = _aligned(P_data, P_g)
    h = h_values(pts) if callable(h_values) else h_values
    h = np.asarray(h, dtype=np.float64).ravel()
    if h.size != pts.shape[0]:
        raise ValueError(f"{h.size} critic values for {pts.shape[0]} support points")
    return float(pi * (p @ h) - (1.0 - pi) * (q @ h))


# ---------------------------------------------------------------------------
# Frechet-Gaussian proxy


def _psd_sqrt(c: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((c + c.T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def frechet_gaussian(m1, C1, m2, C2) -> float:
    """Squared 2-Wasserstein distance between two Gaussians."""
    m1, m2 = np.atleast_1d(m1).astype(float), np.atleast_1d(m2).astype(float)
    C1 = np.atleast_2d(np.asarray(C1, dtype=np.float64))
    C2 = np.atleast_2d(np.asarray(C2, dtype=np.float64))
    s1 = _psd_sqrt(C1)
    cross = _psd_sqrt(s1 @ C2 @ s1)
    val = float(((m1 - m2) ** 2).sum() + np.trace(C1 + C2 - 2.0 * cross))
    return max(val, 0.0)


def frechet_samples(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:
        a, b = a[:, None], b[:, None]
    return frechet_gaussian(a.mean(axis=0), np.cov(a, rowvar=False), b.mean(axis=0), np.cov(b, rowvar=False))


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class DivergenceReport:
    tv: float
    w1: float
    d_pi: float
    d_1mpi: float
    d_pi_lip: float
    sigma_lip: float
    frechet: float
    pi: float
    seed: int


REPORT_COLUMNS = tuple(f.name for f in fields(DivergenceReport))


def divergence_report(P_data: DiscreteDist, P_g: DiscreteDist, pi: float, seed: int = 0,
                      space: FiniteMetricSpace | None = None) -> DivergenceReport:
    """All oracle quantities for a pair of finitely supported distributions."""
    if space is None:
        pts, _, _ = _aligned(P_data, P_g)
        space = FiniteMetricSpace.euclidean(pts)
    return DivergenceReport(
        tv=tv_discrete(P_data, P_g),
        w1=w1_discrete_exact(P_data, P_g, space),
        d_pi=d_pi_closed_form(P_data, P_g, pi),
        d_1mpi=d_pi_closed_form(P_data, P_g, 1.0 - pi),
        d_pi_lip=d_pi_lip_lp(P_data, P_g, pi, space),
        sigma_lip=sigma_lip_lp(P_data, P_g, space),
        frechet=frechet_gaussian(P_data.mean(), P_data.cov(), P_g.mean(), P_g.cov()),
        pi=float(pi),
        seed=int(seed),
    )


def write_reports_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            row = asdict(r)
            w.writerow([row[c] if c == "seed" else repr(float(row[c])) for c in REPORT_COLUMNS])
