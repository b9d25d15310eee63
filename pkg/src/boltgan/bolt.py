"""BOLT loss, Bayes-error upper bound, optimal bounding function and the
hinge plug-in Bayes-error estimator."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from . import autodiff as ad
from . import nn
from .problems import BinaryProblem, bayes_error_exact, expectation, likelihood_ratio
from .seeding import derive_seed

CLAMP_SLACK = 1e-9


class LabeledSample(NamedTuple):
    x: np.ndarray
    label: int


def _check_range(z, lo: float, hi: float, what: str):
    z = np.asarray(z, dtype=np.float64)
    if np.any(z < lo - CLAMP_SLACK) or np.any(z > hi + CLAMP_SLACK):
        raise ValueError(f"{what} must lie in [{lo}, {hi}]")
    if np.any(z < lo) or np.any(z > hi):
        warnings.warn(f"{what} outside [{lo}, {hi}] by at most {CLAMP_SLACK}; clamped", RuntimeWarning)
        z = np.clip(z, lo, hi)
    return z


def _check_labels(label):
    label = np.asarray(label)
    if not np.all((label == 1) | (label == 2)):
        raise ValueError("labels must be 1 or 2")
    return label


def bolt_loss(z, label):
    """(-1)^label * z for scores ``z`` in [-1, 0]."""
    z = _check_range(z, -1.0, 0.0, "BOLT score")
    label = _check_labels(label)
    out = np.where(label == 1, -z, z)
    return float(out) if out.ndim == 0 else out


def empirical_risk(h: Callable, x, labels=None) -> float:
    """Mean BOLT loss of scorer ``h`` over a dataset.

    ``x`` is either an array of points with ``labels`` alongside, or a
    sequence of :class:`LabeledSample`.
    """
    if labels is None:
        samples = list(x)
        if not samples:
            raise ValueError("empirical risk of an empty dataset is undefined")
        x = np.array([np.atleast_1d(s.x) for s in samples], dtype=np.float64)
        labels = np.array([s.label for s in samples])
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empirical risk of an empty dataset is undefined")
    z = np.asarray(h(x), dtype=np.float64).ravel()
    return float(np.mean(bolt_loss(z, labels)))


def bolt_bound(h: Callable, problem: BinaryProblem) -> float:
    """q2 + q2 E_{P2}[h] - q1 E_{P1}[h], an upper bound on the Bayes error
    for any h with values in [-1, 0]."""
    e1 = expectation(problem.p1, h)
    e2 = expectation(problem.p2, h)
    return problem.q2 + problem.q2 * e2 - problem.q1 * e1


def hstar(problem: BinaryProblem, x):
    """Optimal bounding function: -1 where U(x) < tau, else 0."""
    u = np.atleast_1d(likelihood_ratio(problem, x))
    out = np.where(u < problem.tau, -1.0, 0.0)
    return float(out[0]) if np.ndim(x) == 0 else out


def hstar_fn(problem: BinaryProblem) -> Callable:
    return lambda x: hstar(problem, x)


def plugin_classifier(h, convention: str = "[-1,0]"):
    """Class 1 iff the score is at or above the midpoint of its range."""
    if convention == "[-1,0]":
        threshold = -0.5
    elif convention == "[0,1]":
        threshold = 0.5
    else:
        raise ValueError(f"unknown convention {convention!r}; use '[-1,0]' or '[0,1]'")
    h = np.asarray(h, dtype=np.float64)
    out = np.where(h >= threshold, 1, 2)
    return int(out) if out.ndim == 0 else out


def to_unit_interval(h):
    """Map a [-1, 0] score to the [0, 1] convention (threshold -0.5 -> 0.5)."""
    return np.asarray(h, dtype=np.float64) + 1.0


def hinge_t0(u, q1: float, q2: float):
    out = np.maximum(q2 - q1 * np.asarray(u, dtype=np.float64), 0.0)
    return float(out) if out.ndim == 0 else out


def bolt_plugin_estimate(u_hat: Callable, class2_samples, m1: int, m2: int | None = None) -> float:
    """Hinge plug-in estimate q2 - mean t0(U_hat(x)) over class-2 samples,
    with empirical priors from the class counts."""
    x2 = np.asarray(class2_samples, dtype=np.float64)
    n2 = x2.shape[0] if x2.ndim else 0
    if m2 is None:
        m2 = n2
    if m2 != n2:
        raise ValueError(f"m2={m2} but {n2} class-2 samples were given")
    if m2 < 1:
        raise ValueError("the plug-in estimator needs at least one class-2 sample")
    m = m1 + m2
    q1_hat, q2_hat = m1 / m, m2 / m
    u = np.asarray(u_hat(x2), dtype=np.float64).ravel()
    # q2 - [q2 - q1 u]_+ == min(q1 u, q2), which avoids cancellation
    return float(np.mean(np.minimum(q1_hat * u, q2_hat)))


def perturbed_ratio(problem: BinaryProblem, eps0: float, sign: float = 1.0) -> Callable:
    """Likelihood ratio shifted by ``sign * eps0`` (kept non-negative), so
    that |U_hat - U| <= eps0 everywhere."""

    def u_hat(x):
        u = np.atleast_1d(likelihood_ratio(problem, x))
        return np.maximum(u + sign * eps0, 0.0)

    return u_hat


# ---------------------------------------------------------------------------
# bias / variance


@dataclass(frozen=True)
class BiasVarianceRow:
    m: int
    mean: float
    bias: float
    variance: float
    repeats: int


def bias_variance_experiment(
    problem: BinaryProblem,
    u_hat: Callable | None,
    m_grid: Sequence[int],
    repeats: int,
    seed: int,
) -> tuple[list[BiasVarianceRow], float]:
    """Repeat the plug-in estimate at each sample size.

    Each repeat draws M labelled points: the class-2 count is
    Binomial(M, q2) and only class-2 points are materialized. Returns the
    rows and the least-squares slope of log variance against log M.
    """
    if repeats < 2:
        raise ValueError("need at least two repeats to estimate a variance")
    if u_hat is None:
        u_hat = lambda x: likelihood_ratio(problem, x)  # noqa: E731
    oracle = bayes_error_exact(problem)
    rows = []
    for mi, m in enumerate(m_grid):
        estimates = np.empty(repeats)
        for r in range(repeats):
            rng = np.random.default_rng(derive_seed(seed, f"bias-variance/{m}", r))
            m2 = int(rng.binomial(m, problem.q2))
            if m2 == 0:
                raise ValueError(f"M={m} produced no class-2 samples; increase M")
            x2 = problem.p2.sample(m2, rng)
            estimates[r] = bolt_plugin_estimate(u_hat, x2, m - m2, m2)
        mean = float(np.mean(estimates))
        rows.append(BiasVarianceRow(int(m), mean, mean - oracle, float(np.var(estimates, ddof=1)), repeats))
    slope = variance_slope(rows) if len(rows) >= 2 else float("nan")
    return rows, slope


def variance_slope(rows: Iterable[BiasVarianceRow]) -> float:
    """Least-squares slope of log variance on log M (nan if any variance is 0)."""
    rows = list(rows)
    if any(r.variance <= 0 for r in rows):
        return float("nan")
    lm = np.log([r.m for r in rows])
    lv = np.log([r.variance for r in rows])
    return float(np.polyfit(lm, lv, 1)[0])


BIAS_VARIANCE_COLUMNS = ("M", "mean", "bias", "variance", "repeats")


def write_bias_variance_csv(rows: Iterable[BiasVarianceRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BIAS_VARIANCE_COLUMNS)
        for r in rows:
            w.writerow([r.m, repr(r.mean), repr(r.bias), repr(r.variance), r.repeats])


# ---------------------------------------------------------------------------
# training a BOLT classifier


@dataclass
class BoltClassifier:
    """Scorer h(x) = -sigmoid(s(x)) in [-1, 0]."""

    params: nn.MLPParams
    config: nn.MLPConfig
    final_risk: float

    def score(self, x) -> np.ndarray:
        raw, bounded = nn.critic_forward(self.params, self.config, x)
        return -bounded

    __call__ = score

    def predict(self, x) -> np.ndarray:
        return plugin_classifier(self.score(x), "[-1,0]")


def train_bolt_classifier(
    problem: BinaryProblem,
    config: nn.MLPConfig | None = None,
    steps: int = 2000,
    batch: int = 256,
    lr: float = 1e-2,
    seed: int = 0,
) -> BoltClassifier:
    """Minimize the empirical BOLT risk with Adam on fresh mini-batches."""
    if config is None:
        config = nn.MLPConfig((problem.dim, 16, 1), activation="tanh", head="sigmoid")
    params = nn.init_params(config, derive_seed(seed, "bolt-classifier/init"))
    state = nn.AdamState.for_params(params, lr=lr, beta1=0.9, beta2=0.999)
    rng = np.random.default_rng(derive_seed(seed, "bolt-classifier/data"))
    risk = float("nan")
    for step in range(steps):
        x, labels = problem.sample_labeled(batch, rng)
        sign = np.where(labels == 1, -1.0, 1.0)
        leaves = [ad.variable(a) for a in params.arrays()]
        raw = nn.mlp_apply(leaves, config, ad.constant(x))
        h = ad.scale(ad.sigmoid(raw), -1.0)
        loss = ad.mean(ad.mul(h, ad.constant(sign.reshape(-1, 1))))
        risk = float(loss.value)
        if not np.isfinite(risk):
            raise nn.TrainingDivergence(f"non-finite BOLT risk at step {step}")
        grads = [g.value for g in ad.backward(loss, leaves)]
        params = nn.adam_step(params, grads, state)
    return BoltClassifier(params, config, risk)


def test_error(classifier: BoltClassifier, problem: BinaryProblem, n: int, seed: int) -> float:
    x, labels = problem.sample_labeled(n, derive_seed(seed, "bolt-classifier/test"))
    return float(np.mean(classifier.predict(x) != labels))


test_error.__test__ = False
