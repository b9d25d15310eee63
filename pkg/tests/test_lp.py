from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from boltgan.lp import LPInfeasible, LPProblem, LPUnbounded, lp_solve


def test_single_variable():
    res = lp_solve(LPProblem([1.0], A_ub=[[1.0]], b_ub=[3.0], maximize=True))
    assert res.value == pytest.approx(3.0)


def test_equality_only_point():
    res = lp_solve(LPProblem([1.0, 2.0], A_eq=[[1.0, 0.0], [0.0, 1.0]], b_eq=[0.5, 1.5]))
    assert np.allclose(res.x, [0.5, 1.5])
    assert res.value == pytest.approx(3.5)


def test_infeasible_and_unbounded():
    with pytest.raises(LPInfeasible):
        lp_solve(LPProblem([1.0], A_ub=[[1.0]], b_ub=[-1.0]))
    with pytest.raises(LPUnbounded):
        lp_solve(LPProblem([1.0], maximize=True))
    with pytest.raises(LPInfeasible):
        lp_solve(LPProblem([1.0], bounds=[(2.0, 1.0)]))


def test_free_and_upper_bounded_variables():
    # min x + y with x free, y <= 2, x + y >= -1
    res = lp_solve(LPProblem([1.0, 1.0], A_ub=[[-1.0, -1.0]], b_ub=[1.0], bounds=[(None, None), (None, 2.0)]))
    assert res.value == pytest.approx(-1.0)


def test_rejects_non_finite_coefficients():
    with pytest.raises(ValueError):
        LPProblem([np.nan])


def transport_matrix(n):
    A = np.zeros((2 * n, n * n))
    for i in range(n):
        A[i, i * n : (i + 1) * n] = 1.0
        A[n + i, i::n] = 1.0
    return A


def brute_force_min(c, A, b):
    # drop one redundant marginal row so the system has full row rank
    A, b = A[:-1], b[:-1]
    m = A.shape[0]
    best = np.inf
    for basis in combinations(range(A.shape[1]), m):
        B = A[:, basis]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.all(xb >= -1e-12):
            best = min(best, float(c[list(basis)] @ xb))
    return best


def test_transport_matches_vertex_enumeration():
    rng = np.random.default_rng(4)
    for _ in range(5):
        p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        cost = rng.random(9)
        A = transport_matrix(3)
        b = np.concatenate([p, q])
        res = lp_solve(LPProblem(cost, A_eq=A, b_eq=b))
        assert res.value == pytest.approx(brute_force_min(cost, A, b), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_scipy_on_random_box_lps(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, 6), rng.integers(0, 6)
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = rng.random(m)
    ours = lp_solve(LPProblem(c, A_ub=A if m else None, b_ub=b if m else None, bounds=(0.0, 1.0)))
    ref = linprog(c, A_ub=A if m else None, b_ub=b if m else None, bounds=(0.0, 1.0), method="highs")
    assert ref.status == 0
    assert ours.value == pytest.approx(ref.fun, abs=1e-9)
    if m:
        assert np.all(A @ ours.x <= b + 1e-9)
    assert np.all((ours.x >= -1e-12) & (ours.x <= 1 + 1e-12))
