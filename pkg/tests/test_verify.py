import numpy as np
import pytest

from boltgan import verify


@pytest.mark.parametrize("name", [n for n in verify.SUITES if n != "tv"])
def test_suites_pass(name):
    (result,) = verify.run_suites(name, seed=1)
    assert result.passed, result.detail
    assert result.checks > 0


def test_aliases_resolve():
    assert [s for s in verify.resolve("theorem3")] == ["tv"]
    assert len(verify.resolve(None)) == len(verify.SUITES)
    with pytest.raises(KeyError, match="bound"):
        verify.resolve("theorem9")


def test_random_graphs_are_reproducible():
    f1, x1 = verify.random_graph(np.random.default_rng(0))
    f2, x2 = verify.random_graph(np.random.default_rng(0))
    assert all(np.array_equal(a, b) for a, b in zip(x1, x2))
    assert verify.graph_gradient_error(f1, x1) == verify.graph_gradient_error(f2, x2)


def test_relative_error_floor():
    assert verify.relative_error(np.array([1.0]), np.array([1.0 + 1e-12])) < 1e-6
