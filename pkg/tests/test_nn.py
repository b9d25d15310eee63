import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boltgan import autodiff as ad
from boltgan import nn


def single(w, b=0.0, head="sigmoid", activation="leaky_relu"):
    config = nn.MLPConfig((1, 1), activation=activation, head=head)
    return config, nn.MLPParams([np.array([[w]], dtype=float)], [np.array([b], dtype=float)])


def test_init_is_deterministic_with_zero_biases():
    config = nn.critic_config()
    a, b = nn.init_params(config, 7), nn.init_params(config, 7)
    for x, y in zip(a.arrays(), b.arrays()):
        assert x.tobytes() == y.tobytes()
    assert all(not bias.any() for bias in a.biases)
    assert [w.shape for w in a.weights] == [(64, 1), (64, 64), (1, 64)]


def test_glorot_range_for_one_by_one():
    config = nn.MLPConfig((1, 1))
    values = [nn.init_params(config, s).weights[0][0, 0] for s in range(200)]
    assert max(abs(v) for v in values) <= np.sqrt(3.0)


def test_critic_forward_examples():
    config, params = single(0.0)
    raw, bounded = nn.critic_forward(params, config, np.array([1.0]))
    assert raw[0] == 0.0 and bounded[0] == 0.5
    config, params = single(2.0)
    _, bounded = nn.critic_forward(params, config, np.array([1.0]))
    assert bounded[0] == pytest.approx(0.880797, abs=1e-6)


def test_generator_forward_examples():
    config = nn.MLPConfig((1, 1), activation="relu")
    zero = nn.zeros_like_params(config)
    assert nn.generator_forward(zero, config, np.array([[5.0]]))[0, 0] == 0.0
    _, params = single(3.0, head="raw", activation="relu")
    assert nn.generator_forward(params, config, np.array([[2.0]]))[0, 0] == 6.0


def test_forward_matches_graph_forward():
    config = nn.critic_config(hidden=(8, 8))
    params = nn.init_params(config, 1)
    x = np.linspace(-3, 3, 11).reshape(-1, 1)
    graph = nn.mlp_apply([ad.constant(a) for a in params.arrays()], config, ad.constant(x))
    assert np.allclose(graph.value[:, 0], nn.critic_forward(params, config, x)[0], atol=1e-14)


def test_input_width_mismatch():
    config = nn.critic_config(in_dim=2)
    with pytest.raises(ValueError, match="width"):
        nn.forward(nn.init_params(config, 0), config, np.zeros((3, 1)))


def test_config_validation():
    with pytest.raises(ValueError):
        nn.MLPConfig((1,))
    with pytest.raises(ValueError):
        nn.MLPConfig((1, 0, 1))
    with pytest.raises(ValueError, match="activation"):
        nn.MLPConfig((1, 1), activation="gelu")


def test_adam_first_step_is_lr_times_sign():
    _, params = single(0.0)
    state = nn.AdamState.for_params(params, lr=1e-3)
    out = nn.adam_step(params, [np.array([[2.0]]), np.array([0.0])], state)
    assert out.weights[0][0, 0] == pytest.approx(-1e-3, rel=1e-6)
    assert out.biases[0][0] == 0.0


def test_adam_zero_gradient_leaves_params():
    params = nn.init_params(nn.critic_config(hidden=(4,)), 0)
    state = nn.AdamState.for_params(params)
    out = nn.adam_step(params, [np.zeros_like(a) for a in params.arrays()], state)
    for a, b in zip(params.arrays(), out.arrays()):
        assert np.array_equal(a, b)


def test_adam_rejects_non_finite():
    _, params = single(1.0)
    state = nn.AdamState.for_params(params)
    with pytest.raises(nn.TrainingDivergence):
        nn.adam_step(params, [np.array([[np.nan]]), np.array([0.0])], state)


def test_weight_clip():
    params = nn.MLPParams([np.array([[-2.0, 0.1, 5.0]])], [np.array([3.0])])
    out = nn.weight_clip(params, 1.0)
    assert np.array_equal(out.weights[0], [[-1.0, 0.1, 1.0]])
    assert out.biases[0][0] == 1.0
    with pytest.raises(ValueError):
        nn.weight_clip(params, 0.0)


def test_ema():
    _, ones = single(1.0, b=1.0)
    _, zeros = single(0.0)
    assert nn.ema_update(zeros, ones, 0.0).weights[0][0, 0] == 1.0
    assert nn.ema_update(zeros, ones, 0.5).weights[0][0, 0] == 0.5
    with pytest.raises(ValueError):
        nn.ema_update(zeros, ones, 1.0)


def test_lipschitz_examples():
    config, params = single(2.0)
    assert nn.lipschitz_upper_bound(params, config).value == pytest.approx(0.5)
    config = nn.MLPConfig((2, 2), head="raw")
    params = nn.MLPParams([np.diag([3.0, 1.0])], [np.zeros(2)])
    assert nn.lipschitz_upper_bound(params, config).value == pytest.approx(3.0)
    zero = nn.zeros_like_params(nn.critic_config())
    assert nn.lipschitz_upper_bound(zero, nn.critic_config()).value == 0.0


def test_spectral_norm_matches_svd():
    rng = np.random.default_rng(0)
    for _ in range(20):
        w = rng.normal(size=(rng.integers(1, 8), rng.integers(1, 8)))
        sn = nn.spectral_norm(w, n_iter=2000)
        assert sn.value == pytest.approx(np.linalg.svd(w, compute_uv=False)[0], rel=1e-6)


def test_empirical_lipschitz_below_bound():
    rng = np.random.default_rng(2)
    config = nn.MLPConfig((2, 16, 16, 1), head="raw")
    for seed in range(100):
        params = nn.init_params(config, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            bound = nn.lipschitz_upper_bound(params, config).value
        x = rng.normal(size=(1000, 2)) * 3
        y = x + rng.normal(size=(1000, 2)) * 0.1
        hx, _ = nn.critic_forward(params, config, x)
        hy, _ = nn.critic_forward(params, config, y)
        ratio = np.abs(hx - hy) / np.linalg.norm(x - y, axis=1)
        assert ratio.max() <= bound + 1e-8


def test_snapshot_round_trip(tmp_path):
    config = nn.critic_config(hidden=(5, 3))
    params = nn.init_params(config, 4)
    path = tmp_path / "p.bin"
    nn.save_params(params, path)
    back = nn.load_params(path, config)
    for a, b in zip(params.arrays(), back.arrays()):
        assert a.tobytes() == b.tobytes()
    with pytest.raises(ValueError, match="config needs"):
        nn.params_from_bytes(nn.params_to_bytes(params), nn.critic_config(hidden=(5,)))
    with pytest.raises(ValueError, match="magic"):
        nn.params_from_bytes(b"xxxx" + nn.params_to_bytes(params)[4:], config)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.99))
def test_ema_stays_between(seed, decay):
    config = nn.critic_config(hidden=(3,))
    a, b = nn.init_params(config, seed), nn.init_params(config, seed + 1)
    out = nn.ema_update(a, b, decay)
    for x, y, z in zip(a.arrays(), b.arrays(), out.arrays()):
        assert np.all(z >= np.minimum(x, y) - 1e-15) and np.all(z <= np.maximum(x, y) + 1e-15)
