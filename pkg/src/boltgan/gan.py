"""Prior-weighted BOLT-GAN training with gradient penalty, a WGAN-GP
baseline, penalty variants and training diagnostics.

The critic is an MLP with a raw score ``h_raw``; the bounded critic is
``sigmoid(h_raw)`` with values in [0, 1]. Penalties always act on the raw
score so they are not damped by the sigmoid's 1/4 slope.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import nn
from .divergences import frechet_samples, tv_histogram, w1_samples
from .seeding import derive_seed

PENALTIES = ("two-sided-gp", "one-sided-gp", "r1", "r2", "none")
OBJECTIVES = ("bolt", "wgan")
HISTORY_COLUMNS = (
    "step", "critic_loss", "l_bolt", "penalty", "ratio",
    "gn_p10", "gn_p50", "gn_p90", "w1", "tv_hist", "frechet",
)
RATIO_LOW, RATIO_HIGH = 1e-2, 10.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GanConfig:
    pi: float = 0.5
    gp_weight: float = 10.0
    penalty: str = "two-sided-gp"
    clip_c: float | None = None
    n_critic: int = 5
    batch: int = 64
    lr_d: float = 2e-4
    lr_g: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    steps: int = 2000
    seed: int = 0
    ema_decay: float | None = None
    lazy_interval: int = 1
    objective: str = "bolt"
    log_interval: int = 100
    latent_dim: int = 2
    hidden: tuple[int, ...] = (64, 64)
    eval_samples: int = 4096
    hist_bins: int = 64

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not 0.0 < self.pi <= 1.0:
            raise ConfigError(f"pi must lie in (0, 1], got {self.pi}")
        if self.gp_weight < 0:
            raise ConfigError(f"gp_weight must be non-negative, got {self.gp_weight}")
        if self.penalty not in PENALTIES:
            raise ConfigError(f"unknown penalty {self.penalty!r}; expected one of {PENALTIES}")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"unknown objective {self.objective!r}; expected one of {OBJECTIVES}")
        if self.clip_c is not None and self.clip_c <= 0:
            raise ConfigError(f"clip_c must be positive, got {self.clip_c}")
        if self.ema_decay is not None and not 0.0 <= self.ema_decay < 1.0:
            raise ConfigError(f"ema_decay must lie in [0, 1), got {self.ema_decay}")
        for name, lo in (("n_critic", 1), ("batch", 2), ("steps", 0), ("lazy_interval", 1),
                         ("log_interval", 1), ("latent_dim", 1), ("eval_samples", 2), ("hist_bins", 1)):
            value = getattr(self, name)
            if int(value) != value or value < lo:
                raise ConfigError(f"{name} must be an integer >= {lo}, got {value}")
        for name in ("lr_d", "lr_g"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("beta1", "beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1)")
        if self.pi == 1.0 and self.objective == "bolt":
            warnings.warn("pi = 1 gives the generator a zero loss; it will not train", RuntimeWarning)

    @property
    def effective_weight(self) -> float:
        """Penalty weight applied on the steps where the penalty runs."""
        return self.gp_weight * self.lazy_interval

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GanConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown GAN config keys: {', '.join(unknown)}")
        return cls(**d)


# ---------------------------------------------------------------------------
# objectives and penalties


class Critic:
    """Critic parameters bound to tape nodes for one loss evaluation."""

    def __init__(self, params: nn.MLPParams, config: nn.MLPConfig, trainable: bool = True):
        make = ad.variable if trainable else ad.constant
        self.config = config
        self.nodes = [make(a) for a in params.arrays()]

    def raw(self, x) -> ad.Node:
        """Raw scores as a (batch,) node."""
        x = x if isinstance(x, ad.Node) else ad.constant(x)
        out = nn.mlp_apply(self.nodes, self.config, x)
        return ad.sum(out, axis=1)

    def bounded(self, x) -> ad.Node:
        return ad.sigmoid(self.raw(x))


def l_bolt_minibatch(critic: Critic, real, fake, pi: float) -> ad.Node:
    """pi * mean sigmoid(h(real)) - (1 - pi) * mean sigmoid(h(fake))."""
    if _rows(real) == 0 or _rows(fake) == 0:
        raise ValueError("L_BOLT needs non-empty batches")
    return ad.sub(ad.scale(ad.mean(critic.bounded(real)), pi), ad.scale(ad.mean(critic.bounded(fake)), 1.0 - pi))


def wgan_objective(critic: Critic, real, fake) -> ad.Node:
    """mean h(real) - mean h(fake) on the raw score."""
    if _rows(real) == 0 or _rows(fake) == 0:
        raise ValueError("the EM objective needs non-empty batches")
    return ad.sub(ad.mean(critic.raw(real)), ad.mean(critic.raw(fake)))


def _rows(x) -> int:
    return (x.value if isinstance(x, ad.Node) else np.asarray(x)).shape[0]


def input_gradient_norms(critic: Critic, points) -> ad.Node:
    """Per-point norm of the raw score's input gradient, kept on the tape."""
    x = ad.variable(np.asarray(points, dtype=np.float64))
    (g,) = ad.backward(ad.sum(critic.raw(x)), [x], create_graph=True)
    return ad.norm(g, axis=1)


def interpolate(real, fake, rng) -> np.ndarray:
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    alpha = rng.uniform(0.0, 1.0, size=(real.shape[0], 1))
    return alpha * real + (1.0 - alpha) * fake


def _check_weight(lam: float):
    if lam < 0:
        raise ValueError(f"penalty weight must be non-negative, got {lam}")


def gradient_penalty(critic: Critic, real, fake, lam: float, rng) -> ad.Node:
    """lam * mean (||grad h_raw(x_tilde)|| - 1)^2 on random interpolants."""
    _check_weight(lam)
    norms = input_gradient_norms(critic, interpolate(real, fake, rng))
    return ad.scale(ad.mean(ad.square(ad.sub(norms, 1.0))), lam)


def one_sided_penalty(critic: Critic, real, fake, lam: float, rng) -> ad.Node:
    """Like :func:`gradient_penalty` but only norms above 1 are penalized."""
    _check_weight(lam)
    norms = input_gradient_norms(critic, interpolate(real, fake, rng))
    return ad.scale(ad.mean(ad.square(ad.relu(ad.sub(norms, 1.0)))), lam)


def r1_penalty(critic: Critic, real, lam: float) -> ad.Node:
    """Zero-centred penalty lam * mean ||grad h_raw||^2 on data points."""
    _check_weight(lam)
    return ad.scale(ad.mean(ad.square(input_gradient_norms(critic, real))), lam)


def r2_penalty(critic: Critic, fake, lam: float) -> ad.Node:
    """Zero-centred penalty on generated points."""
    return r1_penalty(critic, fake, lam)


# ---------------------------------------------------------------------------
# training state and steps


@dataclass
class TrainState:
    config: GanConfig
    critic_config: nn.MLPConfig
    generator_config: nn.MLPConfig
    critic: nn.MLPParams
    generator: nn.MLPParams
    critic_opt: nn.AdamState
    generator_opt: nn.AdamState
    rng: np.random.Generator
    sample_data: object
    generator_ema: nn.MLPParams | None = None
    critic_updates: int = 0
    last: dict = field(default_factory=dict)


def init_state(target, config: GanConfig) -> TrainState:
    data_dim = target.dim
    head = "sigmoid" if config.objective == "bolt" else "raw"
    c_cfg = nn.MLPConfig((data_dim, *config.hidden, 1), activation="leaky_relu", head=head, alpha=0.2)
    g_cfg = nn.generator_config(config.latent_dim, data_dim, config.hidden)
    critic = nn.init_params(c_cfg, derive_seed(config.seed, "gan/critic-init"))
    generator = nn.init_params(g_cfg, derive_seed(config.seed, "gan/generator-init"))
    betas = dict(beta1=config.beta1, beta2=config.beta2)
    return TrainState(
        config=config,
        critic_config=c_cfg,
        generator_config=g_cfg,
        critic=critic,
        generator=generator,
        critic_opt=nn.AdamState.for_params(critic, lr=config.lr_d, **betas),
        generator_opt=nn.AdamState.for_params(generator, lr=config.lr_g, **betas),
        rng=np.random.default_rng(derive_seed(config.seed, "gan/train")),
        sample_data=target.sample,
        generator_ema=generator.copy() if config.ema_decay is not None else None,
    )


def _latent(state: TrainState, n: int) -> np.ndarray:
    return state.rng.standard_normal((n, state.config.latent_dim))


def _critic_objective(critic: Critic, real, fake, config: GanConfig) -> ad.Node:
    if config.objective == "bolt":
        return l_bolt_minibatch(critic, real, fake, config.pi)
    return wgan_objective(critic, real, fake)


def _penalty(critic: Critic, real, fake, lam: float, config: GanConfig, rng):
    """Penalty node plus the gradient norms it was computed from (if any)."""
    kind = config.penalty
    if kind in ("two-sided-gp", "one-sided-gp"):
        norms = input_gradient_norms(critic, interpolate(real, fake, rng))
        gap = ad.sub(norms, 1.0)
        if kind == "one-sided-gp":
            gap = ad.relu(gap)
        return ad.scale(ad.mean(ad.square(gap)), lam), norms.value
    if kind in ("r1", "r2"):
        norms = input_gradient_norms(critic, real if kind == "r1" else fake)
        return ad.scale(ad.mean(ad.square(norms)), lam), norms.value
    return None, None


def critic_losses(state: TrainState, real, fake, apply_penalty: bool = True):
    """Build the critic loss ``-objective + penalty`` on the tape.

    Returns ``(critic, loss, objective, penalty_value, grad_norms)``.
    """
    cfg = state.config
    critic = Critic(state.critic, state.critic_config)
    objective = _critic_objective(critic, real, fake, cfg)
    loss = ad.scale(objective, -1.0)
    penalty_value, norms = 0.0, None
    if cfg.penalty != "none" and apply_penalty and cfg.gp_weight > 0:
        penalty, norms = _penalty(critic, real, fake, cfg.effective_weight, cfg, state.rng)
        loss = ad.add(loss, penalty)
        penalty_value = float(penalty.value)
    return critic, loss, objective, penalty_value, norms


def critic_step(state: TrainState) -> TrainState:
    """One critic update on fresh data and generated batches."""
    cfg = state.config
    real = state.sample_data(cfg.batch, state.rng)
    fake = nn.generator_forward(state.generator, state.generator_config, _latent(state, cfg.batch))
    lazy_on = state.critic_updates % cfg.lazy_interval == 0
    critic, loss, objective, penalty_value, norms = critic_losses(state, real, fake, lazy_on)
    if not np.isfinite(loss.value):
        raise nn.TrainingDivergence("non-finite critic loss")
    grads = [g.value for g in ad.backward(loss, critic.nodes)]
    params = nn.adam_step(state.critic, grads, state.critic_opt)
    if cfg.clip_c is not None:
        params = nn.weight_clip(params, cfg.clip_c)
    state.critic = params
    state.critic_updates += 1
    state.last = {
        "critic_loss": float(loss.value),
        "l_bolt": float(objective.value),
        "penalty": penalty_value,
        "grad_norms": norms,
    }
    return state


def generator_loss(state: TrainState, generator_nodes, z) -> ad.Node:
    cfg = state.config
    critic = Critic(state.critic, state.critic_config, trainable=False)
    fake = nn.mlp_apply(generator_nodes, state.generator_config, ad.constant(z))
    if cfg.objective == "bolt":
        return ad.scale(ad.mean(critic.bounded(fake)), -(1.0 - cfg.pi))
    return ad.scale(ad.mean(critic.raw(fake)), -1.0)


def generator_step(state: TrainState) -> TrainState:
    """One generator update on a fresh latent batch; the critic is frozen."""
    cfg = state.config
    z = _latent(state, cfg.batch)
    nodes = [ad.variable(a) for a in state.generator.arrays()]
    loss = generator_loss(state, nodes, z)
    if not np.isfinite(loss.value):
        raise nn.TrainingDivergence("non-finite generator loss")
    grads = [g.value for g in ad.backward(loss, nodes)]
    state.generator = nn.adam_step(state.generator, grads, state.generator_opt)
    if state.generator_ema is not None:
        state.generator_ema = nn.ema_update(state.generator_ema, state.generator, cfg.ema_decay)
    return state


# ---------------------------------------------------------------------------
# history and evaluation


@dataclass
class TrainHistory:
    records: list[dict] = field(default_factory=list)
    diverged: bool = False
    diverged_step: int | None = None
    message: str = ""

    def append(self, record: dict):
        if self.records and record["step"] <= self.records[-1]["step"]:
            raise ValueError("history steps must be strictly increasing")
        self.records.append(record)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records], dtype=np.float64)

    @property
    def final(self) -> dict | None:
        return self.records[-1] if self.records else None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HISTORY_COLUMNS)
            for r in self.records:
                w.writerow([_fmt(r[c]) for c in HISTORY_COLUMNS])


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class TrainResult:
    history: TrainHistory
    critic: nn.MLPParams
    generator: nn.MLPParams
    config: GanConfig

    def manifest(self, version: str) -> dict:
        return {
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "version": version,
            "diverged": self.history.diverged,
            "diverged_step": self.history.diverged_step,
            "columns": list(HISTORY_COLUMNS),
        }

    def write_manifest(self, path, version: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.manifest(version), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _quantiles(norms) -> tuple[float, float, float]:
    if norms is None or len(norms) == 0:
        return (math.nan,) * 3
    p10, p50, p90 = np.quantile(norms, [0.1, 0.5, 0.9])
    return float(p10), float(p50), float(p90)


def _ratio(penalty: float, objective: float, config: GanConfig) -> float:
    """penalty / |critic term|; undefined (nan) when no penalty is applied."""
    if config.penalty == "none" or config.gp_weight == 0 or objective == 0:
        return math.nan
    return penalty / abs(objective)


class _Evaluator:
    def __init__(self, target, config: GanConfig):
        self.config = config
        rng = np.random.default_rng(derive_seed(config.seed, "gan/heldout"))
        self.heldout = target.sample(config.eval_samples, rng)
        self.latent = np.random.default_rng(derive_seed(config.seed, "gan/eval-latent")).standard_normal(
            (config.eval_samples, config.latent_dim)
        )

    def metrics(self, state: TrainState) -> dict:
        gen = state.generator_ema if state.generator_ema is not None else state.generator
        fake = nn.generator_forward(gen, state.generator_config, self.latent)
        if not np.all(np.isfinite(fake)):
            raise nn.TrainingDivergence("generator produced non-finite samples")
        if fake.shape[1] == 1:
            w1 = w1_samples(self.heldout[:, 0], fake[:, 0])
        else:
            w1 = sliced_w1(self.heldout, fake, derive_seed(self.config.seed, "gan/sliced"))
        return {
            "w1": w1,
            "tv_hist": tv_histogram(self.heldout, fake, self.config.hist_bins),
            "frechet": frechet_samples(self.heldout, fake),
        }


def sliced_w1(a, b, seed: int, n_dirs: int = 64) -> float:
    """Average 1-D W1 over random unit directions (multivariate proxy)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dirs = np.random.default_rng(seed).standard_normal((n_dirs, a.shape[1]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return float(np.mean([w1_samples(a @ d, b @ d) for d in dirs]))


def _initial_critic_terms(state: TrainState) -> dict:
    """Critic-side quantities before any update, on a dedicated batch."""
    cfg = state.config
    rng = np.random.default_rng(derive_seed(cfg.seed, "gan/initial-batch"))
    real = state.sample_data(cfg.batch, rng)
    fake = nn.generator_forward(state.generator, state.generator_config, rng.standard_normal((cfg.batch, cfg.latent_dim)))
    saved, state.rng = state.rng, rng
    try:
        _, loss, objective, penalty_value, norms = critic_losses(state, real, fake)
    finally:
        state.rng = saved
    if norms is None:
        # still report interpolant gradient norms when no penalty is configured
        critic = Critic(state.critic, state.critic_config)
        norms = input_gradient_norms(critic, interpolate(real, fake, rng)).value
    return {
        "critic_loss": float(loss.value),
        "l_bolt": float(objective.value),
        "penalty": penalty_value,
        "grad_norms": norms,
    }


def _record(step: int, last: dict, evals: dict, config: GanConfig) -> dict:
    p10, p50, p90 = _quantiles(last.get("grad_norms"))
    rec = {
        "step": step,
        "critic_loss": last["critic_loss"],
        "l_bolt": last["l_bolt"],
        "penalty": last["penalty"],
        "ratio": _ratio(last["penalty"], last["l_bolt"], config),
        "gn_p10": p10,
        "gn_p50": p50,
        "gn_p90": p90,
    }
    rec.update(evals)
    return rec


def _grad_norms_for_log(state: TrainState, last: dict):
    if last.get("grad_norms") is not None:
        return last
    # penalty off (or lazily skipped): measure interpolant norms without training on them
    cfg = state.config
    rng = np.random.default_rng(derive_seed(cfg.seed, "gan/log-norms", state.critic_updates))
    real = state.sample_data(cfg.batch, rng)
    fake = nn.generator_forward(state.generator, state.generator_config, rng.standard_normal((cfg.batch, cfg.latent_dim)))
    critic = Critic(state.critic, state.critic_config)
    norms = input_gradient_norms(critic, interpolate(real, fake, rng)).value
    return {**last, "grad_norms": norms}


def train(target, config: GanConfig | None = None) -> TrainResult:
    """Alternate ``n_critic`` critic updates with one generator update for
    ``config.steps`` iterations, evaluating at step 0, every
    ``log_interval`` steps and at the end.

    Non-finite values stop the run; the history is returned flagged as
    diverged with the failing step.
    """
    config = config or GanConfig()
    state = init_state(target, config)
    evaluator = _Evaluator(target, config)
    history = TrainHistory()
    history.append(_record(0, _initial_critic_terms(state), evaluator.metrics(state), config))
    step = 0
    try:
        for step in range(1, config.steps + 1):
            for _ in range(config.n_critic):
                critic_step(state)
            generator_step(state)
            if step % config.log_interval == 0 or step == config.steps:
                rec = _record(step, _grad_norms_for_log(state, state.last), evaluator.metrics(state), config)
                if not all(np.isfinite(v) for k, v in rec.items() if k != "ratio" and not k.startswith("gn_")):
                    raise nn.TrainingDivergence("non-finite logged metric")
                history.append(rec)
    except (nn.TrainingDivergence, ad.AutodiffError, FloatingPointError) as exc:
        history.diverged = True
        history.diverged_step = step
        history.message = str(exc)
    return TrainResult(history, state.critic, state.generator, config)


def diagnostics(history: TrainHistory) -> dict:
    """Summary of gradient-norm health, penalty/critic ratio and divergence."""
    if not history.records:
        return {}
    last = history.records[-1]
    ratio = last["ratio"]
    if math.isnan(ratio):
        ratio_flag = "undefined"
    elif ratio < RATIO_LOW:
        ratio_flag = "penalty ineffective"
    elif ratio > RATIO_HIGH:
        ratio_flag = "penalty dominates"
    else:
        ratio_flag = "ok"
    p50 = last["gn_p50"]
    return {
        "steps_logged": len(history.records),
        "final_step": last["step"],
        "diverged": history.diverged,
        "diverged_step": history.diverged_step,
        "grad_norm_p10": last["gn_p10"],
        "grad_norm_p50": p50,
        "grad_norm_p90": last["gn_p90"],
        "grad_norms_healthy": bool(0.5 <= p50 <= 1.5) if np.isfinite(p50) else False,
        "ratio": ratio,
        "ratio_flag": ratio_flag,
        "initial_w1": history.records[0]["w1"],
        "final_w1": last["w1"],
    }
