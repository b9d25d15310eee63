"""Command-line front end: ``verify``, ``estimate-bayes``, ``train`` and ``sweep``.

Configuration is a flat JSON object (``--config``) overridden by
``--key=value`` arguments; values are parsed as JSON when possible and as
plain strings otherwise. Every key is validated before any work starts.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields

import numpy as np

from . import __version__, bolt, gan, svg, verify
from .gan import ConfigError
from .problems import BinaryProblem, DiscreteDist, GaussianMixture, bayes_error_exact, gaussian_pair


# ---------------------------------------------------------------------------
# distributions and problems from JSON


def parse_distribution(spec) -> DiscreteDist | GaussianMixture:
    """``{"kind": "discrete", "support": [...], "pmf": [...]}``,
    ``{"kind": "normal", "mean": m, "var": v}`` or
    ``{"kind": "mixture", "weights": [...], "means": [...], "covs": [...]}``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"distribution spec must be an object with a 'kind', got {spec!r}")
    kind = spec["kind"]
    allowed = {
        "discrete": {"support", "pmf"},
        "normal": {"mean", "var"},
        "mixture": {"weights", "means", "covs"},
    }
    if kind not in allowed:
        raise ConfigError(f"unknown distribution kind {kind!r}; expected one of {sorted(allowed)}")
    keys = set(spec) - {"kind"}
    if keys != allowed[kind]:
        raise ConfigError(f"{kind} distribution needs keys {sorted(allowed[kind])}, got {sorted(keys)}")
    try:
        if kind == "discrete":
            return DiscreteDist(spec["support"], spec["pmf"])
        if kind == "normal":
            return GaussianMixture.normal(spec["mean"], spec["var"])
        return GaussianMixture(spec["weights"], spec["means"], spec["covs"])
    except ValueError as exc:
        raise ConfigError(f"invalid {kind} distribution: {exc}") from exc


def parse_problem(spec) -> BinaryProblem:
    """``{"kind": "gaussian-pair", "mu": 1, "var": 1, "q1": 0.5}`` or
    ``{"q1": ..., "p1": <distribution>, "p2": <distribution>}``."""
    if not isinstance(spec, dict):
        raise ConfigError(f"problem must be an object, got {spec!r}")
    try:
        if spec.get("kind") == "gaussian-pair":
            extra = set(spec) - {"kind", "mu", "var", "q1"}
            if extra:
                raise ConfigError(f"unknown gaussian-pair keys: {sorted(extra)}")
            return gaussian_pair(spec.get("mu", 1.0), spec.get("var", 1.0), spec.get("q1", 0.5))
        if set(spec) != {"q1", "p1", "p2"}:
            raise ConfigError(f"problem needs keys q1, p1, p2 (or kind=gaussian-pair), got {sorted(spec)}")
        return BinaryProblem(float(spec["q1"]), parse_distribution(spec["p1"]), parse_distribution(spec["p2"]))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid problem: {exc}") from exc


BENCHMARK_TARGET = {"kind": "mixture", "weights": [0.5, 0.5], "means": [-2.0, 2.0], "covs": [0.25, 0.25]}


# ---------------------------------------------------------------------------
# config handling


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path: str | None, overrides: list[str]) -> dict:
    cfg = {}
    if path:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    for item in overrides:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"unrecognized argument {item!r}; overrides look like --key=value")
        key, value = item[2:].split("=", 1)
        cfg[key.replace("-", "_")] = _parse_value(value)
    return cfg


def _reject_unknown(cfg: dict, allowed: set[str], command: str):
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown {command} config keys: {', '.join(unknown)}")


def _int_list(value, name: str) -> list[int]:
    if not isinstance(value, list) or not value or not all(isinstance(v, int) and v > 0 for v in value):
        raise ConfigError(f"{name} must be a non-empty list of positive integers")
    return value


GAN_KEYS = {f.name for f in fields(gan.GanConfig)}


def gan_config(cfg: dict) -> gan.GanConfig:
    values = {k: v for k, v in cfg.items() if k in GAN_KEYS}
    try:
        return gan.GanConfig.from_dict(values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# commands


def cmd_verify(suite_filter: str | None = None, seed: int = 0, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        names = verify.resolve(suite_filter)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    failures = 0
    for name in names:
        (res,) = verify.run_suites(name, seed=seed)
        status = "PASS" if res.passed else "FAIL"
        failures += not res.passed
        print(f"{status}  {res.name:<10} {res.checks:>7} checks  {res.seconds:6.2f}s  {res.detail}", file=stream)
    print(f"{len(names) - failures}/{len(names)} suites passed", file=stream)
    return 1 if failures else 0


ESTIMATE_KEYS = {"problem", "m_grid", "repeats", "eps0", "sign", "seed", "out"}


def cmd_estimate_bayes(cfg: dict, stream=None) -> dict:
    """Run the plug-in bias/variance experiment; writes ``bias_variance.csv``
    and ``summary.json`` when ``out`` is set."""
    stream = stream or sys.stdout
    _reject_unknown(cfg, ESTIMATE_KEYS, "estimate-bayes")
    if "problem" not in cfg:
        raise ConfigError("estimate-bayes needs a 'problem'")
    problem = parse_problem(cfg["problem"])
    m_grid = _int_list(cfg.get("m_grid", [100, 1000, 10000]), "m_grid")
    repeats = cfg.get("repeats", 100)
    if not isinstance(repeats, int) or repeats < 2:
        raise ConfigError("repeats must be an integer >= 2")
    eps0 = float(cfg.get("eps0", 0.0))
    if eps0 < 0:
        raise ConfigError("eps0 must be non-negative")
    sign = float(cfg.get("sign", 1.0))
    if sign not in (1.0, -1.0):
        raise ConfigError("sign must be 1 or -1")
    seed = _seed(cfg)

    u_hat = bolt.perturbed_ratio(problem, eps0, sign) if eps0 > 0 else None
    try:
        rows, slope = bolt.bias_variance_experiment(problem, u_hat, m_grid, repeats, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    oracle = bayes_error_exact(problem)
    summary = {
        "oracle": oracle,
        "estimate": rows[-1].mean,
        "bias": rows[-1].bias,
        "variance_slope": None if math.isnan(slope) else slope,
        "m_grid": m_grid,
        "repeats": repeats,
        "eps0": eps0,
        "seed": seed,
    }
    print(f"Bayes error (oracle)     {oracle:.6f}", file=stream)
    for r in rows:
        print(f"M={r.m:<8d} mean {r.mean:.6f}  bias {r.bias:+.2e}  var {r.variance:.3e}", file=stream)
    if not math.isnan(slope):
        print(f"log-log variance slope   {slope:.3f}", file=stream)
    out = cfg.get("out")
    if out:
        os.makedirs(out, exist_ok=True)
        bolt.write_bias_variance_csv(rows, os.path.join(out, "bias_variance.csv"))
        _write_json(os.path.join(out, "summary.json"), summary)
    return summary


TRAIN_KEYS = GAN_KEYS | {"target", "out"}


def _target(cfg: dict):
    return parse_distribution(cfg.get("target", BENCHMARK_TARGET))


def cmd_train(cfg: dict, stream=None) -> gan.TrainResult:
    """Train once; writes ``history.csv``, ``history.svg`` and ``manifest.json``."""
    stream = stream or sys.stdout
    _reject_unknown(cfg, TRAIN_KEYS, "train")
    target = _target(cfg)
    config = gan_config(cfg)
    result = gan.train(target, config)
    out = cfg.get("out")
    if out:
        os.makedirs(out, exist_ok=True)
        h = result.history
        h.to_csv(os.path.join(out, "history.csv"))
        svg.write_line_chart(
            os.path.join(out, "history.svg"),
            h.column("step"),
            {"W1": h.column("w1"), "TV (hist)": h.column("tv_hist"), "Frechet": h.column("frechet")},
            title="Evaluation metrics",
            x_label="generator step",
        )
        result.write_manifest(os.path.join(out, "manifest.json"), __version__)
    diag = gan.diagnostics(result.history)
    status = f"diverged at step {result.history.diverged_step}" if result.history.diverged else "ok"
    print(
        f"{status}: W1 {diag['initial_w1']:.4f} -> {diag['final_w1']:.4f}, "
        f"median grad norm {diag['grad_norm_p50']:.3f}, ratio {diag['ratio']:.3g} ({diag['ratio_flag']})",
        file=stream,
    )
    return result


SWEEP_KEYS = TRAIN_KEYS | {"lambdas", "seeds", "jobs"}
SWEEP_COLUMNS = ("row", "gp_weight", "seed", "diverged", *gan.HISTORY_COLUMNS, "w1_std", "tv_hist_std", "frechet_std")


def _sweep_job(args):
    target_spec, config_dict = args
    result = gan.train(parse_distribution(target_spec), gan.GanConfig.from_dict(config_dict))
    return config_dict["gp_weight"], config_dict["seed"], result.history.diverged, result.history.final


def cmd_sweep(cfg: dict, stream=None) -> list[dict]:
    """Train every (lambda, seed) pair; writes ``sweep.csv`` with one row per
    run followed by one aggregate row per lambda."""
    stream = stream or sys.stdout
    _reject_unknown(cfg, SWEEP_KEYS, "sweep")
    lambdas = cfg.get("lambdas", [1.0, 5.0, 10.0, 20.0])
    if not isinstance(lambdas, list) or not lambdas or not all(isinstance(v, (int, float)) and v >= 0 for v in lambdas):
        raise ConfigError("lambdas must be a non-empty list of non-negative numbers")
    seeds = cfg.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(v, int) and v >= 0 for v in seeds):
        raise ConfigError("seeds must be a non-empty list of non-negative integers")
    jobs = cfg.get("jobs", 1)
    if not isinstance(jobs, int) or jobs < 1:
        raise ConfigError("jobs must be a positive integer")
    target_spec = cfg.get("target", BENCHMARK_TARGET)
    parse_distribution(target_spec)
    base = {k: v for k, v in cfg.items() if k in GAN_KEYS and k not in ("gp_weight", "seed")}
    tasks = []
    for lam in lambdas:
        for seed in seeds:
            d = gan_config({**base, "gp_weight": float(lam), "seed": seed}).to_dict()
            tasks.append((target_spec, d))

    if jobs == 1:
        outcomes = [_sweep_job(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_job, tasks))
    outcomes.sort(key=lambda o: (o[0], o[1]))

    rows = []
    for lam, seed, diverged, final in outcomes:
        rows.append({"row": "run", "gp_weight": lam, "seed": seed, "diverged": int(diverged), **final})
    for lam in sorted({o[0] for o in outcomes}):
        members = [r for r in rows if r["row"] == "run" and r["gp_weight"] == lam]
        agg = {"row": "mean", "gp_weight": lam, "seed": "all", "diverged": sum(r["diverged"] for r in members)}
        for col in gan.HISTORY_COLUMNS:
            agg[col] = float(np.mean([r[col] for r in members]))
        for col in ("w1", "tv_hist", "frechet"):
            agg[f"{col}_std"] = float(np.std([r[col] for r in members]))
        rows.append(agg)
        print(
            f"lambda {lam:g}: W1 {agg['w1']:.4f} +- {agg['w1_std']:.4f} over {len(members)} seeds, "
            f"{agg['diverged']} diverged",
            file=stream,
        )
    out = cfg.get("out")
    if out:
        os.makedirs(out, exist_ok=True)
        write_sweep_csv(rows, os.path.join(out, "sweep.csv"))
    return rows


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([_cell(r.get(c, "")) for c in SWEEP_COLUMNS])


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _seed(cfg: dict) -> int:
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    return seed


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boltgan",
        description="Bayes-error estimation, divergence oracles and BOLT-GAN training.",
        epilog="estimate-bayes, train and sweep also accept config overrides as --key=value (JSON values).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("suite", nargs="?", help="run only this suite")
    p.add_argument("--seed", type=int, default=0)

    for name, helptext in (
        ("estimate-bayes", "plug-in Bayes-error estimation and its bias/variance"),
        ("train", "train one BOLT-GAN run"),
        ("sweep", "train over a grid of penalty weights and seeds"),
    ):
        p = sub.add_parser(name, help=helptext, epilog="Other config keys can be given as --key=value, e.g. --gp-weight=5.")
        p.add_argument("--config", help="JSON file with a flat config object")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        if name != "estimate-bayes":
            p.add_argument("--log-interval", type=int, dest="log_interval")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    if args.command == "verify":
        if rest:
            parser.error(f"unrecognized arguments: {' '.join(rest)}")
        return cmd_verify(args.suite, args.seed)
    try:
        cfg = load_config(args.config, rest)
        for key in ("seed", "out", "log_interval"):
            value = getattr(args, key, None)
            if value is not None:
                cfg[key] = value
        if args.command == "estimate-bayes":
            cmd_estimate_bayes(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        else:
            cmd_sweep(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0
