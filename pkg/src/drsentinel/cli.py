"""Experiment runner: declarative JSON config in, JSON + CSV results out.

Subcommands:

    drsentinel run <config.json> [--out DIR] [--threads N]
    drsentinel validate <config.json>

The env var DRSENTINEL_THREADS is the fallback for --threads.  All output
is byte-deterministic given the config (seed included): numbers are
serialized with 17 significant digits, dictionary keys are sorted, and
newlines are LF.  Exit codes: 0 success, 2 invalid config, 3 bounding
program infeasible at every grid point, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ambiguity import GaussianSampler, MomentAmbiguitySet, StudentTSampler
from .detector import (
    Tuning,
    attack_free_distance_samples,
    make_detector,
    tune_chi_squared,
    tune_dr,
)
from .matcore import InvalidInput
from .reachset import (
    AllInfeasible,
    min_trace_ellipsoid,
    noise_truncation,
    reachable_cloud,
    trace_tradeoff_sweep,
)
from .sdp import NumericalFailure
from .system import LtiSystem, NoSteadyState, joint_system, residual_model

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

_KINDS = ("tune", "false-alarm", "reach-set", "tradeoff-sweep", "worst-case-curve")


class ConfigError(Exception):
    """Config file is missing, malformed, or semantically invalid."""


# ---------------------------------------------------------------------------
# Deterministic serialization: 17 significant digits, sorted keys, LF.

def _fmt_float(value: float) -> str:
    if not np.isfinite(value):
        return '"%s"' % ("NaN" if np.isnan(value) else ("Infinity" if value > 0 else "-Infinity"))
    return format(float(value), ".17g")


def dumps_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{key}": {dumps_json(obj[key], indent + 1)}' for key in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{dumps_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps_json(obj.tolist(), indent)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _csv(rows, header) -> str:
    def cell(v):
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return format(float(v), ".17g")
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Config parsing with field-path diagnostics.

def _get(cfg: dict, path: str, expected=None, required: bool = True, default=None):
    node = cfg
    walked = []
    for part in path.split("."):
        walked.append(part)
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(f"{'.'.join(walked)}: missing required field")
            return default
        node = node[part]
    if expected is not None and not isinstance(node, expected):
        names = expected.__name__ if isinstance(expected, type) else "/".join(t.__name__ for t in expected)
        raise ConfigError(f"{path}: expected {names}, got {type(node).__name__}")
    return node


def _matrix(cfg: dict, path: str) -> np.ndarray:
    raw = _get(cfg, path, expected=list)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a numeric matrix ({exc})") from exc
    if arr.ndim != 2:
        raise ConfigError(f"{path}: expected a nested (row-major) array of arrays")
    return arr


def _system_from_config(cfg: dict) -> LtiSystem:
    fields = {name: _matrix(cfg, f"system.{name}") for name in ("A", "B", "C", "K", "L", "Sigma_w", "Sigma_v")}
    try:
        return LtiSystem(**fields)
    except InvalidInput as exc:
        raise ConfigError(f"system: {exc}") from exc


def _tuning_from_config(cfg: dict) -> Tuning:
    raw = _get(cfg, "detector.tuning", expected=str)
    for member in Tuning:
        if raw == member.value:
            return member
    valid = ", ".join(m.value for m in Tuning)
    raise ConfigError(f"detector.tuning: unknown tuning {raw!r} (valid: {valid})")


def _target_rate_from_config(cfg: dict) -> float:
    rate = _get(cfg, "detector.target_rate", expected=(int, float))
    if not 0 < rate < 1:
        raise ConfigError("detector.target_rate: must lie strictly inside (0, 1)")
    return float(rate)


def _seed_from_config(cfg: dict) -> int:
    seed = _get(cfg, "experiment.seed", expected=int)
    return int(seed)


def _positive_int(cfg: dict, path: str) -> int:
    value = _get(cfg, path, expected=int)
    if value < 1:
        raise ConfigError(f"{path}: must be a positive integer")
    return int(value)


def _rates_from_config(cfg: dict) -> list[float]:
    rates = _get(cfg, "experiment.rates", expected=list)
    if not rates:
        raise ConfigError("experiment.rates: must be a nonempty list")
    out = []
    for k, r in enumerate(rates):
        if not isinstance(r, (int, float)) or not 0 < r <= 1:
            raise ConfigError(f"experiment.rates[{k}]: must be a number in (0, 1]")
        out.append(float(r))
    return out


def _noise_samplers(cfg: dict, sys: LtiSystem, seed: int):
    """Noise family for the Monte-Carlo experiments.

    Gaussian unless detector.nu is present, in which case both noises are
    Student's t with that many degrees of freedom.  The optional
    detector.noise_covariance_scale inflates the simulated noise covariance
    (the detector keeps using the nominal model), which reproduces heavier
    published scenarios where the simulated noise was not exactly
    covariance matched.
    """
    nu = _get(cfg, "detector.nu", expected=(int, float), required=False)
    scale = _get(cfg, "detector.noise_covariance_scale", expected=(int, float), required=False, default=1.0)
    if not scale > 0:
        raise ConfigError("detector.noise_covariance_scale: must be positive")
    set_w = MomentAmbiguitySet(sys.n, float(scale) * sys.Sigma_w)
    set_v = MomentAmbiguitySet(sys.p, float(scale) * sys.Sigma_v)
    if nu is None:
        return GaussianSampler(set_w, seed=seed), GaussianSampler(set_v, seed=seed)
    if not nu > 2:
        raise ConfigError("detector.nu: must exceed 2")
    return (
        StudentTSampler(set_w, seed=seed, nu=float(nu)),
        StudentTSampler(set_v, seed=seed, nu=float(nu)),
    )


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("top level must be a JSON object")
    kind = _get(cfg, "experiment.kind", expected=str)
    if kind not in _KINDS:
        raise ConfigError(f"experiment.kind: unknown kind {kind!r} (valid: {', '.join(_KINDS)})")
    _seed_from_config(cfg)
    _system_from_config(cfg)
    _tuning_from_config(cfg)
    _target_rate_from_config(cfg)
    if kind == "false-alarm":
        _positive_int(cfg, "experiment.trials")
        _positive_int(cfg, "experiment.horizon")
    elif kind == "reach-set":
        _positive_int(cfg, "experiment.trials")
        _positive_int(cfg, "experiment.horizon")
        grid = _get(cfg, "experiment.a_grid", expected=list, required=False)
        if grid is not None:
            for k, a in enumerate(grid):
                if not isinstance(a, (int, float)) or not 0 < a < 1:
                    raise ConfigError(f"experiment.a_grid[{k}]: must be a number strictly inside (0, 1)")
    elif kind in ("tradeoff-sweep", "worst-case-curve"):
        _rates_from_config(cfg)
    return cfg


# ---------------------------------------------------------------------------
# Experiments.  Each returns (result_dict, {filename: text}).

def _experiment_tune(cfg, sys, threads):
    rate = _target_rate_from_config(cfg)
    result = {
        "p": sys.p,
        "target_rate": rate,
        "alpha_chi2": tune_chi_squared(sys.p, rate),
        "alpha_dr": tune_dr(sys.p, rate),
    }
    return result, {}


def _experiment_false_alarm(cfg, sys, threads):
    rate = _target_rate_from_config(cfg)
    tuning = _tuning_from_config(cfg)
    seed = _seed_from_config(cfg)
    trials = _positive_int(cfg, "experiment.trials")
    horizon = _positive_int(cfg, "experiment.horizon")
    rm = residual_model(sys)
    config = make_detector(rm, tuning, rate)
    sampler_w, sampler_v = _noise_samplers(cfg, sys, seed)
    z = attack_free_distance_samples(
        sys, rm, sampler_v, sampler_w, trials=trials, horizon=horizon, seed=seed
    )
    alarms = int(np.sum(z > config.alpha))
    rate_hat = alarms / z.size
    counts, edges = np.histogram(z, bins=128)
    hist_rows = [(edges[i], edges[i + 1], int(counts[i])) for i in range(len(counts))]
    result = {
        "tuning": tuning.value,
        "target_rate": rate,
        "alpha": config.alpha,
        "samples": int(z.size),
        "alarms": alarms,
        "rate": rate_hat,
        "ci95_halfwidth": 1.96 * float(np.sqrt(rate_hat * (1 - rate_hat) / z.size)),
    }
    files = {"histogram.csv": _csv(hist_rows, ("bin_left", "bin_right", "count"))}
    return result, files


def _experiment_reach_set(cfg, sys, threads):
    rate = _target_rate_from_config(cfg)
    tuning = _tuning_from_config(cfg)
    seed = _seed_from_config(cfg)
    trajectories = _positive_int(cfg, "experiment.trials")
    horizon = _positive_int(cfg, "experiment.horizon")
    grid = _get(cfg, "experiment.a_grid", expected=list, required=False)

    rm = residual_model(sys)
    joint = joint_system(sys, rm)
    alpha = tune_chi_squared(sys.p, rate) if tuning is Tuning.CHI_SQUARED else tune_dr(sys.p, rate)
    w_bar = noise_truncation(sys.n, rate)
    result = min_trace_ellipsoid(joint, sys.Sigma_w, alpha, w_bar, grid=grid, threads=threads)
    cloud = reachable_cloud(
        joint, sys.Sigma_w, alpha, w_bar, trajectories=trajectories, horizon=horizon, seed=seed
    )
    margins = result.Q_x.margin(cloud)

    doc = {
        "tuning": tuning.value,
        "target_rate": rate,
        "alpha": alpha,
        "w_bar": w_bar,
        "a": result.a,
        "a1": result.a1,
        "a2": result.a2,
        "trace_qx": result.trace_Qx,
        "Q_xi": result.Q_xi,
        "Q_x": result.Q_x.Q,
        "containment": {
            "points": int(cloud.shape[0]),
            "max_margin": float(margins.max()),
        },
        "grid": [
            {
                "a": d.a,
                "status": d.status.value,
                "trace_qx": d.trace_qx,
                "a1": d.a1,
                "a2": d.a2,
                "min_eig_slack": d.min_eig_slack,
                "duality_gap": d.duality_gap,
            }
            for d in result.diagnostics
        ],
    }
    files = {"cloud.csv": _csv(cloud, tuple(f"x{i+1}" for i in range(sys.n)))}
    if sys.n == 2:
        files["ellipse.csv"] = _csv(result.Q_x.boundary_points(64), ("x1", "x2"))
    else:
        vals, vecs = np.linalg.eigh(result.Q_x.Q)
        rows = [(i + 1, float(np.sqrt(max(vals[i], 0.0)))) + tuple(vecs[:, i]) for i in range(sys.n)]
        header = ("axis", "semi_axis_length") + tuple(f"v{j+1}" for j in range(sys.n))
        files["axes.csv"] = _csv(rows, header)
    return doc, files


def _experiment_tradeoff_sweep(cfg, sys, threads):
    rates = _rates_from_config(cfg)
    grid = _get(cfg, "experiment.a_grid", expected=list, required=False)
    rm = residual_model(sys)
    points = trace_tradeoff_sweep(sys, rm, rates, grid=grid, threads=threads)
    rows = [(pt.target_rate, pt.alpha, pt.w_bar, pt.trace_qx) for pt in points]
    result = {
        "rates": rates,
        "sweep": [
            {"target_rate": pt.target_rate, "alpha_dr": pt.alpha, "w_bar": pt.w_bar, "trace_qx": pt.trace_qx}
            for pt in points
        ],
    }
    return result, {"sweep.csv": _csv(rows, ("target_rate", "alpha_dr", "w_bar", "trace_qx"))}


def emit_worst_case_curve(rates, p: int) -> list[tuple[float, float, float]]:
    """Worst-case alarm rate over the ambiguity set, per tuning.

    For the robust tuning the worst case equals the design target exactly.
    For the chi-squared tuning it is the distribution-free tail bound
    min(1, p / alpha) evaluated at the Gaussian-calibrated threshold, which
    exceeds the target whenever the target is below 1.
    """
    rows = []
    for rate in rates:
        alpha_chi2 = tune_chi_squared(p, rate)
        rows.append((float(rate), min(1.0, p / alpha_chi2), float(rate)))
    return rows


def _experiment_worst_case_curve(cfg, sys, threads):
    rates = _rates_from_config(cfg)
    rows = emit_worst_case_curve(rates, sys.p)
    result = {
        "p": sys.p,
        "curve": [
            {"target_rate": r, "chi2_worst_case": c, "dr_worst_case": d} for r, c, d in rows
        ],
    }
    return result, {"worst_case.csv": _csv(rows, ("target_rate", "chi2_worst_case", "dr_worst_case"))}


_EXPERIMENTS = {
    "tune": _experiment_tune,
    "false-alarm": _experiment_false_alarm,
    "reach-set": _experiment_reach_set,
    "tradeoff-sweep": _experiment_tradeoff_sweep,
    "worst-case-curve": _experiment_worst_case_curve,
}


def _resolve_threads(cli_value) -> int:
    if cli_value is not None:
        return max(1, int(cli_value))
    env = os.environ.get("DRSENTINEL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"DRSENTINEL_THREADS: not an integer: {env!r}") from None
    return 1


def run(config_path: str | Path, out_dir: str | Path | None = None, threads: int | None = None) -> int:
    """Execute the configured experiment; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        nthreads = _resolve_threads(threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    kind = cfg["experiment"]["kind"]
    sys_model = _system_from_config(cfg)
    out = Path(out_dir) if out_dir is not None else Path(_get(cfg, "output", expected=str, required=False, default="."))

    try:
        result, files = _EXPERIMENTS[kind](cfg, sys_model, nthreads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidInput, NoSteadyState) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AllInfeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    document = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "kind": kind,
        "seed": cfg["experiment"]["seed"],
        "results": result,
        "files": sorted(files),
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_bytes((dumps_json(document) + "\n").encode())
    for name, text in files.items():
        (out / name).write_bytes(text.encode())
    print(f"wrote {out / 'result.json'}" + (f" and {len(files)} data file(s)" if files else ""))
    return EXIT_OK


def validate(config_path: str | Path) -> int:
    try:
        load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print("config OK")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="drsentinel", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"drsentinel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment described by a JSON config")
    p_run.add_argument("config", help="path to the experiment config")
    p_run.add_argument("--out", default=None, help="output directory (overrides the config's output field)")
    p_run.add_argument("--threads", type=int, default=None,
                       help="solver grid parallelism (fallback: DRSENTINEL_THREADS, then 1)")

    p_val = sub.add_parser("validate", help="check a config file without running it")
    p_val.add_argument("config", help="path to the experiment config")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, out_dir=args.out, threads=args.threads)
    return validate(args.config)


if __name__ == "__main__":
    raise SystemExit(main())
