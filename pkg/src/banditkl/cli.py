"""Configuration parsing, experiment orchestration, and CSV/report output.

Subcommands:
    bandit run config.json [--out PREFIX] [--seed N] [--horizon T] [--replications R]
    bandit bounds config.json [--out PREFIX]
    bandit verify [--reps N]

Exit codes: 0 success, 1 validation error, 2 certificate failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bounds_mod
from .dist import FiniteDist, make_finite
from .divergence import k_inf, k_inf_primal
from .errors import BanditError, ConfigParseError, ConfigValidationError
from .indices import ExplorationSchedule
from .policies import POLICY_TAGS, PolicyKind
from .sim import BanditInstance, mc_check_deviation, mc_check_types, run_many

_TOP_KEYS = {
    "arms", "policies", "T", "replications", "seed", "checkpoints", "out", "bounds",
}
_BOUNDS_KEYS = {"c_grid", "kinf_c", "epsilon_scale", "theta_grid"}
_SCHEDULES = tuple(s.value for s in ExplorationSchedule)


@dataclass
class ExperimentConfig:
    instance: BanditInstance
    policies: list[PolicyKind]
    horizon: int
    replications: int
    base_seed: int
    checkpoints: tuple[int, ...] | None
    out_prefix: str
    c_grid: tuple[float, ...]
    kinf_c: float
    epsilon_scale: float
    theta_grid: int
    raw: dict = field(default_factory=dict)


def _fmt(x: float) -> str:
    """Round-trippable float text: 17 significant digits."""
    return f"{x:.17g}"


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigValidationError(msg)


def _parse_arm(spec, index: int) -> FiniteDist:
    _require(isinstance(spec, dict), f"arm {index}: expected an object")
    keys = set(spec)
    if keys == {"bernoulli"}:
        p = spec["bernoulli"]
        _require(isinstance(p, (int, float)), f"arm {index}: bernoulli needs a number")
        try:
            return FiniteDist.bernoulli(float(p))
        except BanditError as e:
            raise ConfigValidationError(f"arm {index}: {e}") from e
    if keys == {"support", "weights"}:
        try:
            return make_finite(spec["support"], spec["weights"])
        except BanditError as e:
            raise ConfigValidationError(f"arm {index}: {e}") from e
    raise ConfigValidationError(
        f"arm {index}: expected keys {{bernoulli}} or {{support, weights}}, "
        f"got {sorted(keys)}"
    )


def _parse_policy(spec, index: int) -> PolicyKind:
    if isinstance(spec, str):
        tag, schedule = spec, None
    elif isinstance(spec, dict):
        unknown = set(spec) - {"kind", "exploration"}
        _require(not unknown, f"policy {index}: unknown keys {sorted(unknown)}")
        _require("kind" in spec, f"policy {index}: missing 'kind'")
        tag = spec["kind"]
        schedule = spec.get("exploration")
    else:
        raise ConfigValidationError(f"policy {index}: expected a string or object")
    _require(
        tag in POLICY_TAGS,
        f"policy {index}: unknown tag {tag!r}; valid tags: {', '.join(POLICY_TAGS)}",
    )
    if schedule is not None:
        _require(
            schedule in _SCHEDULES,
            f"policy {index}: unknown exploration {schedule!r}; "
            f"valid: {', '.join(_SCHEDULES)}",
        )
        schedule = ExplorationSchedule(schedule)
    return PolicyKind(policy=tag, exploration=schedule)


def parse_config(path: str) -> ExperimentConfig:
    """Load and validate a JSON experiment configuration."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigParseError(f"{path}:{e.lineno}: {e.msg}") from e
    _require(isinstance(raw, dict), "top level must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    _require(not unknown, f"unknown config keys {sorted(unknown)}; "
                          f"valid: {sorted(_TOP_KEYS)}")
    for key in ("arms", "policies", "T"):
        _require(key in raw, f"missing required config key {key!r}")

    arms_spec = raw["arms"]
    _require(isinstance(arms_spec, list) and len(arms_spec) >= 2,
             "arms must be a list with at least 2 entries")
    instance = BanditInstance(
        arms=tuple(_parse_arm(a, i) for i, a in enumerate(arms_spec))
    )

    policies_spec = raw["policies"]
    _require(isinstance(policies_spec, list) and policies_spec,
             "policies must be a non-empty list")
    policies = [_parse_policy(p, i) for i, p in enumerate(policies_spec)]
    names = [k.name for k in policies]
    _require(len(set(names)) == len(names),
             f"duplicate policy entries: {sorted(names)}")

    horizon = raw["T"]
    _require(isinstance(horizon, int) and horizon >= len(instance.arms),
             f"T must be an integer >= number of arms ({len(instance.arms)})")

    replications = raw.get("replications", 100)
    _require(isinstance(replications, int) and replications >= 1,
             "replications must be an integer >= 1")
    base_seed = raw.get("seed", 0)
    _require(isinstance(base_seed, int), "seed must be an integer")

    cps_spec = raw.get("checkpoints", 50)
    if isinstance(cps_spec, int):
        _require(cps_spec >= 1, "checkpoints count must be >= 1")
        checkpoints = None if cps_spec == 50 else _log_checkpoints(horizon, cps_spec)
    else:
        _require(isinstance(cps_spec, list) and cps_spec,
                 "checkpoints must be an integer count or a non-empty list")
        _require(all(isinstance(c, int) and 1 <= c <= horizon for c in cps_spec),
                 f"checkpoints must be integers in [1, {horizon}]")
        checkpoints = tuple(sorted(set(cps_spec)))

    out_prefix = raw.get("out")
    if out_prefix is None:
        out_prefix = os.path.splitext(os.path.basename(path))[0]
    _require(isinstance(out_prefix, str) and out_prefix, "out must be a string")

    b = raw.get("bounds", {})
    _require(isinstance(b, dict), "bounds must be an object")
    unknown = set(b) - _BOUNDS_KEYS
    _require(not unknown, f"unknown bounds keys {sorted(unknown)}; "
                          f"valid: {sorted(_BOUNDS_KEYS)}")
    c_grid_spec = b.get("c_grid")
    if c_grid_spec is None:
        c_grid = bounds_mod.DEFAULT_C_GRID
    elif isinstance(c_grid_spec, list):
        _require(all(isinstance(x, (int, float)) and x > 0 for x in c_grid_spec)
                 and c_grid_spec, "c_grid list must hold positive numbers")
        c_grid = tuple(float(x) for x in c_grid_spec)
    else:
        _require(isinstance(c_grid_spec, dict)
                 and set(c_grid_spec) == {"count", "lo", "hi"},
                 "c_grid must be a list or {count, lo, hi}")
        count, lo, hi = c_grid_spec["count"], c_grid_spec["lo"], c_grid_spec["hi"]
        _require(isinstance(count, int) and count >= 1 and 0 < lo <= hi,
                 "c_grid needs count >= 1 and 0 < lo <= hi")
        c_grid = tuple(np.logspace(math.log10(lo), math.log10(hi), count))
    kinf_c = b.get("kinf_c", 0.5)
    _require(isinstance(kinf_c, (int, float)) and kinf_c > 0,
             "kinf_c must be a positive number")
    epsilon_scale = b.get("epsilon_scale", bounds_mod.DEFAULT_EPSILON_SCALE)
    _require(isinstance(epsilon_scale, (int, float)) and 0 < epsilon_scale < 1,
             "epsilon_scale must lie inside (0, 1)")
    theta_grid = b.get("theta_grid", bounds_mod.DEFAULT_THETA_GRID)
    _require(isinstance(theta_grid, int) and theta_grid >= 2,
             "theta_grid must be an integer >= 2")

    return ExperimentConfig(
        instance=instance,
        policies=policies,
        horizon=horizon,
        replications=replications,
        base_seed=base_seed,
        checkpoints=checkpoints,
        out_prefix=out_prefix,
        c_grid=c_grid,
        kinf_c=float(kinf_c),
        epsilon_scale=float(epsilon_scale),
        theta_grid=theta_grid,
        raw=raw,
    )


def _log_checkpoints(T: int, count: int) -> tuple[int, ...]:
    from .sim import default_checkpoints

    return default_checkpoints(T, count)


def _write_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _bound_rows(config: ExperimentConfig) -> list[list[str]]:
    """Evaluate every bound, degrading precondition failures to annotated rows."""
    inst = config.instance
    T = config.horizon
    rows: list[list[str]] = []

    try:
        slope = bounds_mod.lower_bound_slope(inst)
        rows.append(["lower_bound_slope", "total", "slope", _fmt(slope)])
    except BanditError as e:
        rows.append(["lower_bound_slope", "total", "slope", f"skipped:{e}"])

    def emit(report_name: str, build):
        try:
            reports = build()
        except BanditError as e:
            rows.append([report_name, "total", "all", f"skipped:{e}"])
            return
        for rep in reports:
            for ab in rep.arms:
                for term, value in ab.terms.items():
                    rows.append([rep.name, str(ab.arm), term, _fmt(value)])
                rows.append([rep.name, str(ab.arm), "pull_bound", _fmt(ab.pull_bound)])
                rows.append(
                    [rep.name, str(ab.arm), "contribution", _fmt(ab.contribution)]
                )
            note = f" ({rep.special_case})" if rep.special_case else ""
            rows.append([rep.name, "total", f"regret_bound{note}", _fmt(rep.total)])

    emit("kl_bernoulli_regret_bound",
         lambda: [bounds_mod.bernoulli_regret_bound_best(inst, T, config.c_grid)])
    emit("kinf_regret_bound",
         lambda: [bounds_mod.kinf_regret_bound(
             inst, T, c=config.kinf_c,
             theta_grid=config.theta_grid, epsilon_scale=config.epsilon_scale)])
    emit("baselines",
         lambda: [r for _, r in sorted(bounds_mod.baseline_bounds(inst, T).items())])
    return rows


def run_experiment(config: ExperimentConfig, workers: int | None = None):
    """Simulate every configured policy, evaluate the bounds, and write the
    regret/pulls/bounds CSVs plus a manifest. Returns (exit_status, files)."""
    inst = config.instance
    results = {}
    for kind in config.policies:
        results[kind.name] = run_many(
            inst,
            kind,
            config.horizon,
            config.replications,
            config.base_seed,
            checkpoints=config.checkpoints,
            workers=workers,
        )

    prefix = config.out_prefix
    files = []

    regret_rows = []
    for kind in config.policies:
        agg = results[kind.name]
        for t, m, se in zip(agg.checkpoints, agg.mean_regret, agg.stderr_regret):
            regret_rows.append([kind.name, str(t), _fmt(m), _fmt(se)])
    path = f"{prefix}_regret.csv"
    _write_csv(path, ["policy", "checkpoint_t", "mean_regret", "stderr"], regret_rows)
    files.append(path)

    pull_rows = []
    for kind in config.policies:
        agg = results[kind.name]
        for arm, (m, se) in enumerate(zip(agg.mean_pulls, agg.stderr_pulls)):
            pull_rows.append([kind.name, str(arm), _fmt(m), _fmt(se)])
    path = f"{prefix}_pulls.csv"
    _write_csv(path, ["policy", "arm", "mean_pulls", "stderr"], pull_rows)
    files.append(path)

    path = f"{prefix}_bounds.csv"
    _write_csv(path, ["bound_name", "arm", "term", "value"], _bound_rows(config))
    files.append(path)

    any_agg = next(iter(results.values()))
    manifest = {
        "config": config.raw,
        "base_seed": config.base_seed,
        "child_seeds": list(any_agg.child_seeds),
        "checkpoints": list(any_agg.checkpoints),
        "action_log_hashes": {
            name: [f"0x{h:016x}" for h in agg.action_log_hashes]
            for name, agg in results.items()
        },
    }
    path = f"{prefix}_manifest.json"
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    files.append(path)
    return 0, files


def _random_small_dist(rng: np.random.Generator, n_atoms: int) -> FiniteDist:
    while True:
        xs = np.sort(rng.uniform(0.0, 1.0, size=n_atoms))
        if n_atoms == 1 or np.min(np.diff(xs)) > 0.05:
            break
    ws = rng.uniform(0.15, 1.0, size=n_atoms)
    ws = ws / ws.sum()
    return make_finite(xs.tolist(), ws.tolist())


def _verify_dual_primal(n_dists: int = 100, seed: int = 20240601):
    """Dual vs brute-force primal agreement on random small distributions."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    for i in range(n_dists):
        d = _random_small_dist(rng, 2 + (i % 2))
        for frac in (0.25, 0.55, 0.85):
            mu = d.mean + frac * (0.95 - d.mean)
            if not 0.0 <= mu < 1.0:
                continue
            gap = abs(k_inf(d, mu).value - k_inf_primal(d, mu, 2000))
            worst = max(worst, gap)
            checked += 1
    return worst <= 5e-4, f"{checked} cases, worst gap {worst:.3e} (tol 5e-4)"


_DEVIATION_SETTINGS = tuple(
    (p, t, eps) for p in (0.3, 0.5) for t in (100, 1000) for eps in (6.0, 8.0)
)

_TYPES_SETTINGS = (
    (FiniteDist.bernoulli(0.5), 50, 0.3),
    (FiniteDist.bernoulli(0.3), 100, 0.15),
    (make_finite([0.0, 0.5, 1.0], [1 / 3, 1 / 3, 1 / 3]), 60, 0.3),
)


def verify_certificates(reps: int = 100_000, out=None, dual_dists: int = 100) -> int:
    """Run the Monte Carlo certificates and the dual-primal agreement suite;
    returns the number of failures and prints one line per certificate."""
    out = sys.stdout if out is None else out
    failures = 0

    ok, detail = _verify_dual_primal(n_dists=dual_dists)
    print(f"CERT dual_primal_agreement: {'PASS' if ok else 'FAIL'} ({detail})",
          file=out)
    failures += 0 if ok else 1

    for p, t, eps in _DEVIATION_SETTINGS:
        freq, bound = mc_check_deviation(p, t, eps, reps)
        slack = 3.0 * math.sqrt(bound / reps)
        ok = freq <= bound + slack
        print(
            f"CERT deviation p={p} t={t} eps={eps}: {'PASS' if ok else 'FAIL'} "
            f"(freq={freq:.6f}, bound={bound:.6f})",
            file=out,
        )
        failures += 0 if ok else 1

    for nu, k, gamma in _TYPES_SETTINGS:
        freq, bound = mc_check_types(nu, k, gamma, reps)
        slack = 3.0 * math.sqrt(bound / reps)
        ok = freq <= bound + slack
        print(
            f"CERT types |S|={len(nu.support)} k={k} gamma={gamma}: "
            f"{'PASS' if ok else 'FAIL'} (freq={freq:.6f}, bound={bound:.6f})",
            file=out,
        )
        failures += 0 if ok else 1
    return failures


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandit",
        description="KL index policies for finite-support bandits: simulate, "
        "evaluate regret bounds, verify concentration certificates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate policies and write CSV reports")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output path prefix override")
    p_run.add_argument("--seed", type=int, help="base seed override")
    p_run.add_argument("--horizon", type=int, help="horizon override")
    p_run.add_argument("--replications", type=int, help="replication override")

    p_bounds = sub.add_parser("bounds", help="evaluate bounds only")
    p_bounds.add_argument("config")
    p_bounds.add_argument("--out", help="output path prefix override")

    p_verify = sub.add_parser("verify", help="run Monte Carlo certificates")
    p_verify.add_argument("--reps", type=int, default=100_000)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            failures = verify_certificates(reps=args.reps)
            if failures:
                print(f"{failures} certificate(s) failed", file=sys.stderr)
                return 2
            return 0

        config = parse_config(args.config)
        if args.out:
            config.out_prefix = args.out
        if args.command == "bounds":
            path = f"{config.out_prefix}_bounds.csv"
            _write_csv(path, ["bound_name", "arm", "term", "value"],
                       _bound_rows(config))
            print(path)
            return 0

        if args.seed is not None:
            config.base_seed = args.seed
        if args.horizon is not None:
            config.horizon = args.horizon
            if config.checkpoints is not None:
                config.checkpoints = tuple(
                    c for c in config.checkpoints if c <= args.horizon
                ) or None
        if args.replications is not None:
            config.replications = args.replications
        status, files = run_experiment(config)
        for f in files:
            print(f)
        return status
    except (ConfigParseError, ConfigValidationError, BanditError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
