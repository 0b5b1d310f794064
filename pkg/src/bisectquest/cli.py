"""Command-line interface.

Subcommands:
  simulate     run a scenario config, write the MSE CSV + metadata sidecar
  bounds       tabulate the analytic bound curves for a config
  verify       run the optimality identity checks, exit nonzero on failure
  interactive  play the noisy oracle yourself at a terminal

Exit codes: 0 success, 1 failed verification, 2 config error, 3 runtime
failure. BISECTQUEST_THREADS caps the Monte Carlo worker count.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundCurve, mse_lower_bound, mse_upper_bound, multi_human_bounds
from .infotheory import LN2, bsc_capacity, bz_exponent, grid_entropy
from .players import error_prob
from .policies import (
    bisect_query,
    construct_joint_queries_1d,
    joint_gain,
    sequential_expected_entropy_loss,
    unknown_eps_query,
)
from .posterior import (
    GridPosterior,
    JointGridPosterior,
    QueryRegion,
    bayes_update,
    quantile,
    verify_equalization,
    x_marginal,
)
from .sim import (
    KNOWN,
    ScenarioConfig,
    curve_to_csv,
    iterate_trial,
    make_prior,
    run_monte_carlo,
    trial_seed,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(Exception):
    pass


def _load_config(path: str, overrides=None, seed=None, trials=None) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        try:
            data[key] = json.loads(raw)
        except json.JSONDecodeError:
            data[key] = raw
    if seed is not None:
        data["seed"] = seed
    if trials is not None:
        data["trials"] = trials
    try:
        return ScenarioConfig.from_json_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _write_metadata(out_path: Path, config: ScenarioConfig, wall_time: float) -> None:
    meta = {
        "config": config.to_json_dict(),
        "seed": config.seed,
        "wall_time_s": wall_time,
        "version": __version__,
        "csv": out_path.name,
    }
    out_path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def _snapshot_posteriors(config: ScenarioConfig, every: int, out_path: Path) -> None:
    """Rerun trial 0 capturing the posterior every ``every`` cycles."""
    snaps = []
    for cycle, state in enumerate(iterate_trial(config, trial_seed(config.seed, 0))):
        if cycle == 0 or cycle % every != 0:
            continue
        post = state if config.mode == KNOWN else x_marginal(state)
        snaps.append({"cycle": cycle, **post.to_json_dict()})
    out_path.with_suffix(".snapshots.json").write_text(json.dumps(snaps) + "\n")


def _cmd_simulate(args) -> int:
    config = _load_config(args.config, args.override, args.seed, args.trials)
    out_path = Path(args.out)
    t0 = time.perf_counter()
    curve = run_monte_carlo(config)
    wall = time.perf_counter() - t0
    curve_to_csv(curve, out_path)
    _write_metadata(out_path, config, wall)
    if args.snapshot_every:
        _snapshot_posteriors(config, args.snapshot_every, out_path)
    print(f"wrote {out_path} ({config.trials} trials, {config.n_cycles} cycles, {wall:.2f}s)")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    config = _load_config(args.config, args.override, args.seed, args.trials)
    machines = [p for p in config.players if p.is_machine]
    humans = [p for p in config.players if not p.is_machine]
    if not machines:
        raise ConfigError("bound tables need at least one constant-error player")
    cap_total = sum(bsc_capacity(p.eps) for p in machines)
    cbar_total = sum(bz_exponent(p.eps) for p in machines)
    h0 = grid_entropy(make_prior(config.prior, config.grid_cells))
    ns = range(config.n_cycles + 1)
    curves = {
        "lower": BoundCurve.evaluate(ns, lambda n: mse_lower_bound(n, cap_total, args.dim, h0)),
        "upper": BoundCurve.evaluate(ns, lambda n: mse_upper_bound(n, cbar_total)),
    }
    if humans:
        human_params = [(p.mu, p.kappa) for p in humans]
        machine_eps = [p.eps for p in machines]
        curves["human_opt"] = BoundCurve.evaluate(
            ns, lambda n: multi_human_bounds(n, machine_eps, human_params, 0.5)[1]
        )
        curves["hgr"] = BoundCurve(
            n_values=curves["upper"].n_values,
            values=curves["upper"].values / curves["human_opt"].values,
        )
    lines = ["n," + ",".join(curves)]
    for i, n in enumerate(ns):
        lines.append(",".join([str(n)] + [repr(float(c.values[i])) for c in curves.values()]))
    Path(args.out).write_text("\n".join(lines) + "\n")
    if args.error_model_out:
        _write_error_model_csv(config, Path(args.error_model_out))
    print(f"wrote {args.out}")
    return EXIT_OK


def _write_error_model_csv(config: ScenarioConfig, path: Path) -> None:
    """Tabulate each player's error probability over a distance grid."""
    distances = np.linspace(0.0, 1.0, 201)
    names = []
    for i, p in enumerate(config.players):
        names.append(f"player{i}_{'bsc' if p.is_machine else 'human'}")
    lines = ["distance," + ",".join(names)]
    for d in distances:
        row = [repr(float(d))] + [repr(error_prob(p, float(d))) for p in config.players]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _verify_checks(two_player_a: float):
    """Yield (name, passed, detail) for each optimality check."""
    uniform = GridPosterior.uniform(1024)

    a = two_player_a
    regions_1d = [
        QueryRegion.interval(a, a + 0.5),
        QueryRegion.interval(0.375, 0.875),
    ]
    ok, dev = verify_equalization(uniform, regions_1d, tol=1e-12)
    yield "equalization-1d", ok, f"max deviation {dev:.3e} (tol 1e-12)"

    r = 1.0 / math.sqrt(2.0)
    one_player_2d = [QueryRegion.boxes_2d([((0.0, r), (0.0, r))])]
    ok, dev = verify_equalization(None, one_player_2d, tol=1e-12)
    yield "equalization-2d-one-player", ok, f"max deviation {dev:.3e} (tol 1e-12)"

    two_player_2d = [
        QueryRegion.boxes_2d([((0.0, 0.75), (0.0, 0.5)), ((0.25, 0.75), (0.5, 0.75))]),
        QueryRegion.boxes_2d([((0.25, 1.0), (0.5, 1.0)), ((0.25, 0.75), (0.25, 0.5))]),
    ]
    ok, dev = verify_equalization(None, two_player_2d, tol=1e-12)
    yield "equalization-2d-two-player", ok, f"max deviation {dev:.3e} (tol 1e-12)"

    eps = (0.3, 0.4)
    queries = construct_joint_queries_1d(uniform, 2)
    gain = joint_gain(uniform, queries, eps)
    cap_sum = sum(bsc_capacity(e) for e in eps)
    dev = abs(gain - cap_sum)
    yield "joint-gain-capacity-sum", dev <= 1e-9, f"|gain - sum C| = {dev:.3e} (tol 1e-9)"

    seq = sequential_expected_entropy_loss(uniform, eps)
    dev = max(abs(seq - cap_sum), abs(seq - gain))
    yield "sequential-joint-equivalence", dev <= 1e-3, f"max deviation {dev:.3e} (tol 1e-3)"

    jp = JointGridPosterior.uniform(64, [64])
    _, gain_star = unknown_eps_query(jp, 0)
    # independent quadrature of E[C(eps)] for eps uniform on [0, 1/2)
    fine = np.linspace(0.0, 0.5, 2_000_001)[1:-1]
    expected = float(np.mean(LN2 + fine * np.log(fine) + (1.0 - fine) * np.log(1.0 - fine)))
    dev = abs(gain_star - expected)
    yield "unknown-eps-gain-identity", dev <= 1e-2, f"|gain* - E[C]| = {dev:.3e} (tol 1e-2)"


def _cmd_verify(args) -> int:
    first_failure = None
    for name, ok, detail in _verify_checks(args.two_player_a):
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        if not ok and first_failure is None:
            first_failure = name
    if first_failure is not None:
        print(f"verification failed: {first_failure}")
        return EXIT_CHECK_FAILED
    print("all checks passed")
    return EXIT_OK


def _cmd_interactive(args) -> int:
    config = _load_config(args.config, args.override, args.seed, args.trials)
    eps = args.assumed_eps
    if eps is None:
        machines = [p for p in config.players if p.is_machine]
        eps = machines[0].eps if machines else 0.1
    if not 0.0 < eps <= 0.5:
        raise ConfigError(f"assumed eps must lie in (0, 1/2], got {eps}")
    post = make_prior(config.prior, config.grid_cells)
    n_questions = args.questions or config.n_cycles
    print(
        f"Target localization on [0, 1): {n_questions} questions, "
        f"assumed error probability {eps}. Answer y/n, or q to stop.",
        flush=True,
    )
    asked = 0
    while asked < n_questions:
        query = bisect_query(post)
        (a, b), = query.intervals_1d() or [(0.0, 0.0)]
        print(f"Question {asked + 1}: Is the target in [{a:.6f}, {b:.6f})? (y/n/q)", flush=True)
        try:
            answer = input().strip().lower()
        except EOFError:
            print("input closed; stopping early", flush=True)
            break
        if answer in ("q", "quit"):
            break
        if answer not in ("y", "yes", "n", "no"):
            print("please answer y, n, or q", flush=True)
            continue
        post = bayes_update(post, query, 1 if answer.startswith("y") else 0, eps)
        asked += 1
        lo, hi = quantile(post, 0.025), quantile(post, 0.975)
        print(f"median {quantile(post, 0.5):.6f}  95% interval [{lo:.6f}, {hi:.6f})", flush=True)
    print(f"Final estimate: {quantile(post, 0.5):.6f} after {asked} answers", flush=True)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bisectquest",
        description="Collaborative noisy-questions target localization",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_out):
        p.add_argument("--config", required=True, help="scenario JSON file")
        if needs_out:
            p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--trials", type=int, default=None, help="override the trial count")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a top-level config field (JSON-parsed value)",
        )

    p = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    add_common(p, needs_out=True)
    p.add_argument(
        "--snapshot-every",
        type=int,
        default=None,
        metavar="K",
        help="dump trial-0 posterior snapshots every K cycles",
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bounds", help="tabulate analytic MSE bounds")
    add_common(p, needs_out=True)
    p.add_argument("--dim", type=int, default=1, help="target dimension for the lower bound")
    p.add_argument(
        "--error-model-out",
        default=None,
        metavar="PATH",
        help="also tabulate player error probabilities over distance",
    )
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("verify", help="run the optimality identity checks")
    p.add_argument(
        "--two-player-a",
        type=float,
        default=0.125,
        help="left endpoint of the first 1-D two-player query (default 1/8)",
    )
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("interactive", help="answer the questions yourself")
    add_common(p, needs_out=False)
    p.add_argument("--assumed-eps", type=float, default=None, help="error prob used for updates")
    p.add_argument("--questions", type=int, default=None, help="number of questions to ask")
    p.set_defaults(func=_cmd_interactive)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
