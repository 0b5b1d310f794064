"""Monte Carlo engine for the collaborative-questions experiments.

A scenario runs ``trials`` independent games of ``n_cycles`` cycles and
averages the squared estimation error per cycle. Known-error mode runs
the sequential design (one question per player per cycle); unknown-error
mode runs the select/query/update loop on the joint (target, errors)
posterior. Trial t draws its random stream from SeedSequence((seed, t)),
so results are independent of execution order and worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import mse_lower_bound, mse_upper_bound
from .infotheory import bsc_capacity, bz_exponent, grid_entropy
from .players import PlayerModel, respond
from .policies import sequential_cycle, unknown_eps_query, unknown_eps_select_player
from .posterior import (
    GridPosterior,
    JointGridPosterior,
    QueryRegion,
    joint_bayes_update,
    joint_means,
    median,
)

KNOWN = "known_eps"
UNKNOWN = "unknown_eps"

ENV_THREADS = "BISECTQUEST_THREADS"


@dataclass(frozen=True)
class PriorSpec:
    """Target prior: uniform, or a Gaussian mixture truncated to [0, 1]."""

    kind: str = "uniform"
    means: tuple[float, ...] = ()
    variances: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "uniform":
            return
        if self.kind != "gaussian_mixture":
            raise ValueError(f"unknown prior kind: {self.kind!r}")
        if not (len(self.means) == len(self.variances) == len(self.weights)) or not self.means:
            raise ValueError("mixture needs matching nonempty means/variances/weights")
        if any(v <= 0.0 for v in self.variances):
            raise ValueError("mixture variances must be positive")
        if abs(sum(self.weights) - 1.0) > 1e-9 or any(w < 0.0 for w in self.weights):
            raise ValueError("mixture weights must be nonnegative and sum to 1")

    def to_json_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform"}
        return {
            "kind": "gaussian_mixture",
            "means": list(self.means),
            "variances": list(self.variances),
            "weights": list(self.weights),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PriorSpec":
        kind = d.get("kind", "uniform")
        if kind == "uniform":
            return cls()
        return cls(
            kind=kind,
            means=tuple(float(x) for x in d["means"]),
            variances=tuple(float(x) for x in d["variances"]),
            weights=tuple(float(x) for x in d["weights"]),
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one Monte Carlo experiment."""

    players: tuple[PlayerModel, ...]
    x_star: float
    prior: PriorSpec = PriorSpec()
    n_cycles: int = 60
    trials: int = 1
    grid_cells: int = 500
    gamma: float = 0.0
    mode: str = KNOWN
    backend: str = "bz"
    eps_grid_cells: int = 64
    seed: int = 0

    def __post_init__(self):
        if not self.players:
            raise ValueError("need at least one player")
        if not 0.0 <= self.x_star <= 1.0:
            raise ValueError("x_star must lie in [0, 1]")
        if self.grid_cells < 2:
            raise ValueError("grid_cells must be >= 2")
        if self.trials < 1 or self.n_cycles < 1:
            raise ValueError("trials and n_cycles must be >= 1")
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        if self.mode not in (KNOWN, UNKNOWN):
            raise ValueError(f"mode must be {KNOWN!r} or {UNKNOWN!r}")
        if self.backend not in ("bz", "exact"):
            raise ValueError("backend must be 'bz' or 'exact'")
        if self.eps_grid_cells < 1:
            raise ValueError("eps_grid_cells must be >= 1")
        if self.mode == UNKNOWN and any(not p.is_machine for p in self.players):
            raise ValueError("unknown-error mode estimates constant crossover probabilities")

    def to_json_dict(self) -> dict:
        return {
            "players": [p.to_json_dict() for p in self.players],
            "prior": self.prior.to_json_dict(),
            "x_star": self.x_star,
            "n_cycles": self.n_cycles,
            "trials": self.trials,
            "grid_cells": self.grid_cells,
            "gamma": self.gamma,
            "mode": self.mode,
            "backend": self.backend,
            "eps_grid_cells": self.eps_grid_cells,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        if "players" not in d or "x_star" not in d:
            raise ValueError("config requires 'players' and 'x_star'")
        kwargs = dict(d)
        kwargs["players"] = tuple(PlayerModel.from_json_dict(p) for p in d["players"])
        kwargs["prior"] = PriorSpec.from_json_dict(d.get("prior", {"kind": "uniform"}))
        return cls(**kwargs)


@dataclass(frozen=True)
class MseCurve:
    """Per-cycle Monte Carlo MSE, n = 0 meaning the prior estimate."""

    n_values: np.ndarray
    mse_x: np.ndarray
    stderr_x: np.ndarray
    mse_eps: np.ndarray | None = None
    stderr_eps: np.ndarray | None = None

    def __post_init__(self):
        lengths = {len(self.n_values), len(self.mse_x), len(self.stderr_x)}
        if self.mse_eps is not None:
            lengths |= {len(self.mse_eps), len(self.stderr_eps)}
        if len(lengths) != 1:
            raise ValueError("curve columns must share one length")
        if np.any(self.mse_x < 0.0):
            raise ValueError("MSE values must be nonnegative")


def make_prior(spec: PriorSpec, grid_cells: int) -> GridPosterior:
    """Grid prior: uniform cells, or mixture density sampled at midpoints,
    truncated to [0, 1] and renormalized."""
    if spec.kind == "uniform":
        return GridPosterior.uniform(grid_cells)
    mids = (np.arange(grid_cells) + 0.5) / grid_cells
    dens = np.zeros(grid_cells)
    for w, m, v in zip(spec.weights, spec.means, spec.variances):
        dens += w * np.exp(-((mids - m) ** 2) / (2.0 * v)) / np.sqrt(2.0 * np.pi * v)
    return GridPosterior(dens / dens.sum())


def trial_seed(master_seed: int, trial_index: int) -> np.random.SeedSequence:
    """Documented per-trial stream: SeedSequence((master_seed, trial_index))."""
    return np.random.SeedSequence((master_seed, trial_index))


def iterate_trial(config: ScenarioConfig, seed):
    """Yield the belief state after 0, 1, ..., n_cycles cycles of one game.

    Known mode yields GridPosterior values driven by the sequential
    design; unknown mode yields JointGridPosterior values driven by the
    select/query/update loop. Single source of the trial dynamics for
    both the Monte Carlo engine and posterior snapshotting.
    """
    rng = np.random.default_rng(seed)
    if config.mode == KNOWN:
        post = make_prior(config.prior, config.grid_cells)
        yield post
        for _ in range(config.n_cycles):
            post = sequential_cycle(post, config.players, config.x_star, rng, config.backend)
            yield post
        return
    jp = JointGridPosterior.uniform(
        config.grid_cells,
        [config.eps_grid_cells] * len(config.players),
        x_prior=make_prior(config.prior, config.grid_cells),
    )
    yield jp
    for _ in range(config.n_cycles):
        u = unknown_eps_select_player(jp)
        boundary, _ = unknown_eps_query(jp, u)
        query = QueryRegion.interval(0.0, boundary)
        truth = int(query.contains(config.x_star))
        # unknown mode is machines-only, so the response distance is moot
        y = respond(config.players[u], truth, 0.0, rng)
        jp = joint_bayes_update(jp, u, query, y)
        yield jp


def run_trial(config: ScenarioConfig, seed) -> tuple[np.ndarray, np.ndarray | None]:
    """One game; returns per-cycle estimates (x, eps-or-None), n = 0 first.

    Known mode records the posterior median after each sequential cycle;
    unknown mode records the joint conditional means after each
    select/query/update step.
    """
    if config.mode == KNOWN:
        est = np.array([median(post) for post in iterate_trial(config, seed)])
        return est, None
    est_x = np.empty(config.n_cycles + 1)
    est_eps = np.empty((config.n_cycles + 1, len(config.players)))
    for n, jp in enumerate(iterate_trial(config, seed)):
        est_x[n], est_eps[n] = joint_means(jp)
    return est_x, est_eps


def _trial_squared_errors(config: ScenarioConfig, t: int) -> tuple[np.ndarray, np.ndarray | None]:
    est_x, est_eps = run_trial(config, trial_seed(config.seed, t))
    sq_x = (est_x - config.x_star) ** 2
    if est_eps is None:
        return sq_x, None
    eps_true = np.array([p.eps for p in config.players])
    sq_eps = ((est_eps - eps_true) ** 2).sum(axis=1)
    return sq_x, sq_eps


def run_monte_carlo(config: ScenarioConfig, workers: int | None = None) -> MseCurve:
    """Average squared errors over trials, per cycle.

    Worker count defaults to the BISECTQUEST_THREADS environment variable
    (1 if unset); results are bit-identical for any worker count because
    trial streams depend only on (seed, trial index) and the reduction
    runs in trial order.
    """
    if workers is None:
        workers = int(os.environ.get(ENV_THREADS, "1"))
    trials = config.trials
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=min(workers, trials)) as pool:
            results = list(
                pool.map(
                    _trial_squared_errors,
                    [config] * trials,
                    range(trials),
                    chunksize=max(1, trials // (4 * workers)),
                )
            )
    else:
        results = [_trial_squared_errors(config, t) for t in range(trials)]
    sq_x = np.stack([r[0] for r in results])
    n_values = np.arange(config.n_cycles + 1)
    ddof = 1 if trials > 1 else 0
    curve = dict(
        n_values=n_values,
        mse_x=sq_x.mean(axis=0),
        stderr_x=sq_x.std(axis=0, ddof=ddof) / np.sqrt(trials),
    )
    if config.mode == UNKNOWN:
        sq_eps = np.stack([r[1] for r in results])
        curve["mse_eps"] = sq_eps.mean(axis=0)
        curve["stderr_eps"] = sq_eps.std(axis=0, ddof=ddof) / np.sqrt(trials)
    return MseCurve(**curve)


# ---------------------------------------------------------------------------
# analytic-bound comparison


@dataclass(frozen=True)
class BoundsReport:
    """Empirical curve against the lower/upper bounds, with 2-sigma flags."""

    n_values: np.ndarray
    lower: np.ndarray
    mse: np.ndarray
    stderr: np.ndarray
    upper: np.ndarray
    lower_violations: int
    upper_violations: int

    def rows(self):
        for i in range(len(self.n_values)):
            yield (
                int(self.n_values[i]),
                float(self.lower[i]),
                float(self.mse[i]),
                float(self.stderr[i]),
                float(self.upper[i]),
                bool(self.mse[i] + 2.0 * self.stderr[i] < self.lower[i]),
                bool(self.mse[i] - 2.0 * self.stderr[i] > self.upper[i]),
            )


def compare_bounds(curve: MseCurve, config: ScenarioConfig) -> BoundsReport:
    """Sandwich check for a known-mode constant-error scenario.

    A point violates the lower bound when mse + 2 stderr < lower, and the
    upper bound when mse - 2 stderr > upper.
    """
    if config.mode != KNOWN or any(not p.is_machine for p in config.players):
        raise ValueError("bound comparison applies to known-mode constant-error scenarios")
    cap_total = sum(bsc_capacity(p.eps) for p in config.players)
    cbar_total = sum(bz_exponent(p.eps) for p in config.players)
    h0 = grid_entropy(make_prior(config.prior, config.grid_cells))
    lower = np.array([mse_lower_bound(n, cap_total, 1, h0) for n in curve.n_values])
    upper = np.array([mse_upper_bound(n, cbar_total) for n in curve.n_values])
    low_viol = int(np.sum(curve.mse_x + 2.0 * curve.stderr_x < lower))
    up_viol = int(np.sum(curve.mse_x - 2.0 * curve.stderr_x > upper))
    return BoundsReport(
        n_values=curve.n_values,
        lower=lower,
        mse=curve.mse_x,
        stderr=curve.stderr_x,
        upper=upper,
        lower_violations=low_viol,
        upper_violations=up_viol,
    )


# ---------------------------------------------------------------------------
# CSV round-tripping (shortest round-trip decimals via repr)


def curve_to_csv(curve: MseCurve, path) -> None:
    with_eps = curve.mse_eps is not None
    header = "n,mse_x,stderr_x" + (",mse_eps,stderr_eps" if with_eps else "")
    lines = [header]
    for i, n in enumerate(curve.n_values):
        row = [str(int(n)), repr(float(curve.mse_x[i])), repr(float(curve.stderr_x[i]))]
        if with_eps:
            row += [repr(float(curve.mse_eps[i])), repr(float(curve.stderr_eps[i]))]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def curve_from_csv(path) -> MseCurve:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    cols = {name: np.array([float(r[j]) for r in rows]) for j, name in enumerate(header)}
    return MseCurve(
        n_values=cols["n"].astype(int),
        mse_x=cols["mse_x"],
        stderr_x=cols["stderr_x"],
        mse_eps=cols.get("mse_eps"),
        stderr_eps=cols.get("stderr_eps"),
    )
