"""Query design policies.

Known error probabilities: single-player posterior bisection, the
discretized randomized-boundary bisection (BZ) used for Monte Carlo,
sequential per-player cycles, batch (joint) query gain and the M <= 2
equalized construction, and capacity-vs-cost player selection.

Unknown error probabilities: the one-dimensional gain curve over grid
boundaries, its maximizing query, and gain-based player selection on the
joint (target, errors) posterior.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .infotheory import bsc_capacity, bsc_pmfs, expected_entropy_gain, grid_entropy, pmf_entropy
from .players import PlayerModel, error_prob, respond
from .posterior import (
    GridPosterior,
    JointGridPosterior,
    QueryRegion,
    bayes_update,
    dyadic_partition,
    eps_marginal,
    mass,
    median,
    quantile,
    sub_marginal,
)

log = logging.getLogger(__name__)

_ALPHA_FLOOR = 1e-6
_MAX_JOINT_PLAYERS = 8


# ---------------------------------------------------------------------------
# bisection, known error probabilities


def bisect_query(posterior: GridPosterior) -> QueryRegion:
    """The probabilistic bisection query [0, median)."""
    return QueryRegion.interval(0.0, median(posterior))


def bz_alpha(eps: float) -> float:
    """Reweighting parameter sqrt(eps)/(sqrt(eps)+sqrt(1-eps)).

    This choice optimizes the one-step improvement-ratio bound of the
    discretized bisection, giving expected ratio <= 1 - bz_exponent(eps).
    """
    if not 0.0 < eps < 0.5:
        raise ValueError(f"crossover probability must lie in (0, 1/2), got {eps}")
    r = math.sqrt(eps)
    return r / (r + math.sqrt(1.0 - eps))


def clamp_alpha(alpha: float) -> float:
    """Keep the reweighting parameter strictly inside (0, 1/2)."""
    return min(max(alpha, _ALPHA_FLOOR), 0.5 - _ALPHA_FLOOR)


@dataclass(frozen=True)
class BzState:
    """Discretized-bisection state: grid posterior, reweighting parameter,
    and the threshold of the last query asked.

    alpha None means "derive from the player when stepping" (the machine
    default sqrt(eps)/(sqrt(eps)+sqrt(1-eps)))."""

    posterior: GridPosterior
    alpha: float | None = None
    last_query: float | None = None

    def __post_init__(self):
        if self.alpha is not None and not 0.0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha}")


def bz_step(state: BzState, player: PlayerModel, oracle, rng: np.random.Generator) -> BzState:
    """One discretized-bisection step.

    The query threshold is the right boundary of the median cell with
    probability b and its left boundary otherwise, where
    b = (1/2 - cum_{k-1}) / a_k makes the expected queried mass exactly
    1/2. ``oracle(query)`` supplies the response bit for [0, threshold);
    masses of cells agreeing with the response are scaled by 2*(1-alpha)
    and the rest by 2*alpha, then renormalized in closed form.
    """
    post = state.posterior
    alpha = state.alpha
    if alpha is None:
        if not player.is_machine:
            raise ValueError("alpha must be set explicitly for non-machine players")
        alpha = clamp_alpha(bz_alpha(player.eps))
    a = post.masses
    cum = post.cum
    n = post.n_cells
    k = int(np.searchsorted(cum, 0.5, side="left"))
    prev = cum[k - 1] if k > 0 else 0.0
    b = (0.5 - prev) / a[k] if a[k] > 0.0 else 1.0
    thr_idx = k + 1 if rng.random() < b else k
    threshold = thr_idx / n
    query = QueryRegion.interval(0.0, threshold)
    y = oracle(query)
    if y not in (0, 1):
        raise ValueError(f"oracle must answer 0 or 1, got {y}")
    up, down = 2.0 * (1.0 - alpha), 2.0 * alpha
    new = a.copy()
    if y == 1:
        new[:thr_idx] *= up
        new[thr_idx:] *= down
        agree = cum[thr_idx - 1] if thr_idx > 0 else 0.0
    else:
        new[:thr_idx] *= down
        new[thr_idx:] *= up
        agree = 1.0 - (cum[thr_idx - 1] if thr_idx > 0 else 0.0)
    total = up * agree + down * (1.0 - agree)
    return BzState(GridPosterior(new / total), alpha, last_query=threshold)


def _simulated_oracle(player, x_star, distance, rng):
    def oracle(query: QueryRegion) -> int:
        truth = int(query.contains(x_star))
        return respond(player, truth, distance, rng)

    return oracle


def sequential_cycle(
    posterior: GridPosterior,
    players,
    x_star: float,
    rng: np.random.Generator,
    backend: str = "bz",
) -> GridPosterior:
    """One cycle of the sequential design: query each player in order,
    updating the posterior between players.

    backend "bz" runs a discretized-bisection step per player (the Monte
    Carlo path); backend "exact" bisects at the interpolated median and
    applies the grid Bayes update. A human player's error probability is
    refreshed from |x_star - median| before its question.
    """
    players = list(players)
    if not players:
        raise ValueError("need at least one player")
    if backend not in ("bz", "exact"):
        raise ValueError(f"unknown backend: {backend!r}")
    for player in players:
        med = median(posterior)
        dist = abs(x_star - med)
        p_err = error_prob(player, dist)
        if backend == "exact":
            query = bisect_query(posterior)
            truth = int(query.contains(x_star))
            y = respond(player, truth, dist, rng)
            posterior = bayes_update(posterior, query, y, min(p_err, 0.5))
        else:
            alpha = clamp_alpha(bz_alpha(p_err)) if p_err < 0.5 else 0.5 - _ALPHA_FLOOR
            state = BzState(posterior, alpha)
            oracle = _simulated_oracle(player, x_star, dist, rng)
            posterior = bz_step(state, player, oracle, rng).posterior
    return posterior


def sequential_expected_entropy_loss(posterior: GridPosterior, eps_seq) -> float:
    """Expected total entropy loss of one exact sequential cycle,
    enumerated over all response paths.

    Players are constant-error responders with the given crossover
    probabilities; each path applies bisect + Bayes update in order and is
    weighted by its exact probability.
    """
    eps_seq = list(eps_seq)
    h0 = grid_entropy(posterior)
    total = 0.0
    stack = [(posterior, 1.0, 0)]
    while stack:
        post, prob, depth = stack.pop()
        if depth == len(eps_seq):
            total += prob * (h0 - grid_entropy(post))
            continue
        eps = eps_seq[depth]
        query = bisect_query(post)
        u = mass(post, query)
        p_one = u * (1.0 - eps) + (1.0 - u) * eps
        for y, p_y in ((1, p_one), (0, 1.0 - p_one)):
            if p_y <= 0.0:
                continue
            stack.append((bayes_update(post, query, y, eps), prob * p_y, depth + 1))
    return total


# ---------------------------------------------------------------------------
# joint (batch) design, known error probabilities


def joint_gain(posterior: GridPosterior, regions, eps_seq) -> float:
    """Expected entropy loss (nats) of a batch of M simultaneous queries.

    Enumerates the 2^M dyadic cells and the 2^M response vectors:
    H(sum_cells g_cell * P(cell)) - sum_cells H(g_cell) * P(cell), where
    g_cell is the product of per-player BSC response pmfs given the cell's
    membership pattern.
    """
    regions = list(regions)
    eps_seq = [float(e) for e in eps_seq]
    m = len(regions)
    if m != len(eps_seq):
        raise ValueError("one error probability per region required")
    if m > _MAX_JOINT_PLAYERS:
        raise ValueError(f"joint gain enumerates 2^M cells; M <= {_MAX_JOINT_PLAYERS} required")
    cells = dyadic_partition(regions)
    bit_vectors = list(itertools.product((0, 1), repeat=m))
    probs = np.array([mass(posterior, cells[bits]) for bits in bit_vectors])
    # g[cell, response] = prod_m P(y_m | z_m = cell bit m)
    g = np.ones((len(bit_vectors), len(bit_vectors)))
    for ci, cbits in enumerate(bit_vectors):
        for ri, ybits in enumerate(bit_vectors):
            for e, zb, yb in zip(eps_seq, cbits, ybits):
                g[ci, ri] *= (1.0 - e) if yb == zb else e
    mix = probs @ g
    cond = sum(p * pmf_entropy(row) for p, row in zip(probs, g))
    return pmf_entropy(mix) - cond


def construct_joint_queries_1d(posterior: GridPosterior, m: int):
    """Equalizing joint queries on [0, 1] for one or two players.

    M=1 returns [0, q(1/2)); M=2 returns [q(1/8), q(5/8)) and
    [q(3/8), q(7/8)) with q the posterior quantile function, which places
    mass 1/4 on every dyadic cell. The general construction for M > 2 is
    not provided; verify user-supplied regions with verify_equalization.
    """
    if m == 1:
        return [QueryRegion.interval(0.0, quantile(posterior, 0.5))]
    if m == 2:
        return [
            QueryRegion.interval(quantile(posterior, 1 / 8), quantile(posterior, 5 / 8)),
            QueryRegion.interval(quantile(posterior, 3 / 8), quantile(posterior, 7 / 8)),
        ]
    raise ValueError("equalized construction is implemented for M in {1, 2} only")


# ---------------------------------------------------------------------------
# costs and player selection, known error probabilities


@dataclass
class CostLedger:
    """Running record of (player index, cost) charges."""

    per_step: list[tuple[int, float]] = field(default_factory=list)

    def charge(self, player_index: int, cost: float) -> None:
        if cost < 0.0:
            raise ValueError("cost must be nonnegative")
        self.per_step.append((player_index, cost))

    @property
    def total(self) -> float:
        return sum(c for _, c in self.per_step)


def gain_with_cost(
    u: int, region: QueryRegion, posterior: GridPosterior, gamma: float, players
) -> float:
    """Information gain of querying player u minus gamma times its cost.

    The gain is the one-step entropy loss of the query under player u's
    constant-error channel. Only machine players have a query-independent
    channel, so humans are rejected here.
    """
    players = list(players)
    if not 0 <= u < len(players):
        raise ValueError(f"player index {u} out of range")
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    player = players[u]
    if not player.is_machine:
        raise ValueError("cost-aware gain requires constant-error (machine) players")
    f0, f1 = bsc_pmfs(player.eps)
    return expected_entropy_gain(mass(posterior, region), f0, f1) - gamma * player.cost


def select_player_cost(players, gamma: float) -> int:
    """Index of the player maximizing capacity minus gamma * cost.

    With query-independent costs the optimal query for the chosen player
    is the posterior bisection, so selection reduces to this argmax.
    Ties break to the lowest index.
    """
    players = list(players)
    if not players:
        raise ValueError("need at least one player")
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    best_u, best_score = 0, -math.inf
    for u, player in enumerate(players):
        if not player.is_machine:
            raise ValueError("cost-aware selection requires constant-error (machine) players")
        score = bsc_capacity(player.eps) - gamma * player.cost
        if score > best_score:
            best_u, best_score = u, score
    return best_u


# ---------------------------------------------------------------------------
# unknown error probabilities


def unknown_eps_gain_curve(jp: JointGridPosterior, u: int) -> tuple[np.ndarray, np.ndarray]:
    """Entropy gain of the query [0, x) for every grid boundary x.

    Returns (boundaries, gains) with gains(x) = h(g1(x)) - c, where
    g1(x) integrates the error-weighted density below x plus the
    complement-weighted density above, and c is the posterior-mean binary
    entropy of player u's error probability (midpoint quadrature).
    """
    jp._check_player(u)
    sub = sub_marginal(jp, u)  # (n_x, n_eps)
    eps = jp.eps_midpoints(u)
    h_eps = -eps * np.log(eps) - (1.0 - eps) * np.log(1.0 - eps)
    mu_per_cell = sub @ eps
    a_per_cell = sub.sum(axis=1)
    c_n = float(eps_marginal(jp, u) @ h_eps)
    cum_mu = np.concatenate(([0.0], np.cumsum(mu_per_cell)))
    cum_rest = np.concatenate(([0.0], np.cumsum(a_per_cell - mu_per_cell)))
    g1 = cum_mu + (cum_rest[-1] - cum_rest)
    g1 = np.clip(g1, 1e-300, 1.0 - 1e-16)
    gains = (-g1 * np.log(g1) - (1.0 - g1) * np.log(1.0 - g1)) - c_n
    boundaries = np.arange(jp.n_x + 1) / jp.n_x
    return boundaries, gains


def unknown_eps_query(jp: JointGridPosterior, u: int) -> tuple[float, float]:
    """Gain-maximizing boundary query for player u: (x, gain).

    Ties break to the smallest x (the first maximizer on the grid);
    multiplicity is logged.
    """
    boundaries, gains = unknown_eps_gain_curve(jp, u)
    k = int(np.argmax(gains))
    n_max = int(np.sum(gains == gains[k]))
    if n_max > 1:
        log.debug("gain curve has %d maximizers; using the smallest boundary", n_max)
    return float(boundaries[k]), float(gains[k])


def unknown_eps_select_player(jp: JointGridPosterior) -> int:
    """Index of the player with the largest maximal entropy gain.

    Equals the argmax of the posterior-mean capacity E[C(eps_u)] up to
    grid resolution. Ties break to the lowest index.
    """
    best_u, best_gain = 0, -math.inf
    for u in range(jp.n_players):
        _, gain = unknown_eps_query(jp, u)
        if gain > best_gain:
            best_u, best_gain = u, gain
    return best_u
