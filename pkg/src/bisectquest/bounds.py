"""Closed-form MSE bounds for the sequential/joint query designs.

The lower bound decays like exp(-2nC/d) with C the summed channel
capacities in nats; the upper bounds for the discretized bisection decay
like exp(-(2/3) n Cbar) with Cbar the summed tail exponents
1/2 - sqrt(eps(1-eps)). The human-in-the-loop variants add a
distance-law term inside the exponent, and the human gain ratio compares
the machine-only and machine+human upper bounds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .infotheory import bz_exponent

UB_CONSTANT = 2.0 ** (-2.0 / 3.0) + 2.0 ** (1.0 / 3.0)  # upper bound at n = 0


@dataclass(frozen=True)
class BoundCurve:
    """A bound evaluated on a grid of iteration counts."""

    n_values: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.n_values) != len(self.values):
            raise ValueError("n_values and values must have equal length")
        if np.any(np.asarray(self.values) <= 0.0):
            raise ValueError("bound values must be positive")

    @classmethod
    def evaluate(cls, n_values, fn) -> "BoundCurve":
        ns = np.asarray(n_values)
        return cls(n_values=ns, values=np.array([fn(n) for n in ns]))


def mse_lower_bound(n: float, capacity_total: float, d: int = 1, h0: float = 0.0) -> float:
    """Entropy-based MSE lower bound (e^{2 h0} / (2 pi e)) d e^{-2nC/d}.

    capacity_total is the summed per-cycle entropy loss in nats; h0 the
    prior differential entropy; d the target dimension. Valid for any
    query policy and any estimator of the target.
    """
    if n < 0 or d < 1:
        raise ValueError("need n >= 0 and d >= 1")
    return math.exp(2.0 * h0) / (2.0 * math.pi * math.e) * d * math.exp(
        -2.0 * n * capacity_total / d
    )


def tail_upper_bound(n: float, delta: float, cbar_total: float) -> float:
    """Tail bound P(|X* - Xhat_n| > delta) <= (1/delta - 1) e^{-n Cbar}.

    Returned raw; values above 1 are vacuous and may be clipped for
    display by callers.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return (1.0 / delta - 1.0) * math.exp(-n * cbar_total)


def mse_from_tail(delta: float, tail_prob: float) -> float:
    """MSE bound delta^2 + (1 - delta^2) * tail for any [0,1]-valued target."""
    if not 0.0 <= delta <= 1.0 or not 0.0 <= tail_prob <= 1.0:
        raise ValueError("delta and tail_prob must lie in [0, 1]")
    return delta * delta + (1.0 - delta * delta) * tail_prob


def mse_upper_bound(n: float, cbar_total: float) -> float:
    """Optimized bisection MSE bound (2^{-2/3} + 2^{1/3}) e^{-(2/3) n Cbar}.

    Obtained from the tail bound at delta_n = 2^{-1/3} e^{-n Cbar / 3}.
    """
    if n < 0:
        raise ValueError("need n >= 0")
    return UB_CONSTANT * math.exp(-(2.0 / 3.0) * n * cbar_total)


def _warn_kappa(kappa: float) -> None:
    if kappa < 2.0:
        warnings.warn(
            f"kappa={kappa} is outside the kappa >= 2 regime of the human MSE bound;"
            " the bound is evaluated as stated",
            stacklevel=3,
        )


def _human_exponent_term(mu: float, kappa: float, delta: float) -> float:
    return mu * mu / 50.0 * (3.0 * delta / 4.0) ** (2.0 * kappa - 2.0)


def _optimized_human_inner(n: float, mu: float, kappa: float, cbar: float) -> float:
    """Human factor's exponent after substituting delta_n = 2^{-1/3} e^{-n cbar/3}."""
    return (
        _human_exponent_term(mu, kappa, 2.0 ** (-1.0 / 3.0))
        * n
        * math.exp(-n * cbar * (2.0 * kappa - 2.0) / 3.0)
    )


def human_tail_bound(n: float, eps_machine: float, mu: float, kappa: float, delta: float) -> float:
    """Machine+human tail bound delta^{-1} e^{-n [Cbar(eps) + human term]}."""
    _warn_kappa(kappa)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return (1.0 / delta) * math.exp(
        -n * (bz_exponent(eps_machine) + _human_exponent_term(mu, kappa, delta))
    )


def human_mse_bound(n: float, eps_machine: float, mu: float, kappa: float, delta: float) -> float:
    """Machine+human MSE bound delta^2 + delta^{-1} e^{-n [Cbar + human term]}."""
    return delta * delta + human_tail_bound(n, eps_machine, mu, kappa, delta)


def human_mse_bound_opt(n: float, eps_machine: float, mu: float, kappa: float) -> float:
    """Closed-form machine+human MSE bound at delta_n = 2^{-1/3} e^{-n Cbar/3}.

    Equals human_mse_bound evaluated at that delta; the machine-only bound
    is recovered as the human term vanishes (mu -> 0), and the human
    factor only tightens it.
    """
    _warn_kappa(kappa)
    cb = bz_exponent(eps_machine)
    inner = _optimized_human_inner(n, mu, kappa, cb)
    return math.exp(-(2.0 / 3.0) * n * cb) * (
        2.0 ** (-2.0 / 3.0) + 2.0 ** (1.0 / 3.0) * math.exp(-inner)
    )


def human_gain_ratio(n: float, kappa: float, mu: float, eps_machine: float) -> float:
    """Ratio of the machine-only to the machine+human MSE upper bound.

    Equals 1 at n = 0, stays >= 1, and returns to 1 as n grows (the human
    helps most in the early iterations).
    """
    cb = bz_exponent(eps_machine)
    inner = _optimized_human_inner(n, mu, kappa, cb)
    return UB_CONSTANT / (2.0 ** (-2.0 / 3.0) + 2.0 ** (1.0 / 3.0) * math.exp(-inner))


def multi_human_bounds(n: float, machine_eps, humans, delta: float) -> tuple[float, float]:
    """Tail and optimized MSE bounds for several machines plus humans.

    machine_eps is a sequence of constant crossover probabilities; humans
    a sequence of (mu, kappa) pairs. Returns
    (tail, mse) with tail = (1/delta - 1) e^{-n [Cbar + sum human terms]}
    and mse the optimized closed form with the summed human factor. With
    no humans this reduces exactly to tail_upper_bound / mse_upper_bound.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    humans = [(float(mu), float(kappa)) for mu, kappa in humans]
    for _, kappa in humans:
        _warn_kappa(kappa)
    cb = sum(bz_exponent(e) for e in machine_eps)
    tail = (1.0 / delta - 1.0) * math.exp(
        -n * (cb + sum(_human_exponent_term(mu, kappa, delta) for mu, kappa in humans))
    )
    inner = sum(_optimized_human_inner(n, mu, kappa, cb) for mu, kappa in humans)
    mse = math.exp(-(2.0 / 3.0) * n * cb) * (
        2.0 ** (-2.0 / 3.0) + 2.0 ** (1.0 / 3.0) * math.exp(-inner)
    )
    return tail, mse


def joint_mse_lower_bound(n: float, mean_gain: float, d_total: int, h0: float) -> float:
    """Lower bound on the summed target-and-errors MSE under unknown
    error probabilities.

    mean_gain is the running average of the per-cycle maximal entropy
    gains in nats; d_total the dimension of the joint (target, errors)
    vector; h0 the joint prior differential entropy. Bounds
    E||X - Xhat||^2 + E||eps - epshat||^2.
    """
    if n < 0 or d_total < 1:
        raise ValueError("need n >= 0 and d_total >= 1")
    return math.exp(2.0 * h0) / (2.0 * math.pi * math.e) * d_total * math.exp(
        -2.0 * n * mean_gain / d_total
    )
