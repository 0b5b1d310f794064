"""Entropy and channel primitives for binary-query target search.

All entropies, capacities, and gains are in nats (natural log). Divide by
``ln 2`` to express a value in bits.
"""

from __future__ import annotations

import math

import numpy as np

LN2 = math.log(2.0)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi


def binary_entropy(p: float) -> float:
    """Entropy of a Bernoulli(p) variable in nats, with 0*log(0) = 0.

    Symmetric about 1/2 and maximal there (ln 2).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def pmf_entropy(pmf) -> float:
    """Shannon entropy (nats) of a finite pmf given as a 1-D array."""
    q = np.asarray(pmf, dtype=float)
    nz = q[q > 0.0]
    return float(-(nz * np.log(nz)).sum())


def grid_entropy(posterior) -> float:
    """Differential entropy (nats) of a piecewise-constant grid density.

    For cell masses a_i of width delta the density is a_i/delta on cell i,
    so H = -sum_i a_i * log(a_i/delta). Uniform on [0, 1] gives 0; all mass
    in one cell gives log(delta).
    """
    a = posterior.masses
    nz = a[a > 0.0]
    return float(-(nz * (np.log(nz) - math.log(posterior.delta))).sum())


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 0.5:
        raise ValueError(f"crossover probability must lie in (0, 1/2), got {eps}")


def bsc_capacity(eps: float) -> float:
    """Capacity of a binary symmetric channel in nats: ln 2 - h(eps).

    This is the maximum one-question expected entropy reduction for a
    responder that flips the true answer with probability eps.
    """
    _check_eps(eps)
    return LN2 - binary_entropy(eps)


def bz_exponent(eps: float) -> float:
    """Per-step decay exponent of the discretized bisection tail bound.

    Returns 1/2 - sqrt(eps*(1-eps)), strictly positive and decreasing on
    (0, 1/2); it vanishes as the channel becomes uninformative.
    """
    _check_eps(eps)
    return 0.5 - math.sqrt(eps * (1.0 - eps))


def bsc_pmfs(eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Response pmfs (f0, f1) over {0, 1} of a BSC with crossover eps.

    f1 is the response law when the true answer is 1, f0 when it is 0.
    """
    _check_eps(eps)
    f0 = np.array([1.0 - eps, eps])
    f1 = np.array([eps, 1.0 - eps])
    return f0, f1


def _check_pmf(f) -> np.ndarray:
    q = np.asarray(f, dtype=float)
    if q.ndim != 1 or q.size != 2 or np.any(q < 0.0) or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError(f"not a valid binary pmf: {f}")
    return q


def expected_entropy_gain(u: float, f0, f1) -> float:
    """One-step expected entropy loss (nats) of a query with mass u.

    Evaluates H(u*f1 + (1-u)*f0) - u*H(f1) - (1-u)*H(f0), the mutual
    information between the truth bit and the noisy response when the
    queried region holds posterior mass u. Nonnegative and concave in u.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"query mass must lie in [0, 1], got {u}")
    q0 = _check_pmf(f0)
    q1 = _check_pmf(f1)
    mix = u * q1 + (1.0 - u) * q0
    return pmf_entropy(mix) - u * pmf_entropy(q1) - (1.0 - u) * pmf_entropy(q0)


def optimal_query_mass(f0, f1, tol: float = 1e-9) -> float:
    """Maximizer of the one-step entropy gain over query masses in [0, 1].

    Golden-section search; valid because the gain is concave in u. For a
    symmetric channel the maximizer is 1/2.
    """
    q0 = _check_pmf(f0)
    q1 = _check_pmf(f1)
    lo, hi = 0.0, 1.0
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    g1 = expected_entropy_gain(x1, q0, q1)
    g2 = expected_entropy_gain(x2, q0, q1)
    while hi - lo > tol:
        if g1 < g2:
            lo, x1, g1 = x1, x2, g2
            x2 = lo + _GOLDEN * (hi - lo)
            g2 = expected_entropy_gain(x2, q0, q1)
        else:
            hi, x2, g2 = x2, x1, g1
            x1 = hi - _GOLDEN * (hi - lo)
            g1 = expected_entropy_gain(x1, q0, q1)
    return 0.5 * (lo + hi)
