"""Grid-discretized beliefs over a target in [0, 1]^d and Bayes updates.

The 1-D target posterior is piecewise constant on a uniform grid of
``n`` cells of width ``delta = 1/n``; cell i (1-indexed) covers
``((i-1)*delta, i*delta]`` with the first cell including 0. Queries are
finite unions of half-open axis-aligned rectangles. Cells straddled by a
query boundary split their mass proportionally to overlap length.

For joint estimation of the target and unknown per-player crossover
probabilities, ``JointGridPosterior`` discretizes (x, eps_1, ..., eps_M)
on a product grid; eps integrals use cell-midpoint quadrature.

All values are immutable; updates return new posteriors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

_MASS_TOL = 1e-6


# ---------------------------------------------------------------------------
# query regions


@dataclass(frozen=True)
class QueryRegion:
    """Union of half-open axis-aligned rectangles inside [0, 1]^d.

    ``rects`` is a tuple of rectangles, each a tuple of (a, b) bounds per
    coordinate with the convention [a, b). Degenerate rectangles (a == b)
    are permitted and empty.
    """

    dim: int
    rects: tuple[tuple[tuple[float, float], ...], ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        for rect in self.rects:
            if len(rect) != self.dim:
                raise ValueError(f"rectangle {rect} does not have {self.dim} coordinates")
            for a, b in rect:
                if not (0.0 <= a <= b <= 1.0):
                    raise ValueError(f"rectangle side [{a}, {b}) outside the unit domain")

    @classmethod
    def interval(cls, a: float, b: float) -> "QueryRegion":
        return cls(dim=1, rects=(((a, b),),))

    @classmethod
    def union_1d(cls, intervals) -> "QueryRegion":
        return cls(dim=1, rects=tuple(((a, b),) for a, b in intervals))

    @classmethod
    def boxes_2d(cls, boxes) -> "QueryRegion":
        """Build from ((x0, x1), (y0, y1)) pairs."""
        return cls(dim=2, rects=tuple((tuple(bx), tuple(by)) for bx, by in boxes))

    @classmethod
    def empty(cls, dim: int) -> "QueryRegion":
        return cls(dim=dim, rects=())

    def contains(self, point) -> bool:
        """Half-open membership test; ``point`` is a scalar for d=1."""
        pt = (point,) if self.dim == 1 and np.isscalar(point) else tuple(point)
        for rect in self.rects:
            if all(a <= x < b for (a, b), x in zip(rect, pt)):
                return True
        return False

    def intervals_1d(self) -> list[tuple[float, float]]:
        """Sorted disjoint intervals covering the same 1-D set."""
        if self.dim != 1:
            raise ValueError("intervals_1d applies to 1-D regions only")
        spans = sorted((a, b) for ((a, b),) in self.rects if b > a)
        merged: list[tuple[float, float]] = []
        for a, b in spans:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        return merged

    def measure(self) -> float:
        """Lebesgue measure of the union (exact; rectangles may overlap)."""
        if self.dim == 1:
            return sum(b - a for a, b in self.intervals_1d())
        boxes, inside = _slab_boxes([self])
        return sum(_box_volume(box) for box, bits in zip(boxes, inside) if bits[0])


def _slab_boxes(regions):
    """Decompose [0,1]^d into elementary boxes on all region breakpoints.

    Returns (boxes, membership) where membership[j][m] says whether box j
    lies inside regions[m]. Boxes are pairwise disjoint and cover the domain.
    """
    d = regions[0].dim
    if any(r.dim != d for r in regions):
        raise ValueError("all regions must share the same dimension")
    cuts = []
    for axis in range(d):
        pts = {0.0, 1.0}
        for reg in regions:
            for rect in reg.rects:
                pts.add(rect[axis][0])
                pts.add(rect[axis][1])
        cuts.append(sorted(pts))
    spans_per_axis = [list(zip(c[:-1], c[1:])) for c in cuts]
    boxes = []
    membership = []
    for combo in itertools.product(*spans_per_axis):
        mid = tuple(0.5 * (a + b) for a, b in combo)
        boxes.append(tuple(combo))
        membership.append(tuple(reg.contains(mid) for reg in regions))
    return boxes, membership


def _box_volume(box) -> float:
    v = 1.0
    for a, b in box:
        v *= b - a
    return v


def dyadic_partition(regions) -> dict[tuple[int, ...], QueryRegion]:
    """Cells cut out by M regions and their complements.

    Returns the 2^M regions ``intersect_m (A_m)^{i_m}`` keyed by the bit
    vector (i_1, ..., i_M), where (A)^1 = A and (A)^0 is the complement.
    Cells are pairwise disjoint and cover [0, 1]^d; some may be empty.
    """
    regions = list(regions)
    if not regions:
        raise ValueError("need at least one region")
    d = regions[0].dim
    boxes, membership = _slab_boxes(regions)
    cells: dict[tuple[int, ...], list] = {
        bits: [] for bits in itertools.product((0, 1), repeat=len(regions))
    }
    for box, member in zip(boxes, membership):
        bits = tuple(int(m) for m in member)
        if _box_volume(box) > 0.0:
            cells[bits].append(box)
    return {
        bits: QueryRegion(dim=d, rects=tuple(boxlist)) if boxlist else QueryRegion.empty(d)
        for bits, boxlist in cells.items()
    }


# ---------------------------------------------------------------------------
# 1-D grid posterior


@dataclass(frozen=True, eq=False)
class GridPosterior:
    """Piecewise-constant probability over [0, 1] as cell masses."""

    masses: np.ndarray = field(repr=False)
    _cum: np.ndarray = field(repr=False, default=None, init=False)

    def __post_init__(self):
        a = np.asarray(self.masses, dtype=float)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("masses must be a non-empty 1-D array")
        if np.any(a < 0.0):
            raise ValueError("cell masses must be nonnegative")
        total = a.sum()
        if abs(total - 1.0) > _MASS_TOL:
            raise ValueError(f"cell masses must sum to 1, got {total}")
        a = a / total
        a.flags.writeable = False
        cum = np.cumsum(a)
        cum.flags.writeable = False
        object.__setattr__(self, "masses", a)
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def uniform(cls, n_cells: int) -> "GridPosterior":
        if n_cells < 1:
            raise ValueError("need at least one cell")
        return cls(np.full(n_cells, 1.0 / n_cells))

    @property
    def n_cells(self) -> int:
        return self.masses.size

    @property
    def delta(self) -> float:
        return 1.0 / self.masses.size

    @property
    def cum(self) -> np.ndarray:
        """Cumulative cell masses (right-edge CDF values)."""
        return self._cum

    def cdf(self, x: float) -> float:
        """CDF at x with linear interpolation inside the covering cell."""
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        pos = x * self.n_cells
        k = min(int(pos), self.n_cells - 1)
        prev = self._cum[k - 1] if k > 0 else 0.0
        return prev + self.masses[k] * (pos - k)

    def to_json_dict(self) -> dict:
        return {"delta": self.delta, "masses": self.masses.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "GridPosterior":
        post = cls(np.asarray(d["masses"], dtype=float))
        if abs(post.delta - d["delta"]) > 1e-12:
            raise ValueError("delta inconsistent with the number of masses")
        return post


def mass(posterior: GridPosterior, region: QueryRegion) -> float:
    """Posterior probability of a 1-D region, splitting straddled cells
    proportionally to overlap length."""
    if region.dim != 1:
        raise ValueError("1-D posterior requires a 1-D query region")
    return sum(posterior.cdf(b) - posterior.cdf(a) for a, b in region.intervals_1d())


def quantile(posterior: GridPosterior, t: float) -> float:
    """Smallest x with cumulative mass >= t, interpolated inside the cell."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("quantile level must lie in [0, 1]")
    cum = posterior.cum
    k = int(np.searchsorted(cum, t, side="left"))
    if k >= posterior.n_cells:
        return 1.0
    prev = cum[k - 1] if k > 0 else 0.0
    d = posterior.delta
    if posterior.masses[k] <= 0.0:
        return (k + 1) * d
    return k * d + d * (t - prev) / posterior.masses[k]


def median(posterior: GridPosterior) -> float:
    return quantile(posterior, 0.5)


def _overlap_fractions_n(n: int, region: QueryRegion) -> np.ndarray:
    if region.dim != 1:
        raise ValueError("1-D posterior requires a 1-D query region")
    edges = np.arange(n + 1) / n
    frac = np.zeros(n)
    for a, b in region.intervals_1d():
        frac += np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0.0, None) * n
    return np.clip(frac, 0.0, 1.0)


def overlap_fractions(posterior: GridPosterior, region: QueryRegion) -> np.ndarray:
    """Per-cell fraction of the cell's width covered by the region."""
    return _overlap_fractions_n(posterior.n_cells, region)


def bayes_update(
    posterior: GridPosterior, query: QueryRegion, response: int, eps: float
) -> GridPosterior:
    """Exact grid Bayes update for a noisy binary response.

    Cells agreeing with the response (inside the region for response 1,
    outside for response 0) are weighted by 1-eps and the rest by eps;
    straddled cells take the overlap-weighted average. eps = 1/2 is allowed
    as the degenerate uninformative boundary and leaves the posterior
    unchanged.
    """
    if response not in (0, 1):
        raise ValueError(f"response must be 0 or 1, got {response}")
    if not 0.0 < eps <= 0.5:
        raise ValueError(f"assumed error probability must lie in (0, 1/2], got {eps}")
    frac = overlap_fractions(posterior, query)
    w_in = 1.0 - eps if response == 1 else eps
    w_out = eps if response == 1 else 1.0 - eps
    weights = frac * w_in + (1.0 - frac) * w_out
    new = posterior.masses * weights
    total = new.sum()
    if total <= 0.0:
        raise ValueError("update annihilated the posterior")
    return GridPosterior(new / total)


def verify_equalization(posterior, regions, tol: float = 1e-9):
    """Check the joint-optimality condition: every dyadic cell mass 2^-M.

    ``posterior`` is a 1-D GridPosterior, or None for the uniform measure
    on [0, 1]^d (the analytic path used for 2-D checks). Returns
    (ok, max_deviation).
    """
    regions = list(regions)
    cells = dyadic_partition(regions)
    target = 0.5 ** len(regions)
    dev = 0.0
    for cell in cells.values():
        if posterior is None:
            m = cell.measure()
        else:
            m = mass(posterior, cell)
        dev = max(dev, abs(m - target))
    return dev <= tol, dev


# ---------------------------------------------------------------------------
# joint posterior over (x, eps_1, ..., eps_M)


@dataclass(frozen=True, eq=False)
class JointGridPosterior:
    """Cell masses over (target, per-player error probability) grids.

    ``masses`` has shape (n_x, n_eps_1, ..., n_eps_M). The x axis covers
    [0, 1] like GridPosterior; each eps axis covers ``eps_ranges[u]``
    (default [0, 1/2)) with midpoint quadrature nodes.
    """

    masses: np.ndarray = field(repr=False)
    eps_ranges: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        p = np.asarray(self.masses, dtype=float)
        if p.ndim < 2:
            raise ValueError("need one x axis plus at least one eps axis")
        if np.any(p < 0.0):
            raise ValueError("cell masses must be nonnegative")
        total = p.sum()
        if abs(total - 1.0) > _MASS_TOL:
            raise ValueError(f"cell masses must sum to 1, got {total}")
        p = p / total
        p.flags.writeable = False
        ranges = self.eps_ranges or tuple((0.0, 0.5) for _ in range(p.ndim - 1))
        if len(ranges) != p.ndim - 1:
            raise ValueError("one eps range per eps axis required")
        for lo, hi in ranges:
            if not 0.0 <= lo < hi <= 0.5:
                raise ValueError(f"eps range [{lo}, {hi}) must lie inside [0, 1/2]")
        object.__setattr__(self, "masses", p)
        object.__setattr__(self, "eps_ranges", tuple((float(lo), float(hi)) for lo, hi in ranges))

    @classmethod
    def uniform(cls, n_x: int, eps_cells, eps_ranges=None, x_prior: GridPosterior | None = None):
        """Product prior: x from ``x_prior`` (default uniform), eps uniform."""
        eps_cells = tuple(int(k) for k in eps_cells)
        shape = (n_x, *eps_cells)
        if x_prior is None:
            p = np.full(shape, 1.0 / np.prod(shape))
        else:
            if x_prior.n_cells != n_x:
                raise ValueError("x_prior resolution does not match n_x")
            p = np.broadcast_to(
                x_prior.masses.reshape(n_x, *([1] * len(eps_cells))), shape
            ) / np.prod(eps_cells)
            p = np.ascontiguousarray(p)
        return cls(p, eps_ranges=tuple(eps_ranges) if eps_ranges else ())

    @property
    def n_players(self) -> int:
        return self.masses.ndim - 1

    @property
    def n_x(self) -> int:
        return self.masses.shape[0]

    def x_midpoints(self) -> np.ndarray:
        return (np.arange(self.n_x) + 0.5) / self.n_x

    def eps_midpoints(self, u: int) -> np.ndarray:
        lo, hi = self.eps_ranges[u]
        n = self.masses.shape[1 + u]
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n

    def _check_player(self, u: int) -> None:
        if not 0 <= u < self.n_players:
            raise ValueError(f"player index {u} out of range for {self.n_players} players")


def x_marginal(jp: JointGridPosterior) -> GridPosterior:
    """Marginal belief over the target location."""
    axes = tuple(range(1, jp.masses.ndim))
    return GridPosterior(jp.masses.sum(axis=axes))


def eps_marginal(jp: JointGridPosterior, u: int) -> np.ndarray:
    """Marginal pmf over player u's error probability cells."""
    jp._check_player(u)
    axes = tuple(ax for ax in range(jp.masses.ndim) if ax != 1 + u)
    return jp.masses.sum(axis=axes)


def sub_marginal(jp: JointGridPosterior, u: int) -> np.ndarray:
    """Joint pmf over (x, eps_u), integrating out the other players."""
    jp._check_player(u)
    axes = tuple(ax for ax in range(1, jp.masses.ndim) if ax != 1 + u)
    return jp.masses.sum(axis=axes)


def joint_marginals(jp: JointGridPosterior):
    """All marginals at once: x, per-player eps, per-player (x, eps_u)."""
    return {
        "x": x_marginal(jp),
        "eps": [eps_marginal(jp, u) for u in range(jp.n_players)],
        "sub": [sub_marginal(jp, u) for u in range(jp.n_players)],
    }


def joint_bayes_update(
    jp: JointGridPosterior, u: int, query: QueryRegion, response: int
) -> JointGridPosterior:
    """Bayes update of the joint belief after querying player u.

    Each (x, eps) cell is weighted by the response likelihood evaluated at
    the eps-cell midpoint, with x cells straddled by the query boundary
    apportioned by overlap.
    """
    jp._check_player(u)
    if response not in (0, 1):
        raise ValueError(f"response must be 0 or 1, got {response}")
    frac = _overlap_fractions_n(jp.n_x, query)
    eps = jp.eps_midpoints(u)
    w_in = 1.0 - eps if response == 1 else eps
    w_out = eps if response == 1 else 1.0 - eps
    # weight[x, eps_u] broadcast over the remaining axes
    weight = np.multiply.outer(frac, w_in) + np.multiply.outer(1.0 - frac, w_out)
    shape = [1] * jp.masses.ndim
    shape[0] = jp.n_x
    shape[1 + u] = eps.size
    new = jp.masses * weight.reshape(shape)
    total = new.sum()
    if total <= 0.0:
        raise ValueError("update annihilated the posterior")
    return JointGridPosterior(new / total, eps_ranges=jp.eps_ranges)


def joint_means(jp: JointGridPosterior) -> tuple[float, np.ndarray]:
    """Conditional means (midpoint quadrature) of the target and each eps."""
    xm = x_marginal(jp)
    x_mean = float((xm.masses * jp.x_midpoints()).sum())
    eps_means = np.array(
        [float((eps_marginal(jp, u) * jp.eps_midpoints(u)).sum()) for u in range(jp.n_players)]
    )
    return x_mean, eps_means
