"""Exact projections in dimension one via quantile functions.

For finitely supported measures on the line both projections have explicit
quantile formulas: integrate the difference of the two quantile functions,
take the lower convex hull of that integral, and shift each quantile
function by the hull's left derivative.  Everything here is piecewise
constant/linear arithmetic on a common breakpoint grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import DiscreteMeasure


@dataclass(frozen=True)
class QuantileFunction:
    """Left-continuous step function on (0, 1].

    ``values[j]`` is taken on the interval ``(breakpoints[j],
    breakpoints[j+1]]``; breakpoints start at 0 and end at 1, values are
    non-decreasing.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.size != vals.size + 1:
            raise ValueError("need one more breakpoint than values")
        if bp[0] != 0.0 or abs(bp[-1] - 1.0) > 1e-12 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must increase strictly from 0 to 1")
        if np.any(np.diff(vals) < -1e-12):
            raise ValueError("quantile values must be non-decreasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def mean(self) -> float:
        return float(self.widths() @ self.values)

    def on_grid(self, grid: np.ndarray) -> np.ndarray:
        """Values on the pieces of a refined grid (midpoint evaluation)."""
        mids = 0.5 * (grid[:-1] + grid[1:])
        idx = np.clip(np.searchsorted(self.breakpoints, mids) - 1, 0, self.values.size - 1)
        return self.values[idx]

    def to_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure.from_1d(self.values, self.widths())


@dataclass(frozen=True)
class GFunction:
    """Continuous piecewise-linear function on [0, 1] with node values."""

    breakpoints: np.ndarray
    node_values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.node_values, dtype=float)
        if bp.size != vals.size:
            raise ValueError("one node value per breakpoint")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "node_values", vals)

    def slopes(self) -> np.ndarray:
        return np.diff(self.node_values) / np.diff(self.breakpoints)

    def left_slope_on_grid(self, grid: np.ndarray) -> np.ndarray:
        """Left derivative on the pieces of a refined grid."""
        slopes = self.slopes()
        mids = 0.5 * (grid[:-1] + grid[1:])
        idx = np.clip(np.searchsorted(self.breakpoints, mids) - 1, 0, slopes.size - 1)
        return slopes[idx]


def quantile_of(measure: DiscreteMeasure) -> QuantileFunction:
    """Quantile function of a one-dimensional discrete measure."""
    values = measure.values_1d  # sorted by canonical construction
    cuts = np.concatenate(([0.0], np.cumsum(measure.weights)))
    cuts[-1] = 1.0
    return QuantileFunction(cuts, values)


def _union_grid(*breakpoint_sets: np.ndarray) -> np.ndarray:
    grid = np.unique(np.concatenate(breakpoint_sets))
    # collapse numerically-equal breakpoints (keep the last of each cluster,
    # so the exact endpoint 1.0 survives), then restore the exact origin
    keep = np.concatenate((np.diff(grid) > 1e-15, [True]))
    grid = grid[keep]
    grid[0] = 0.0
    return grid


def g_function(mu: DiscreteMeasure, nu: DiscreteMeasure) -> GFunction:
    """Integral of the quantile difference: ``u -> int_0^u (Fmu^-1 - Fnu^-1)``."""
    qmu = quantile_of(mu)
    qnu = quantile_of(nu)
    grid = _union_grid(qmu.breakpoints, qnu.breakpoints)
    slopes = qmu.on_grid(grid) - qnu.on_grid(grid)
    nodes = np.concatenate(([0.0], np.cumsum(slopes * np.diff(grid))))
    return GFunction(grid, nodes)


def lower_convex_hull(g: GFunction) -> GFunction:
    """Greatest convex minorant of a piecewise-linear function on [0, 1].

    Monotone-chain lower hull of the graph nodes; output slopes are
    non-decreasing and the hull agrees with ``g`` at both endpoints.
    """
    x = g.breakpoints
    y = g.node_values
    hull: list[int] = [0]
    for i in range(1, x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.asarray(hull)
    return GFunction(x[idx], y[idx])


@dataclass(frozen=True)
class OneDimProjection:
    """Both projections with the hull bookkeeping used to build them."""

    below: DiscreteMeasure
    above: DiscreteMeasure
    g: GFunction
    hull: GFunction
    distance_sq: float  # = W2^2(mu, below) = W2^2(nu, above)
    cross_distance_sq: float  # = W2^2(nu, below) = W2^2(mu, above)


def project_1d_detail(mu: DiscreteMeasure, nu: DiscreteMeasure) -> OneDimProjection:
    if mu.dim != 1 or nu.dim != 1:
        raise ValueError("1-d projection needs one-dimensional measures")
    qmu = quantile_of(mu)
    qnu = quantile_of(nu)
    g = g_function(mu, nu)
    hull = lower_convex_hull(g)

    grid = g.breakpoints  # hull vertices are a subset of these nodes
    widths = np.diff(grid)
    shift = hull.left_slope_on_grid(grid)
    below_vals = qmu.on_grid(grid) - shift
    above_vals = qnu.on_grid(grid) + shift
    # the hull construction makes both non-decreasing; enforce against roundoff
    for vals in (below_vals, above_vals):
        if np.any(np.diff(vals) < -1e-9):
            raise AssertionError("projected quantile lost monotonicity")
    below_vals = np.maximum.accumulate(below_vals)
    above_vals = np.maximum.accumulate(above_vals)

    below = DiscreteMeasure.from_1d(below_vals, widths)
    above = DiscreteMeasure.from_1d(above_vals, widths)
    distance_sq = float(widths @ shift**2)
    residual = g.left_slope_on_grid(grid) - shift
    cross_distance_sq = float(widths @ residual**2)
    return OneDimProjection(below, above, g, hull, distance_sq, cross_distance_sq)


def project_1d(
    mu: DiscreteMeasure, nu: DiscreteMeasure
) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Projections of ``mu`` below ``nu`` and of ``nu`` above ``mu``.

    Returns ``(below, above)``: ``below`` is the W2-closest measure to
    ``mu`` among those dominated by ``nu`` in the convex order, ``above``
    the W2-closest measure to ``nu`` among those dominating ``mu``.  The
    pair does not depend on the Wasserstein index used.
    """
    detail = project_1d_detail(mu, nu)
    return detail.below, detail.above


def w2_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Quadratic Wasserstein distance on the line via quantile coupling."""
    qmu = quantile_of(mu)
    qnu = quantile_of(nu)
    grid = _union_grid(qmu.breakpoints, qnu.breakpoints)
    diff = qmu.on_grid(grid) - qnu.on_grid(grid)
    return float(np.sqrt(np.diff(grid) @ diff**2))


def integrated_quantile_nodes(measure: DiscreteMeasure, grid: np.ndarray) -> np.ndarray:
    """Values of ``u -> int_0^u F^-1`` at the nodes of ``grid``."""
    q = quantile_of(measure)
    vals = q.on_grid(grid)
    return np.concatenate(([0.0], np.cumsum(vals * np.diff(grid))))
