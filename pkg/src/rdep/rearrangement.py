"""Decreasing rearrangements: step functions, checkerboard matrices, and the
weighted multivariate form.

si_rearrange implements the four-step level-sort algorithm (cumulative row
sums, per-level descending sort, differencing, reassembly).  Its output is
the checkerboard whose level slices are the decreasing rearrangements of the
input's level slices, interpolated linearly between levels.
exact_si_rearrangement instead rearranges every slice u -> d1 C(u, v): it
refines the v-grid wherever two slice values cross between levels, so its
output reproduces the definitional rearranged copula exactly (as a
GridCopula, not a checkerboard on the input grid).
"""

from dataclasses import dataclass

import numpy as np

from .checkerboard import CheckerboardMatrix, GridCopula

__all__ = [
    "StepFunction", "decreasing_rearrangement", "si_rearrange", "sd_rearrange",
    "satisfies_si_criterion", "si_rearrange_grid", "exact_si_rearrangement",
    "ConditionalTable", "multivariate_rearrange",
]

_COALESCE = 1e-12


class StepFunction:
    """Piecewise-constant function on [0, 1]: pieces of (width, value)."""

    __slots__ = ("widths", "values")

    def __init__(self, widths, values):
        widths = np.asarray(widths, dtype=float)
        values = np.asarray(values, dtype=float)
        if widths.shape != values.shape or widths.ndim != 1 or widths.size == 0:
            raise ValueError("widths and values must be matching 1-D sequences")
        if np.any(widths <= 0.0):
            raise ValueError("piece widths must be positive")
        if abs(widths.sum() - 1.0) > 1e-12:
            raise ValueError("piece widths must sum to 1")
        self.widths = widths
        self.values = values

    @classmethod
    def from_pieces(cls, pieces) -> "StepFunction":
        w, v = zip(*pieces)
        return cls(np.array(w, dtype=float), np.array(v, dtype=float))

    @property
    def pieces(self):
        return list(zip(self.widths.tolist(), self.values.tolist()))

    def integral(self) -> float:
        return float(self.widths @ self.values)

    def cumulative(self, t):
        """Integral from 0 to t."""
        t = np.asarray(t, dtype=float)
        cw = np.concatenate(([0.0], np.cumsum(self.widths)))
        ci = np.concatenate(([0.0], np.cumsum(self.widths * self.values)))
        idx = np.clip(np.searchsorted(cw, t, side="right") - 1, 0, self.widths.size - 1)
        return ci[idx] + (t - cw[idx]) * self.values[idx]

    def __repr__(self):
        return f"StepFunction({self.widths.size} pieces)"


def decreasing_rearrangement(f: StepFunction) -> StepFunction:
    """Sort the pieces by value, descending; stable on ties; idempotent."""
    order = np.argsort(-f.values, kind="stable")
    return StepFunction(f.widths[order], f.values[order])


def satisfies_si_criterion(matrix: CheckerboardMatrix) -> bool:
    """True iff every column of cumulative row sums is non-increasing, i.e.
    the rows are ordered in the majorization sense and the checkerboard is
    stochastically increasing."""
    b = np.cumsum(matrix.a, axis=1)
    return bool(np.all(b[:-1, :] >= b[1:, :]))


def si_rearrange(matrix: CheckerboardMatrix) -> CheckerboardMatrix:
    """Level-sort rearrangement of a checkerboard matrix.

    Steps: cumulative row sums B_k^l; sort each level l descending over k;
    difference consecutive sorted levels; reassemble.  Fixed points are
    exactly the matrices satisfying the majorization criterion, and those
    are returned unchanged (which also makes the map idempotent bitwise).
    """
    if satisfies_si_criterion(matrix):
        return matrix
    b = np.cumsum(matrix.a, axis=1)
    b_sorted = -np.sort(-b, axis=0)
    out = np.empty_like(b_sorted)
    out[:, 0] = b_sorted[:, 0]
    out[:, 1:] = b_sorted[:, 1:] - b_sorted[:, :-1]
    return CheckerboardMatrix(np.maximum(out, 0.0))


def sd_rearrange(matrix: CheckerboardMatrix) -> CheckerboardMatrix:
    """Stochastically decreasing rearrangement: the row-reversed SI result."""
    return CheckerboardMatrix(si_rearrange(matrix).a[::-1, :])


def _union_breaks(weight_orders, widths) -> np.ndarray:
    """Union of cumulative-width breakpoints over several piece orderings."""
    pts = [np.array([0.0, 1.0])]
    for order in weight_orders:
        pts.append(np.cumsum(widths[order])[:-1])
    u = np.unique(np.concatenate(pts))
    keep = np.concatenate(([True], np.diff(u) > _COALESCE))
    u = u[keep]
    u[0], u[-1] = 0.0, 1.0
    return u


def _step_integrals(points, widths, values):
    """Integral of a step function from 0 to each point."""
    cw = np.concatenate(([0.0], np.cumsum(widths)))
    ci = np.concatenate(([0.0], np.cumsum(widths * values)))
    idx = np.clip(np.searchsorted(cw, points, side="right") - 1, 0, widths.size - 1)
    return ci[idx] + (points - cw[idx]) * values[idx]


def _assemble_rearranged(widths, v_breaks, slices_lo, slices_hi, orders) -> GridCopula:
    """Build the rearranged GridCopula from per-band sorted slice pairs.

    Band j runs from v_breaks[j] to v_breaks[j+1]; slices_lo[j]/slices_hi[j]
    are the slice values at its ends and orders[j] the piece permutation
    that sorts both ends of the band.
    """
    ub = _union_breaks(orders, widths)
    n_bands = len(orders)
    mass = np.empty((ub.size - 1, n_bands))
    for j in range(n_bands):
        o = orders[j]
        lo = _step_integrals(ub, widths[o], slices_lo[j][o])
        hi = _step_integrals(ub, widths[o], slices_hi[j][o])
        mass[:, j] = np.diff(hi - lo)
    return GridCopula(ub, v_breaks, np.maximum(mass, 0.0))


def _level_rearrange(widths, levels, v_breaks) -> GridCopula:
    """Level-sort rearrangement for weighted pieces: sort each level's slice
    independently and interpolate linearly between levels."""
    n_levels = levels.shape[1]
    orders = [np.argsort(-levels[:, j], kind="stable") for j in range(n_levels)]
    sorted_levels = [levels[orders[j], j] for j in range(n_levels)]
    ub = _union_breaks(orders, widths)
    mass = np.empty((ub.size - 1, n_levels - 1))
    for j in range(n_levels - 1):
        ilo = _step_integrals(ub, widths[orders[j]], sorted_levels[j])
        ihi = _step_integrals(ub, widths[orders[j + 1]], sorted_levels[j + 1])
        mass[:, j] = np.diff(ihi - ilo)
    return GridCopula(ub, v_breaks, np.maximum(mass, 0.0))


def si_rearrange_grid(grid) -> GridCopula:
    """Level-sort rearrangement of a GridCopula (weighted u-cells)."""
    g = grid.as_grid() if isinstance(grid, CheckerboardMatrix) else grid
    return _level_rearrange(g.du, g.conditional_nodes(), g.v_breaks)


def exact_si_rearrangement(grid) -> GridCopula:
    """Definitional slice-wise decreasing rearrangement of a grid copula.

    Between two v-levels the slice values are linear in v, so their ordering
    can change at interior crossing points; the v-grid is refined there and
    each refined band is sorted with a single consistent permutation.  The
    result is the rearranged copula itself; it differs from the level-sort
    algorithm exactly on bands with interior crossings.
    """
    g = grid.as_grid() if isinstance(grid, CheckerboardMatrix) else grid
    widths = g.du
    cond = g.conditional_nodes()
    vb = g.v_breaks
    k = widths.size

    new_breaks = [0.0]
    band_orders, lo_slices, hi_slices = [], [], []
    for j in range(vb.size - 1):
        c0, c1 = cond[:, j], cond[:, j + 1]
        # pairwise crossing times of the K linear value functions
        d0 = c0[:, None] - c0[None, :]
        dd = d0 - (c1[:, None] - c1[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = d0 / dd
        t = t[(dd != 0.0) & (t > _COALESCE) & (t < 1.0 - _COALESCE)]
        cuts = np.unique(t)
        if cuts.size:
            cuts = cuts[np.concatenate(([True], np.diff(cuts) > _COALESCE))]
        ts = np.concatenate(([0.0], cuts, [1.0]))
        for a, b in zip(ts[:-1], ts[1:]):
            hi_break = vb[j] + b * (vb[j + 1] - vb[j]) if b < 1.0 else vb[j + 1]
            if hi_break - new_breaks[-1] <= 1e-13:
                continue
            sa = (1 - a) * c0 + a * c1
            sb = (1 - b) * c0 + b * c1
            mid = 0.5 * (sa + sb)
            order = np.argsort(-mid, kind="stable")
            band_orders.append(order)
            lo_slices.append(sa)
            hi_slices.append(sb)
            new_breaks.append(hi_break)
    new_breaks = np.asarray(new_breaks)
    new_breaks[-1] = 1.0
    return _assemble_rearranged(widths, new_breaks, lo_slices, hi_slices, band_orders)


@dataclass(frozen=True)
class ConditionalTable:
    """Empirical disintegration over predictor boxes.

    weights are the box masses (positive, summing to 1); cdf[k, l] is the
    conditional probability of {response <= l/L} given box k, on the uniform
    response grid l = 1..L.
    """

    weights: np.ndarray
    cdf: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        c = np.asarray(self.cdf, dtype=float)
        if w.ndim != 1 or c.ndim != 2 or c.shape[0] != w.size:
            raise ValueError("weights must be 1-D and cdf K x L")
        if np.any(w <= 0.0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("box weights must be positive and sum to 1")
        if np.any(np.diff(c, axis=1) < -1e-12):
            raise ValueError("conditional CDF rows must be nondecreasing")
        if np.any(np.abs(c[:, -1] - 1.0) > 1e-9):
            raise ValueError("conditional CDF rows must end at 1")
        levels = np.arange(1, c.shape[1] + 1) / c.shape[1]
        if np.any(np.abs(w @ c - levels) > 1e-8):
            raise ValueError("weighted column sums must equal the response levels")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "cdf", c)

    @classmethod
    def from_checkerboard(cls, matrix: CheckerboardMatrix) -> "ConditionalTable":
        n1, n2 = matrix.n1, matrix.n2
        weights = np.full(n1, 1.0 / n1)
        return cls(weights, np.cumsum(matrix.a, axis=1) / n2)


def multivariate_rearrange(table: ConditionalTable) -> GridCopula:
    """Weighted decreasing rearrangement of a conditional table.

    For each response level the box slice is rearranged decreasingly with the
    box weights; the union of cumulative-weight breakpoints defines the
    output u-grid and cell masses are differences of per-level integrals.
    The output is stochastically increasing; for one predictor it reduces to
    the checkerboard level-sort rearrangement.
    """
    levels = np.hstack((np.zeros((table.weights.size, 1)), table.cdf))
    v_breaks = np.arange(table.cdf.shape[1] + 1) / table.cdf.shape[1]
    return _level_rearrange(table.weights, levels, v_breaks)
