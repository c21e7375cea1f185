"""Finite copula representations.

CheckerboardMatrix is the uniform-grid object: an N1 x N2 nonnegative matrix
whose columns sum to N1 and rows to N2, encoding a copula with piecewise
constant density a_kl on cell [(k-1)/N1, k/N1) x [(l-1)/N2, l/N2).
GridCopula generalizes to arbitrary breakpoints with per-cell masses and
uniform margins; it is the common substrate for measure evaluation.
"""

from __future__ import annotations

import io

import numpy as np

__all__ = [
    "CheckerboardMatrix", "GridCopula", "eval_cdf", "partial1_slices",
    "induced_checkerboard", "coarsen", "markov_product", "d_p_distance",
]

_MARGIN_RTOL = 1e-10


def _sinkhorn(a: np.ndarray, row_targets: np.ndarray, col_targets: np.ndarray,
              sweeps: int = 8) -> np.ndarray:
    out = a.astype(float, copy=True)
    for _ in range(sweeps):
        rows = out.sum(axis=1)
        out *= (row_targets / rows)[:, None]
        cols = out.sum(axis=0)
        out *= (col_targets / cols)[None, :]
        if (np.abs(out.sum(axis=1) - row_targets) <= 1e-14 * row_targets).all():
            break
    return out


class CheckerboardMatrix:
    """Nonnegative matrix with column sums N1 and row sums N2."""

    __slots__ = ("a",)

    def __init__(self, a, renormalize: bool = True):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise ValueError("expected a nonempty 2-D matrix")
        if np.any(a < -1e-12 * max(a.shape)):
            raise ValueError("matrix entries must be nonnegative")
        n1, n2 = a.shape
        rows = a.sum(axis=1)
        cols = a.sum(axis=0)
        if (np.any(np.abs(rows - n2) > _MARGIN_RTOL * n2)
                or np.any(np.abs(cols - n1) > _MARGIN_RTOL * n1)):
            raise ValueError(
                "row sums must equal N2 and column sums N1 "
                f"(relative tolerance {_MARGIN_RTOL:g})")
        a = np.maximum(a, 0.0)
        if renormalize:
            a = _sinkhorn(a, np.full(n1, float(n2)), np.full(n2, float(n1)))
        object.__setattr__(self, "a", a)
        a.setflags(write=False)

    def __setattr__(self, name, value):
        raise AttributeError("CheckerboardMatrix is immutable")

    @property
    def n1(self) -> int:
        return self.a.shape[0]

    @property
    def n2(self) -> int:
        return self.a.shape[1]

    def __repr__(self):
        return f"CheckerboardMatrix({self.n1}x{self.n2})"

    def as_grid(self) -> "GridCopula":
        n1, n2 = self.a.shape
        return GridCopula(np.linspace(0.0, 1.0, n1 + 1),
                          np.linspace(0.0, 1.0, n2 + 1),
                          self.a / (n1 * n2))

    def to_csv(self, path) -> None:
        """Write ``N1,N2`` on the first line then the matrix rows."""
        def _write(fh):
            fh.write(f"{self.n1},{self.n2}\n")
            for row in self.a:
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")

        if hasattr(path, "write"):
            _write(path)
        else:
            with open(path, "w", encoding="ascii") as fh:
                _write(fh)

    @classmethod
    def from_csv(cls, path) -> "CheckerboardMatrix":
        if hasattr(path, "read"):
            text = path.read()
        else:
            with open(path, "r", encoding="ascii") as fh:
                text = fh.read()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        n1, n2 = (int(tok) for tok in lines[0].split(","))
        a = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
        if a.shape != (n1, n2):
            raise ValueError(f"header promises {n1}x{n2}, found {a.shape}")
        return cls(a)


class GridCopula:
    """Copula with piecewise-constant density on a rectangular grid.

    u_breaks and v_breaks are increasing sequences from 0 to 1; mass[k, l]
    is the probability of cell (u_breaks[k], u_breaks[k+1]] x (...].  Row
    sums equal the u-cell widths and column sums the v-cell widths.
    """

    __slots__ = ("u_breaks", "v_breaks", "mass", "_nodes")

    def __init__(self, u_breaks, v_breaks, mass, renormalize: bool = True):
        u_breaks = np.asarray(u_breaks, dtype=float)
        v_breaks = np.asarray(v_breaks, dtype=float)
        mass = np.asarray(mass, dtype=float)
        if u_breaks[0] != 0.0 or u_breaks[-1] != 1.0 or v_breaks[0] != 0.0 or v_breaks[-1] != 1.0:
            raise ValueError("breakpoints must run from 0 to 1")
        du = np.diff(u_breaks)
        dv = np.diff(v_breaks)
        if np.any(du <= 0.0) or np.any(dv <= 0.0):
            raise ValueError("degenerate cell: breakpoints must be strictly increasing")
        if mass.shape != (du.size, dv.size):
            raise ValueError("mass shape does not match the grid")
        if np.any(mass < -1e-13):
            raise ValueError("cell masses must be nonnegative")
        mass = np.maximum(mass, 0.0)
        rows = mass.sum(axis=1)
        cols = mass.sum(axis=0)
        if (np.any(np.abs(rows - du) > 1e-9 * np.maximum(du, 1e-3))
                or np.any(np.abs(cols - dv) > 1e-9 * np.maximum(dv, 1e-3))):
            raise ValueError("margins are not uniform: row sums must equal u-cell "
                             "widths and column sums v-cell widths")
        if renormalize:
            mass = _sinkhorn(mass, du, dv)
        object.__setattr__(self, "u_breaks", u_breaks)
        object.__setattr__(self, "v_breaks", v_breaks)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "_nodes", None)
        u_breaks.setflags(write=False)
        v_breaks.setflags(write=False)
        mass.setflags(write=False)

    def __setattr__(self, name, value):
        raise AttributeError("GridCopula is immutable")

    def __repr__(self):
        return f"GridCopula({self.mass.shape[0]}x{self.mass.shape[1]})"

    @property
    def du(self) -> np.ndarray:
        return np.diff(self.u_breaks)

    @property
    def dv(self) -> np.ndarray:
        return np.diff(self.v_breaks)

    def cdf_nodes(self) -> np.ndarray:
        """CDF values at all grid nodes, shape (K+1, L+1)."""
        if self._nodes is None:
            k, l = self.mass.shape
            nodes = np.zeros((k + 1, l + 1))
            nodes[1:, 1:] = self.mass.cumsum(axis=0).cumsum(axis=1)
            object.__setattr__(self, "_nodes", nodes)
            nodes.setflags(write=False)
        return self._nodes

    def cdf(self, u, v):
        """Piecewise-bilinear CDF; exact on breakpoints."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        scalar = u.ndim == 0 and v.ndim == 0
        u, v = np.broadcast_arrays(u, v)
        u, v = np.atleast_1d(u), np.atleast_1d(v)
        if np.any((u < 0) | (u > 1)) or np.any((v < 0) | (v > 1)):
            raise ValueError("arguments must lie in the unit square")
        iu = np.clip(np.searchsorted(self.u_breaks, u, side="right") - 1, 0, self.mass.shape[0] - 1)
        iv = np.clip(np.searchsorted(self.v_breaks, v, side="right") - 1, 0, self.mass.shape[1] - 1)
        fu = (u - self.u_breaks[iu]) / self.du[iu]
        fv = (v - self.v_breaks[iv]) / self.dv[iv]
        m = self.cdf_nodes()
        out = ((1 - fu) * (1 - fv) * m[iu, iv] + fu * (1 - fv) * m[iu + 1, iv]
               + (1 - fu) * fv * m[iu, iv + 1] + fu * fv * m[iu + 1, iv + 1])
        return float(out[0]) if scalar else out

    def conditional_nodes(self) -> np.ndarray:
        """Values of d/du C(u, v_l) per u-cell, shape (K, L+1); column l is
        the conditional CDF P(V <= v_l | U in cell k)."""
        cum = np.zeros((self.mass.shape[0], self.mass.shape[1] + 1))
        cum[:, 1:] = self.mass.cumsum(axis=1)
        return cum / self.du[:, None]


def _as_grid(g) -> GridCopula:
    return g.as_grid() if isinstance(g, CheckerboardMatrix) else g


def eval_cdf(grid, u, v):
    """CDF of a GridCopula or CheckerboardMatrix at (u, v)."""
    return _as_grid(grid).cdf(u, v)


def partial1_slices(grid):
    """For each v-breakpoint level l >= 1, the step function u -> d1 C(u, v_l)."""
    from .rearrangement import StepFunction

    g = _as_grid(grid)
    cond = g.conditional_nodes()
    du = g.du
    return [StepFunction(du, cond[:, l]) for l in range(1, cond.shape[1])]


def induced_checkerboard(model, n1: int, n2: int) -> CheckerboardMatrix:
    """Checkerboard matrix of a CDF model: a_kl = N1*N2*V_C(cell (k,l))."""
    from .copulas import cdf as model_cdf

    if n1 < 1 or n2 < 1:
        raise ValueError("grid sizes must be positive")
    uu = np.linspace(0.0, 1.0, n1 + 1)
    vv = np.linspace(0.0, 1.0, n2 + 1)
    grid = model_cdf(model, uu[:, None], vv[None, :])
    vol = grid[1:, 1:] - grid[:-1, 1:] - grid[1:, :-1] + grid[:-1, :-1]
    return CheckerboardMatrix(n1 * n2 * vol)


def _overlap_fractions(n_src: int, n_dst: int, src_breaks=None, dst_breaks=None) -> np.ndarray:
    """W[k, i] = fraction of source cell i that lies in destination cell k."""
    sb = np.linspace(0.0, 1.0, n_src + 1) if src_breaks is None else src_breaks
    db = np.linspace(0.0, 1.0, n_dst + 1) if dst_breaks is None else dst_breaks
    lo = np.maximum(sb[None, :-1], db[:-1, None])
    hi = np.minimum(sb[None, 1:], db[1:, None])
    return np.maximum(hi - lo, 0.0) / np.diff(sb)[None, :]


def coarsen(matrix: CheckerboardMatrix, n1: int, n2: int) -> CheckerboardMatrix:
    """Re-bin a checkerboard matrix to a coarser grid by exact overlap areas."""
    if n1 > matrix.n1 or n2 > matrix.n2:
        raise ValueError("bandwidth exceeds the source resolution")
    if n1 < 1 or n2 < 1:
        raise ValueError("grid sizes must be positive")
    wx = _overlap_fractions(matrix.n1, n1)
    wy = _overlap_fractions(matrix.n2, n2)
    mass = matrix.a / (matrix.n1 * matrix.n2)
    return CheckerboardMatrix(n1 * n2 * (wx @ mass @ wy.T))


def markov_product(a: CheckerboardMatrix, b: CheckerboardMatrix) -> CheckerboardMatrix:
    """Matrix of the Markov product of two square checkerboard copulas: (1/N) A B."""
    if a.n1 != a.n2 or b.n1 != b.n2 or a.n1 != b.n1:
        raise ValueError("Markov product needs square matrices of equal size")
    return CheckerboardMatrix((a.a @ b.a) / a.n1)


def _merged_conditional(g1: GridCopula, g2: GridCopula):
    """Common refinement for conditional-derivative comparisons.

    Returns (du, E1, E2) where du are merged u-cell widths and Ei[k, j] is
    d1 C_i on merged u-cell k evaluated at merged v-break j.
    """
    ub = np.union1d(g1.u_breaks, g2.u_breaks)
    vb = np.union1d(g1.v_breaks, g2.v_breaks)
    umid = 0.5 * (ub[:-1] + ub[1:])

    def level_values(g):
        cond = g.conditional_nodes()  # (K, L+1)
        iu = np.searchsorted(g.u_breaks, umid, side="right") - 1
        iv = np.clip(np.searchsorted(g.v_breaks, vb, side="right") - 1, 0, g.mass.shape[1] - 1)
        fv = (vb - g.v_breaks[iv]) / g.dv[iv]
        vals = cond[iu][:, iv] * (1 - fv)[None, :] + cond[iu][:, iv + 1] * fv[None, :]
        return vals

    return np.diff(ub), np.diff(vb), level_values(g1), level_values(g2)


def _abs_linear_integral(e0, e1, h):
    """Integral of |linear| over a segment of length h with endpoint values e0, e1."""
    same = e0 * e1 >= 0.0
    denom = np.abs(e0) + np.abs(e1)
    cross = np.where(denom > 0, (e0 * e0 + e1 * e1) / np.where(denom > 0, denom, 1.0), 0.0)
    return 0.5 * h * np.where(same, np.abs(e0) + np.abs(e1), cross)


def _sq_linear_integral(e0, e1, h):
    return h * (e0 * e0 + e0 * e1 + e1 * e1) / 3.0


_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)


def _pow_linear_integral(e0, e1, h, p):
    """Integral of |linear|^p via 16-node Gauss-Legendre after root splitting."""
    e0 = np.asarray(e0, dtype=float)
    e1 = np.asarray(e1, dtype=float)
    cross = e0 * e1 < 0.0
    t_root = np.where(cross, np.abs(e0) / np.maximum(np.abs(e0) + np.abs(e1), 1e-300), 1.0)

    def seg(t_lo, t_hi):
        half = 0.5 * (t_hi - t_lo)
        mid = 0.5 * (t_hi + t_lo)
        t = mid[..., None] + half[..., None] * _GL16_X
        vals = np.abs(e0[..., None] * (1 - t) + e1[..., None] * t) ** p
        return (vals * _GL16_W).sum(axis=-1) * half

    zeros = np.zeros_like(t_root)
    return h * (seg(zeros, t_root) + seg(t_root, np.ones_like(t_root)))


def d_p_distance(g1, g2, p: float = 1.0) -> float:
    """D_p metric between two grid copulas: the L^p norm of d1C_1 - d1C_2."""
    if p < 1:
        raise ValueError("p must be >= 1")
    g1, g2 = _as_grid(g1), _as_grid(g2)
    du, dv, e1, e2 = _merged_conditional(g1, g2)
    d = e1 - e2
    d0, d1 = d[:, :-1], d[:, 1:]
    if p == 1:
        cell = _abs_linear_integral(d0, d1, dv[None, :])
    elif p == 2:
        cell = _sq_linear_integral(d0, d1, dv[None, :])
    else:
        cell = _pow_linear_integral(d0, d1, dv[None, :], p)
    total = float((cell * du[:, None]).sum())
    return total ** (1.0 / p)
