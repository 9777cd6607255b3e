"""Banded linear algebra kernels and polynomial helpers.

Band storage follows the LAPACK general-band convention: for a matrix with
``lower`` sub-diagonals and ``upper`` super-diagonals the entry ``a[i, j]``
lives in ``data[upper + i - j, j]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sl
from numpy.polynomial import Polynomial

from .errors import InvalidArgumentError

__all__ = [
    "ComplexBandedMatrix",
    "Polynomial",
    "smallest_singular_value",
    "hermitian_min_eig",
    "polynomial_roots",
    "interpolate_polynomial",
]

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class ComplexBandedMatrix:
    rows: int
    cols: int
    lower: int
    upper: int
    data: np.ndarray

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidArgumentError("banded matrix needs at least one row and column")
        if self.lower < 0 or self.upper < 0:
            raise InvalidArgumentError("bandwidths must be nonnegative")
        if self.data.shape != (self.lower + self.upper + 1, self.cols):
            raise InvalidArgumentError(
                f"band storage has shape {self.data.shape}, expected "
                f"{(self.lower + self.upper + 1, self.cols)}"
            )

    @property
    def shape(self):
        return (self.rows, self.cols)

    @classmethod
    def from_dense(cls, a, lower=None, upper=None):
        a = np.atleast_2d(np.asarray(a))
        rows, cols = a.shape
        if rows == 0 or cols == 0:
            raise InvalidArgumentError("banded matrix needs at least one row and column")
        nz_i, nz_j = np.nonzero(a)
        if lower is None:
            lower = int(max(0, (nz_i - nz_j).max())) if nz_i.size else 0
        if upper is None:
            upper = int(max(0, (nz_j - nz_i).max())) if nz_i.size else 0
        data = np.zeros((lower + upper + 1, cols), dtype=a.dtype)
        for k in range(-upper, lower + 1):
            diag = np.diagonal(a, offset=-k)
            j0 = max(0, -k)
            data[upper + k, j0:j0 + diag.size] = diag
        out = cls(rows, cols, lower, upper, data)
        if not np.array_equal(out.to_dense(), a):
            raise InvalidArgumentError("matrix has entries outside the requested band")
        return out

    @classmethod
    def from_diagonals(cls, rows, cols, diagonals):
        """Build from ``{offset: values}`` where offset ``k`` means ``i - j = k``.

        Values for diagonal ``k`` are listed by column, starting at the first
        column the diagonal touches.
        """
        lower = max([0] + [k for k in diagonals if k > 0])
        upper = max([0] + [-k for k in diagonals if k < 0])
        dtype = np.result_type(*[np.asarray(v) for v in diagonals.values()], float)
        data = np.zeros((lower + upper + 1, cols), dtype=dtype)
        for k, vals in diagonals.items():
            vals = np.asarray(vals)
            j0 = max(0, -k)
            length = min(cols, rows - k) - j0
            if vals.size != length:
                raise InvalidArgumentError(
                    f"diagonal {k} needs {length} values, got {vals.size}"
                )
            data[upper + k, j0:j0 + length] = vals
        return cls(rows, cols, lower, upper, data)

    def _index_pairs(self):
        """Row/column/value triples for every stored in-range entry."""
        ks = np.arange(-self.upper, self.lower + 1)
        j = np.broadcast_to(np.arange(self.cols), (ks.size, self.cols))
        i = j + ks[:, None]
        ok = (i >= 0) & (i < self.rows)
        return i[ok], j[ok], self.data[ok]

    def to_dense(self):
        out = np.zeros((self.rows, self.cols), dtype=self.data.dtype)
        i, j, v = self._index_pairs()
        out[i, j] = v
        return out

    def conj_transpose(self):
        i, j, v = self._index_pairs()
        data = np.zeros((self.lower + self.upper + 1, self.rows), dtype=self.data.dtype)
        # transposed entry (j, i) goes to row lower + j - i of the new storage
        data[self.lower + j - i, i] = np.conj(v)
        return ComplexBandedMatrix(self.cols, self.rows, self.upper, self.lower, data)

    def matvec(self, x):
        x = np.asarray(x)
        i, j, v = self._index_pairs()
        out = np.zeros(self.rows, dtype=np.result_type(self.data, x))
        np.add.at(out, i, v * x[j])
        return out

    def gram(self):
        """Return ``M* M`` as a square banded matrix."""
        dense = self.to_dense()
        g = dense.conj().T @ dense
        bw = self.lower + self.upper
        return ComplexBandedMatrix.from_dense(g, lower=min(bw, self.cols - 1),
                                              upper=min(bw, self.cols - 1))


def _hermitian_upper_storage(n, i, j, v, dtype):
    """Pack Hermitian entries (given on one triangle or both) into LAPACK upper band form."""
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    vals = np.where(i <= j, v, np.conj(v))
    kb = int((hi - lo).max()) if hi.size else 0
    ab = np.zeros((kb + 1, n), dtype=dtype)
    ab[kb + lo - hi, hi] = vals
    return ab


def smallest_singular_value(m: ComplexBandedMatrix) -> float:
    """Smallest value of ``|m f| / |f|`` over nonzero ``f``.

    The singular values of ``m`` are read off the Hermitian matrix
    ``[[0, m], [m*, 0]]`` after interleaving row and column unknowns, which
    keeps it banded. Bisection then gives the smallest singular value to
    absolute accuracy of order ``eps * |m|`` without squaring it.
    """
    if not isinstance(m, ComplexBandedMatrix):
        m = ComplexBandedMatrix.from_dense(m)
    rows, cols = m.rows, m.cols
    if rows < cols:
        return 0.0
    # interleave x_0, y_0, x_1, y_1, ... then the remaining rows
    pos_x = np.empty(rows, dtype=np.int64)
    pos_y = 2 * np.arange(cols) + 1
    pos_x[:cols] = 2 * np.arange(cols)
    pos_x[cols:] = 2 * cols + np.arange(rows - cols)
    i, j, v = m._index_pairs()
    keep = v != 0
    i, j, v = i[keep], j[keep], v[keep]
    n = rows + cols
    if v.size == 0:
        return 0.0
    real = not np.iscomplexobj(v)
    ab = _hermitian_upper_storage(n, pos_x[i], pos_y[j], v, float if real else complex)
    # ascending spectrum: cols negatives, rows - cols zeros, cols positives
    k = rows
    w = sl.eigvals_banded(ab, lower=False, select="i", select_range=(k, k),
                          check_finite=False)
    return float(max(w[0], 0.0))


def hermitian_min_eig(b: ComplexBandedMatrix) -> float:
    """Smallest eigenvalue of a Hermitian banded matrix."""
    if not isinstance(b, ComplexBandedMatrix):
        b = ComplexBandedMatrix.from_dense(b)
    if b.rows != b.cols:
        raise InvalidArgumentError("hermitian_min_eig needs a square matrix")
    dense = b.to_dense()
    if not np.allclose(dense, dense.conj().T, rtol=0.0, atol=HERMITIAN_TOL):
        raise InvalidArgumentError("matrix is not Hermitian within 1e-12")
    i, j, v = b._index_pairs()
    upper = i <= j
    real = not np.iscomplexobj(v) or not np.any(np.imag(v))
    vals = np.real(v) if real else v
    ab = _hermitian_upper_storage(b.rows, i[upper], j[upper], vals[upper],
                                  float if real else complex)
    w = sl.eigvals_banded(ab, lower=False, select="i", select_range=(0, 0),
                          check_finite=False)
    return float(w[0])


def _trim(p: Polynomial, rtol=1e-14) -> Polynomial:
    c = np.asarray(p.coef, dtype=complex)
    scale = np.abs(c).max() if c.size else 0.0
    if scale == 0.0:
        return Polynomial([0.0])
    last = np.nonzero(np.abs(c) > rtol * scale)[0][-1]
    return Polynomial(c[:last + 1])


def polynomial_roots(p: Polynomial, polish: bool = True) -> np.ndarray:
    """All ``degree`` roots of ``p`` via a balanced companion matrix.

    With ``polish`` one Newton step is applied to each root and kept only
    when it lowers the residual.
    """
    p = _trim(p if isinstance(p, Polynomial) else Polynomial(p))
    c = np.asarray(p.coef, dtype=complex)
    deg = c.size - 1
    if deg < 1:
        raise InvalidArgumentError("polynomial_roots needs degree >= 1")
    monic = c / c[-1]
    comp = np.zeros((deg, deg), dtype=complex)
    comp[1:, :-1] = np.eye(deg - 1)
    comp[:, -1] = -monic[:-1]
    balanced, _ = sl.matrix_balance(comp, permute=False)
    roots = sl.eigvals(balanced, overwrite_a=True, check_finite=False)
    if polish:
        dp = p.deriv()
        res = np.abs(p(roots))
        d = dp(roots)
        with np.errstate(divide="ignore", invalid="ignore"):
            stepped = roots - p(roots) / d
        better = np.isfinite(stepped) & (np.abs(p(stepped)) < res)
        roots = np.where(better, stepped, roots)
    return roots


def interpolate_polynomial(nodes, values) -> Polynomial:
    """Unique polynomial of degree ``<= len(nodes) - 1`` through the data.

    Nodes are rescaled to the unit disc before the Vandermonde solve, then
    coefficients are scaled back.
    """
    nodes = np.asarray(nodes, dtype=complex)
    values = np.asarray(values, dtype=complex)
    if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size == 0:
        raise InvalidArgumentError("nodes and values must be 1-d and equally long")
    gaps = np.abs(nodes[:, None] - nodes[None, :])
    gaps[np.diag_indices_from(gaps)] = np.inf
    if np.any(gaps == 0.0):
        raise InvalidArgumentError("interpolation nodes must be pairwise distinct")
    scale = np.abs(nodes).max() or 1.0
    v = np.vander(nodes / scale, increasing=True)
    coef = np.linalg.solve(v, values)
    coef = coef / scale ** np.arange(nodes.size)
    return Polynomial(coef)
