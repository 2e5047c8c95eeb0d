"""Compressed-row sparse matrices and the few kernels the solver stack needs.

Dense blocks handed out by this module are plain row-major (C-ordered)
``numpy.ndarray`` objects; there is no separate dense matrix class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

SYMMETRY_HINTS = ("general", "symmetric", "hermitian")


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Immutable CSR matrix in canonical form.

    Rows have strictly increasing column indices, no duplicates and no
    explicitly stored zeros. Real matrices keep ``float64`` values, complex
    ones ``complex128``.

    Use :meth:`from_coo`, :meth:`from_dense` or :meth:`from_scipy` rather than
    the raw constructor; those canonicalize their input.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    symmetry_hint: str = "general"
    _checked: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.symmetry_hint not in SYMMETRY_HINTS:
            raise ValueError(f"unknown symmetry hint {self.symmetry_hint!r}")
        if not self._checked:
            self._validate()
        for name in ("row_offsets", "col_indices", "values"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    def _validate(self):
        ro, ci = np.asarray(self.row_offsets), np.asarray(self.col_indices)
        if ro.shape != (self.n_rows + 1,) or ro[0] != 0 or ro[-1] != len(ci):
            raise ValueError("row_offsets must have length n_rows+1, start at 0 and end at nnz")
        if np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must be nondecreasing")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.n_cols):
            raise ValueError("column index out of range")
        for r in range(self.n_rows):
            seg = ci[ro[r]:ro[r + 1]]
            if np.any(np.diff(seg) <= 0):
                raise ValueError(f"row {r} is not strictly increasing")
        if np.any(np.asarray(self.values) == 0):
            raise ValueError("explicit zeros are not allowed in canonical form")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_coo(cls, rows, cols, vals, shape, symmetry_hint="general"):
        """Build a canonical matrix from triplets, summing duplicates."""
        vals = np.asarray(vals)
        dtype = np.complex128 if np.iscomplexobj(vals) else np.float64
        m = sp.coo_matrix(
            (vals.astype(dtype), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
            shape=shape,
        )
        return cls.from_scipy(m, symmetry_hint=symmetry_hint)

    @classmethod
    def from_scipy(cls, m, symmetry_hint="general"):
        m = sp.csr_matrix(m, copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        vals = m.data
        if np.iscomplexobj(vals) and not np.any(vals.imag):
            vals = vals.real
        dtype = np.complex128 if np.iscomplexobj(vals) else np.float64
        return cls(
            int(m.shape[0]), int(m.shape[1]),
            m.indptr.astype(np.int64), m.indices.astype(np.int64), vals.astype(dtype),
            symmetry_hint, _checked=True,
        )

    @classmethod
    def from_dense(cls, a, symmetry_hint="general"):
        return cls.from_scipy(sp.csr_matrix(np.asarray(a)), symmetry_hint=symmetry_hint)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls.from_coo(idx, idx, np.ones(n), (n, n), symmetry_hint="symmetric")

    # -- views ------------------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.row_offsets[-1])

    @property
    def dtype(self):
        return self.values.dtype

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """scipy view sharing this matrix's (read-only) arrays."""
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=self.shape)

    def toarray(self):
        return self.csr.toarray()

    def row(self, r):
        lo, hi = self.row_offsets[r], self.row_offsets[r + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def is_square(self):
        return self.n_rows == self.n_cols

    def is_hermitian(self, rtol=0.0):
        """Exact (``rtol=0``) or tolerance-based Hermitian check."""
        if not self.is_square():
            return False
        d = self.csr - self.csr.conj().T
        if d.nnz == 0:
            return True
        err = abs(d).max()
        return bool(err <= rtol * abs(self.csr).max())

    def norm_inf(self):
        return float(np.abs(self.csr).sum(axis=1).max()) if self.nnz else 0.0

    def scaled(self, c):
        return SparseMatrix.from_scipy(self.csr * c, symmetry_hint=self.symmetry_hint)

    def __matmul__(self, x):
        return spmv(self, x)


def spmv(a: SparseMatrix, x):
    """Sparse matrix-vector (or matrix-block) product.

    Rows are accumulated sequentially so the result is reproducible run to
    run.
    """
    x = np.asarray(x)
    if x.shape[0] != a.n_cols:
        raise ValueError(f"dimension mismatch: matrix has {a.n_cols} columns, vector has {x.shape[0]} rows")
    return a.csr @ x


def extract_submatrix(a: SparseMatrix, rows, cols):
    """Dense block ``A(rows, cols)`` honouring the order of both index lists."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    for name, idx, bound in (("row", rows, a.n_rows), ("column", cols, a.n_cols)):
        if idx.size and (idx.min() < 0 or idx.max() >= bound):
            raise IndexError(f"{name} index out of range [0, {bound})")
    out = np.zeros((rows.size, cols.size), dtype=a.dtype)
    if rows.size == 0 or cols.size == 0:
        return out
    pos = np.full(a.n_cols, -1, dtype=np.int64)
    pos[cols] = np.arange(cols.size)
    for k, r in enumerate(rows):
        c, v = a.row(r)
        p = pos[c]
        keep = p >= 0
        out[k, p[keep]] = v[keep]
    return out


def hermitian_transpose_pattern(a: SparseMatrix) -> SparseMatrix:
    """Boolean pattern of ``|A| + |A^H|`` with the full diagonal retained."""
    if not a.is_square():
        raise ValueError("pattern symmetrization needs a square matrix")
    p = abs(a.csr)
    p = p + p.T + sp.identity(a.n_rows, format="csr")
    p.data[:] = 1.0
    return SparseMatrix.from_scipy(p, symmetry_hint="symmetric")
