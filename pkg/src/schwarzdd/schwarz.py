"""One- and two-level overlapping Schwarz preconditioners."""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._parallel import pmap
from .coarse import CoarseSpace
from .partition import OverlapLayout
from .sparse import SparseMatrix

DENSE_THRESHOLD = 4096

ONE_LEVEL = ("asm", "ras")
COARSE_KINDS = ("none", "additive", "deflated")


class SingularBlockError(RuntimeError):
    def __init__(self, subdomain, detail=""):
        self.subdomain = subdomain
        super().__init__(f"local matrix A_ii of subdomain {subdomain} is singular{': ' + detail if detail else ''}")


class _LocalSolver:
    """Exact factorization of one ``A_ii``: dense LU up to a size threshold, sparse LU beyond."""

    def __init__(self, a_ii, subdomain, dense_threshold=DENSE_THRESHOLD):
        n = a_ii.shape[0]
        self.n = n
        self.dense = n <= dense_threshold
        if n == 0:
            return
        if self.dense:
            a = a_ii.toarray() if sp.issparse(a_ii) else np.asarray(a_ii)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", la.LinAlgWarning)
                lu, piv = la.lu_factor(a, check_finite=False)
            d = np.abs(np.diag(lu))
            if not np.all(np.isfinite(d)) or d.min() <= n * np.finfo(float).eps * max(d.max(), np.finfo(float).tiny):
                raise SingularBlockError(subdomain, "zero pivot in dense LU")
            self.factor = (lu, piv)
        else:
            try:
                self.factor = spla.splu(sp.csc_matrix(a_ii))
            except RuntimeError as exc:
                raise SingularBlockError(subdomain, str(exc)) from exc

    def solve(self, r):
        if self.n == 0:
            return r
        if self.dense:
            return la.lu_solve(self.factor, r, check_finite=False)
        return self.factor.solve(r)


class SchwarzPreconditioner:
    """Apply ``M^{-1}`` for ASM/RAS with an optional additive or deflated coarse correction.

    Application accepts a vector ``(n,)`` or a block ``(n, k)``. Subdomain
    contributions are summed in subdomain order, so results are bitwise
    reproducible regardless of ``workers``.
    """

    def __init__(self, a: SparseMatrix, layout: OverlapLayout, local_solvers, coarse=None,
                 variant="ras", coarse_kind="deflated", workers=1):
        if variant not in ONE_LEVEL:
            raise ValueError(f"variant must be one of {ONE_LEVEL}")
        if coarse_kind not in COARSE_KINDS:
            raise ValueError(f"coarse correction must be one of {COARSE_KINDS}")
        self.a = a
        self.layout = layout
        self.local_solvers = local_solvers
        self.coarse = coarse
        self.variant = variant
        self.coarse_kind = coarse_kind if coarse is not None else "none"
        self.workers = workers
        n = layout.n
        self.shape = (n, n)
        self.dtype = np.result_type(a.dtype, coarse.basis.dtype if coarse is not None else np.float64)

    @property
    def n0(self):
        return self.coarse.n0 if self.coarse is not None else 0

    def apply_one_level(self, v, variant=None):
        variant = variant or self.variant
        v = np.asarray(v)
        out = np.zeros(v.shape, dtype=np.result_type(v, self.dtype))

        def local(i):
            sub = self.layout[i]
            y = self.local_solvers[i].solve(v[sub.indices])
            if variant == "ras":
                y = sub.pou.reshape((-1,) + (1,) * (y.ndim - 1)) * y
            return y

        pieces = pmap(local, range(self.layout.n_subdomains), self.workers)
        for sub, y in zip(self.layout, pieces):
            out[sub.indices] += y
        return out

    def apply_two_level(self, v, coarse_kind=None, variant=None):
        kind = coarse_kind or self.coarse_kind
        if kind == "none" or self.n0 == 0:
            return self.apply_one_level(v, variant)
        v = np.asarray(v)
        q = self.coarse.correction(v)
        if kind == "additive":
            return q + self.apply_one_level(v, variant)
        # deflated: q + M^{-1}(v - A q), one coarse solve shared by both terms
        return q + self.apply_one_level(v - self.a.csr @ q, variant)

    def __call__(self, v):
        return self.apply_two_level(v)

    matvec = __call__

    def __matmul__(self, v):
        return self.apply_two_level(v)

    def as_linear_operator(self):
        return spla.LinearOperator(self.shape, matvec=self.apply_two_level, matmat=self.apply_two_level,
                                   dtype=self.dtype)


def setup(a: SparseMatrix, layout: OverlapLayout, coarse: CoarseSpace | None = None, variant="ras",
          coarse_kind="deflated", splittings=None, dense_threshold=DENSE_THRESHOLD, workers=1):
    """Factorize every ``A_ii = R_i A R_i^T`` and bundle the preconditioner.

    ``splittings`` may carry already-extracted ``A_ii`` blocks to avoid
    re-slicing ``A``.
    """
    if not a.is_square() or a.n_rows != layout.n:
        raise ValueError("matrix and layout sizes do not match")

    def factor(i):
        if splittings is not None:
            a_ii = splittings[i].a_ii
        else:
            idx = layout[i].indices
            a_ii = a.csr[idx][:, idx]
        return _LocalSolver(a_ii, i, dense_threshold)

    solvers = pmap(factor, range(layout.n_subdomains), workers)
    return SchwarzPreconditioner(a, layout, solvers, coarse, variant, coarse_kind, workers)
