"""Local block splitting by lumping the couplings that leave the overlap."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .partition import OverlapLayout
from .sparse import SparseMatrix


@dataclass(frozen=True, eq=False)
class LocalSplitting:
    """Subdomain matrix and its lumped counterpart, both in ``[interior, boundary]`` order.

    ``a_tilde_ii`` equals ``a_ii`` except on the diagonal of the boundary
    block, where the absolute row sums ``s`` of the couplings to the
    complement are subtracted.
    """

    index: int
    n_interior: int
    a_ii: sp.csr_matrix
    s: np.ndarray
    a_tilde_ii: sp.csr_matrix

    @property
    def size(self):
        return self.a_ii.shape[0]


def build_local_splitting(a: SparseMatrix, layout: OverlapLayout, i: int) -> LocalSplitting:
    """Assemble ``A_ii`` and the lumped ``A~_ii`` for subdomain ``i``.

    Only the rows of ``A`` indexed by the overlapping subdomain are read.
    """
    sub = layout[i]
    idx = sub.indices
    local = np.full(a.n_cols, -1, dtype=np.int64)
    local[idx] = np.arange(idx.size)

    rows_block = a.csr[idx]  # rows of Omega_i only
    coo = rows_block.tocoo()
    lc = local[coo.col]
    inside = lc >= 0
    a_ii = sp.csr_matrix((coo.data[inside], (coo.row[inside], lc[inside])), shape=(idx.size, idx.size))
    a_ii.sort_indices()

    outside = ~inside
    row_abs = np.bincount(coo.row[outside], weights=np.abs(coo.data[outside]), minlength=idx.size)
    s = row_abs[sub.n_interior:].astype(np.float64)
    if np.any(row_abs[:sub.n_interior]):
        raise ValueError(f"subdomain {i}: interior row couples outside the overlap; layout does not match A")

    lump = np.zeros(idx.size)
    lump[sub.n_interior:] = s
    a_tilde = sp.csr_matrix(a_ii - sp.diags(lump, format="csr"))
    a_tilde.sort_indices()
    return LocalSplitting(i, sub.n_interior, a_ii, s, a_tilde)


def build_all_splittings(a, layout, workers=1):
    from ._parallel import pmap

    return pmap(lambda i: build_local_splitting(a, layout, i), range(layout.n_subdomains), workers)


@dataclass(frozen=True)
class HPSDReport:
    applicable: bool
    is_hpsd: bool = False
    min_eig_atilde: float = float("nan")
    min_eig_residual: float = float("nan")
    reason: str = ""


def verify_hpsd_splitting(a: SparseMatrix, layout: OverlapLayout, splitting: LocalSplitting, tol=1e-10):
    """Check ``A~_ii >= 0`` and ``A - R_i^T A~_ii R_i >= 0`` by dense Hermitian eigensolves.

    Non-Hermitian input gets a report with ``applicable=False``.
    """
    if not a.is_hermitian():
        return HPSDReport(False, reason="matrix is not Hermitian")
    idx = layout[splitting.index].indices
    at = splitting.a_tilde_ii.toarray()
    resid = a.toarray()
    resid[np.ix_(idx, idx)] -= at
    lo_at = float(la.eigvalsh(at, subset_by_index=[0, 0])[0]) if idx.size else 0.0
    lo_res = float(la.eigvalsh(resid, subset_by_index=[0, 0])[0])
    thr = -tol * a.norm_inf()
    return HPSDReport(True, lo_at >= thr and lo_res >= thr, lo_at, lo_res)
