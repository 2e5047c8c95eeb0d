"""Spectral coarse space from local generalized eigenproblems.

For each subdomain the pencil ``(Pi D A_ii D Pi, A~_ii)`` is reduced to an
orthonormal basis ``W`` of ``range(A~_ii)`` and solved densely. With
``Pi = W W^H`` and ``u = W y`` the reduced problem

    W^H (D A_ii D) W y = lambda W^H A~_ii W y

is equivalent to the full one, so every lifted pair satisfies the original
equation to working accuracy. Eigenvectors with ``|lambda| > 1/tau`` are
kept, together with a basis of the part of ``ker(A~_ii)`` that is not also
annihilated by ``D A_ii D``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .partition import OverlapLayout
from .sparse import SparseMatrix

log = logging.getLogger(__name__)

TAU_DEFAULT = 0.3
MAX_EV_DEFAULT = 60
KERNEL_TOL_DEFAULT = 1e-10
RESIDUAL_TOL = 1e-8


class CoarseSpaceError(RuntimeError):
    pass


def _is_hermitian(m, rtol=1e-13):
    scale = np.abs(m).max() if m.size else 0.0
    return bool(np.abs(m - m.conj().T).max(initial=0.0) <= rtol * scale)


def kernel_basis(m, tol=KERNEL_TOL_DEFAULT, scale=None, hermitian=None):
    """Orthonormal basis of the numerical null space of ``m``.

    Singular values ``<= tol * scale`` count as zero, where ``scale``
    defaults to the largest singular value. A zero matrix has the whole
    space as kernel. ``m`` may be rectangular (right null space).
    """
    m = np.asarray(m)
    n = m.shape[1]
    if n == 0:
        return np.zeros((0, 0), dtype=m.dtype)
    if m.shape[0] == m.shape[1] and (hermitian if hermitian is not None else _is_hermitian(m)):
        mu, vecs = la.eigh(m)
        sig = np.abs(mu)
    else:
        _, sv, vh = la.svd(m, full_matrices=True)
        sig = np.zeros(n)
        sig[:sv.size] = sv
        vecs = vh.conj().T
    top = sig.max() if scale is None else scale
    if top == 0:
        return np.eye(n, dtype=np.result_type(m.dtype, np.float64))
    return vecs[:, sig <= tol * top]


def range_basis(m, tol=KERNEL_TOL_DEFAULT, hermitian=None):
    """Orthonormal basis of the column space of square ``m``."""
    return _range_and_kernel(np.asarray(m), tol, hermitian)[0]


def _range_and_kernel(m, tol, hermitian=None):
    """Column-space basis, right null-space basis and largest singular value."""
    n = m.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=m.dtype), np.zeros((0, 0), dtype=m.dtype), 0.0
    if hermitian if hermitian is not None else _is_hermitian(m):
        mu, vecs = la.eigh(m)
        sig = np.abs(mu)
        left = right = vecs
    else:
        left, sig, vh = la.svd(m)
        right = vh.conj().T
    top = float(sig.max())
    if top == 0:
        return left[:, :0], np.eye(n, dtype=np.result_type(m.dtype, np.float64)), 0.0
    return left[:, sig > tol * top], right[:, sig <= tol * top], top


def _independent_columns(z, tol):
    """Indices of a maximal well-conditioned subset of columns, in original order."""
    if z.shape[1] == 0:
        return np.zeros(0, dtype=np.int64)
    _, r, piv = la.qr(z, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    if d.size == 0 or d[0] == 0:
        return np.zeros(0, dtype=np.int64)
    rank = int(np.sum(d > tol * d[0]))
    return np.sort(piv[:rank])


@dataclass(eq=False)
class LocalEigenSelection:
    subdomain: int
    kernel_K: np.ndarray
    kernel_L: np.ndarray | None
    kernel_complement: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    Z: np.ndarray
    spectrum: np.ndarray = field(repr=False, default=None)
    n_infinite: int = 0
    max_residual: float = 0.0
    diagnostic: str = ""

    @property
    def n_eig(self):
        return self.eigenvectors.shape[1]

    def summary(self):
        return {
            "subdomain": self.subdomain,
            "n_eig": self.n_eig,
            "dim_K": self.kernel_K.shape[1],
            "dim_kernel_complement": self.kernel_complement.shape[1],
            "n_Z": self.Z.shape[1],
            "n_infinite": self.n_infinite,
            "max_residual": self.max_residual,
            "diagnostic": self.diagnostic,
        }


def _dense(m):
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def solve_local_gevp(
    a_ii,
    a_tilde_ii,
    d,
    tau=TAU_DEFAULT,
    max_ev=MAX_EV_DEFAULT,
    tol_kernel=KERNEL_TOL_DEFAULT,
    tol_res=RESIDUAL_TOL,
    subdomain=0,
) -> LocalEigenSelection:
    """Select the local coarse vectors of one subdomain.

    Parameters
    ----------
    a_ii, a_tilde_ii : (n_i, n_i) dense or sparse
        Subdomain matrix and its lumped splitting.
    d : (n_i,) array
        Diagonal of the partition of unity.
    tau : float
        Eigenpairs with ``|lambda| > 1/tau`` are retained.
    max_ev : int
        Cap on the number of retained eigenpairs.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if max_ev < 0:
        raise ValueError("max_ev must be nonnegative")
    a = _dense(a_ii)
    at = _dense(a_tilde_ii)
    d = np.asarray(d, dtype=np.float64)
    n = a.shape[0]
    if at.shape != a.shape or d.shape != (n,):
        raise ValueError("dimension mismatch between A_ii, A~_ii and D_i")
    dtype = np.result_type(a.dtype, at.dtype, np.float64)
    b = d[:, None] * a * d[None, :]
    herm = _is_hermitian(a) and _is_hermitian(at)

    w, kk, at_norm = _range_and_kernel(at, tol_kernel, herm)

    # L_i cap K_i = {K c : B K c = 0}; threshold relative to ||B|| rather than ||B K||
    bnorm = float(la.norm(b)) if n else 0.0  # Frobenius, an upper bound on the 2-norm
    kl = None
    if kk.shape[1]:
        kl = kernel_basis(b, tol_kernel, hermitian=herm)
        c = kernel_basis(b @ kk, tol_kernel, scale=bnorm) if bnorm > 0 else np.eye(kk.shape[1])
        c_perp = kernel_basis(c.conj().T, tol_kernel) if c.shape[1] else np.eye(kk.shape[1])
        if c.shape[1] == kk.shape[1]:
            c_perp = np.zeros((kk.shape[1], 0))
        kcomp = kk @ c_perp
    else:
        kcomp = np.zeros((n, 0), dtype=dtype)

    vals = np.zeros(0, dtype=dtype)
    vecs = np.zeros((n, 0), dtype=dtype)
    spectrum = np.zeros(0, dtype=np.complex128)
    n_inf = 0
    diag = ""
    max_res = 0.0
    r = w.shape[1]
    if r:
        br = w.conj().T @ b @ w
        ar = w.conj().T @ at @ w
        try:
            lam, y, n_inf = _reduced_eig(br, ar, herm)
        except (la.LinAlgError, ValueError) as exc:
            diag = f"eigensolver failure: {exc}"
            log.warning("subdomain %d: %s", subdomain, diag)
            lam, y = np.zeros(0), np.zeros((r, 0))
        spectrum = lam.astype(np.complex128)
        keep = np.flatnonzero(np.abs(lam) > 1.0 / tau)
        keep = keep[np.argsort(-np.abs(lam[keep]), kind="stable")][:max_ev]
        u = w @ y[:, keep]
        u = u / np.maximum(la.norm(u, axis=0), np.finfo(float).tiny)
        proj_b = w @ (br @ (w.conj().T @ u))  # Pi B Pi u
        good = []
        for k, lk in enumerate(lam[keep]):
            res = la.norm(proj_b[:, k] - lk * (at @ u[:, k]))
            bound = tol_res * (bnorm + abs(lk) * at_norm)
            max_res = max(max_res, res / max(bnorm + abs(lk) * at_norm, np.finfo(float).tiny))
            if res <= bound:
                good.append(k)
        if len(good) < keep.size:
            diag = f"{keep.size - len(good)} eigenpairs dropped by the residual check"
            log.warning("subdomain %d: %s", subdomain, diag)
        vals = lam[keep][good]
        vecs = u[:, good]

    span = vecs
    if np.iscomplexobj(vecs) and dtype.kind != "c":
        # real pencil: conjugate pairs span the same space as their real and imaginary parts
        span = np.stack([vecs.real, vecs.imag], axis=2).reshape(n, -1)
        span = span[:, _independent_columns(span, tol_kernel)][:, :max_ev]
    z = np.concatenate([kcomp.astype(dtype, copy=False), span.astype(dtype, copy=False)], axis=1)
    z = z[:, _independent_columns(z, tol_kernel)] if z.shape[1] else z
    return LocalEigenSelection(
        subdomain, kk, kl, kcomp, vals, vecs, z, spectrum, n_inf, max_res, diag,
    )


def _reduced_eig(br, ar, herm):
    """Eigenpairs of the reduced pencil; infinite eigenvalues are discarded."""
    if herm:
        try:
            lam, y = la.eigh(br, ar)
            return lam, y, 0
        except la.LinAlgError:
            pass  # A~ indefinite on its range: fall back to the general solver
    ab, y = la.eig(br, ar, homogeneous_eigvals=True)
    alpha, beta = ab
    scale = np.maximum(np.abs(alpha), np.abs(beta))
    finite = np.abs(beta) > 1e3 * np.finfo(float).eps * np.maximum(scale, np.finfo(float).tiny)
    lam = alpha[finite] / beta[finite]
    if herm and np.all(np.abs(lam.imag) <= 1e-10 * np.maximum(1.0, np.abs(lam))):
        lam = lam.real
    return lam, y[:, finite], int(np.sum(~finite))


@dataclass(eq=False)
class CoarseSpace:
    """Coarse basis ``R_0^H`` (n x n_0) with the factorized ``A_00 = R_0 A R_0^H``."""

    basis: sp.csr_matrix
    a00: np.ndarray
    lu: tuple | None
    owners: np.ndarray  # subdomain each coarse column came from

    @property
    def n0(self):
        return self.basis.shape[1]

    def restrict(self, x):
        return self.basis.conj().T @ x

    def prolong(self, y):
        return self.basis @ y

    def solve(self, y):
        if self.n0 == 0:
            return y
        return la.lu_solve(self.lu, y)

    def correction(self, x):
        """``R_0^H A_00^{-1} R_0 x``."""
        if self.n0 == 0:
            return np.zeros_like(x, dtype=np.result_type(x, self.basis.dtype))
        return self.prolong(self.solve(self.restrict(x)))


def assemble_coarse(a: SparseMatrix, layout: OverlapLayout, selections, tol=KERNEL_TOL_DEFAULT) -> CoarseSpace:
    """Stack ``R_i^T D_i Z_i`` and form ``A_00``.

    Columns that the partition of unity wipes out are dropped, then a
    pivoted Cholesky of the Gram matrix removes globally dependent columns.
    """
    if len(selections) != layout.n_subdomains:
        raise ValueError("need one selection per subdomain")
    rows, cols, vals, owners = [], [], [], []
    ncol = 0
    dtype = np.float64
    for sel, sub in zip(selections, layout):
        z = sel.Z
        if z.shape[1] == 0:
            continue
        y = sub.pou[:, None] * z
        keep = la.norm(y, axis=0) > tol * np.maximum(la.norm(z, axis=0), np.finfo(float).tiny)
        y = y[:, keep]
        dtype = np.result_type(dtype, y.dtype)
        r_loc, c_loc = np.nonzero(y)
        rows.append(sub.indices[r_loc])
        cols.append(c_loc + ncol)
        vals.append(y[r_loc, c_loc])
        owners.extend([sel.subdomain] * y.shape[1])
        ncol += y.shape[1]
    n = layout.n
    if ncol == 0:
        return CoarseSpace(sp.csr_matrix((n, 0)), np.zeros((0, 0)), None, np.zeros(0, dtype=np.int64))
    v = sp.csc_matrix(
        (np.concatenate(vals).astype(dtype), (np.concatenate(rows), np.concatenate(cols))), shape=(n, ncol)
    )
    owners = np.asarray(owners, dtype=np.int64)

    gram = (v.conj().T @ v).toarray()
    keep = _gram_rank_filter(gram, tol)
    if keep.size < ncol:
        log.info("coarse space: %d dependent columns removed", ncol - keep.size)
        v = v[:, keep]
        owners = owners[keep]
    v = sp.csr_matrix(v)
    a00 = np.asarray((v.conj().T @ (a.csr @ v)).todense())
    with warnings.catch_warnings():
        # singularity is reported below through the condition estimate
        warnings.simplefilter("ignore", la.LinAlgWarning)
        lu = la.lu_factor(a00, check_finite=True)
    rcond = _rcond(lu, a00)
    if not np.isfinite(rcond) or rcond < a00.shape[0] * np.finfo(float).eps:
        raise CoarseSpaceError(
            f"coarse operator A_00 ({a00.shape[0]}x{a00.shape[0]}) is singular (rcond={rcond:.2e}); "
            "try a larger tau"
        )
    return CoarseSpace(v, a00, lu, owners)


def _gram_rank_filter(gram, tol):
    n = gram.shape[0]
    dmax = np.abs(np.diag(gram)).max()
    if dmax == 0:
        return np.zeros(0, dtype=np.int64)
    pstrf = la.lapack.zpstrf if np.iscomplexobj(gram) else la.lapack.dpstrf
    _, piv, rank, info = pstrf(gram.copy(), tol=tol * dmax, lower=1)
    if info < 0:
        raise CoarseSpaceError(f"pivoted Cholesky failed (info={info})")
    return np.sort(piv[:rank] - 1) if rank < n else np.arange(n)


def _rcond(lu, a):
    gecon = la.lapack.zgecon if np.iscomplexobj(lu[0]) else la.lapack.dgecon
    anorm = np.abs(a).sum(axis=0).max()
    rcond, info = gecon(lu[0], anorm, norm="1")
    return float(rcond) if info == 0 else float("nan")


def bound_rhs(k_c, k_m, tau):
    """Upper bound ``(k_c+1)(2 + (2 k_c + 1) k_m / tau)`` on the two-level condition number."""
    if k_c < 1 or k_m < 1:
        raise ValueError("k_c and k_m must be at least 1")
    if tau <= 0:
        raise ValueError("tau must be positive")
    return (k_c + 1) * (2 + (2 * k_c + 1) * k_m / tau)
