"""Restarted right-preconditioned GMRES and a dense condition-number estimate."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

RESTART_DEFAULT = 30
RTOL_DEFAULT = 1e-8
MAXIT_DEFAULT = 100
CONDITION_DENSE_LIMIT = 8192

# Kahan/Daniel-Gragg-Kaufman-Stewart criterion for a second Gram-Schmidt pass
_REORTH_RATIO = 0.7071


@dataclass
class SolveReport:
    iterations: int = 0
    converged: bool = False
    relative_residual_history: list = field(default_factory=list)
    wall_time: float = 0.0
    breakdown_flag: bool = False
    restarts: int = 0

    @property
    def final_residual(self):
        return self.relative_residual_history[-1] if self.relative_residual_history else float("nan")


def _as_apply(op):
    if op is None:
        return lambda v: v
    if callable(op) and not hasattr(op, "shape"):
        return op
    if hasattr(op, "matvec"):
        return op.matvec
    return lambda v: op @ v


def _givens(a, b):
    """Complex Givens rotation ``(c, s)`` with ``[c s; -conj(s) c] [a; b] = [r; 0]``."""
    if b == 0:
        return 1.0, 0.0 * b
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    t = np.hypot(abs(a), abs(b))
    c = abs(a) / t
    s = (a / abs(a)) * np.conj(b) / t
    return c, s


def gmres(a, b, m_inv=None, restart=RESTART_DEFAULT, rtol=RTOL_DEFAULT, maxit=MAXIT_DEFAULT, x0=None):
    """Solve ``A x = b`` with GMRES(restart) and right preconditioning.

    Iterates on ``A M^{-1} y = b`` and returns ``x = M^{-1} y``. Each
    Arnoldi step counts as one iteration; ``maxit`` caps the total over all
    cycles. The history holds ``||b - A x|| / ||b||`` (the Arnoldi estimate
    inside a cycle, the recomputed true residual at cycle starts and at
    the end).

    Returns
    -------
    x : ndarray
    report : SolveReport
    """
    if restart < 1:
        raise ValueError("restart must be at least 1")
    t0 = time.perf_counter()
    apply_a = _as_apply(a)
    apply_m = _as_apply(m_inv)
    b = np.asarray(b)
    n = b.shape[0]
    x = np.zeros(n, dtype=b.dtype) if x0 is None else np.array(x0, dtype=np.result_type(b, x0))
    rep = SolveReport()
    bnorm = la.norm(b)
    if bnorm == 0:
        rep.converged = True
        rep.relative_residual_history = [0.0]
        rep.wall_time = time.perf_counter() - t0
        return np.zeros_like(x), rep

    r = b - apply_a(x) if x0 is not None else b.copy()
    beta = la.norm(r)
    rep.relative_residual_history.append(beta / bnorm)
    if beta / bnorm <= rtol:
        rep.converged = True
        rep.wall_time = time.perf_counter() - t0
        return x, rep

    while rep.iterations < maxit:
        m = min(restart, maxit - rep.iterations)
        dtype = np.result_type(r, x, np.float64)
        v = np.zeros((m + 1, n), dtype=dtype)
        h = np.zeros((m + 1, m), dtype=dtype)
        cs = np.zeros(m)
        sn = np.zeros(m, dtype=dtype)
        g = np.zeros(m + 1, dtype=dtype)
        v[0] = r / beta
        g[0] = beta
        j_done = 0
        happy = False
        for j in range(m):
            w = apply_a(apply_m(v[j]))
            if w.dtype != dtype:
                dtype2 = np.result_type(w, dtype)
                v, h, sn, g = (arr.astype(dtype2) for arr in (v, h, sn, g))
                dtype = dtype2
            if not np.all(np.isfinite(w)):
                rep.breakdown_flag = True
                break
            wnorm0 = la.norm(w)
            for i in range(j + 1):
                h[i, j] = np.vdot(v[i], w)
                w = w - h[i, j] * v[i]
            hn = la.norm(w)
            if hn < _REORTH_RATIO * wnorm0:
                for i in range(j + 1):
                    c = np.vdot(v[i], w)
                    h[i, j] += c
                    w = w - c * v[i]
                hn = la.norm(w)
            h[j + 1, j] = hn
            # invariant subspace reached: the least-squares solution is exact
            happy = hn <= np.finfo(float).eps * wnorm0
            for i in range(j):
                t = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
                h[i + 1, j] = -np.conj(sn[i]) * h[i, j] + cs[i] * h[i + 1, j]
                h[i, j] = t
            cs[j], sn[j] = _givens(h[j, j], h[j + 1, j])
            h[j, j] = cs[j] * h[j, j] + sn[j] * h[j + 1, j]
            h[j + 1, j] = 0.0
            g[j + 1] = -np.conj(sn[j]) * g[j]
            g[j] = cs[j] * g[j]
            rep.iterations += 1
            j_done = j + 1
            est = abs(g[j + 1]) / bnorm
            rep.relative_residual_history.append(float(est))
            if est <= rtol or happy:
                break
            v[j + 1] = w / hn

        if j_done:
            hk = h[:j_done, :j_done]
            if np.any(np.abs(np.diag(hk)) == 0) or not np.all(np.isfinite(hk)):
                rep.breakdown_flag = True
            else:
                y = la.solve_triangular(hk, g[:j_done])
                x = x + apply_m(v[:j_done].T @ y)
        if rep.breakdown_flag:
            break
        r = b - apply_a(x)
        beta = la.norm(r)
        true_rel = beta / bnorm
        if not np.isfinite(true_rel):
            rep.breakdown_flag = True
            break
        if rep.relative_residual_history:
            # replace the last estimate by the recomputed true residual
            rep.relative_residual_history[-1] = float(true_rel)
        if true_rel <= rtol:
            rep.converged = True
            break
        if happy:
            # exact Krylov solution that still misses the tolerance: singular operator
            rep.breakdown_flag = True
            break
        rep.restarts += 1
    rep.wall_time = time.perf_counter() - t0
    return x, rep


def _densify(op, n, dtype=np.float64):
    apply = _as_apply(op)
    eye = np.eye(n, dtype=dtype)
    try:
        out = apply(eye)
        if np.shape(out) == (n, n):
            return np.asarray(out)
    except (ValueError, TypeError):
        pass
    return np.column_stack([apply(eye[:, k]) for k in range(n)])


def estimate_condition(op, n, metric=None, limit=CONDITION_DENSE_LIMIT):
    """Condition number of a linear operator by densification.

    Without ``metric`` the operator is treated as Hermitian when its dense
    form is (ratio of extreme eigenvalue moduli), otherwise the ratio of
    extreme singular values is returned. With an HPD ``metric`` ``G``, the
    operator is assumed self-adjoint in the ``G`` inner product (the case of
    ``M^{-1} A`` with ``G = A``); then ``G op`` is Hermitian and the extreme
    eigenvalues come from the pencil ``(G op, G)``.
    """
    if n > limit:
        raise ValueError(f"operator of size {n} exceeds the dense limit {limit}")
    d = _densify(op, n)
    if metric is not None:
        gd = metric.toarray() if hasattr(metric, "toarray") else np.asarray(metric)
        h = metric @ d
        h = 0.5 * (h + h.conj().T)
        ev = la.eigh(h, gd, eigvals_only=True)
        return float(ev.max() / ev.min())
    if np.allclose(d, d.conj().T, rtol=1e-12, atol=1e-14 * np.abs(d).max()):
        ev = np.abs(la.eigvalsh(0.5 * (d + d.conj().T)))
        return float(ev.max() / ev.min()) if ev.min() > 0 else float("inf")
    sv = la.svdvals(d)
    return float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
