"""Dense brute-force reference implementations used only by the tests.

Nothing here calls into the package's algorithmic code paths; everything is
built from explicit dense matrices (restriction matrices, permutations,
inverses, pseudo-inverses).
"""

import numpy as np
import scipy.linalg as la
from scipy.optimize import linear_sum_assignment


def tridiag(n, lo=-1.0, d=2.0, up=-1.0):
    return np.diag(np.full(n, d)) + np.diag(np.full(n - 1, lo), -1) + np.diag(np.full(n - 1, up), 1)


def read_mm_dense(text):
    """Tiny Matrix Market reader producing a dense array (coordinate only)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].lower().split()
    field, sym = head[3], head[4]
    body = [ln.split() for ln in lines[1:] if not ln.startswith("%")]
    m, n, _ = (int(t) for t in body[0])
    a = np.zeros((m, n), dtype=complex if field == "complex" else float)
    for tok in body[1:]:
        i, j = int(tok[0]) - 1, int(tok[1]) - 1
        if field == "pattern":
            v = 1.0
        elif field == "complex":
            v = complex(float(tok[2]), float(tok[3]))
        else:
            v = float(tok[2])
        a[i, j] += v
        if i != j and sym == "symmetric":
            a[j, i] += v
        elif i != j and sym == "hermitian":
            a[j, i] += np.conj(v)
        elif i != j and sym == "skew-symmetric":
            a[j, i] -= v
    return a


def restriction(indices, n):
    r = np.zeros((len(indices), n))
    r[np.arange(len(indices)), indices] = 1.0
    return r


def overlap_sets(a, parts):
    """Distance-one extension computed from a dense pattern of |A|+|A^H|."""
    n = a.shape[0]
    pat = (np.abs(a) + np.abs(a.conj().T)) > 0
    out = []
    for p in parts:
        p = list(p)
        mask = np.zeros(n, dtype=bool)
        mask[p] = True
        reach = pat[p].any(axis=0) & ~mask
        out.append((p, sorted(np.flatnonzero(reach).tolist())))
    return out


def splitting_dense(a, interior, boundary):
    """Lumped local matrix built with the permutation [I, Gamma, c] on the dense matrix."""
    n = a.shape[0]
    comp = [k for k in range(n) if k not in set(interior) | set(boundary)]
    perm = list(interior) + list(boundary) + comp
    p = np.eye(n)[perm]
    pap = p @ a @ p.T
    ni, ng = len(interior), len(boundary)
    a_gc = pap[ni:ni + ng, ni + ng:]
    s = np.abs(a_gc).sum(axis=1)
    loc = pap[:ni + ng, :ni + ng].copy()
    loc[ni:, ni:] -= np.diag(s)
    return loc, s


def pencil_spectrum(b, at, tol=1e-10):
    """Eigenvalues of (Pi B Pi, A~) on range(A~) via the pseudo-inverse.

    ``pinv(A~) Pi B Pi`` maps range(A~) to itself and kills its orthogonal
    complement, so its nonzero eigenvalues are the pencil's nonzero ones.
    """
    pinv = la.pinv(at, rtol=tol)
    proj = at @ pinv
    ev = la.eigvals(pinv @ proj @ b @ proj)
    return ev


def one_level_dense(a, subs, variant):
    n = a.shape[0]
    m = np.zeros((n, n), dtype=a.dtype)
    for idx, d in subs:
        r = restriction(idx, n)
        aii = r @ a @ r.T
        inv = la.inv(aii)
        if variant == "ras":
            inv = np.diag(d) @ inv
        m += r.T @ inv @ r
    return m


def two_level_dense(a, m1, r0h, kind):
    n = a.shape[0]
    if r0h.shape[1] == 0:
        return m1
    r0 = r0h.conj().T
    q = r0h @ la.inv(r0 @ a @ r0h) @ r0
    if kind == "additive":
        return q + m1
    return q + m1 @ (np.eye(n) - a @ q)


def gmres_dense(a, b, m_inv, k):
    """Residual norms of full (unrestarted) GMRES from a zero guess, steps 1..k.

    Uses an explicit Krylov basis orthonormalized by a dense QR and a
    least-squares solve per step; no Arnoldi recurrence.
    """
    op = a @ m_inv
    basis = [b / la.norm(b)]
    out = []
    for j in range(1, k + 1):
        kry = np.column_stack(basis)
        q, _ = la.qr(kry, mode="economic")
        y, *_ = la.lstsq(op @ q, b)
        out.append(la.norm(b - op @ q @ y) / la.norm(b))
        basis.append(op @ basis[-1])
        basis[-1] = basis[-1] / la.norm(basis[-1])
    return np.array(out)


def random_hermitian_dd(rng, n, density, complex_=False, slack=0.0):
    """Random sparse Hermitian matrix, diagonally dominant with positive diagonal."""
    mask = np.triu(rng.random((n, n)) < density, 1)
    vals = rng.uniform(-1, 1, (n, n))
    if complex_:
        vals = vals + 1j * rng.uniform(-1, 1, (n, n))
    up = np.where(mask, vals, 0)
    a = up + up.conj().T
    rowsum = np.abs(a).sum(axis=1)
    a = a + np.diag(rowsum + slack * rng.random(n))
    # isolated rows still need a positive diagonal
    a[np.diag_indices(n)] = np.where(np.abs(np.diag(a)) == 0, 1.0, np.diag(a))
    return a


def match_multisets(x, y, cluster=1e-6):
    """Largest mismatch after optimal pairing; close eigenvalues compare by cluster mean.

    A defective eigenvalue of multiplicity m moves by eps^(1/m) under roundoff
    in any solver, while the mean of its cluster stays accurate to eps.
    """
    x, y = np.asarray(x, complex), np.asarray(y, complex)
    cost = np.abs(x[:, None] - y[None, :])
    r, c = linear_sum_assignment(cost)
    x, y = x[r], y[c]
    scale = max(1.0, np.abs(y).max(initial=0.0))
    label = np.arange(x.size)
    for i in range(x.size):
        for j in range(i):
            if abs(x[i] - x[j]) <= cluster * scale:
                label[label == label[i]] = label[j]
    err = 0.0
    for lab in np.unique(label):
        m = label == lab
        err = max(err, abs(x[m].mean() - y[m].mean()))
    return err
