"""Adjacency graph, nonoverlapping partition, one-layer overlap and partition of unity."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .sparse import SparseMatrix, hermitian_transpose_pattern


class PartitionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AdjacencyGraph:
    """Symmetric graph without self-loops, stored as CSR neighbor lists."""

    n_vertices: int
    offsets: np.ndarray
    neighbors: np.ndarray

    def adj(self, v):
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    def degree(self, v):
        return int(self.offsets[v + 1] - self.offsets[v])

    @classmethod
    def from_edges(cls, n, edges):
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        m = sp.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)).tocsr()
        return _graph_from_pattern(m + m.T)


def _graph_from_pattern(p):
    p = sp.csr_matrix(p, copy=True)
    p.setdiag(0)
    p.eliminate_zeros()
    p.sort_indices()
    return AdjacencyGraph(p.shape[0], p.indptr.astype(np.int64), p.indices.astype(np.int64))


def build_graph(a: SparseMatrix) -> AdjacencyGraph:
    """Graph of the pattern of ``|A| + |A^H|`` with the diagonal removed."""
    if not a.is_square():
        raise PartitionError(f"adjacency graph needs a square matrix, got {a.n_rows}x{a.n_cols}")
    return _graph_from_pattern(hermitian_transpose_pattern(a).csr)


# -- partitioning ---------------------------------------------------------


def _bfs_order(g, start, inside):
    """BFS visiting order and levels restricted to vertices flagged in ``inside``."""
    order, level = [start], {start: 0}
    q = deque([start])
    while q:
        v = q.popleft()
        for w in g.adj(v):
            w = int(w)
            if inside[w] and w not in level:
                level[w] = level[v] + 1
                order.append(w)
                q.append(w)
    return order, level


def _pseudo_peripheral(g, start, inside):
    """George-Liu style search: walk to a vertex of maximal eccentricity."""
    v = start
    order, level = _bfs_order(g, v, inside)
    ecc = level[order[-1]]
    while True:
        last = [u for u in order if level[u] == ecc]
        cand = min(last, key=lambda u: (g.degree(u), u))
        order2, level2 = _bfs_order(g, cand, inside)
        ecc2 = level2[order2[-1]]
        if ecc2 <= ecc:
            return v, order, level
        v, order, level, ecc = cand, order2, level2, ecc2


def _level_ordering(g, verts, rng):
    """Order ``verts`` component by component, each by BFS from a pseudo-peripheral vertex."""
    inside = np.zeros(g.n_vertices, dtype=bool)
    inside[verts] = True
    seen = np.zeros(g.n_vertices, dtype=bool)
    comps = []
    for v in verts:
        if seen[v]:
            continue
        comp, _ = _bfs_order(g, int(v), inside)
        seen[comp] = True
        comps.append(comp)
    out = []
    # larger components first so the bisection cut falls inside at most one of them
    for comp in sorted(comps, key=lambda c: (-len(c), min(c))):
        start = comp[int(rng.integers(len(comp)))] if len(comp) > 1 else comp[0]
        _, order, level = _pseudo_peripheral(g, start, inside)
        out.extend(order)
    return out


def partition_graph(g: AdjacencyGraph, n_parts: int, seed: int = 0):
    """Split the vertices into ``n_parts`` nonempty disjoint sets.

    Recursive bisection: at each step the vertex set is ordered by BFS
    level structure from a pseudo-peripheral vertex and cut so the two
    halves are sized in proportion to the number of parts each receives.
    Disconnected pieces are ordered one component after another, so small
    components are kept whole whenever the cut allows it.

    The result is sorted by smallest vertex so it does not depend on which
    end of the graph the BFS happened to start from.
    """
    n = g.n_vertices
    if n_parts < 1:
        raise PartitionError("number of subdomains must be at least 1")
    if n_parts > n:
        raise PartitionError(f"cannot split {n} vertices into {n_parts} nonempty parts")
    rng = np.random.default_rng(seed)
    parts = []

    def split(verts, k):
        if k == 1:
            parts.append(np.sort(np.asarray(verts, dtype=np.int64)))
            return
        order = _level_ordering(g, np.asarray(verts, dtype=np.int64), rng)
        k_left = k // 2
        cut = int(round(len(order) * k_left / k))
        cut = min(max(cut, k_left), len(order) - (k - k_left))
        split(order[:cut], k_left)
        split(order[cut:], k - k_left)

    split(np.arange(n), n_parts)
    parts.sort(key=lambda p: int(p[0]))
    return parts


def parts_from_owners(owners, n_parts=None):
    owners = np.asarray(owners, dtype=np.int64)
    if owners.size and owners.min() < 0:
        raise PartitionError("owner ids must be nonnegative")
    k = int(owners.max()) + 1 if n_parts is None else n_parts
    if owners.size and owners.max() >= k:
        raise PartitionError(f"owner id {owners.max()} outside [0, {k})")
    parts = [np.flatnonzero(owners == i) for i in range(k)]
    empty = [i for i, p in enumerate(parts) if p.size == 0]
    if empty:
        raise PartitionError(f"empty part {empty[0]}")
    return parts


def import_partition(path, n_vertices=None, n_parts=None):
    """Read whitespace-separated 0-based owner ids, one per vertex."""
    toks = Path(path).read_text().split()
    try:
        owners = [int(t) for t in toks]
    except ValueError as exc:
        raise PartitionError(f"{path}: owner ids must be integers") from exc
    if n_vertices is not None and len(owners) < n_vertices:
        raise PartitionError(f"missing vertices: file lists {len(owners)} owners for {n_vertices} vertices")
    if n_vertices is not None and len(owners) > n_vertices:
        raise PartitionError(f"file lists {len(owners)} owners for {n_vertices} vertices")
    return parts_from_owners(owners, n_parts)


def check_cover(parts, n):
    seen = np.zeros(n, dtype=np.int64)
    for p in parts:
        if len(p) == 0:
            raise PartitionError("empty part")
        np.add.at(seen, np.asarray(p), 1)
    if np.any(seen == 0):
        raise PartitionError(f"missing vertices: {np.flatnonzero(seen == 0)[:5].tolist()} ...")
    if np.any(seen > 1):
        raise PartitionError(f"vertex {int(np.flatnonzero(seen > 1)[0])} owned by several parts")


# -- overlap ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Subdomain:
    interior: np.ndarray
    boundary: np.ndarray
    pou: np.ndarray  # diagonal of D_i, ordered like ``indices``

    @property
    def indices(self):
        """Overlapping subdomain: interior followed by boundary."""
        return np.concatenate([self.interior, self.boundary])

    @property
    def n_interior(self):
        return self.interior.size

    @property
    def n_boundary(self):
        return self.boundary.size

    @property
    def size(self):
        return self.interior.size + self.boundary.size


@dataclass(frozen=True, eq=False)
class OverlapLayout:
    n: int
    subdomains: tuple
    pou_kind: str = "boolean"

    @property
    def n_subdomains(self):
        return len(self.subdomains)

    def __iter__(self):
        return iter(self.subdomains)

    def __getitem__(self, i):
        return self.subdomains[i]

    def restriction(self, i):
        """Sparse ``R_i`` (n_i x n)."""
        idx = self.subdomains[i].indices
        return sp.csr_matrix((np.ones(idx.size), (np.arange(idx.size), idx)), shape=(idx.size, self.n))

    def multiplicity(self):
        count = np.zeros(self.n, dtype=np.int64)
        for s in self.subdomains:
            count[s.indices] += 1
        return count

    def pou_sum(self):
        """``sum_i R_i^T D_i R_i`` as a diagonal vector."""
        total = np.zeros(self.n)
        for s in self.subdomains:
            np.add.at(total, s.indices, s.pou)
        return total


def extend_overlap(g: AdjacencyGraph, parts, pou="boolean") -> OverlapLayout:
    """Add one layer of graph neighbors to every part and attach ``D_i``.

    ``pou="boolean"`` gives weight 1 on the interior and 0 on the added
    layer. ``pou="multiplicity"`` gives every row ``1/count`` where count is
    the number of overlapping subdomains containing it.
    """
    if pou not in ("boolean", "multiplicity"):
        raise ValueError(f"unknown partition of unity {pou!r}")
    n = g.n_vertices
    check_cover(parts, n)
    mark = np.full(n, -1, dtype=np.int64)
    raw = []
    for i, interior in enumerate(parts):
        interior = np.asarray(interior, dtype=np.int64)
        mark[interior] = i
        bnd = []
        for v in interior:
            for w in g.adj(v):
                if mark[w] != i:
                    mark[w] = i
                    bnd.append(int(w))
        # reset so the next subdomain starts clean; interiors are disjoint
        raw.append((interior, np.array(sorted(bnd), dtype=np.int64)))
        mark[interior] = -1
        mark[np.asarray(bnd, dtype=np.int64)] = -1
    count = np.zeros(n, dtype=np.int64)
    for interior, bnd in raw:
        count[interior] += 1
        count[bnd] += 1
    subs = []
    for interior, bnd in raw:
        if pou == "boolean":
            d = np.concatenate([np.ones(interior.size), np.zeros(bnd.size)])
        else:
            d = 1.0 / count[np.concatenate([interior, bnd])]
        subs.append(Subdomain(interior, bnd, d))
    return OverlapLayout(n, tuple(subs), pou)


def subdomain_graph(layout: OverlapLayout, g: AdjacencyGraph, connect="coupling"):
    """Adjacency sets between subdomains.

    ``connect="coupling"``: ``i`` and ``j`` are neighbors when ``Omega_i``
    and ``Omega_j`` intersect or some edge joins them (``R_i A R_j^T != 0``).
    ``connect="overlap"``: only intersecting subdomains are neighbors.
    """
    N = layout.n_subdomains
    member = sp.csr_matrix(
        (
            np.ones(sum(s.size for s in layout)),
            (np.concatenate([s.indices for s in layout]), np.repeat(np.arange(N), [s.size for s in layout])),
        ),
        shape=(layout.n, N),
    )
    touch = member.T @ member
    if connect == "coupling":
        adj = sp.csr_matrix((np.ones(g.neighbors.size), g.neighbors, g.offsets), shape=(g.n_vertices,) * 2)
        touch = touch + member.T @ adj @ member
    elif connect != "overlap":
        raise ValueError(f"unknown connect mode {connect!r}")
    touch = sp.csr_matrix(touch)
    return [set(int(j) for j in touch[i].indices if j != i) for i in range(N)]


def greedy_coloring(nbrs):
    """Largest-degree-first greedy coloring; returns one color per vertex."""
    order = sorted(range(len(nbrs)), key=lambda i: (-len(nbrs[i]), i))
    color = [-1] * len(nbrs)
    for i in order:
        used = {color[j] for j in nbrs[i]}
        c = 0
        while c in used:
            c += 1
        color[i] = c
    return color


def coloring_and_multiplicity(layout: OverlapLayout, g: AdjacencyGraph, connect="coupling"):
    """Return ``(k_c, k_m)``: colors of the subdomain graph and max row multiplicity."""
    k_m = int(layout.multiplicity().max())
    color = greedy_coloring(subdomain_graph(layout, g, connect))
    return max(color) + 1, k_m
