"""Matrix Market reader/writer and a small binary cache format.

The reader accepts ``coordinate`` and ``array`` formats with ``real``,
``complex``, ``integer`` or ``pattern`` fields and ``general``,
``symmetric``, ``hermitian`` or ``skew-symmetric`` storage. Symmetric
storage is expanded to the full pattern on load.

Binary cache layout (little endian)::

    magic    8 bytes   b"SDDCSR\\x00\\x01"   (last byte is the format version)
    header   5 x int64 n_rows, n_cols, nnz, is_complex, symmetry code
    offsets  (n_rows+1) x int64
    columns  nnz x int64
    values   nnz x float64 | nnz x complex128
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .sparse import SYMMETRY_HINTS, SparseMatrix

CACHE_MAGIC = b"SDDCSR\x00\x01"

_FIELDS = ("real", "complex", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric", "hermitian", "skew-symmetric")


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input; ``lineno`` is 1-based when known."""

    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


def _data_lines(lines, start):
    for lineno, line in enumerate(lines[start:], start=start + 1):
        s = line.strip()
        if s and not s.startswith("%"):
            yield lineno, s.split()


def read_matrix_market(path) -> SparseMatrix:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != "%%matrixmarket" or head[1].lower() != "matrix":
        raise MatrixMarketError("expected '%%MatrixMarket matrix <format> <field> <symmetry>'", 1)
    fmt, fld, sym = (h.lower() for h in head[2:])
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unknown format {fmt!r}", 1)
    if fld not in _FIELDS:
        raise MatrixMarketError(f"unknown field {fld!r}", 1)
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(f"unknown symmetry {sym!r}", 1)
    if fmt == "array" and fld == "pattern":
        raise MatrixMarketError("array format cannot have a pattern field", 1)
    if sym == "hermitian" and fld != "complex":
        raise MatrixMarketError("hermitian symmetry requires a complex field", 1)

    body = _data_lines(lines, 1)
    try:
        lineno, size = next(body)
    except StopIteration:
        raise MatrixMarketError("missing size line", len(lines)) from None
    want = 3 if fmt == "coordinate" else 2
    if len(size) != want:
        raise MatrixMarketError(f"size line needs {want} integers", lineno)
    try:
        dims = [int(t) for t in size]
    except ValueError:
        raise MatrixMarketError("size line is not integer", lineno) from None
    m, n = dims[0], dims[1]
    if m < 0 or n < 0:
        raise MatrixMarketError("negative dimension", lineno)
    if sym != "general" and m != n:
        raise MatrixMarketError(f"{sym} storage requires a square matrix", lineno)

    ncols_val = {"real": 1, "integer": 1, "complex": 2, "pattern": 0}[fld]
    rows, cols, vals = [], [], []

    def parse_value(tok, lineno):
        try:
            if fld == "complex":
                return complex(float(tok[0]), float(tok[1]))
            if fld == "integer":
                return float(int(tok[0]))
            return float(tok[0])
        except ValueError:
            raise MatrixMarketError("could not parse value", lineno) from None

    if fmt == "coordinate":
        nnz = dims[2]
        count = 0
        for lineno, tok in body:
            if count == nnz:
                raise MatrixMarketError("more entries than declared", lineno)
            if len(tok) != 2 + ncols_val:
                raise MatrixMarketError(f"expected {2 + ncols_val} fields, got {len(tok)}", lineno)
            try:
                i, j = int(tok[0]), int(tok[1])
            except ValueError:
                raise MatrixMarketError("index is not an integer", lineno) from None
            if not (1 <= i <= m and 1 <= j <= n):
                raise MatrixMarketError(f"index ({i}, {j}) outside 1-based range {m}x{n}", lineno)
            v = 1.0 if fld == "pattern" else parse_value(tok[2:], lineno)
            if sym != "general" and j > i:
                raise MatrixMarketError(f"{sym} storage expects the lower triangle only", lineno)
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(v)
            count += 1
        if count != nnz:
            raise MatrixMarketError(f"declared {nnz} entries, found {count}", len(lines))
    else:
        # column-major listing, lower triangle only when not general
        positions = [
            (i, j) for j in range(n) for i in range(m)
            if sym == "general" or i > j or (i == j and sym != "skew-symmetric")
        ]
        k = 0
        for lineno, tok in body:
            if k == len(positions):
                raise MatrixMarketError("more entries than the array size", lineno)
            if len(tok) != ncols_val:
                raise MatrixMarketError(f"expected {ncols_val} fields, got {len(tok)}", lineno)
            i, j = positions[k]
            rows.append(i)
            cols.append(j)
            vals.append(parse_value(tok, lineno))
            k += 1
        if k != len(positions):
            raise MatrixMarketError(f"expected {len(positions)} array entries, found {k}", len(lines))

    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.complex128 if fld == "complex" else np.float64)
    if sym != "general":
        off = rows != cols
        mirror = {"symmetric": vals[off], "hermitian": np.conj(vals[off]), "skew-symmetric": -vals[off]}[sym]
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, mirror]),
        )
    hint = sym if sym in SYMMETRY_HINTS else "general"
    return SparseMatrix.from_coo(rows, cols, vals, (m, n), symmetry_hint=hint)


def _fmt(v):
    return repr(float(v))


def write_matrix_market(path, a: SparseMatrix, comment=None):
    """Write ``a`` in coordinate/general form (full pattern, exact repr values)."""
    fld = "complex" if a.is_complex else "real"
    out = [f"%%MatrixMarket matrix coordinate {fld} general"]
    if comment:
        out.extend(f"% {line}" for line in comment.splitlines())
    out.append(f"{a.n_rows} {a.n_cols} {a.nnz}")
    for r in range(a.n_rows):
        c, v = a.row(r)
        for j, x in zip(c, v):
            if a.is_complex:
                out.append(f"{r + 1} {j + 1} {_fmt(x.real)} {_fmt(x.imag)}")
            else:
                out.append(f"{r + 1} {j + 1} {_fmt(x)}")
    Path(path).write_text("\n".join(out) + "\n")


def save_cache(path, a: SparseMatrix):
    hdr = struct.pack("<5q", a.n_rows, a.n_cols, a.nnz, int(a.is_complex), SYMMETRY_HINTS.index(a.symmetry_hint))
    with open(path, "wb") as f:
        f.write(CACHE_MAGIC)
        f.write(hdr)
        f.write(a.row_offsets.astype("<i8").tobytes())
        f.write(a.col_indices.astype("<i8").tobytes())
        f.write(a.values.astype("<c16" if a.is_complex else "<f8").tobytes())


def load_cache(path) -> SparseMatrix:
    raw = Path(path).read_bytes()
    if raw[:6] != CACHE_MAGIC[:6]:
        raise ValueError(f"{path}: not a matrix cache file")
    if raw[6:8] != CACHE_MAGIC[6:8]:
        raise ValueError(f"{path}: unsupported cache version {raw[7]}")
    pos = len(CACHE_MAGIC)
    n_rows, n_cols, nnz, cplx, symc = struct.unpack_from("<5q", raw, pos)
    pos += 40

    def take(dtype, count):
        nonlocal pos
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
        pos += arr.nbytes
        return arr.copy()

    ro = take("<i8", n_rows + 1)
    ci = take("<i8", nnz)
    vals = take("<c16" if cplx else "<f8", nnz)
    return SparseMatrix(n_rows, n_cols, ro, ci, vals, SYMMETRY_HINTS[symc])
