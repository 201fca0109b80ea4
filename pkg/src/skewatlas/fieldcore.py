"""Exact dense linear algebra over the prime field Z_p (p an odd prime).

Matrices are numpy integer arrays with entries reduced to [0, p).  All
routines are pure: inputs are never mutated, outputs are fully reduced
residues.  Elimination is deterministic (leftmost pivot, topmost row) so
reduced forms are canonical.
"""

import numpy as np

INT = np.int64


class Singular(Exception):
    """Square matrix has no inverse over Z_p."""


class BadBlockShape(Exception):
    """Matrix dimensions not divisible by the requested block shape."""


_SMALL_PRIMES = (
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
    71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149,
    151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227,
    229, 233, 239, 241, 251,
)


def check_prime(p):
    """Validate the modulus: odd prime, at most 251."""
    if p not in _SMALL_PRIMES or p == 2:
        raise ValueError(f"modulus must be an odd prime <= 251, got {p}")


_INV_CACHE = {}


def inv_table(p):
    """Table t with t[a]*a = 1 mod p for a in 1..p-1 (t[0] unused)."""
    tab = _INV_CACHE.get(p)
    if tab is None:
        check_prime(p)
        tab = np.zeros(p, dtype=INT)
        for a in range(1, p):
            tab[a] = pow(a, p - 2, p)
        tab.setflags(write=False)
        _INV_CACHE[p] = tab
    return tab


def modp(M, p):
    """Residue-reduced int64 copy of M."""
    return np.asarray(np.asarray(M) % p, dtype=INT)


def matmul(A, B, p):
    return (np.asarray(A, dtype=INT) @ np.asarray(B, dtype=INT)) % p


def identity(n):
    return np.eye(n, dtype=INT)


def zeros(r, c):
    return np.zeros((r, c), dtype=INT)


def rref(M, p):
    """Reduced row echelon form.

    Returns (R, rank, pivots).  Pivot choice is leftmost column, topmost
    row; pivot entries are 1 with zeros above and below.
    """
    A = modp(M, p)
    rows, cols = A.shape
    inv = inv_table(p)
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        col = A[r:, c]
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        i = r + nz[0]
        if i != r:
            A[[r, i]] = A[[i, r]]
        A[r] = (A[r] * inv[A[r, c]]) % p
        other = np.nonzero(A[:, c])[0]
        other = other[other != r]
        if other.size:
            A[other] = (A[other] - np.outer(A[other, c], A[r])) % p
        pivots.append(c)
        r += 1
    return A, r, tuple(pivots)


def rref_batch(M, p):
    """Batched RREF over a stack of matrices, shape (N, rows, cols).

    Returns (R, ranks).  Equivalent to applying rref to each slice.
    """
    A = modp(M, p)
    if A.ndim != 3:
        raise ValueError("rref_batch expects a 3-d array")
    n, rows, cols = A.shape
    if n == 0:
        return A, np.zeros(0, dtype=INT)
    inv = inv_table(p)
    cur = np.zeros(n, dtype=INT)  # next pivot row per matrix
    rowidx = np.arange(rows)
    for c in range(cols):
        col = A[:, :, c]
        live = (rowidx[None, :] >= cur[:, None]) & (col != 0)
        has = live.any(axis=1)
        mi = np.nonzero(has)[0]
        if mi.size == 0:
            continue
        pr = live[mi].argmax(axis=1)
        rr = cur[mi]
        tmp = A[mi, pr, :].copy()
        A[mi, pr, :] = A[mi, rr, :]
        A[mi, rr, :] = tmp
        scale = inv[A[mi, rr, c]]
        A[mi, rr, :] = (A[mi, rr, :] * scale[:, None]) % p
        colv = A[mi, :, c].copy()
        colv[np.arange(mi.size), rr] = 0
        A[mi] = (A[mi] - colv[:, :, None] * A[mi, rr, :][:, None, :]) % p
        cur[mi] = rr + 1
    return A, cur


def rank(M, p):
    return rref(M, p)[1]


def rank_batch(M, p):
    return rref_batch(M, p)[1]


def invert(M, p):
    """Inverse of a square matrix; raises Singular if rank-deficient."""
    A = modp(M, p)
    n, m = A.shape
    if n != m:
        raise ValueError("invert expects a square matrix")
    aug = np.concatenate([A, identity(n)], axis=1)
    R, rk, _ = rref(aug, p)
    if rk < n or not np.array_equal(R[:, :n], identity(n)):
        raise Singular(f"matrix of rank {rk} < {n} has no inverse")
    return R[:, n:]


def nullspace(M, p):
    """Basis of {x : M x = 0}, returned as rows in RREF-derived order."""
    A = modp(M, p)
    rows, cols = A.shape
    R, rk, pivots = rref(A, p)
    free = [c for c in range(cols) if c not in pivots]
    if not free:
        return zeros(0, cols)
    basis = zeros(len(free), cols)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, c in enumerate(pivots):
            basis[k, c] = (-R[i, f]) % p
    return basis


def solve_affine(A, b, p):
    """Solve A x = b over Z_p.

    Returns (particular, kernel_rows); particular is None when the system
    is inconsistent.  Free variables of the particular solution are 0.
    """
    A = modp(A, p)
    b = modp(b, p).reshape(-1)
    rows, cols = A.shape
    if b.shape[0] != rows:
        raise ValueError("dimension mismatch in solve_affine")
    aug = np.concatenate([A, b[:, None]], axis=1)
    R, rk, pivots = rref(aug, p)
    if cols in pivots:
        return None, nullspace(A, p)
    x = zeros(1, cols)[0]
    for i, c in enumerate(pivots):
        x[c] = R[i, cols]
    return x, nullspace(A, p)


def in_rowspace(B, y, p):
    """True when row vector y lies in the row space of B."""
    B = modp(B, p)
    y = modp(y, p).reshape(1, -1)
    base = rank(B, p)
    return rank(np.concatenate([B, y]), p) == base


def block_transpose(M, block_rows, block_cols, p=None):
    """Transpose M as a grid of block_rows x block_cols blocks.

    Blocks move to their transposed grid position but are not transposed
    internally.  With 1x1 blocks this is the ordinary transpose; with a
    single block it is the identity.
    """
    A = np.asarray(M, dtype=INT)
    rows, cols = A.shape
    if block_rows <= 0 or block_cols <= 0 or rows % block_rows or cols % block_cols:
        raise BadBlockShape(
            f"{rows}x{cols} matrix cannot be cut into {block_rows}x{block_cols} blocks")
    r, s = rows // block_rows, cols // block_cols
    out = zeros(s * block_rows, r * block_cols)
    for i in range(r):
        for j in range(s):
            blk = A[i * block_rows:(i + 1) * block_rows,
                    j * block_cols:(j + 1) * block_cols]
            out[j * block_rows:(j + 1) * block_rows,
                i * block_cols:(i + 1) * block_cols] = blk
    if p is not None:
        out %= p
    return out


def gl_order(p, m):
    """Order of GL_m(Z_p)."""
    n = 1
    for i in range(m):
        n *= p**m - p**i
    return n


def pack_digits(A, p):
    """Base-p packing of a flattened array into a python int (row-major)."""
    key = 0
    for v in np.asarray(A, dtype=INT).reshape(-1):
        key = key * p + int(v)
    return key


def pack_digits_batch(A, p):
    """Base-p keys for a stack of arrays; int64, caller ensures no overflow."""
    flat = np.asarray(A, dtype=INT).reshape(A.shape[0], -1)
    keys = np.zeros(A.shape[0], dtype=INT)
    for j in range(flat.shape[1]):
        keys = keys * p + flat[:, j]
    return keys


def matrix_to_json(M, p):
    A = modp(M, p)
    return {"p": int(p), "rows": int(A.shape[0]), "cols": int(A.shape[1]),
            "entries": [[int(v) for v in row] for row in A]}


def matrix_from_json(obj):
    """Parse the matrix encoding {"p":…, "rows":…, "cols":…, "entries":…}."""
    p = int(obj["p"])
    check_prime(p)
    rows, cols = int(obj["rows"]), int(obj["cols"])
    A = np.asarray(obj["entries"], dtype=INT)
    if A.shape != (rows, cols):
        raise ValueError(f"entries shape {A.shape} does not match {rows}x{cols}")
    if ((A < 0) | (A >= p)).any():
        raise ValueError("entries must be residues in [0, p)")
    return A, p
