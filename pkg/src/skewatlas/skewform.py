"""Anti-symmetric matrices over Z_p: Pfaffians, radicals, normal forms.

A skew form is a plain numpy matrix X with X^T = -X mod p and zero
diagonal (automatic for odd p).  The congruence action is X -> P X P^T.
"""

import numpy as np

from . import fieldcore as fc
from .fieldcore import INT


class WrongDimension(Exception):
    """Operation defined only for a specific matrix order."""


class NotAntiSymmetric(Exception):
    """Input fails X^T = -X; carries the first offending entry."""

    def __init__(self, i, j, got, want):
        self.entry = (i, j)
        super().__init__(
            f"entry ({i},{j}) = {got} but anti-symmetry requires {want}")


def validate_skew(X, p):
    A = fc.modp(X, p)
    m, n = A.shape
    if m != n:
        raise NotAntiSymmetric(0, 0, f"{m}x{n}", "square matrix")
    T = (-A.T) % p
    if not np.array_equal(A, T):
        bad = np.argwhere(A != T)
        i, j = (int(v) for v in bad[0])
        raise NotAntiSymmetric(i, j, int(A[i, j]), int(T[i, j]))
    return A


def skew_from_upper(m, entries, p):
    """Build a skew form from {(i, j): value} with i < j (0-indexed)."""
    X = fc.zeros(m, m)
    for (i, j), v in entries.items():
        if not 0 <= i < j < m:
            raise ValueError(f"({i},{j}) is not strictly upper in order {m}")
        X[i, j] = v % p
        X[j, i] = (-v) % p
    return X


def random_skew(p, m, rng):
    X = fc.zeros(m, m)
    for i in range(m):
        for j in range(i + 1, m):
            v = int(rng.integers(0, p))
            X[i, j] = v
            X[j, i] = (-v) % p
    return X


def elem_P(m, i, j):
    """Row/column swap generator."""
    E = fc.identity(m)
    E[[i, j]] = E[[j, i]]
    return E


def elem_D(m, i, lam, p):
    """Diagonal scaling generator, lam nonzero."""
    if lam % p == 0:
        raise ValueError("scale factor must be nonzero")
    E = fc.identity(m)
    E[i, i] = lam % p
    return E


def elem_T(m, i, j, lam):
    """Transvection: adds lam * row j to row i."""
    if i == j:
        raise ValueError("transvection needs i != j")
    E = fc.identity(m)
    E[i, j] = lam
    return E


def congruate(P, X, p):
    """P X P^T mod p."""
    return (np.asarray(P, dtype=INT) @ np.asarray(X, dtype=INT) @ np.asarray(P, dtype=INT).T) % p


def pfaffian4(X, p):
    """Pfaffian of a 4x4 skew form: x12 x34 - x13 x24 + x14 x23."""
    A = fc.modp(X, p)
    if A.shape != (4, 4):
        raise WrongDimension(f"pfaffian4 needs a 4x4 matrix, got {A.shape}")
    return int((A[0, 1] * A[2, 3] - A[0, 2] * A[1, 3] + A[0, 3] * A[1, 2]) % p)


def principal_pfaffians(X, p):
    """The five order-4 principal Pfaffians of a 5x5 skew form.

    Entry i is the Pfaffian of the submatrix with row/column i deleted.
    rank(X) = 4 iff some entry is nonzero; otherwise rank(X) <= 2.
    """
    A = fc.modp(X, p)
    if A.shape != (5, 5):
        raise WrongDimension(f"principal_pfaffians needs 5x5, got {A.shape}")
    out = []
    for i in range(5):
        keep = [k for k in range(5) if k != i]
        out.append(pfaffian4(A[np.ix_(keep, keep)], p))
    return out


def radical(X, p):
    """RREF basis (rows) of {v : v X = 0}."""
    A = validate_skew(X, p)
    # v X = 0  <=>  X^T v^T = 0; for skew X the left and right kernels agree.
    return fc.nullspace(A.T, p)


def skew_rank(X, p):
    return fc.rank(X, p)


def skew_normalize(X, p):
    """Greedy symplectic normalization.

    Returns (P, k) with P X P^T = diag(J, ..., J, 0, ..., 0), k blocks
    J = [[0,1],[-1,0]]; 2k = rank(X).  Deterministic: the pivot is the
    first nonzero entry in row-major upper-triangle order.
    """
    A = validate_skew(X, p).copy()
    m = A.shape[0]
    P = fc.identity(m)
    inv = fc.inv_table(p)

    def apply(E):
        nonlocal A, P
        A = congruate(E, A, p)
        P = (E @ P) % p

    k = 0
    t = 0  # next free position pair (t, t+1)
    while True:
        pivot = None
        for i in range(t, m):
            for j in range(i + 1, m):
                if A[i, j] != 0:
                    pivot = (i, j)
                    break
            if pivot:
                break
        if pivot is None:
            break
        i, j = pivot
        if i != t:
            apply(elem_P(m, t, i))
            if j == t:
                j = i
        if j != t + 1:
            apply(elem_P(m, t + 1, j))
        if A[t, t + 1] != 1:
            apply(elem_D(m, t + 1, int(inv[A[t, t + 1]]), p))
        for w in range(t + 2, m):
            if A[t, w] != 0:
                apply(elem_T(m, w, t + 1, int((-A[t, w]) % p)))
            if A[t + 1, w] != 0:
                apply(elem_T(m, w, t, int(A[t + 1, w]) % p))
        k += 1
        t += 2
    return P, k


def normal_form(m, k, p, scale=1):
    """diag(J, ..., J, 0) with k two-by-two blocks scaled by `scale`."""
    X = fc.zeros(m, m)
    for t in range(k):
        X[2 * t, 2 * t + 1] = scale % p
        X[2 * t + 1, 2 * t] = (-scale) % p
    return X


def perp(U, forms, p):
    """RREF basis of the joint orthogonal complement.

    U is a vector or a matrix of row vectors; forms is an iterable of skew
    matrices sharing the same order m.  Returns the RREF row basis of
    {v : u X v^T = 0 for every row u of U and X in forms}.
    """
    U = fc.modp(U, p)
    if U.ndim == 1:
        U = U[None, :]
    m = U.shape[1]
    rows = [fc.zeros(0, m)]
    for X in forms:
        A = fc.modp(X, p)
        if A.shape != (m, m):
            raise WrongDimension("forms and vectors disagree on m")
        rows.append((U @ A) % p)
    stacked = np.concatenate(rows, axis=0)
    return fc.nullspace(stacked, p)


def skewform_to_json(X, p):
    return fc.matrix_to_json(validate_skew(X, p), p)


def skewform_from_json(obj):
    A, p = fc.matrix_from_json(obj)
    return validate_skew(A, p), p
