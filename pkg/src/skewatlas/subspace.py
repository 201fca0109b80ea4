"""Subspaces of the anti-symmetric matrices AS_m(Z_p) up to congruence.

A subspace is held as a d x D matrix in reduced row echelon form over the
strictly-upper coordinatization of AS_m (row-major order x_12, x_13, ...,
x_{m-1,m}; D = m(m-1)/2).  RREF is a canonical set representative, so two
subspaces are equal iff their basis arrays are entry-identical.

Congruence P V P^T is decided exactly by a backtracking search over the
rows of P, pruned by congruence-invariant fingerprints and by linear
feasibility of the partially built image.  A breadth-first orbit oracle
over the full Grassmannian provides ground truth at small size.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from . import fieldcore as fc
from . import skewform as sf
from .fieldcore import INT
from . import config


class BudgetExceeded(Exception):
    """Enumeration larger than the configured budget."""


class LimitExceeded(Exception):
    """Stabilizer has more elements than the requested limit."""


class InternalSearchBudget(Exception):
    """Backtracking node budget exhausted before a verdict was reached."""


@lru_cache(maxsize=None)
def upper_coords(m):
    """Strictly-upper coordinate order of AS_m (format-level constant)."""
    return tuple((i, j) for i in range(m) for j in range(i + 1, m))


def ambient_dim(m):
    return m * (m - 1) // 2


def vec_form(X, m):
    coords = upper_coords(m)
    X = np.asarray(X, dtype=INT)
    return np.array([X[i, j] for i, j in coords], dtype=INT)


def unvec_form(v, m, p):
    X = fc.zeros(m, m)
    for idx, (i, j) in enumerate(upper_coords(m)):
        X[i, j] = v[idx] % p
        X[j, i] = (-v[idx]) % p
    return X


def unvec_batch(V, m, p):
    """(N, D) coordinate vectors -> (N, m, m) skew matrices."""
    V = np.asarray(V, dtype=INT) % p
    N = V.shape[0]
    X = np.zeros((N, m, m), dtype=INT)
    for idx, (i, j) in enumerate(upper_coords(m)):
        X[:, i, j] = V[:, idx]
        X[:, j, i] = (-V[:, idx]) % p
    return X


class SkewSubspace:
    """A d-dimensional subspace of AS_m(Z_p) with canonical RREF basis."""

    __slots__ = ("p", "m", "d", "basis", "_fingerprint", "_key")

    def __init__(self, p, m, basis):
        fc.check_prime(p)
        basis = fc.modp(basis, p).reshape(-1, ambient_dim(m))
        R, rk, _ = fc.rref(basis, p)
        self.p = p
        self.m = m
        self.d = int(rk)
        self.basis = R[:rk]
        self.basis.setflags(write=False)
        self._fingerprint = None
        self._key = None

    def forms(self):
        """Basis as a (d, m, m) stack of skew matrices."""
        return unvec_batch(self.basis, self.m, self.p)

    def key(self):
        """Base-p packing of the RREF basis; total order on subspaces."""
        if self._key is None:
            self._key = fc.pack_digits(self.basis, self.p)
        return self._key

    def fingerprint(self):
        if self._fingerprint is None:
            self._fingerprint = invariant_fingerprint(self)
        return self._fingerprint

    def __eq__(self, other):
        return (isinstance(other, SkewSubspace)
                and (self.p, self.m, self.d) == (other.p, other.m, other.d)
                and np.array_equal(self.basis, other.basis))

    def __hash__(self):
        return hash((self.p, self.m, self.d, self.key()))

    def __repr__(self):
        return f"SkewSubspace(p={self.p}, m={self.m}, d={self.d}, key={self.key()})"

    def to_json(self):
        return {"p": self.p, "m": self.m, "d": self.d,
                "basis_forms": [sf.skewform_to_json(X, self.p) for X in self.forms()]}

    @staticmethod
    def from_json(obj):
        p, m = int(obj["p"]), int(obj["m"])
        forms = [sf.skewform_from_json(f)[0] for f in obj["basis_forms"]]
        V = subspace_from_forms(forms, p, m)
        if "d" in obj and int(obj["d"]) != V.d:
            raise ValueError(f"declared d={obj['d']} but span has dimension {V.d}")
        return V


def subspace_from_forms(forms, p, m):
    """Canonical subspace spanned by the given skew matrices (d = 0 allowed)."""
    rows = [vec_form(sf.validate_skew(X, p), m) for X in forms]
    if rows:
        basis = np.stack(rows)
    else:
        basis = fc.zeros(0, ambient_dim(m))
    return SkewSubspace(p, m, basis)


def canonical_basis(forms, p, m):
    """RREF basis of the span of a set of skew forms; idempotent."""
    return subspace_from_forms(forms, p, m)


def subspace_count(p, big_d, d):
    """Gaussian binomial [big_d choose d]_p as an exact integer."""
    if d < 0 or d > big_d:
        return 0
    num = den = 1
    for i in range(d):
        num *= p ** (big_d - i) - 1
        den *= p ** (i + 1) - 1
    assert num % den == 0
    return num // den


def _free_positions(big_d, pivots):
    pivset = set(pivots)
    free = []
    for i, pc in enumerate(pivots):
        for j in range(pc + 1, big_d):
            if j not in pivset:
                free.append((i, j))
    return free


def enumerate_rref(p, big_d, d):
    """All d x big_d RREF matrices of rank d, one array per pivot pattern."""
    for pivots in combinations(range(big_d), d):
        free = _free_positions(big_d, pivots)
        nfree = len(free)
        count = p ** nfree
        block = np.zeros((count, d, big_d), dtype=INT)
        for i, pc in enumerate(pivots):
            block[:, i, pc] = 1
        if nfree:
            vals = np.arange(count)
            for k, (i, j) in enumerate(free):
                block[:, i, j] = (vals // (p ** (nfree - 1 - k))) % p
        yield block


def enumerate_subspaces(p, m, d, budget=None):
    """Every d-dimensional subspace of AS_m exactly once (echelon order)."""
    big_d = ambient_dim(m)
    if budget is None:
        budget = config.from_env().enum_budget
    total = subspace_count(p, big_d, d)
    if total > budget:
        raise BudgetExceeded(f"{total} subspaces exceed budget {budget}")
    for block in enumerate_rref(p, big_d, d):
        for row in block:
            yield SkewSubspace(p, m, row)


def enumerate_bases_array(p, m, d, budget=None):
    """All RREF bases as one (N, d, D) array, sorted by packed key."""
    big_d = ambient_dim(m)
    if budget is None:
        budget = config.from_env().enum_budget
    total = subspace_count(p, big_d, d)
    if total > budget:
        raise BudgetExceeded(f"{total} subspaces exceed budget {budget}")
    blocks = list(enumerate_rref(p, big_d, d))
    S = np.concatenate(blocks, axis=0) if blocks else np.zeros((0, d, big_d), dtype=INT)
    assert S.shape[0] == total
    keys = fc.pack_digits_batch(S, p)
    order = np.argsort(keys, kind="stable")
    return S[order], keys[order]


def random_subspace(p, m, d, seed):
    """Uniform over Gr(d, AS_m), deterministic per seed."""
    big_d = ambient_dim(m)
    if d > big_d:
        raise ValueError(f"d={d} exceeds dim AS_{m} = {big_d}")
    rng = np.random.default_rng(seed)
    if d == 0:
        return SkewSubspace(p, m, fc.zeros(0, big_d))
    while True:
        A = rng.integers(0, p, size=(d, big_d))
        if fc.rank(A, p) == d:
            return SkewSubspace(p, m, A)


# ---------------------------------------------------------------------------
# fingerprints


@lru_cache(maxsize=None)
def projective_points(p, n):
    """Representatives of P(Z_p^n): first nonzero coordinate equals 1."""
    pts = []
    for lead in range(n):
        tail = n - lead - 1
        for v in range(p ** tail):
            vec = [0] * lead + [1]
            for k in range(tail):
                vec.append((v // (p ** (tail - 1 - k))) % p)
            pts.append(vec)
    return np.array(pts, dtype=INT) if pts else np.zeros((0, n), dtype=INT)


@lru_cache(maxsize=None)
def plane_bases(p, m):
    """All 2-dimensional subspaces of Z_p^m as (Q, 2, m) RREF bases."""
    blocks = list(enumerate_rref(p, m, 2))
    return np.concatenate(blocks, axis=0)


def _multiset(values):
    vals, counts = np.unique(np.asarray(values, dtype=INT), return_counts=True)
    return tuple((int(v), int(c)) for v, c in zip(vals, counts))


@dataclass(frozen=True)
class Fingerprint:
    """Congruence-invariant summary of a subspace, cheap to order and hash."""
    radical_dim: int
    rank_multiset: tuple
    line_perp_profile: tuple
    plane_perp_profile: tuple | None
    pf_zero_count: int | None

    def sort_key(self):
        return (self.radical_dim, self.rank_multiset, self.line_perp_profile,
                self.plane_perp_profile or (), -1 if self.pf_zero_count is None
                else self.pf_zero_count)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def to_json(self):
        return {
            "radical_dim": self.radical_dim,
            "rank_multiset": [list(t) for t in self.rank_multiset],
            "line_perp_profile": [list(t) for t in self.line_perp_profile],
            "plane_perp_profile": None if self.plane_perp_profile is None
            else [list(t) for t in self.plane_perp_profile],
            "pf_zero_count": self.pf_zero_count,
        }


def _chunked_ranks(stack, p, chunk=400000):
    out = np.empty(stack.shape[0], dtype=INT)
    for lo in range(0, stack.shape[0], chunk):
        out[lo:lo + chunk] = fc.rank_batch(stack[lo:lo + chunk], p)
    return out


def fingerprints_for_bases(p, m, bases, with_planes=True):
    """Fingerprints of many subspaces at once; bases has shape (N, d, D)."""
    bases = np.asarray(bases, dtype=INT)
    N, d, big_d = bases.shape
    forms = np.zeros((N, d, m, m), dtype=INT)
    for idx, (i, j) in enumerate(upper_coords(m)):
        forms[:, :, i, j] = bases[:, :, idx]
        forms[:, :, j, i] = (-bases[:, :, idx]) % p

    # radical: common left kernel of all basis forms
    stacked = forms.reshape(N, d * m, m)
    rad_dims = m - _chunked_ranks(stacked, p)

    # ranks of the projective elements of the subspace
    if d > 0:
        coeffs = projective_points(p, d)           # (E, d)
        elems = (coeffs[None, :, :] @ bases) % p    # (N, E, D)
        E = coeffs.shape[0]
        emats = unvec_batch(elems.reshape(N * E, big_d), m, p)
        eranks = _chunked_ranks(emats, p, chunk=200000).reshape(N, E)
    else:
        E = 0
        eranks = np.zeros((N, 0), dtype=INT)
        emats = None

    # line profile: dim u^{perp V} over projective points u of Z_p^m
    pts = projective_points(p, m)                   # (L, m)
    rows = np.einsum("lm,ndmk->nldk", pts, forms) % p
    L = pts.shape[0]
    line_dims = m - _chunked_ranks(rows.reshape(N * L, d, m), p).reshape(N, L)

    plane_dims = None
    if with_planes and m <= 5:
        planes = plane_bases(p, m)                  # (Q, 2, m)
        Q = planes.shape[0]
        rows2 = np.einsum("qam,ndmk->nqadk", planes, forms) % p
        plane_dims = m - _chunked_ranks(
            rows2.reshape(N * Q, 2 * d, m), p).reshape(N, Q)

    pf_zero = None
    if m == 4 and d > 0:
        M = emats.reshape(N, E, m, m)
        pf = (M[:, :, 0, 1] * M[:, :, 2, 3] - M[:, :, 0, 2] * M[:, :, 1, 3]
              + M[:, :, 0, 3] * M[:, :, 1, 2]) % p
        pf_zero = (pf == 0).sum(axis=1)

    out = []
    for i in range(N):
        out.append(Fingerprint(
            radical_dim=int(rad_dims[i]),
            rank_multiset=_multiset(eranks[i]),
            line_perp_profile=_multiset(line_dims[i]),
            plane_perp_profile=None if plane_dims is None else _multiset(plane_dims[i]),
            pf_zero_count=None if pf_zero is None else int(pf_zero[i]),
        ))
    return out


def invariant_fingerprint(V):
    return fingerprints_for_bases(V.p, V.m, V.basis[None, :, :], with_planes=True)[0]


def rank_deficient_count(V):
    """#{X in V : rank(X) < m - (m mod 2)} counting the zero element."""
    fp = V.fingerprint()
    top = V.m if V.m % 2 == 0 else V.m - 1
    low = sum(c for r, c in fp.rank_multiset if r < top)
    return 1 + (V.p - 1) * low


# ---------------------------------------------------------------------------
# congruence search


def _nonzero_vectors(p, m):
    count = p ** m - 1
    vals = np.arange(1, count + 1)
    vecs = np.zeros((count, m), dtype=INT)
    for k in range(m):
        vecs[:, k] = (vals // (p ** (m - 1 - k))) % p
    return vecs


@lru_cache(maxsize=None)
def _nonzero_vectors_cached(p, m):
    v = _nonzero_vectors(p, m)
    v.setflags(write=False)
    return v


def _line_dims(forms, vecs, p):
    """dim v^{perp span(forms)} for every row v of vecs."""
    d = forms.shape[0]
    m = forms.shape[1]
    rows = np.einsum("lm,dmk->ldk", vecs, forms) % p
    return m - fc.rank_batch(rows.reshape(-1, d, m), p).reshape(vecs.shape[0])


def _colex_permutation(m):
    """Map colex pair order (0,1),(0,2),(1,2),(0,3).. to row-major indices."""
    pos = {pair: idx for idx, pair in enumerate(upper_coords(m))}
    perm = []
    for t in range(1, m):
        for s in range(t):
            perm.append(pos[(s, t)])
    return np.array(perm, dtype=INT)


class _Search:
    """Backtracking construction of P with P V P^T = W, row by row.

    Prunes by (a) linear independence of the chosen rows, (b) membership
    of every partially known image coordinate vector in the matching
    coordinate projection of W, (c) per-row perp-dimension type matching.
    """

    def __init__(self, V, W, node_budget):
        assert (V.p, V.m, V.d) == (W.p, W.m, W.d)
        self.p, self.m, self.d = V.p, V.m, V.d
        self.V, self.W = V, W
        self.budget = node_budget
        self.nodes = 0
        p, m, d = self.p, self.m, self.d

        self.formsV = V.forms()
        self.cands = _nonzero_vectors_cached(p, m)
        formsW = W.forms()
        basis_colex = W.basis[:, _colex_permutation(m)]

        # per-level kernels of the coordinate projections of W: a partial
        # image row y lies in the projection iff y @ K == 0
        self.kernels = []
        for k in range(1, m):
            L = k * (k + 1) // 2
            self.kernels.append(fc.nullspace(basis_colex[:, :L], p).T)  # (L, q)

        # perp-type of each candidate row wrt V, and the targets wrt W
        self.cand_dims = _line_dims(self.formsV, self.cands, p)
        eye = fc.identity(m)
        self.target_dims = _line_dims(formsW, eye, p)

        # joint perp targets: dim span(e_0..e_k)^{perp W} for each k
        self.joint_targets = []
        for k in range(m):
            stack = formsW[:, :k + 1, :].reshape(d * (k + 1), m) if d else fc.zeros(0, m)
            self.joint_targets.append(m - fc.rank(stack, p))

        # rows v X_i for every candidate, reused at every node
        self.cand_rows = np.einsum("cm,dmk->cdk", self.cands, self.formsV) % p

    def _independent_mask(self, red_rows, cand_idx):
        """Candidates (by index) independent from the chosen row space."""
        vec = self.cands[cand_idx].copy()
        for piv_row, piv_col in red_rows:
            factor = vec[:, piv_col].copy()
            nz = factor != 0
            if nz.any():
                vec[nz] = (vec[nz] - factor[nz, None] * piv_row[None, :]) % self.p
        return (vec != 0).any(axis=1)

    def run(self, count_all=False, limit=None):
        """Find one witness (count_all=False) or count every solution."""
        p, m, d = self.p, self.m, self.d
        self.nodes = 0
        witness = None
        solutions = 0

        rows = np.zeros((m, m), dtype=INT)
        ypart = np.zeros((d, ambient_dim(m)), dtype=INT)  # colex order
        red = []  # list of (reduced row, pivot col) for independence checks

        pools = [np.nonzero(self.cand_dims == self.target_dims[k])[0]
                 for k in range(m)]

        def extend(k, lo):
            """Candidate indices for row k given rows[0:k]; lo = pair count."""
            idx = pools[k]
            if idx.size == 0:
                return idx, None
            mask = self._independent_mask(red, idx)
            idx = idx[mask]
            if idx.size == 0 or k == 0:
                return idx, np.zeros((d, k, idx.size), dtype=INT)
            # new image coordinates (s, k) for s < k, all candidates at once
            R = np.concatenate([rows[:k] @ self.formsV[i] for i in range(d)])
            newy = (R @ self.cands[idx].T % p).reshape(d, k, idx.size)
            K = self.kernels[k - 1]           # (lo + k, q)
            if K.shape[1]:
                base = ypart[:, :lo] @ K[:lo] % p        # (d, q)
                extra = np.einsum("dkc,kq->dqc", newy, K[lo:]) % p
                ok = ((extra + base[:, :, None]) % p == 0).all(axis=(0, 1))
                idx = idx[ok]
                newy = newy[:, :, ok]
            if idx.size and k < m - 1:
                # joint perp type of the k+1 chosen rows must match W's
                base_rows, r0, piv = fc.rref(R, p)
                blocks = self.cand_rows[idx].copy()      # (c, d, m)
                for t, c0 in enumerate(piv):
                    blocks = (blocks - blocks[:, :, c0:c0 + 1]
                              * base_rows[t][None, None, :]) % p
                extra_rank = fc.rank_batch(blocks, p)
                keep = (m - (r0 + extra_rank)) == self.joint_targets[k]
                idx = idx[keep]
                newy = newy[:, :, keep]
            return idx, newy

        def descend(k):
            nonlocal witness, solutions
            lo = k * (k - 1) // 2
            idx, newy = extend(k, lo)
            self.nodes += int(idx.size)
            if self.nodes > self.budget:
                raise InternalSearchBudget(
                    f"search exceeded {self.budget} nodes")
            if k == m - 1:
                if idx.size == 0:
                    return False
                if count_all:
                    solutions += int(idx.size)
                    if limit is not None and solutions > limit:
                        raise LimitExceeded(
                            f"stabilizer exceeds limit {limit}")
                    return False
                rows[k] = self.cands[idx[0]]
                witness = rows.copy()
                return True
            for t in range(idx.size):
                ci = idx[t]
                rows[k] = self.cands[ci]
                if k > 0:
                    ypart[:, lo:lo + k] = newy[:, :, t]
                # update independence reducer
                vec = rows[k].copy()
                for piv_row, piv_col in red:
                    if vec[piv_col]:
                        vec = (vec - vec[piv_col] * piv_row) % p
                pivot = int(np.nonzero(vec)[0][0])
                vec = vec * fc.inv_table(p)[vec[pivot]] % p
                red.append((vec, pivot))
                done = descend(k + 1)
                red.pop()
                if done:
                    return True
            return False

        found = descend(0)
        if count_all:
            return solutions
        return witness if found else None


def congruent_search(V, W, node_budget=None):
    """Exact congruence decision.

    Returns an invertible P with P V P^T = W (verified), or None when no
    witness exists.  The search is exhaustive; its prunes are sound.
    """
    if (V.p, V.m) != (W.p, W.m):
        raise ValueError("subspaces live in different ambient spaces")
    if V.d != W.d:
        return None
    if V == W and V.d == 0:
        return fc.identity(V.m)
    if V.fingerprint() != W.fingerprint():
        return None
    if node_budget is None:
        node_budget = config.from_env().search_nodes
    P = _Search(V, W, node_budget).run()
    if P is None:
        return None
    image = subspace_from_forms([sf.congruate(P, X, V.p) for X in V.forms()], V.p, V.m)
    assert image == W, "search returned an invalid witness"
    return P


def stabilizer_enumerate(V, limit=None):
    """Order of {P in GL_m : P V P^T = V} by exhaustive backtracking."""
    if limit is None:
        limit = config.from_env().stabilizer_limit
    if V.d == 0:
        order = fc.gl_order(V.p, V.m)
        if order > limit:
            raise LimitExceeded(f"stabilizer exceeds limit {limit}")
        return order
    budget = config.from_env().search_nodes
    return _Search(V, V, budget).run(count_all=True, limit=limit)


# ---------------------------------------------------------------------------
# exhaustive orbit oracle


def _primitive_root(p):
    for g in range(2, p):
        seen, x = set(), 1
        for _ in range(p - 1):
            x = x * g % p
            seen.add(x)
        if len(seen) == p - 1:
            return g
    raise ValueError(f"no primitive root mod {p}")


@lru_cache(maxsize=None)
def congruence_generators(p, m):
    """Generators of GL_m with their induced action on vectorized AS_m.

    Set: transvections T_ij(1) for all i != j, one diagonal D_1(g) with g a
    primitive root, and the swap P_12.  Returns tuples (P, M) where M acts
    on coordinates by v -> v M^T.
    """
    gens = []
    for i in range(m):
        for j in range(m):
            if i != j:
                gens.append(sf.elem_T(m, i, j, 1))
    gens.append(sf.elem_D(m, 0, _primitive_root(p), p))
    if m >= 2:
        gens.append(sf.elem_P(m, 0, 1))
    big_d = ambient_dim(m)
    out = []
    for P in gens:
        M = fc.zeros(big_d, big_d)
        for idx in range(big_d):
            e = np.zeros(big_d, dtype=INT)
            e[idx] = 1
            M[:, idx] = vec_form(sf.congruate(P, unvec_form(e, m, p), p), m)
        out.append((P, M))
    return tuple(out)


def orbit_partition_exhaustive(p, m, d, budget=None):
    """Partition of Gr(d, AS_m) into congruence orbits by BFS closure.

    Returns [(representative, orbit size)] with representatives the
    lexicographically least RREF key per orbit, in ascending key order.
    Orbit sizes sum to the Gaussian binomial count.
    """
    S, keys = enumerate_bases_array(p, m, d, budget)
    n = S.shape[0]
    gens = congruence_generators(p, m)
    mats = [M for (_, M) in gens]
    visited = np.zeros(n, dtype=bool)
    orbits = []
    for start in range(n):
        if visited[start]:
            continue
        visited[start] = True
        frontier = np.array([start], dtype=INT)
        size = 1
        while frontier.size:
            bases = S[frontier]
            fresh = []
            for M in mats:
                img = bases @ M.T % p
                R, _ = fc.rref_batch(img, p)
                ik = fc.pack_digits_batch(R, p)
                pos = np.searchsorted(keys, ik)
                assert (keys[pos] == ik).all()
                pos = np.unique(pos)
                pos = pos[~visited[pos]]
                if pos.size:
                    visited[pos] = True
                    fresh.append(pos)
            if fresh:
                frontier = np.unique(np.concatenate(fresh))
                size += int(frontier.size)
            else:
                frontier = np.zeros(0, dtype=INT)
        orbits.append((SkewSubspace(p, m, S[start]), size))
    assert sum(s for _, s in orbits) == subspace_count(p, ambient_dim(m), d)
    return orbits


def pad_subspace(V):
    """Embed V into AS_{m+1} by a zero border; preserves/reflects congruence."""
    m2 = V.m + 1
    padded = []
    for X in V.forms():
        Y = fc.zeros(m2, m2)
        Y[:V.m, :V.m] = X
        padded.append(Y)
    return subspace_from_forms(padded, V.p, m2)
