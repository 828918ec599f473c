"""Independent oracles used to cross-check the library.

Simplicial cohomology of order complexes: simplices are enumerated directly
from the order relation, integral homology comes from sympy's Smith normal
form, and cohomology with ``Z/m`` coefficients follows from the universal
coefficient theorem.

Determinants by the Leibniz formula, permutation signs by cycle counting, and
restriction matrices of tensor products of complexes by explicit Kronecker
blocks.
"""

from __future__ import annotations

from itertools import combinations
from math import gcd

import numpy as np
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form


def order_complex(leq: np.ndarray) -> list[list[tuple[int, ...]]]:
    """Simplices of the order complex: totally ordered subsets, grouped by dimension."""
    leq = np.asarray(leq, dtype=bool)
    n = leq.shape[0]
    # sort so that every chain is increasing in index
    order = sorted(range(n), key=lambda p: int(leq[:, p].sum()))
    out: list[list[tuple[int, ...]]] = []
    size = 1
    while True:
        level = []
        for sub in combinations(order, size):
            if all(leq[sub[i], sub[i + 1]] and sub[i] != sub[i + 1] for i in range(size - 1)):
                level.append(sub)
        if not level:
            break
        out.append(level)
        size += 1
    return out


def boundary_matrix(simplices, dim: int) -> Matrix:
    """Integral boundary ``C_dim -> C_(dim-1)``."""
    rows = simplices[dim - 1]
    cols = simplices[dim]
    index = {s: i for i, s in enumerate(rows)}
    B = [[0] * len(cols) for _ in rows]
    for j, s in enumerate(cols):
        for i in range(len(s)):
            face = s[:i] + s[i + 1:]
            B[index[face]][j] += (-1) ** i
    return Matrix(B)


def _diagonal(M: Matrix) -> list[int]:
    if M.rows == 0 or M.cols == 0:
        return []
    D = smith_normal_form(M, domain=ZZ)
    return [abs(int(D[i, i])) for i in range(min(D.rows, D.cols)) if D[i, i] != 0]


def integral_homology(leq) -> list[tuple[int, tuple[int, ...]]]:
    """``(free rank, torsion coefficients)`` of ``H_n`` for each dimension ``n``."""
    simp = order_complex(leq)
    top = len(simp)
    diag = [None] + [_diagonal(boundary_matrix(simp, d)) for d in range(1, top)] + [[]]
    out = []
    for d in range(top):
        n_d = len(simp[d])
        rank_out = len(diag[d]) if d > 0 else 0       # rank of boundary C_d -> C_(d-1)
        rank_in = len(diag[d + 1])                    # rank of boundary C_(d+1) -> C_d
        free = n_d - rank_out - rank_in
        torsion = tuple(sorted(a for a in diag[d + 1] if a > 1))
        out.append((free, torsion))
    return out


def _invariants(cyclic_orders) -> tuple[int, ...]:
    """Invariant factors ``d_1 | d_2 | ...`` of a product of cyclic groups."""
    primes: dict[int, list[int]] = {}
    for o in cyclic_orders:
        x = o
        q = 2
        while x > 1:
            if x % q == 0:
                e = 1
                while x % q == 0:
                    x //= q
                    e *= q
                primes.setdefault(q, []).append(e)
            q += 1
    for v in primes.values():
        v.sort(reverse=True)
    length = max((len(v) for v in primes.values()), default=0)
    inv = []
    for i in range(length):
        f = 1
        for v in primes.values():
            if i < len(v):
                f *= v[i]
        inv.append(f)
    return tuple(sorted(inv))


def simplicial_cohomology(leq, m: int) -> list[tuple[int, ...]]:
    """Invariant factors of ``H^n(order complex; Z/m)`` for each dimension ``n``."""
    H = integral_homology(leq)
    out = []
    for n in range(len(H)):
        free, tors = H[n]
        parts = [m] * free + [gcd(a, m) for a in tors]
        if n > 0:
            parts += [gcd(a, m) for a in H[n - 1][1]]
        out.append(_invariants([p for p in parts if p > 1]))
    return out


# -- determinants and tensor products, by direct formulas -----------------------------------------

def permutation_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def leibniz_det(R, A) -> np.ndarray:
    """Sum over permutations; only for small matrices."""
    from itertools import permutations
    A = np.asarray(A, dtype=np.int64)
    n = A.shape[0]
    total = R.scalar(0)
    for perm in permutations(range(n)):
        term = R.one_vec.copy()
        for i in range(n):
            term = R.mul(term, A[i, perm[i]])
        total = R.add(total, term if permutation_sign(perm) > 0 else R.neg(term))
    return total


def kron(R, A, B) -> np.ndarray:
    """Kronecker product of ring matrices, row index ``(i, k)`` and column index ``(j, l)``."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    m, n = A.shape[:2]
    p, q = B.shape[:2]
    out = np.einsum("ija,klb,abc->ikjlc", A, B, R.table).reshape(m * p, n * q, R.k)
    return R.reduce(out)


def tensor_restrictions(S, E, F):
    """Restriction matrices of ``E (x) F`` (no differentials needed): degree ``k`` is the
    block sum of ``E^n (x) F^(k-n)`` in increasing ``n``.  Returns ``(lo, ranks, rho)``."""
    from .ring import rzeros
    lo = E.lo + F.lo
    hi = E.hi + F.hi
    ranks = tuple(tuple(sum(E.rank(p, n) * F.rank(p, k - n) for n in E.degrees()) for k in range(lo, hi + 1))
                  for p in range(S.n))
    rho = {}
    for p, q in S.poset.pairs:
        R = S.ring(q)
        mats = []
        for k in range(lo, hi + 1):
            blocks = [kron(R, E.rhomat(p, q, n), F.rhomat(p, q, k - n)) for n in E.degrees()
                      if E.rank(p, n) and F.rank(p, k - n)]
            size = sum(b.shape[0] for b in blocks)
            M = rzeros(R, size, size)
            off = 0
            for b in blocks:
                M[off:off + b.shape[0], off:off + b.shape[1]] = b
                off += b.shape[0]
            mats.append(M)
        rho[(p, q)] = mats
    return lo, ranks, rho
