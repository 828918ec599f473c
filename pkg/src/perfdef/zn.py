"""Exact linear algebra over Z/N and finite abelian groups in diagonal form.

Every finite abelian group in this package is stored as ``Z/a_1 + ... + Z/a_g``
(an :class:`AbGroup`), elements are integer coordinate vectors, and a
homomorphism is an integer matrix acting on coordinates.  All algorithms lift
to integer matrices modulo the exponent ``N`` and go through one Smith normal
form routine, so results are exact and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Iterator

import numpy as np

#: default bound on the number of elements any enumeration may visit
MAX_ELEMENTS = 2**20


class TooLarge(ValueError):
    """An enumeration would exceed the configured element bound."""


def as_cols(X, rows: int) -> np.ndarray:
    """View ``X`` as a matrix with ``rows`` rows (columns are vectors)."""
    X = np.asarray(X, dtype=np.int64)
    if X.ndim == 2 and X.shape[0] == rows:
        return X
    if rows == 0:
        return np.zeros((0, X.shape[-1] if X.ndim == 2 else 0), dtype=np.int64)
    return X.reshape(rows, -1)


def lcm(*values: int) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``s*a + t*b == g == gcd(a, b)``."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return a, s0, t0


def unit_normalizer(a: int, N: int) -> int:
    """A unit ``u`` mod ``N`` with ``u*a == gcd(a, N)`` mod ``N``."""
    g = math.gcd(a, N)
    if g == N:
        return 1
    m = N // g
    u = pow(a // g, -1, m) if m > 1 else 0
    while math.gcd(u, N) != 1:
        u += m
    return u % N


@dataclass
class SNF:
    """Smith normal form ``U @ A @ V == D (mod N)``.

    ``diag[i]`` is the i-th diagonal entry normalized to a divisor of ``N``;
    a zero entry is stored as ``N``.  ``diag[0] | diag[1] | ...`` holds.
    """

    N: int
    shape: tuple[int, int]
    U: np.ndarray
    V: np.ndarray
    Uinv: np.ndarray
    diag: list[int]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diag if d != self.N)

    def solve(self, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Solve ``A @ W == B`` column by column.

        Returns ``(W, ok)``; ``ok[j]`` is False when column ``j`` has no
        solution (the matching column of ``W`` is then meaningless).
        """
        N = self.N
        m, n = self.shape
        B = np.asarray(B, dtype=np.int64).reshape(m, -1) % N
        Y = (self.U @ B) % N
        ncols = Y.shape[1]
        ok = np.ones(ncols, dtype=bool)
        Vv = np.zeros((n, ncols), dtype=np.int64)
        r = min(m, n)
        for i in range(r):
            d = self.diag[i]
            ok &= Y[i] % d == 0
            if d != N:
                Vv[i] = (Y[i] // d) % (N // d)
        if m > r:
            ok &= ~(Y[r:] != 0).any(axis=0)
        W = (self.V @ Vv) % N
        return W, ok

    def kernel(self) -> np.ndarray:
        """Generators (columns) of ``{w : A @ w == 0 mod N}``."""
        N = self.N
        m, n = self.shape
        cols = []
        for i in range(n):
            d = self.diag[i] if i < min(m, n) else N
            step = N // d
            if step % N:
                cols.append((self.V[:, i] * step) % N)
        if not cols:
            return np.zeros((n, 0), dtype=np.int64)
        return np.stack(cols, axis=1)


def smith_like_normal_form(A, N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(U, D, V)`` with ``U @ A @ V == D (mod N)``, ``D`` diagonal with divisibility chain."""
    s = snf(A, N)
    m, n = s.shape
    D = np.zeros((m, n), dtype=np.int64)
    for i, d in enumerate(s.diag[:min(m, n)]):
        D[i, i] = d % N
    return s.U % N, D, s.V % N


def _swap_rows(M: np.ndarray, i: int, j: int) -> None:
    if i != j:
        M[[i, j]] = M[[j, i]]


def _swap_cols(M: np.ndarray, i: int, j: int) -> None:
    if i != j:
        M[:, [i, j]] = M[:, [j, i]]


def snf(A, N: int) -> SNF:
    """Smith normal form of an integer matrix reduced mod ``N``."""
    A = np.array(A, dtype=np.int64) % N
    if A.ndim != 2:
        raise ValueError("snf expects a matrix")
    m, n = A.shape
    U = np.eye(m, dtype=np.int64)
    Uinv = np.eye(m, dtype=np.int64)
    V = np.eye(n, dtype=np.int64)

    def scale_row(t: int, u: int) -> None:
        A[t] = A[t] * u % N
        U[t] = U[t] * u % N
        Uinv[:, t] = Uinv[:, t] * pow(u, -1, N) % N if N > 1 else 0

    def combine_rows(t: int, r: int) -> None:
        # unimodular 2x2 row operation putting gcd(A[t,t], A[r,t]) on the pivot
        a, b = int(A[t, t]), int(A[r, t])
        g, s, x = egcd(a, b)
        p, q = -b // g, a // g
        for M in (A, U):
            rt, rr = M[t].copy(), M[r].copy()
            M[t] = (s * rt + x * rr) % N
            M[r] = (p * rt + q * rr) % N
        ct, cr = Uinv[:, t].copy(), Uinv[:, r].copy()
        # inverse of [[s, x], [p, q]] is [[q, -x], [-p, s]]
        Uinv[:, t] = (ct * q - cr * p) % N
        Uinv[:, r] = (-ct * x + cr * s) % N

    def combine_cols(t: int, c: int) -> None:
        a, b = int(A[t, t]), int(A[t, c])
        g, s, x = egcd(a, b)
        p, q = -b // g, a // g
        for M in (A, V):
            ct, cc = M[:, t].copy(), M[:, c].copy()
            M[:, t] = (s * ct + x * cc) % N
            M[:, c] = (p * ct + q * cc) % N

    r = min(m, n)
    for t in range(r):
        sub = A[t:, t:]
        nz = sub != 0
        if not nz.any():
            break
        g = np.where(nz, np.gcd(sub, N), N + 1)
        i, j = np.unravel_index(int(np.argmin(g)), g.shape)
        _swap_rows(A, t, t + i)
        _swap_rows(U, t, t + i)
        _swap_cols(Uinv, t, t + i)
        _swap_cols(A, t, t + j)
        _swap_cols(V, t, t + j)
        while True:
            piv = int(A[t, t])
            u = unit_normalizer(piv, N)
            if u != 1:
                scale_row(t, u)
            piv = int(A[t, t])
            col = A[t + 1:, t]
            bad = np.nonzero(col % piv)[0]
            if bad.size:
                combine_rows(t, t + 1 + int(bad[0]))
                continue
            c = col // piv
            if c.any():
                A[t + 1:] = (A[t + 1:] - np.outer(c, A[t])) % N
                U[t + 1:] = (U[t + 1:] - np.outer(c, U[t])) % N
                # row_k -= c_k row_t  <=>  col_t of Uinv += sum_k c_k col_k
                Uinv[:, t] = (Uinv[:, t] + Uinv[:, t + 1:] @ c) % N
            row = A[t, t + 1:]
            bad = np.nonzero(row % piv)[0]
            if bad.size:
                combine_cols(t, t + 1 + int(bad[0]))
                continue
            c = row // piv
            if c.any():
                A[:, t + 1:] = (A[:, t + 1:] - np.outer(A[:, t], c)) % N
                V[:, t + 1:] = (V[:, t + 1:] - np.outer(V[:, t], c)) % N
            break

    diag = [int(A[i, i]) for i in range(r)]
    # divisibility chain; a zero entry counts as N
    changed = True
    while changed:
        changed = False
        for i in range(r):
            for j in range(i + 1, r):
                di, dj = diag[i] or N, diag[j] or N
                if dj % di == 0:
                    continue
                changed = True
                A[:, i] = (A[:, i] + A[:, j]) % N
                V[:, i] = (V[:, i] + V[:, j]) % N
                combine_rows(i, j)
                a = int(A[i, j])
                g = int(A[i, i])
                if a:
                    c = a // g
                    A[:, j] = (A[:, j] - c * A[:, i]) % N
                    V[:, j] = (V[:, j] - c * V[:, i]) % N
                for k in (i, j):
                    u = unit_normalizer(int(A[k, k]), N)
                    if u != 1:
                        scale_row(k, u)
                diag[i], diag[j] = int(A[i, i]), int(A[j, j])
    diag = [d if d else N for d in diag]
    return SNF(N, (m, n), U, V, Uinv, diag)


@dataclass(frozen=True)
class AbGroup:
    """Finite abelian group ``Z/orders[0] + Z/orders[1] + ...``."""

    orders: tuple[int, ...]

    def __post_init__(self):
        if any(o < 1 for o in self.orders):
            raise ValueError("cyclic orders must be positive")

    @property
    def rank(self) -> int:
        return len(self.orders)

    @cached_property
    def N(self) -> int:
        return lcm(*self.orders)

    @cached_property
    def order_array(self) -> np.ndarray:
        return np.array(self.orders, dtype=np.int64)

    @property
    def size(self) -> int:
        return math.prod(self.orders)

    def reduce(self, x) -> np.ndarray:
        """Canonical coordinates; reduces along the first axis."""
        x = np.asarray(x, dtype=np.int64)
        shape = (-1,) + (1,) * (x.ndim - 1)
        return x % self.order_array.reshape(shape) if self.rank else x

    def zero(self) -> np.ndarray:
        return np.zeros(self.rank, dtype=np.int64)

    def is_zero(self, x) -> bool:
        return not self.reduce(x).any()

    def elements(self, bound: int = MAX_ELEMENTS) -> Iterator[np.ndarray]:
        if self.size > bound:
            raise TooLarge(f"group of order {self.size} exceeds bound {bound}")
        for coords in np.ndindex(*self.orders):
            yield np.array(coords, dtype=np.int64)

    def invariants(self) -> tuple[int, ...]:
        """Invariant factors ``d_1 | d_2 | ...`` (trivial factors dropped)."""
        if not self.rank:
            return ()
        s = snf(np.diag(self.orders), self.N)
        return tuple(d for d in s.diag if d != 1)

    def __add__(self, other: "AbGroup") -> "AbGroup":
        return AbGroup(self.orders + other.orders)

    @staticmethod
    def sum(groups) -> "AbGroup":
        return AbGroup(tuple(o for g in groups for o in g.orders))

    def is_hom(self, M, dst: "AbGroup") -> bool:
        """``M`` defines a homomorphism ``self -> dst``."""
        M = np.asarray(M, dtype=np.int64).reshape(dst.rank, self.rank)
        return not dst.reduce(M * self.order_array[None, :]).any()


def _modulus(*groups: AbGroup) -> int:
    return lcm(*(g.N for g in groups))


class LinearMap:
    """A homomorphism ``src -> dst`` with cached solve / kernel machinery."""

    def __init__(self, M, src: AbGroup, dst: AbGroup):
        self.src, self.dst = src, dst
        self.M = dst.reduce(np.asarray(M, dtype=np.int64).reshape(dst.rank, src.rank))
        self.N = _modulus(src, dst)

    def __call__(self, x) -> np.ndarray:
        return self.dst.reduce(self.M @ np.asarray(x, dtype=np.int64))

    @cached_property
    def _system(self) -> SNF:
        # M x + diag(dst) y = b over Z/N
        aug = np.concatenate([self.M, np.diag(self.dst.order_array)], axis=1) \
            if self.dst.rank else np.zeros((0, self.src.rank), dtype=np.int64)
        return snf(aug, self.N)

    def solve(self, B) -> tuple[np.ndarray, np.ndarray]:
        """Preimages of the columns of ``B``; returns ``(X, ok)``."""
        B = as_cols(B, self.dst.rank)
        if self.dst.rank == 0:
            return np.zeros((self.src.rank, B.shape[1]), dtype=np.int64), np.ones(B.shape[1], bool)
        W, ok = self._system.solve(B)
        return self.src.reduce(W[: self.src.rank]), ok

    def solve_one(self, b) -> np.ndarray | None:
        X, ok = self.solve(np.asarray(b).reshape(-1, 1))
        return X[:, 0] if ok[0] else None

    def in_image(self, b) -> bool:
        return self.solve_one(b) is not None

    @cached_property
    def kernel(self) -> tuple[AbGroup, np.ndarray]:
        """``(K, X)`` with ``X`` the inclusion matrix ``K -> src``."""
        if self.dst.rank == 0:
            return subgroup(np.eye(self.src.rank, dtype=np.int64), self.src)
        gens = self._system.kernel()[: self.src.rank]
        return subgroup(gens, self.src)

    @cached_property
    def image(self) -> tuple[AbGroup, np.ndarray]:
        return subgroup(self.M, self.dst)

    @cached_property
    def cokernel(self) -> "Quotient":
        return Quotient(self.dst, self.M)

    def is_injective(self) -> bool:
        return self.kernel[0].size == 1

    def is_surjective(self) -> bool:
        return self.image[0].size == self.dst.size


def subgroup(X, amb: AbGroup) -> tuple[AbGroup, np.ndarray]:
    """Diagonal presentation of the subgroup of ``amb`` generated by columns of ``X``.

    Returns ``(S, G)`` where ``G`` (``amb.rank x S.rank``) sends the canonical
    generators of ``S`` to ``amb``; it is injective.
    """
    if amb.rank == 0:
        return AbGroup(()), np.zeros((0, 0), dtype=np.int64)
    X = amb.reduce(as_cols(X, amb.rank))
    t = X.shape[1]
    if t == 0 or amb.rank == 0:
        return AbGroup(()), np.zeros((amb.rank, 0), dtype=np.int64)
    N = amb.N
    rel = snf(np.concatenate([X, np.diag(amb.order_array)], axis=1), N).kernel()[:t]
    # S = Z^t / (relations + N Z^t)
    R = np.concatenate([rel, N * np.eye(t, dtype=np.int64)], axis=1) % N
    s = snf(R, N)
    gens = (X @ s.Uinv) % N
    orders, cols = [], []
    for i in range(t):
        d = s.diag[i] if i < len(s.diag) else N
        if d != 1:
            orders.append(d)
            cols.append(gens[:, i])
    if not cols:
        return AbGroup(()), np.zeros((amb.rank, 0), dtype=np.int64)
    return AbGroup(tuple(orders)), amb.reduce(np.stack(cols, axis=1))


class Quotient:
    """``amb / <columns of X>`` in diagonal form with projection and section."""

    def __init__(self, amb: AbGroup, X):
        self.amb = amb
        X = as_cols(X, amb.rank)
        n = amb.rank
        if n == 0:
            self.group = AbGroup(())
            self.P = np.zeros((0, 0), dtype=np.int64)
            self.S = np.zeros((0, 0), dtype=np.int64)
            return
        N = amb.N
        R = np.concatenate([X % N, np.diag(amb.order_array)], axis=1)
        s = snf(R, N)
        keep = [i for i in range(n) if (s.diag[i] if i < len(s.diag) else N) != 1]
        orders = tuple(s.diag[i] if i < len(s.diag) else N for i in keep)
        self.group = AbGroup(orders)
        self.P = self.group.reduce(s.U[keep]) if keep else np.zeros((0, n), dtype=np.int64)
        self.S = amb.reduce(s.Uinv[:, keep]) if keep else np.zeros((n, 0), dtype=np.int64)

    def project(self, x) -> np.ndarray:
        return self.group.reduce(self.P @ np.asarray(x, dtype=np.int64))

    def lift(self, q) -> np.ndarray:
        return self.amb.reduce(self.S @ np.asarray(q, dtype=np.int64))


class Cohomology:
    """Cohomology ``ker(d_out) / im(d_in)`` at one slot of a complex of groups."""

    def __init__(self, d_in: LinearMap, d_out: LinearMap):
        if d_in.dst != d_out.src:
            raise ValueError("incompatible differentials")
        self.d_in, self.d_out = d_in, d_out
        self.C = d_out.src

    @cached_property
    def _cycles(self) -> tuple[AbGroup, np.ndarray]:
        return self.d_out.kernel

    @cached_property
    def _incl(self) -> LinearMap:
        Z, X = self._cycles
        return LinearMap(X, Z, self.C)

    @cached_property
    def _quot(self) -> Quotient:
        Z, X = self._cycles
        B, ok = self._incl.solve(self.d_in.M)
        assert ok.all(), "boundaries must be cycles"
        return Quotient(Z, B)

    @property
    def group(self) -> AbGroup:
        return self._quot.group

    def is_cocycle(self, x) -> bool:
        return self.d_out.dst.is_zero(self.d_out(x))

    def is_coboundary(self, x) -> bool:
        return self.d_in.in_image(x)

    def classify(self, x) -> np.ndarray:
        """Coordinates of the class of the cocycle ``x`` in :attr:`group`."""
        if not self.is_cocycle(x):
            raise ValueError("not a cocycle")
        z = self._incl.solve_one(x)
        return self._quot.project(z)

    def lift(self, h) -> np.ndarray:
        """A cocycle representing the class with coordinates ``h``."""
        z = self._quot.lift(h)
        return self.C.reduce(self._cycles[1] @ z)

    def generators(self) -> list[np.ndarray]:
        return [self.lift(np.eye(self.group.rank, dtype=np.int64)[i]) for i in range(self.group.rank)]

    def cocycle_generators(self) -> np.ndarray:
        """Columns generating the cocycle group."""
        return self._cycles[1]
