"""Finite commutative rings given by additive generators and structure constants.

A ring with additive group ``Z/n_1 + ... + Z/n_k`` is fixed by the products of
its generators, ``e_i * e_j = sum_c table[i, j, c] e_c``.  Elements are
coordinate vectors and matrices over a ring are integer arrays of shape
``(rows, cols, k)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .zn import MAX_ELEMENTS, AbGroup, LinearMap, TooLarge, lcm


class RingAxiomError(ValueError):
    pass


class NotInvertible(ValueError):
    pass


class NotLocal(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteRing:
    orders: tuple[int, ...]
    table: np.ndarray
    one: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        k = len(self.orders)
        t = np.asarray(self.table, dtype=np.int64).reshape(k, k, k)
        t = t % np.array(self.orders, dtype=np.int64)[None, None, :] if k else t
        t.flags.writeable = False
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "one", tuple(int(c) % o for c, o in zip(self.one, self.orders)))

    def __eq__(self, other):
        return (isinstance(other, FiniteRing) and self.orders == other.orders
                and self.one == other.one and np.array_equal(self.table, other.table))

    def __hash__(self):
        return hash((self.orders, self.one, self.table.tobytes()))

    def __repr__(self):
        return f"FiniteRing({self.name or self.orders})"

    # -- additive structure -------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.orders)

    @cached_property
    def group(self) -> AbGroup:
        return AbGroup(self.orders)

    @property
    def N(self) -> int:
        return self.group.N

    @property
    def size(self) -> int:
        return math.prod(self.orders)

    @cached_property
    def _ord(self) -> np.ndarray:
        return np.array(self.orders, dtype=np.int64)

    def reduce(self, x) -> np.ndarray:
        """Reduce coordinates along the last axis."""
        return np.asarray(x, dtype=np.int64) % self._ord

    def zero(self) -> np.ndarray:
        return np.zeros(self.k, dtype=np.int64)

    @cached_property
    def one_vec(self) -> np.ndarray:
        return np.array(self.one, dtype=np.int64)

    def scalar(self, n: int) -> np.ndarray:
        """The image of the integer ``n``."""
        return self.reduce(n * self.one_vec)

    def elem(self, x) -> np.ndarray:
        """Coerce an int (``n * 1``) or a coordinate sequence to an element."""
        if isinstance(x, (int, np.integer)):
            return self.scalar(int(x))
        return self.reduce(np.asarray(x, dtype=np.int64).reshape(self.k))

    def add(self, x, y):
        return self.reduce(np.asarray(x) + np.asarray(y))

    def sub(self, x, y):
        return self.reduce(np.asarray(x) - np.asarray(y))

    def neg(self, x):
        return self.reduce(-np.asarray(x))

    def mul(self, x, y) -> np.ndarray:
        return self.reduce(np.einsum("...a,...b,abc->...c", x, y, self.table))

    def eq(self, x, y) -> bool:
        return bool(np.array_equal(self.reduce(x), self.reduce(y)))

    def is_zero(self, x) -> bool:
        return not self.reduce(x).any()

    def elements(self, bound: int = MAX_ELEMENTS):
        if self.size > bound:
            raise TooLarge(f"ring of order {self.size} exceeds bound {bound}")
        return [np.array(c, dtype=np.int64) for c in itertools.product(*map(range, self.orders))]

    def key(self, x) -> tuple[int, ...]:
        return tuple(int(c) for c in self.reduce(x))

    # -- multiplication as linear maps --------------------------------------

    @cached_property
    def gen_action(self) -> np.ndarray:
        """``gen_action[a]`` is the matrix of multiplication by ``e_a`` on coordinates."""
        # (e_a * e_b)_c = table[a, b, c]  ->  M_a[c, b]
        A = np.transpose(self.table, (0, 2, 1)).copy()
        A.flags.writeable = False
        return A

    def mult_matrix(self, x) -> np.ndarray:
        """Matrix of ``y -> x*y`` on coordinates."""
        return np.einsum("a,acb->cb", np.asarray(x, dtype=np.int64), self.gen_action) % self._ord[:, None]

    # -- units and localness ------------------------------------------------

    @cached_property
    def _unit_table(self) -> dict:
        units = {}
        elems = self.elements()
        M = np.stack(elems)
        prods = self.reduce(np.einsum("ia,jb,abc->ijc", M, M, self.table))
        for i, x in enumerate(elems):
            hits = np.nonzero((prods[i] == self.one_vec).all(axis=1))[0]
            if hits.size:
                units[self.key(x)] = elems[int(hits[0])]
        return units

    def is_unit(self, x) -> bool:
        x = self.reduce(x)
        if self.size <= MAX_ELEMENTS:
            return self.key(x) in self._unit_table
        raise TooLarge("ring too large for unit enumeration")

    def inverse(self, x) -> np.ndarray:
        try:
            return self._unit_table[self.key(x)].copy()
        except KeyError:
            raise NotInvertible(f"{self.key(x)} is not a unit") from None

    def units(self) -> list[np.ndarray]:
        return [np.array(u, dtype=np.int64) for u in sorted(self._unit_table)]

    def is_local(self) -> tuple[bool, list[np.ndarray]]:
        """``(local?, non-units)``; for a local ring the non-units form the maximal ideal."""
        nonunits = [x for x in self.elements() if self.key(x) not in self._unit_table]
        keys = {self.key(x) for x in nonunits}
        if not nonunits:
            return False, []  # the zero ring
        for x, y in itertools.combinations_with_replacement(nonunits, 2):
            if self.key(self.add(x, y)) not in keys:
                return False, nonunits
        return True, nonunits

    def power(self, x, n: int) -> np.ndarray:
        if n < 0:
            x, n = self.inverse(x), -n
        out = self.one_vec.copy()
        base = self.reduce(x)
        while n:
            if n & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            n >>= 1
        return out

    def mult_order(self, u) -> int:
        x, n = self.reduce(u), 1
        while not self.eq(x, self.one_vec):
            x = self.mul(x, u)
            n += 1
        return n

    def idempotents(self) -> list[np.ndarray]:
        return [x for x in self.elements() if self.eq(self.mul(x, x), x)]


def ring_check(R: FiniteRing) -> tuple[bool, str | None, tuple | None]:
    """Check the ring axioms on generators.

    Returns ``(True, None, None)`` or ``(False, axiom, witness_generators)``.
    """
    k = R.k
    T = R.table
    o = R._ord
    for i in range(k):
        for j in range(k):
            # bilinearity: n_i e_i = 0 must give n_i (e_i e_j) = 0
            if ((R.orders[i] * T[i, j]) % o).any():
                return False, "well-defined", (i, j)
    for i, j in itertools.product(range(k), repeat=2):
        if not np.array_equal(T[i, j], T[j, i]):
            return False, "commutativity", (i, j)
    for i, j, l in itertools.product(range(k), repeat=3):
        left = R.mul(np.eye(k, dtype=np.int64)[i], T[j, l])
        right = R.mul(T[i, j], np.eye(k, dtype=np.int64)[l])
        if not np.array_equal(left, right):
            return False, "associativity", (i, j, l)
    for i in range(k):
        e = np.eye(k, dtype=np.int64)[i]
        if not np.array_equal(R.mul(R.one_vec, e), R.reduce(e)):
            return False, "unitality", (i,)
    return True, None, None


# -- constructors --------------------------------------------------------------

def cyclic(n: int) -> FiniteRing:
    return FiniteRing((n,), np.ones((1, 1, 1), dtype=np.int64), (1,), name=f"Z/{n}")


def truncated_poly(base: int, deg: int) -> FiniteRing:
    """``(Z/base)[x]/(x^deg)`` with basis ``1, x, ..., x^(deg-1)``."""
    T = np.zeros((deg, deg, deg), dtype=np.int64)
    for i in range(deg):
        for j in range(deg):
            if i + j < deg:
                T[i, j, i + j] = 1
    one = (1,) + (0,) * (deg - 1)
    return FiniteRing((base,) * deg, T, one, name=f"Z/{base}[x]/(x^{deg})")


def poly_quotient(base: int, coeffs: list[int]) -> FiniteRing:
    """``(Z/base)[x]/(f)`` for a monic ``f = x^d + coeffs[d-1] x^(d-1) + ... + coeffs[0]``."""
    d = len(coeffs)

    def reduce_poly(p):
        p = list(p)
        for top in range(len(p) - 1, d - 1, -1):
            c = p[top]
            if c:
                p[top] = 0
                for i, a in enumerate(coeffs):
                    p[top - d + i] -= c * a
        return [c % base for c in p[:d]] + [0] * max(0, d - len(p))

    T = np.zeros((d, d, d), dtype=np.int64)
    for i in range(d):
        for j in range(d):
            p = [0] * (i + j + 1)
            p[i + j] = 1
            T[i, j] = reduce_poly(p)[:d]
    return FiniteRing((base,) * d, T, (1,) + (0,) * (d - 1), name=f"Z/{base}[x]/f{tuple(coeffs)}")


def dual_numbers(R: FiniteRing) -> FiniteRing:
    """``R[eps]/(eps^2)``; coordinates are ``(a, b)`` for ``a + b eps``."""
    k = R.k
    T = np.zeros((2 * k, 2 * k, 2 * k), dtype=np.int64)
    T[:k, :k, :k] = R.table
    T[:k, k:, k:] = R.table
    T[k:, :k, k:] = R.table
    return FiniteRing(R.orders * 2, T, R.one + (0,) * k, name=f"{R.name}[eps]")


def product(*rings: FiniteRing) -> FiniteRing:
    k = sum(R.k for R in rings)
    T = np.zeros((k, k, k), dtype=np.int64)
    one: tuple[int, ...] = ()
    off = 0
    for R in rings:
        T[off:off + R.k, off:off + R.k, off:off + R.k] = R.table
        one += R.one
        off += R.k
    return FiniteRing(sum((R.orders for R in rings), ()), T, one,
                      name=" x ".join(R.name for R in rings))


# -- homomorphisms -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RingHom:
    """Additive map given by images of the additive generators (columns)."""

    source: FiniteRing
    target: FiniteRing
    images: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.images, dtype=np.int64).reshape(self.target.k, self.source.k)
        M = M % self.target._ord[:, None] if self.target.k else M
        M.flags.writeable = False
        object.__setattr__(self, "images", M)

    def __eq__(self, other):
        return (isinstance(other, RingHom) and self.source == other.source
                and self.target == other.target and np.array_equal(self.images, other.images))

    def __hash__(self):
        return hash((self.source, self.target, self.images.tobytes()))

    def __call__(self, x) -> np.ndarray:
        """Apply to an element or entrywise to any array with coordinates last."""
        return self.target.reduce(np.einsum("ca,...a->...c", self.images, np.asarray(x, dtype=np.int64)))

    def compose(self, other: "RingHom") -> "RingHom":
        """``self o other``."""
        return RingHom(other.source, self.target, self.images @ other.images)

    @staticmethod
    def identity(R: FiniteRing) -> "RingHom":
        return RingHom(R, R, np.eye(R.k, dtype=np.int64))

    def check(self) -> tuple[bool, str | None]:
        S, T = self.source, self.target
        if not S.group.is_hom(self.images, T.group):
            return False, "not additive"
        if not T.eq(self(S.one_vec), T.one_vec):
            return False, "does not preserve 1"
        E = np.eye(S.k, dtype=np.int64)
        for i, j in itertools.product(range(S.k), repeat=2):
            if not T.eq(self(S.mul(E[i], E[j])), T.mul(self(E[i]), self(E[j]))):
                return False, f"not multiplicative on generators {(i, j)}"
        return True, None

    @cached_property
    def linear(self) -> LinearMap:
        return LinearMap(self.images, self.source.group, self.target.group)

    def is_surjective(self) -> bool:
        return self.linear.is_surjective()

    def lift(self, y) -> np.ndarray:
        """Some preimage of ``y`` (vectorized over leading axes)."""
        y = np.asarray(y, dtype=np.int64)
        flat = y.reshape(-1, self.target.k).T
        X, ok = self.linear.solve(flat)
        if not ok.all():
            raise ValueError("element not in the image")
        return X.T.reshape(y.shape[:-1] + (self.source.k,))

    @cached_property
    def kernel_gens(self) -> tuple[AbGroup, np.ndarray]:
        return self.linear.kernel


# -- matrices over a ring -------------------------------------------------------

def rmat(R: FiniteRing, rows) -> np.ndarray:
    """Matrix from nested lists whose entries are ints or coordinate tuples."""
    rows = list(rows)
    if not rows:
        return np.zeros((0, 0, R.k), dtype=np.int64)
    out = np.zeros((len(rows), len(rows[0]), R.k), dtype=np.int64)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            out[i, j] = R.elem(x)
    return out


def rzeros(R: FiniteRing, m: int, n: int) -> np.ndarray:
    return np.zeros((m, n, R.k), dtype=np.int64)


def reye(R: FiniteRing, n: int) -> np.ndarray:
    out = rzeros(R, n, n)
    for i in range(n):
        out[i, i] = R.one_vec
    return out


def rmatmul(R: FiniteRing, A, B) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"dimension mismatch {A.shape[:2]} @ {B.shape[:2]}")
    if A.shape[1] == 0:
        return rzeros(R, A.shape[0], B.shape[1])
    return R.reduce(np.einsum("ila,ljb,abc->ijc", A, B, R.table))


def rmatmul_chain(R: FiniteRing, *mats) -> np.ndarray:
    out = mats[0]
    for M in mats[1:]:
        out = rmatmul(R, out, M)
    return out


def rscale(R: FiniteRing, x, A) -> np.ndarray:
    return R.reduce(np.einsum("a,ijb,abc->ijc", np.asarray(x, dtype=np.int64), A, R.table))


def req(R: FiniteRing, A, B) -> bool:
    return bool(np.array_equal(R.reduce(A), R.reduce(B)))


@lru_cache(maxsize=64)
def _laplace_plan(n: int) -> tuple:
    """Per subset size: (column index, minor index, sign) arrays of shape (#subsets, size)."""
    plan = []
    prev = {(): 0}
    for size in range(1, n + 1):
        subsets = list(itertools.combinations(range(n), size))
        cols = np.array(subsets, dtype=np.int64)
        minor = np.array([[prev[c[:pos] + c[pos + 1:]] for pos in range(size)] for c in subsets], dtype=np.int64)
        # sign of moving column c to the end of the subset
        sign = np.array([1 if (size - 1 - pos) % 2 == 0 else -1 for pos in range(size)], dtype=np.int64)
        plan.append((cols, minor, sign))
        prev = {c: i for i, c in enumerate(subsets)}
    return tuple(plan)


def rdet(R: FiniteRing, A) -> np.ndarray:
    """Determinant by Laplace expansion along rows over column subsets (division free)."""
    A = R.reduce(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        return R.one_vec.copy()
    # memo[i] = det of the first `size` rows restricted to the i-th column subset
    memo = R.one_vec[None, :].copy()
    for row, (cols, minor, sign) in enumerate(_laplace_plan(n)):
        terms = np.einsum("msa,msb,abc->msc", A[row][cols], memo[minor], R.table)
        memo = R.reduce(np.einsum("msc,s->mc", terms, sign))
    return memo[0]


def rinv(R: FiniteRing, A) -> np.ndarray:
    """Inverse via the adjugate; raises :class:`NotInvertible`."""
    A = R.reduce(A)
    n = A.shape[0]
    det_inv = R.inverse(rdet(R, A))
    adj = rzeros(R, n, n)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(A, j, axis=0), i, axis=1)
            c = rdet(R, minor)
            adj[i, j] = c if (i + j) % 2 == 0 else R.neg(c)
    return rscale(R, det_inv, adj)


def rtrace(R: FiniteRing, A) -> np.ndarray:
    A = np.asarray(A)
    return R.reduce(np.einsum("iia->a", A)) if A.shape[0] else R.zero()


# -- K_1 of local rings -----------------------------------------------------------

@dataclass
class ElementaryFactorization:
    """``m == E_1 @ E_2 @ ... @ E_t @ diag(u, 1, ..., 1)``.

    Each factor is ``(i, j, c)`` meaning ``I + c * e_ij`` with ``i != j``.
    """

    ring: FiniteRing
    n: int
    factors: list[tuple[int, int, np.ndarray]] = field(default_factory=list)
    unit: np.ndarray | None = None

    def elementary(self, i: int, j: int, c) -> np.ndarray:
        E = reye(self.ring, self.n)
        E[i, j] = self.ring.reduce(c)
        return E

    def product(self) -> np.ndarray:
        R = self.ring
        out = reye(R, self.n)
        for i, j, c in self.factors:
            out = rmatmul(R, out, self.elementary(i, j, c))
        D = reye(R, self.n)
        if self.n:
            D[0, 0] = self.unit
        return rmatmul(R, out, D)


def elementary_reduce(R: FiniteRing, m) -> ElementaryFactorization:
    """Factor an invertible matrix over a local ring into elementaries and a unit."""
    local, _ = R.is_local()
    if not local:
        raise NotLocal(f"{R!r} is not local")
    A = R.reduce(np.array(m, dtype=np.int64))
    n = A.shape[0]
    if not R.is_unit(rdet(R, A)):
        raise NotInvertible("determinant is not a unit")
    # Row operations A <- E A are recorded; then m = E_1^-1 ... E_t^-1 D.
    ops: list[tuple[int, int, np.ndarray]] = []

    def add_row(i, j, c):
        # row_i += c * row_j
        c = R.reduce(c)
        if R.is_zero(c):
            return
        A[i] = R.reduce(A[i] + R.mul(c[None, :], A[j]))
        ops.append((i, j, c))

    for col in range(n):
        if not R.is_unit(A[col, col]):
            r = next(r for r in range(col + 1, n) if R.is_unit(A[r, col]))
            add_row(col, r, R.one_vec)
        inv = R.inverse(A[col, col])
        for r in range(n):
            if r != col:
                add_row(r, col, R.neg(R.mul(A[r, col], inv)))
    # A is diagonal with unit entries; fold them into position 0 (Whitehead)
    for j in range(n - 1, 0, -1):
        x, y = A[0, 0].copy(), A[j, j].copy()
        if R.eq(y, R.one_vec):
            continue
        xi, yi = R.inverse(x), R.inverse(y)
        # diag(x, y) -> diag(xy, 1) through elementary row operations
        add_row(j, 0, xi)                            # [[x,0],[1,y]]
        add_row(0, j, R.sub(R.one_vec, x))           # [[1,(1-x)y],[1,y]]
        add_row(j, 0, R.neg(R.one_vec))              # [[1,(1-x)y],[0,xy]]
        xyi = R.mul(xi, yi)
        add_row(0, j, R.neg(R.mul(R.sub(R.one_vec, x), R.mul(y, xyi))))  # [[1,0],[0,xy]]
        # swap the unit back to position 0: [[1,0],[0,z]] -> [[z,0],[0,1]]
        z = A[j, j].copy()
        zi = R.inverse(z)
        add_row(0, j, zi)                            # [[1,1],[0,z]]
        add_row(j, 0, R.sub(R.one_vec, z))           # [[1,1],[1-z,1]]
        add_row(0, j, R.neg(R.one_vec))              # [[z,0],[1-z,1]]
        add_row(j, 0, R.neg(R.mul(R.sub(R.one_vec, z), zi)))  # [[z,0],[0,1]]
    fac = ElementaryFactorization(R, n)
    fac.unit = A[0, 0].copy() if n else R.one_vec.copy()
    # m = (E_t ... E_1)^-1 D = E_1^-1 ... E_t^-1 D
    fac.factors = [(i, j, R.neg(c)) for i, j, c in ops]
    return fac


def k1_class(R: FiniteRing, m) -> np.ndarray:
    """Class in ``K_1(R) = R^*`` of an invertible matrix over a local ring."""
    return elementary_reduce(R, m).unit


def k0_rank(R: FiniteRing) -> int:
    """Rank of ``K_0(R) = Z^(number of local factors)``."""
    n_idem = len(R.idempotents())
    return int(round(math.log2(n_idem)))


def lcm_of_rings(*rings: FiniteRing) -> int:
    return lcm(*(R.N for R in rings))
