"""Finite ringed posets, sheaves on them, and Cech-Hom total complexes.

A sheaf on a poset is a covariant functor: the value at ``p`` restricts to
the value at every ``q >= p``.  Cochains live on strictly increasing chains
``p_0 < ... < p_k`` and take values at the top element ``p_k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .complexes import Complex, ModuleCohomology, NotStrictlyPerfect, cohomology
from .module import FpModule, act_matrix, free, ideal, ring_matrix_to_group
from .ring import (FiniteRing, NotInvertible, RingHom, cyclic, reye, rinv, rmatmul,
                   rzeros)
from .zn import MAX_ELEMENTS, AbGroup, Cohomology, LinearMap, TooLarge, lcm

Chain = tuple[int, ...]


# -- posets ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Poset:
    names: tuple[str, ...]
    leq: np.ndarray  # leq[p, q] iff p <= q

    def __post_init__(self):
        L = np.asarray(self.leq, dtype=bool).copy()
        L.flags.writeable = False
        object.__setattr__(self, "leq", L)
        object.__setattr__(self, "names", tuple(self.names))

    @staticmethod
    def from_relations(names, pairs) -> "Poset":
        """Order generated by ``pairs`` ``(a, b)`` meaning ``a <= b`` (names or indices)."""
        names = list(names)
        idx = {nm: i for i, nm in enumerate(names)}
        n = len(names)
        L = np.eye(n, dtype=bool)
        for a, b in pairs:
            L[idx.get(a, a), idx.get(b, b)] = True
        for k in range(n):  # transitive closure
            L |= L[:, [k]] & L[[k], :]
        return Poset(tuple(names), L)

    def __eq__(self, other):
        return isinstance(other, Poset) and self.names == other.names and np.array_equal(self.leq, other.leq)

    def __hash__(self):
        return hash((self.names, self.leq.tobytes()))

    def __len__(self):
        return len(self.names)

    @property
    def n(self) -> int:
        return len(self.names)

    def lt(self, p: int, q: int) -> bool:
        return p != q and bool(self.leq[p, q])

    def comparable(self, p: int, q: int) -> bool:
        return bool(self.leq[p, q] or self.leq[q, p])

    def check(self) -> tuple[bool, str | None]:
        L = self.leq
        if not L.diagonal().all():
            return False, "not reflexive"
        if (L & L.T & ~np.eye(self.n, dtype=bool)).any():
            return False, "not antisymmetric"
        if ((L.astype(int) @ L.astype(int) > 0) & ~L).any():
            return False, "not transitive"
        return True, None

    @cached_property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        """All strictly comparable pairs ``p < q``."""
        return tuple((p, q) for p in range(self.n) for q in range(self.n) if self.lt(p, q))

    @cached_property
    def covers(self) -> tuple[tuple[int, int], ...]:
        out = []
        for p, q in self.pairs:
            if not any(self.lt(p, s) and self.lt(s, q) for s in range(self.n)):
                out.append((p, q))
        return tuple(out)

    @cached_property
    def chains(self) -> tuple[tuple[Chain, ...], ...]:
        """``chains[k]`` lists the strictly increasing chains with ``k + 1`` elements."""
        level = [(p,) for p in range(self.n)]
        out = []
        while level:
            out.append(tuple(level))
            level = [c + (q,) for c in level for q in range(self.n) if self.lt(c[-1], q)]
        return tuple(out)

    @cached_property
    def chain_index(self) -> tuple[dict, ...]:
        return tuple({c: i for i, c in enumerate(cs)} for cs in self.chains)

    @property
    def dim(self) -> int:
        return len(self.chains) - 1

    def num_chains(self, k: int) -> int:
        return len(self.chains[k]) if 0 <= k < len(self.chains) else 0

    @cached_property
    def cofaces(self) -> tuple[tuple[tuple[tuple[int, int], ...], ...], ...]:
        """``cofaces[k][j]`` lists ``(index of (k+1)-chain, position i)`` whose ``i``-th face is chain ``j``."""
        out = []
        for k in range(len(self.chains)):
            acc = [[] for _ in self.chains[k]]
            if k + 1 < len(self.chains):
                for j2, c2 in enumerate(self.chains[k + 1]):
                    for i in range(k + 2):
                        face = c2[:i] + c2[i + 1:]
                        acc[self.chain_index[k][face]].append((j2, i))
            out.append(tuple(tuple(a) for a in acc))
        return tuple(out)

    @cached_property
    def components(self) -> tuple[int, ...]:
        """Connected component label of each point."""
        lab = list(range(self.n))

        def find(a):
            while lab[a] != a:
                lab[a] = lab[lab[a]]
                a = lab[a]
            return a

        for p, q in self.pairs:
            a, b = find(p), find(q)
            if a != b:
                lab[max(a, b)] = min(a, b)
        roots = [find(p) for p in range(self.n)]
        relabel = {r: i for i, r in enumerate(dict.fromkeys(roots))}
        return tuple(relabel[r] for r in roots)

    def product(self, other: "Poset") -> "Poset":
        names = tuple(f"{a}.{b}" for a in self.names for b in other.names)
        L = np.kron(self.leq.astype(int), other.leq.astype(int)).astype(bool)
        return Poset(names, L)

    def topological_order(self) -> list[int]:
        return sorted(range(self.n), key=lambda p: (int(self.leq[:, p].sum()), p))


# -- ringed sites -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PosetSite:
    poset: Poset
    rings: tuple[FiniteRing, ...]
    homs: dict  # (p, q) with p < q -> RingHom rings[p] -> rings[q]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "rings", tuple(self.rings))

    @staticmethod
    def constant(poset: Poset, R: FiniteRing, name: str = "") -> "PosetSite":
        ident = RingHom.identity(R)
        return PosetSite(poset, (R,) * poset.n, {pq: ident for pq in poset.pairs}, name=name)

    @property
    def n(self) -> int:
        return self.poset.n

    def ring(self, p: int) -> FiniteRing:
        return self.rings[p]

    def hom(self, p: int, q: int) -> RingHom:
        if p == q:
            return RingHom.identity(self.rings[p])
        return self.homs[(p, q)]

    def is_constant(self) -> bool:
        R = self.rings[0]
        return all(S == R for S in self.rings) and all(
            np.array_equal(h.images, np.eye(R.k, dtype=np.int64)) for h in self.homs.values())

    def with_rings(self, rings, homs, name: str = "") -> "PosetSite":
        return PosetSite(self.poset, tuple(rings), dict(homs), name=name or self.name)

    def check(self) -> tuple[bool, str | None]:
        ok, why = self.poset.check()
        if not ok:
            return False, why
        for p, R in enumerate(self.rings):
            from .ring import ring_check
            ok, axiom, wit = ring_check(R)
            if not ok:
                return False, f"ring at {self.poset.names[p]}: {axiom} {wit}"
        for (p, q) in self.poset.pairs:
            ok, why = self.homs[(p, q)].check()
            if not ok:
                return False, f"restriction {p}->{q}: {why}"
        for p, q in self.poset.pairs:
            for s in range(self.n):
                if self.poset.lt(q, s):
                    lhs = self.hom(q, s).compose(self.hom(p, q))
                    if lhs != self.hom(p, s):
                        return False, f"restrictions not functorial on {p}<{q}<{s}"
        return True, None

    def __repr__(self):
        return f"PosetSite({self.name or self.n})"


# -- sheaves of modules and complexes -------------------------------------------------

@dataclass(frozen=True, eq=False)
class SheafModule:
    site: PosetSite
    values: tuple[FpModule, ...]
    res: dict  # (p, q) -> group matrix values[p] -> values[q]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    def value(self, p: int) -> FpModule:
        return self.values[p]

    def restriction(self, p: int, q: int) -> np.ndarray:
        if p == q:
            return np.eye(self.values[p].rank, dtype=np.int64)
        return self.values[q].reduce(np.asarray(self.res[(p, q)], dtype=np.int64)
                                     .reshape(self.values[q].rank, self.values[p].rank))

    def check(self) -> tuple[bool, str | None]:
        S = self.site
        for p in range(S.n):
            if self.values[p].ring != S.ring(p):
                return False, f"value at {p} is over the wrong ring"
            ok, why = self.values[p].check()
            if not ok:
                return False, f"value at {p}: {why}"
        for p, q in S.poset.pairs:
            Mp, Mq, r = self.values[p], self.values[q], self.restriction(p, q)
            if not Mp.group.is_hom(r, Mq.group):
                return False, f"restriction {p}->{q} not additive"
            phi = S.hom(p, q)
            for a in range(S.ring(p).k):
                e = np.eye(S.ring(p).k, dtype=np.int64)[a]
                if Mq.reduce(r @ Mp.action[a] - Mq.act(phi(e)) @ r).any():
                    return False, f"restriction {p}->{q} not semilinear"
            for s in range(S.n):
                if S.poset.lt(q, s):
                    if self.values[s].reduce(self.restriction(q, s) @ r - self.restriction(p, s)).any():
                        return False, f"restrictions not functorial on {p}<{q}<{s}"
        return True, None

    def as_complex(self, degree: int = 0) -> "SheafComplex":
        stalks = tuple(Complex(self.site.ring(p), degree, (self.values[p],), ()) for p in range(self.site.n))
        res = {pq: (self.restriction(*pq),) for pq in self.site.poset.pairs}
        return SheafComplex(self.site, degree, stalks, res)

    @cached_property
    def N(self) -> int:
        return lcm(*(M.group.N for M in self.values))


def structure_sheaf(site: PosetSite) -> SheafModule:
    vals = tuple(free(site.ring(p), 1) for p in range(site.n))
    res = {(p, q): site.hom(p, q).images for p, q in site.poset.pairs}
    return SheafModule(site, vals, res)


def constant_sheaf(site: PosetSite, M: FpModule) -> SheafModule:
    """Constant sheaf with value ``M`` on a site whose ring sheaf is constant."""
    if not site.is_constant() or site.ring(0) != M.ring:
        raise ValueError("constant sheaves need a constant ring sheaf over the module's ring")
    eye = np.eye(M.rank, dtype=np.int64)
    return SheafModule(site, (M,) * site.n, {pq: eye for pq in site.poset.pairs})


@dataclass(frozen=True, eq=False)
class SheafComplex:
    """Stalk complexes sharing the degree range ``lo..hi`` plus degreewise restrictions."""

    site: PosetSite
    lo: int
    stalks: tuple[Complex, ...]
    res: dict  # (p, q) -> tuple of group matrices, one per degree lo..hi

    @property
    def hi(self) -> int:
        return max(C.hi for C in self.stalks) if self.stalks else self.lo - 1

    def term(self, p: int, n: int) -> FpModule:
        return self.stalks[p].term(n)

    def d(self, p: int, n: int) -> np.ndarray:
        return self.stalks[p].d(n)

    def restriction(self, p: int, q: int, n: int) -> np.ndarray:
        if p == q:
            return np.eye(self.term(p, n).rank, dtype=np.int64)
        if not self.lo <= n <= self.hi:
            return np.zeros((self.term(q, n).rank, self.term(p, n).rank), dtype=np.int64)
        return self.term(q, n).reduce(np.asarray(self.res[(p, q)][n - self.lo], dtype=np.int64)
                                      .reshape(self.term(q, n).rank, self.term(p, n).rank))

    def degree(self, n: int) -> SheafModule:
        vals = tuple(self.term(p, n) for p in range(self.site.n))
        return SheafModule(self.site, vals, {pq: self.restriction(*pq, n) for pq in self.site.poset.pairs})

    def check(self) -> tuple[bool, str | None]:
        for p, C in enumerate(self.stalks):
            ok, why = C.check()
            if not ok:
                return False, f"stalk {p}: {why}"
        for n in range(self.lo, self.hi + 1):
            ok, why = self.degree(n).check()
            if not ok:
                return False, f"degree {n}: {why}"
        for p, q in self.site.poset.pairs:
            for n in range(self.lo, self.hi):
                lhs = self.d(q, n) @ self.restriction(p, q, n)
                rhs = self.restriction(p, q, n + 1) @ self.d(p, n)
                if self.term(q, n + 1).reduce(lhs - rhs).any():
                    return False, f"restriction {p}->{q} is not a chain map in degree {n}"
        return True, None


# -- locally free complexes with chosen bases -------------------------------------------

def _ring_mat(R: FiniteRing, A, rows: int, cols: int) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64).reshape(rows, cols, R.k)
    out = R.reduce(A)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class FreeSheafComplex:
    """Stalkwise strictly perfect complex with chosen bases.

    ``d[p][i]`` is the ring matrix of ``d^(lo+i)`` at ``p`` (over ``O(p)``) and
    ``rho[(p, q)][i]`` the ring matrix over ``O(q)`` of the restriction
    ``E^(lo+i)(p) (x) O(q) -> E^(lo+i)(q)`` (columns are images of basis vectors).
    """

    site: PosetSite
    lo: int
    ranks: tuple[tuple[int, ...], ...]  # ranks[p][i]
    d: dict
    rho: dict

    def __post_init__(self):
        S = self.site
        ranks = tuple(tuple(int(r) for r in rs) for rs in self.ranks)
        object.__setattr__(self, "ranks", ranks)
        L = len(ranks[0]) if ranks else 0
        if any(len(rs) != L for rs in ranks):
            raise ValueError("all stalks must share the degree range")
        d = {}
        for p in range(S.n):
            mats = list(self.d.get(p, []))
            d[p] = tuple(_ring_mat(S.ring(p), mats[i], ranks[p][i + 1], ranks[p][i]) if i < len(mats)
                         else rzeros(S.ring(p), ranks[p][i + 1], ranks[p][i]) for i in range(L - 1))
        rho = {}
        for p, q in S.poset.pairs:
            mats = list(self.rho[(p, q)])
            rho[(p, q)] = tuple(_ring_mat(S.ring(q), mats[i], ranks[q][i], ranks[p][i]) for i in range(L))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "rho", rho)

    @property
    def length(self) -> int:
        return len(self.ranks[0]) if self.ranks else 0

    @property
    def hi(self) -> int:
        return self.lo + self.length - 1

    def degrees(self) -> range:
        return range(self.lo, self.hi + 1)

    def rank(self, p: int, n: int) -> int:
        return self.ranks[p][n - self.lo] if self.lo <= n <= self.hi else 0

    def dmat(self, p: int, n: int) -> np.ndarray:
        if self.lo <= n < self.hi:
            return self.d[p][n - self.lo]
        return rzeros(self.site.ring(p), self.rank(p, n + 1), self.rank(p, n))

    def rhomat(self, p: int, q: int, n: int) -> np.ndarray:
        if p == q:
            return reye(self.site.ring(p), self.rank(p, n))
        if not self.lo <= n <= self.hi:
            return rzeros(self.site.ring(q), 0, 0)
        return self.rho[(p, q)][n - self.lo]

    def euler_rank(self, p: int = 0) -> int:
        return sum((-1) ** n * self.rank(p, n) for n in self.degrees())

    def stalk(self, p: int) -> Complex:
        R = self.site.ring(p)
        terms = tuple(free(R, r) for r in self.ranks[p])
        diffs = tuple(ring_matrix_to_group(R, m) for m in self.d[p])
        return Complex(R, self.lo, terms, diffs)

    def check(self) -> tuple[bool, str | None]:
        """``d^2 = 0``, chain compatibility, functoriality and invertibility of ``rho``."""
        S = self.site
        for p in range(S.n):
            R = S.ring(p)
            for n in range(self.lo, self.hi - 1):
                if R.reduce(rmatmul(R, self.dmat(p, n + 1), self.dmat(p, n))).any():
                    return False, f"d^2 != 0 at {S.poset.names[p]} degree {n}"
        for p, q in S.poset.pairs:
            R = S.ring(q)
            phi = S.hom(p, q)
            for n in self.degrees():
                if self.rank(p, n) != self.rank(q, n):
                    return False, f"rank jumps between {p} and {q}"
                try:
                    rinv(R, self.rhomat(p, q, n))
                except NotInvertible:
                    return False, f"restriction {p}->{q} in degree {n} is not invertible"
                lhs = rmatmul(R, self.dmat(q, n), self.rhomat(p, q, n))
                rhs = rmatmul(R, self.rhomat(p, q, n + 1), phi(self.dmat(p, n)))
                if self.rank(p, n + 1) and not np.array_equal(R.reduce(lhs), R.reduce(rhs)):
                    return False, f"restriction {p}->{q} is not a chain map in degree {n}"
            for s in range(S.n):
                if S.poset.lt(q, s):
                    Rs = S.ring(s)
                    for n in self.degrees():
                        lhs = rmatmul(Rs, self.rhomat(q, s, n), S.hom(q, s)(self.rhomat(p, q, n)))
                        if not np.array_equal(lhs, Rs.reduce(self.rhomat(p, s, n))):
                            return False, f"restrictions not functorial on {p}<{q}<{s}"
        return True, None

    def tensor(self, M: SheafModule | None = None) -> SheafComplex:
        """``E (x) M`` as a sheaf complex (``M`` defaults to the structure sheaf)."""
        S = self.site
        if M is None:
            M = structure_sheaf(S)
        stalks = []
        for p in range(S.n):
            Mp = M.value(p)
            terms = tuple(Mp.power(r) for r in self.ranks[p])
            diffs = tuple(act_matrix(Mp, m) for m in self.d[p])
            stalks.append(Complex(S.ring(p), self.lo, terms, diffs))
        res = {}
        for p, q in S.poset.pairs:
            Mq = M.value(q)
            rM = M.restriction(p, q)
            blocks = []
            for n in self.degrees():
                A = self.rhomat(p, q, n)
                blocks.append(act_matrix(Mq, A) @ np.kron(np.eye(self.rank(p, n), dtype=np.int64), rM))
            res[(p, q)] = tuple(blocks)
        return SheafComplex(S, self.lo, tuple(stalks), res)

    def replace(self, d=None, rho=None, site=None) -> "FreeSheafComplex":
        return FreeSheafComplex(site or self.site, self.lo, self.ranks,
                                self.d if d is None else d, self.rho if rho is None else rho)

    def base_change(self, site: PosetSite, maps) -> "FreeSheafComplex":
        """Apply ring maps ``maps[p]: O(p) -> site.ring(p)`` to all matrices."""
        d = {p: [maps[p](m) for m in self.d[p]] for p in range(self.site.n)}
        rho = {pq: [maps[pq[1]](m) for m in ms] for pq, ms in self.rho.items()}
        return FreeSheafComplex(site, self.lo, self.ranks, d, rho)

    def shift(self, s: int) -> "FreeSheafComplex":
        sign = -1 if s % 2 else 1
        d = {p: [sign * m for m in ms] for p, ms in self.d.items()}
        return FreeSheafComplex(self.site, self.lo - s, self.ranks, d, self.rho)

    def direct_sum(self, other: "FreeSheafComplex") -> "FreeSheafComplex":
        return direct_sum_complexes([self, other])


def direct_sum_complexes(parts) -> FreeSheafComplex:
    parts = list(parts)
    S = parts[0].site
    lo = min(E.lo for E in parts)
    hi = max(E.hi for E in parts)
    ranks = tuple(tuple(sum(E.rank(p, n) for E in parts) for n in range(lo, hi + 1)) for p in range(S.n))

    def blockdiag(R, mats):
        rows = sum(m.shape[0] for m in mats)
        cols = sum(m.shape[1] for m in mats)
        out = rzeros(R, rows, cols)
        r = c = 0
        for m in mats:
            out[r:r + m.shape[0], c:c + m.shape[1]] = m
            r += m.shape[0]
            c += m.shape[1]
        return out

    d = {p: [blockdiag(S.ring(p), [E.dmat(p, n) for E in parts]) for n in range(lo, hi)] for p in range(S.n)}
    rho = {(p, q): [blockdiag(S.ring(q), [E.rhomat(p, q, n) for E in parts]) for n in range(lo, hi + 1)]
           for p, q in S.poset.pairs}
    return FreeSheafComplex(S, lo, ranks, d, rho)


# -- nerve cochains -------------------------------------------------------------------

def _nerve_layout(site: PosetSite, F: SheafModule, k: int) -> list[tuple[int, int]]:
    out, off = [], 0
    for c in site.poset.chains[k] if k < len(site.poset.chains) else ():
        g = F.value(c[-1]).rank
        out.append((off, g))
        off += g
    return out


def nerve_complex(site: PosetSite, F: SheafModule) -> Complex:
    """Alternating face complex on strictly increasing chains, values at the top element."""
    P = site.poset
    N = F.N
    R = cyclic(N)
    terms, diffs = [], []
    K = len(P.chains)
    layouts = [_nerve_layout(site, F, k) for k in range(K)]
    for k in range(K):
        orders = tuple(o for c in P.chains[k] for o in F.value(c[-1]).group.orders)
        g = len(orders)
        terms.append(FpModule(R, AbGroup(orders), np.eye(g, dtype=np.int64)[None], None))
    for k in range(K - 1):
        D = np.zeros((terms[k + 1].rank, terms[k].rank), dtype=np.int64)
        for j, c in enumerate(P.chains[k]):
            so, sg = layouts[k][j]
            for j2, i in P.cofaces[k][j]:
                c2 = P.chains[k + 1][j2]
                to, tg = layouts[k + 1][j2]
                sign = -1 if i % 2 else 1
                blk = F.restriction(c[-1], c2[-1]) if i == k + 1 else np.eye(sg, dtype=np.int64)
                D[to:to + tg, so:so + sg] += sign * blk
        diffs.append(D)
    return Complex(R, 0, tuple(terms), tuple(diffs))


def nerve_cochain(site: PosetSite, F: SheafModule, k: int, values: dict) -> np.ndarray:
    """Assemble a ``k``-cochain from ``values[chain] -> coordinates in F(top)``."""
    lay = _nerve_layout(site, F, k)
    out = np.zeros(sum(g for _, g in lay), dtype=np.int64)
    for j, c in enumerate(site.poset.chains[k] if k < len(site.poset.chains) else ()):
        off, g = lay[j]
        if c in values:
            out[off:off + g] = values[c]
    return out


def nerve_value(site: PosetSite, F: SheafModule, k: int, x, chain: Chain) -> np.ndarray:
    lay = _nerve_layout(site, F, k)
    off, g = lay[site.poset.chain_index[k][chain]]
    return np.asarray(x)[off:off + g]


def sheaf_cohomology(site: PosetSite, F: SheafModule, i: int) -> ModuleCohomology:
    return cohomology(nerve_complex(site, F), i)


# -- Cech-Hom total complex -------------------------------------------------------------

@dataclass(frozen=True)
class Slot:
    k: int          # Cech degree
    j: int          # chain index among k-chains
    chain: Chain
    m: int          # Hom degree
    n: int          # source degree
    off: int
    r: int          # rank of E^n at the chain
    g: int          # coordinates of X^(n+m) at the top

    @property
    def size(self) -> int:
        return self.r * self.g


class CechHom:
    """Total complex of ``prod_chains Hom(E^n(p_0) (x) O(p_k), X^(n+m)(p_k))``.

    A slot element lists the images of the basis of ``E^n(p_0)``.  The total
    differential is ``delta + (-1)^k D`` where ``D f = d_X f - (-1)^m f d_E``
    and ``delta`` is the alternating face sum whose first face precomposes
    with the restriction of ``E`` and whose last face postcomposes with the
    restriction of ``X``.  ``E`` may be any collection of lifted matrices;
    the differential squares to zero only when they form a complex.
    """

    def __init__(self, E: FreeSheafComplex, X: SheafComplex):
        if E.site.poset != X.site.poset:
            raise ValueError("different posets")
        self.E, self.X = E, X
        self.site = E.site
        P = self.site.poset
        self.K = len(P.chains) - 1
        self.tmin = X.lo - E.hi
        self.tmax = X.hi - E.lo + self.K
        self._slots: dict[int, list[Slot]] = {}
        self._D: dict[int, np.ndarray] = {}
        self._coh: dict[int, Cohomology] = {}

    def slots(self, t: int) -> list[Slot]:
        if t in self._slots:
            return self._slots[t]
        P = self.site.poset
        out, off = [], 0
        for k in range(self.K + 1):
            m = t - k
            for j, c in enumerate(P.chains[k]):
                for n in self.E.degrees():
                    r = self.E.rank(c[0], n)
                    g = self.X.term(c[-1], n + m).rank
                    if r and g:
                        out.append(Slot(k, j, c, m, n, off, r, g))
                        off += r * g
        self._slots[t] = out
        return out

    def slot_index(self, t: int) -> dict:
        return {(s.chain, s.n): s for s in self.slots(t)}

    def group(self, t: int) -> AbGroup:
        orders = []
        for s in self.slots(t):
            orders.extend(self.X.term(s.chain[-1], s.n + s.m).group.orders * s.r)
        return AbGroup(tuple(orders))

    def dim(self, t: int) -> int:
        return sum(s.size for s in self.slots(t))

    def D(self, t: int) -> np.ndarray:
        if t in self._D:
            return self._D[t]
        S, E, X = self.site, self.E, self.X
        P = S.poset
        src = self.slots(t)
        tgt = self.slot_index(t + 1)
        out = np.zeros((self.dim(t + 1), self.dim(t)), dtype=np.int64)

        def put(key, s, blk):
            ts = tgt.get(key)
            if ts is not None:
                out[ts.off:ts.off + ts.size, s.off:s.off + s.size] += blk

        for s in src:
            p0, pk = s.chain[0], s.chain[-1]
            Xm = X.term(pk, s.n + s.m)
            sk = -1 if s.k % 2 else 1
            # Hom differential, post-composition with d_X
            dX = X.d(pk, s.n + s.m)
            if dX.size:
                put((s.chain, s.n), s, sk * np.kron(np.eye(s.r, dtype=np.int64), dX))
            # Hom differential, pre-composition with d_E into degree n-1
            if E.rank(p0, s.n - 1):
                A = S.hom(p0, pk)(E.dmat(p0, s.n - 1))  # r_n x r_(n-1)
                sm = -1 if s.m % 2 else 1
                put((s.chain, s.n - 1), s, -sk * sm * act_matrix(Xm, np.transpose(A, (1, 0, 2))))
            # Cech faces
            if s.k < self.K:
                for j2, i in P.cofaces[s.k][s.j]:
                    c2 = P.chains[s.k + 1][j2]
                    sign = -1 if i % 2 else 1
                    if i == 0:
                        A = S.hom(p0, pk)(E.rhomat(c2[0], p0, s.n))  # r(p0) x r(c2[0])
                        blk = act_matrix(Xm, np.transpose(A, (1, 0, 2)))
                    elif i == s.k + 1:
                        blk = np.kron(np.eye(s.r, dtype=np.int64), X.restriction(pk, c2[-1], s.n + s.m))
                    else:
                        blk = np.eye(s.size, dtype=np.int64)
                    put((c2, s.n), s, sign * blk)
        out = self.group(t + 1).reduce(out)
        self._D[t] = out
        return out

    def dmap(self, t: int) -> LinearMap:
        return LinearMap(self.D(t), self.group(t), self.group(t + 1))

    def apply(self, t: int, x) -> np.ndarray:
        return self.group(t + 1).reduce(self.D(t) @ np.asarray(x, dtype=np.int64))

    def cohomology(self, t: int) -> Cohomology:
        if t not in self._coh:
            self._coh[t] = Cohomology(self.dmap(t - 1), self.dmap(t))
        return self._coh[t]

    def zero(self, t: int) -> np.ndarray:
        return np.zeros(self.dim(t), dtype=np.int64)

    # -- slot access ----------------------------------------------------------

    def component(self, x, t: int, chain: Chain, n: int) -> np.ndarray:
        """``g x r`` matrix of the slot: column ``i`` is the image of basis vector ``i``."""
        s = self.slot_index(t).get((chain, n))
        if s is None:
            m = t - (len(chain) - 1)
            return np.zeros((self.X.term(chain[-1], n + m).rank, self.E.rank(chain[0], n)), dtype=np.int64)
        return np.asarray(x)[s.off:s.off + s.size].reshape(s.r, s.g).T

    def assemble(self, t: int, comps: dict) -> np.ndarray:
        out = self.zero(t)
        idx = self.slot_index(t)
        for (chain, n), B in comps.items():
            s = idx.get((chain, n))
            if s is None:
                if np.asarray(B).any():
                    raise KeyError(f"no slot for {chain}, {n} in degree {t}")
                continue
            out[s.off:s.off + s.size] = np.asarray(B, dtype=np.int64).reshape(s.g, s.r).T.reshape(-1)
        return self.group(t).reduce(out)

    def mask(self, t: int, ks) -> np.ndarray:
        """Boolean mask of coordinates in slots whose Cech degree lies in ``ks``."""
        out = np.zeros(self.dim(t), dtype=bool)
        for s in self.slots(t):
            if s.k in ks:
                out[s.off:s.off + s.size] = True
        return out

    def part(self, x, t: int, ks) -> np.ndarray:
        return np.where(self.mask(t, ks), np.asarray(x), 0)


def cech_hom_total(site: PosetSite, E: FreeSheafComplex, F) -> CechHom:
    if not isinstance(E, FreeSheafComplex):
        raise NotStrictlyPerfect("source must be stalkwise strictly perfect with chosen bases")
    if E.site.poset != site.poset:
        raise ValueError("complex lives on a different site")
    X = F.as_complex() if isinstance(F, SheafModule) else F
    return CechHom(E, X)


def global_ext(site: PosetSite, E: FreeSheafComplex, F, i: int) -> Cohomology:
    return cech_hom_total(site, E, F).cohomology(i)


# -- invertible sheaves ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LineBundle:
    """Rank-one free sheaf given by unit transitions ``u[(p, q)]`` in ``O(q)``.

    The cocycle condition is ``u_qs * phi_qs(u_pq) = u_ps``.
    """

    site: PosetSite
    units: dict

    def __post_init__(self):
        S = self.site
        units = {pq: S.ring(pq[1]).elem(u) for pq, u in self.units.items()}
        object.__setattr__(self, "units", units)

    def u(self, p: int, q: int) -> np.ndarray:
        if p == q:
            return self.site.ring(p).one_vec.copy()
        return self.units[(p, q)]

    @staticmethod
    def trivial(site: PosetSite) -> "LineBundle":
        return LineBundle(site, {(p, q): site.ring(q).one_vec for p, q in site.poset.pairs})

    def check(self) -> tuple[bool, str | None]:
        S = self.site
        for (p, q), u in self.units.items():
            if not S.ring(q).is_unit(u):
                return False, f"transition {p}->{q} is not a unit"
        for p, q in S.poset.pairs:
            for s in range(S.n):
                if S.poset.lt(q, s):
                    R = S.ring(s)
                    if not R.eq(R.mul(self.u(q, s), S.hom(q, s)(self.u(p, q))), self.u(p, s)):
                        return False, f"cocycle condition fails on {p}<{q}<{s}"
        return True, None

    def tensor(self, other: "LineBundle") -> "LineBundle":
        S = self.site
        return LineBundle(S, {pq: S.ring(pq[1]).mul(self.u(*pq), other.u(*pq)) for pq in S.poset.pairs})

    def power(self, e: int) -> "LineBundle":
        S = self.site
        return LineBundle(S, {pq: S.ring(pq[1]).power(self.u(*pq), e) for pq in S.poset.pairs})

    def dual(self) -> "LineBundle":
        return self.power(-1)

    def gauge(self, g) -> "LineBundle":
        """Change of basis by units ``g[p]``: ``u'_pq = g_q u_pq phi(g_p)^-1``."""
        S = self.site
        out = {}
        for p, q in S.poset.pairs:
            R = S.ring(q)
            out[(p, q)] = R.mul(R.mul(g[q], self.u(p, q)), R.inverse(S.hom(p, q)(g[p])))
        return LineBundle(S, out)

    def as_complex(self, degree: int = 0) -> FreeSheafComplex:
        S = self.site
        ranks = tuple((1,) for _ in range(S.n))
        rho = {pq: [self.u(*pq).reshape(1, 1, -1)] for pq in S.poset.pairs}
        return FreeSheafComplex(S, degree, ranks, {}, rho)

    def find_isomorphism(self, other: "LineBundle") -> list | None:
        """Units ``g`` with ``other = self.gauge(g)``, by backtracking, or ``None``."""
        S = self.site
        P = S.poset
        order = P.topological_order()
        units = [S.ring(p).units() for p in range(S.n)]
        g: dict[int, np.ndarray] = {}

        def consistent(p):
            for q in g:
                if q == p:
                    continue
                if P.lt(q, p):
                    a, b = q, p
                elif P.lt(p, q):
                    a, b = p, q
                else:
                    continue
                R = S.ring(b)
                lhs = R.mul(g[b], self.u(a, b))
                rhs = R.mul(other.u(a, b), S.hom(a, b)(g[a]))
                if not R.eq(lhs, rhs):
                    return False
            return True

        def rec(i):
            if i == len(order):
                return True
            p = order[i]
            for u in units[p]:
                g[p] = u
                if consistent(p) and rec(i + 1):
                    return True
                del g[p]
            return False

        return [g[p] for p in range(S.n)] if rec(0) else None

    def is_isomorphic(self, other: "LineBundle") -> bool:
        return self.find_isomorphism(other) is not None

    def key(self) -> tuple:
        S = self.site
        return tuple(S.ring(q).key(self.u(p, q)) for p, q in S.poset.pairs)


def invertible_sheaves(site: PosetSite, bound: int = MAX_ELEMENTS) -> list[LineBundle]:
    """Representatives of the isomorphism classes of invertible sheaves.

    Transitions on cover relations are enumerated, extended along chains and
    kept when they satisfy the cocycle condition; classes are separated by
    gauge equivalence.
    """
    P = site.poset
    covers = P.covers
    unit_lists = [site.ring(q).units() for _, q in covers]
    total = 1
    for u in unit_lists:
        total *= len(u)
    if total > bound:
        raise TooLarge(f"{total} transition assignments exceed bound {bound}")
    reps: list[LineBundle] = []
    for choice in itertools.product(*unit_lists):
        u = dict(zip(covers, choice))
        ok = True
        # extend to all pairs through an intermediate cover; verify afterwards
        for _ in range(P.n):
            for p, s in P.pairs:
                if (p, s) in u:
                    continue
                for q in range(P.n):
                    if (p, q) in u and (q, s) in u:
                        R = site.ring(s)
                        u[(p, s)] = R.mul(u[(q, s)], site.hom(q, s)(u[(p, q)]))
                        break
        if len(u) != len(P.pairs):
            ok = False
        if not ok:
            continue
        L = LineBundle(site, u)
        if not L.check()[0]:
            continue
        if not any(L.is_isomorphic(M) for M in reps):
            reps.append(L)
    return reps


def square_zero_ideal(R: FiniteRing) -> np.ndarray:
    """Generators (rows) of ``nil(R) ∩ Ann(nil(R))``, an ideal with square zero."""
    nil = [x for x in R.elements() if R.is_zero(R.power(x, 64))]
    gens = [x for x in nil if not R.is_zero(x) and all(R.is_zero(R.mul(x, y)) for y in nil)]
    return np.array(gens, dtype=np.int64).reshape(-1, R.k)


def _random_nerve_1cocycle(site: PosetSite, F: SheafModule, rng: np.random.Generator) -> np.ndarray:
    C = nerve_complex(site, F)
    _, Z = C.dmap(1).kernel
    if Z.shape[1] == 0:
        return np.zeros(C.term(1).rank, dtype=np.int64)
    coeff = rng.integers(0, max(C.term(1).group.N, 1), size=Z.shape[1])
    return C.term(1).group.reduce(Z @ coeff)


def _structured_line_bundle(site: PosetSite, rng: np.random.Generator) -> LineBundle:
    """``(+-1) * (1 + a) * gauge`` with ``a`` a random 1-cocycle in a square-zero ideal."""
    P = site.poset
    R = site.ring(0)
    units = {pq: R.one_vec.copy() for pq in P.pairs}
    gens = square_zero_ideal(R)
    if len(gens):
        Imod, incl = ideal(R, gens)
        a = _random_nerve_1cocycle(site, constant_sheaf(site, Imod), rng)
        for pq in P.pairs:
            v = nerve_value(site, constant_sheaf(site, Imod), 1, a, pq)
            units[pq] = R.add(units[pq], R.reduce(incl @ v))
    sign_site = PosetSite.constant(P, cyclic(2))
    c = _random_nerve_1cocycle(sign_site, constant_sheaf(sign_site, free(cyclic(2), 1)), rng)
    for j, pq in enumerate(P.chains[1] if len(P.chains) > 1 else ()):
        if c[j] % 2:
            units[pq] = R.neg(units[pq])
    L = LineBundle(site, units)
    U = R.units()
    return L.gauge([U[rng.integers(len(U))] for _ in range(P.n)])


def random_line_bundle(site: PosetSite, rng: np.random.Generator, max_steps: int = 2000) -> LineBundle:
    """A random invertible sheaf.

    On constant sites see :func:`_structured_line_bundle`.  Otherwise the sheaf
    is built point by point in topological order.

    At each point ``s`` one random unit is drawn per group of covers linked
    through common smaller points; the other cover transitions are forced by
    the cocycle condition.  An inconsistent configuration below ``s`` is
    redrawn.  Falls back to the trivial sheaf after ``max_steps`` draws.
    """
    if site.is_constant():
        return _structured_line_bundle(site, rng)
    P = site.poset
    order = P.topological_order()
    below = {s: [p for p in range(P.n) if P.lt(p, s)] for s in order}
    covers_into = {s: [q for q, t in P.covers if t == s] for s in order}
    units = {s: site.ring(s).units() for s in order}
    u: dict = {}
    steps = [0]

    def fill(s) -> bool:
        R = site.ring(s)
        cs = covers_into[s]
        done: set = set()
        for c0 in cs:
            if c0 in done:
                continue
            u[(c0, s)] = units[s][rng.integers(len(units[s]))]
            done.add(c0)
            stack = [c0]
            while stack:
                a = stack.pop()
                for b in cs:
                    if b in done:
                        continue
                    common = [p for p in range(P.n) if P.leq[p, a] and P.leq[p, b]]
                    if not common:
                        continue
                    p = common[0]
                    ua = R.mul(u[(a, s)], site.hom(a, s)(u[(p, a)]) if p != a else R.one_vec)
                    vb = site.hom(b, s)(u[(p, b)]) if p != b else R.one_vec
                    u[(b, s)] = R.mul(ua, R.inverse(vb))
                    done.add(b)
                    stack.append(b)
        for p in below[s]:
            if p in cs:
                continue
            q = next(q for q in cs if P.leq[p, q])
            u[(p, s)] = R.mul(u[(q, s)], site.hom(q, s)(u[(p, q)]))
        for p in below[s]:
            for q in below[s]:
                if P.lt(p, q):
                    if not R.eq(R.mul(u[(q, s)], site.hom(q, s)(u[(p, q)])), u[(p, s)]):
                        return False
        return True

    def rec(i) -> bool:
        if i == len(order):
            return True
        s = order[i]
        if not covers_into[s]:
            return rec(i + 1)
        for _ in range(4):
            steps[0] += 1
            if steps[0] > max_steps:
                return False
            if fill(s) and rec(i + 1):
                return True
        return False

    if not rec(0):
        return LineBundle.trivial(site)
    return LineBundle(site, {pq: u[pq] for pq in P.pairs})


# -- site builders -------------------------------------------------------------------------

def point_poset() -> Poset:
    return Poset(("pt",), np.ones((1, 1), dtype=bool))


def chain_poset(n: int) -> Poset:
    names = tuple(f"c{i}" for i in range(n))
    return Poset.from_relations(names, [(names[i], names[i + 1]) for i in range(n - 1)])


def wedge_poset() -> Poset:
    """Two minimal points below one maximal point (contractible)."""
    return Poset.from_relations(("a", "b", "c"), [("a", "c"), ("b", "c")])


def pseudo_circle_poset() -> Poset:
    return Poset.from_relations(("a", "b", "c", "d"), [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")])


def sphere6_poset() -> Poset:
    """Suspension of the pseudo-circle; its order complex is a 2-sphere."""
    names = ("a", "b", "c", "d", "e", "f")
    rel = [(x, y) for x in "ab" for y in "cd"] + [(x, y) for x in "cd" for y in "ef"]
    return Poset.from_relations(names, rel)


def torus_poset() -> Poset:
    return pseudo_circle_poset().product(pseudo_circle_poset())


def rp2_poset() -> Poset:
    """Face poset of the hemi-octahedron: 3 vertices, 6 edges, 4 triangles.

    Its order complex triangulates the real projective plane.
    """
    # octahedron vertices +-x, +-y, +-z; antipodal identification
    verts = ["x", "y", "z"]
    sign_classes = []
    for sy in (1, -1):
        for sz in (1, -1):
            sign_classes.append((1, sy, sz))
    edges = []
    for a, b in [(0, 1), (0, 2), (1, 2)]:
        for s in (1, -1):
            edges.append((a, b, s))
    names = verts + [f"e{verts[a]}{verts[b]}{'+' if s > 0 else '-'}" for a, b, s in edges]
    tri_names = [f"t{''.join('+' if v > 0 else '-' for v in sc)}" for sc in sign_classes]
    names += tri_names
    rel = []
    for i, (a, b, s) in enumerate(edges):
        en = names[3 + i]
        rel += [(verts[a], en), (verts[b], en)]
        for t, sc in enumerate(sign_classes):
            # triangle (sx x, sy y, sz z) contains edge between axis a,b with relative sign s
            if sc[a] * sc[b] == s:
                rel.append((en, tri_names[t]))
    return Poset.from_relations(tuple(names), rel)


def random_poset(rng: np.random.Generator, n: int, density: float = 0.4) -> Poset:
    """Random order from a random DAG on ``n`` points (edges go up in index)."""
    names = tuple(f"r{i}" for i in range(n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return Poset.from_relations(names, pairs)


POSETS = {
    "point": point_poset,
    "chain": lambda: chain_poset(3),
    "wedge": wedge_poset,
    "pseudo-circle": pseudo_circle_poset,
    "sphere6": sphere6_poset,
    "torus-model": torus_poset,
    "rp2": rp2_poset,
}
