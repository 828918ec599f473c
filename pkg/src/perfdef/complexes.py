"""Bounded cochain complexes of modules over a single finite ring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .module import (FpModule, act_matrix, direct_sum, free, ring_matrix_to_group,
                     zero_module)
from .ring import FiniteRing, RingHom
from .zn import AbGroup, Cohomology, LinearMap


class NotStrictlyPerfect(ValueError):
    pass


def _zeros(m: int, n: int) -> np.ndarray:
    return np.zeros((m, n), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Complex:
    """Terms in degrees ``lo .. lo + len(terms) - 1`` with group-level differentials.

    ``diffs[i]`` is the matrix of ``d^(lo+i): terms[i] -> terms[i+1]``.
    """

    ring: FiniteRing
    lo: int
    terms: tuple[FpModule, ...]
    diffs: tuple[np.ndarray, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        if len(terms) == 0:
            object.__setattr__(self, "diffs", ())
        diffs = []
        for i in range(len(terms) - 1):
            d = np.asarray(self.diffs[i], dtype=np.int64).reshape(terms[i + 1].rank, terms[i].rank)
            d = terms[i + 1].reduce(d)
            d.flags.writeable = False
            diffs.append(d)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "diffs", tuple(diffs))

    @property
    def hi(self) -> int:
        return self.lo + len(self.terms) - 1

    def degrees(self) -> range:
        return range(self.lo, self.hi + 1)

    def term(self, n: int) -> FpModule:
        if self.lo <= n <= self.hi:
            return self.terms[n - self.lo]
        return zero_module(self.ring)

    def d(self, n: int) -> np.ndarray:
        """Matrix of ``d^n: term(n) -> term(n+1)``."""
        if self.lo <= n < self.hi:
            return self.diffs[n - self.lo]
        return _zeros(self.term(n + 1).rank, self.term(n).rank)

    def dmap(self, n: int) -> LinearMap:
        return LinearMap(self.d(n), self.term(n).group, self.term(n + 1).group)

    def check(self) -> tuple[bool, str | None]:
        for n in self.degrees():
            M = self.term(n)
            ok, why = M.check()
            if not ok:
                return False, f"term {n}: {why}"
            if not M.is_linear(self.d(n), self.term(n + 1)):
                return False, f"d^{n} is not linear"
            if self.term(n + 2).reduce(self.d(n + 1) @ self.d(n)).any():
                return False, f"d^{n + 1} d^{n} != 0"
        return True, None

    def is_strictly_perfect(self) -> bool:
        return all(M.is_free for M in self.terms)

    def ranks(self) -> dict[int, int]:
        if not self.is_strictly_perfect():
            raise NotStrictlyPerfect("terms are not all free")
        return {n: self.term(n).free_rank for n in self.degrees()}

    def ring_d(self, n: int) -> np.ndarray:
        """Ring matrix of ``d^n`` for free terms (columns are images of basis vectors)."""
        R = self.ring
        src, dst = self.term(n), self.term(n + 1)
        if not (src.is_free and dst.is_free):
            raise NotStrictlyPerfect("terms are not free")
        D = self.d(n)
        k = R.k
        cols = np.stack([D[:, j * k:(j + 1) * k] @ R.one_vec for j in range(src.free_rank)], axis=1) \
            if src.free_rank else _zeros(dst.rank, 0)
        return R.reduce(cols.reshape(dst.free_rank, k, src.free_rank).transpose(0, 2, 1))

    def euler_rank(self) -> int:
        return sum((-1) ** n * r for n, r in self.ranks().items())

    def __repr__(self):
        return f"Complex({self.ring.name}, lo={self.lo}, {list(self.terms)})"


def free_complex(R: FiniteRing, lo: int, mats, ranks=None) -> Complex:
    """Strictly perfect complex from ring matrices ``mats[i]`` of ``d^(lo+i)``."""
    mats = [R.reduce(np.asarray(m, dtype=np.int64).reshape(np.shape(m)[0], np.shape(m)[1], R.k))
            for m in mats]
    if ranks is None:
        ranks = [m.shape[1] for m in mats] + [mats[-1].shape[0]] if mats else [0]
    terms = tuple(free(R, r) for r in ranks)
    diffs = tuple(ring_matrix_to_group(R, m) for m in mats)
    return Complex(R, lo, terms, diffs)


def zero_complex(R: FiniteRing) -> Complex:
    return Complex(R, 0, (), ())


@dataclass(frozen=True, eq=False)
class ChainMap:
    source: Complex
    target: Complex
    comps: dict = field(default_factory=dict)  # degree -> group matrix

    def f(self, n: int) -> np.ndarray:
        if n in self.comps:
            return self.target.term(n).reduce(np.asarray(self.comps[n], dtype=np.int64))
        return _zeros(self.target.term(n).rank, self.source.term(n).rank)

    def degrees(self) -> range:
        return range(min(self.source.lo, self.target.lo), max(self.source.hi, self.target.hi) + 1)

    def check(self) -> tuple[bool, str | None]:
        S, T = self.source, self.target
        for n in self.degrees():
            if not S.term(n).is_linear(self.f(n), T.term(n)):
                return False, f"component {n} is not linear"
            lhs = T.d(n) @ self.f(n)
            rhs = self.f(n + 1) @ S.d(n)
            if T.term(n + 1).reduce(lhs - rhs).any():
                return False, f"not a chain map in degree {n}"
        return True, None

    def compose(self, other: "ChainMap") -> "ChainMap":
        """``self o other``."""
        comps = {n: self.f(n) @ other.f(n) for n in other.degrees()}
        return ChainMap(other.source, self.target, comps)

    @staticmethod
    def identity(C: Complex) -> "ChainMap":
        return ChainMap(C, C, {n: np.eye(C.term(n).rank, dtype=np.int64) for n in C.degrees()})

    @staticmethod
    def zero(S: Complex, T: Complex) -> "ChainMap":
        return ChainMap(S, T, {})


def shift(C: Complex, s: int) -> Complex:
    """``C[s]^n = C^(n+s)`` with differential ``(-1)^s d``."""
    sign = -1 if s % 2 else 1
    return Complex(C.ring, C.lo - s, C.terms, tuple(sign * d for d in C.diffs))


def _block(rows, cols, blocks) -> np.ndarray:
    """Assemble a block matrix from a dict ``(i, j) -> array``."""
    out = _zeros(sum(rows), sum(cols))
    ro = np.concatenate([[0], np.cumsum(rows)]).astype(int)
    co = np.concatenate([[0], np.cumsum(cols)]).astype(int)
    for (i, j), B in blocks.items():
        out[ro[i]:ro[i + 1], co[j]:co[j + 1]] = B
    return out


def cone(f: ChainMap) -> tuple[Complex, ChainMap, ChainMap]:
    """Mapping cone with ``d = [[-d_E, 0], [f, d_F]]`` and the maps ``F -> cone -> E[1]``."""
    E, F = f.source, f.target
    if E.ring != F.ring:
        raise ValueError("mismatched rings")
    lo = min(E.lo - 1, F.lo)
    hi = max(E.hi - 1, F.hi)
    terms, diffs = [], []
    for n in range(lo, hi + 1):
        terms.append(direct_sum([E.term(n + 1), F.term(n)], ring=E.ring))
    for n in range(lo, hi):
        rows = [E.term(n + 2).rank, F.term(n + 1).rank]
        cols = [E.term(n + 1).rank, F.term(n).rank]
        diffs.append(_block(rows, cols, {(0, 0): -E.d(n + 1), (1, 0): f.f(n + 1), (1, 1): F.d(n)}))
    C = Complex(E.ring, lo, tuple(terms), tuple(diffs))
    incl = {n: np.concatenate([_zeros(E.term(n + 1).rank, F.term(n).rank),
                               np.eye(F.term(n).rank, dtype=np.int64)], axis=0) for n in C.degrees()}
    E1 = shift(E, 1)
    proj = {n: np.concatenate([np.eye(E.term(n + 1).rank, dtype=np.int64),
                               _zeros(E.term(n + 1).rank, F.term(n).rank)], axis=1) for n in C.degrees()}
    return C, ChainMap(F, C, incl), ChainMap(C, E1, proj)


class ModuleCohomology:
    """``H^n`` of a complex as a module, with cocycle lifting and class tests."""

    def __init__(self, C: Complex, n: int):
        self.complex, self.n = C, n
        self.groups = Cohomology(C.dmap(n - 1), C.dmap(n))
        Z, X = self.groups._cycles
        M = C.term(n)
        # action on H through the quotient of cycles used by `groups`
        q = self.groups._quot
        Aq = []
        incl = LinearMap(X, Z, M.group)
        for a in range(C.ring.k):
            Y, ok = incl.solve(M.action[a] @ X)
            assert ok.all()
            Aq.append(q.group.reduce(q.P @ Y @ q.S) if q.group.rank else _zeros(0, 0))
        A = np.stack(Aq) if Aq else np.zeros((0, q.group.rank, q.group.rank), dtype=np.int64)
        self.module = FpModule(C.ring, q.group, A)

    @property
    def group(self) -> AbGroup:
        return self.module.group

    @property
    def size(self) -> int:
        return self.group.size

    def is_zero(self) -> bool:
        return self.size == 1

    def is_cocycle(self, x) -> bool:
        return self.groups.is_cocycle(x)

    def is_coboundary(self, x) -> bool:
        return self.groups.is_coboundary(x)

    def classify(self, x) -> np.ndarray:
        return self.groups.classify(x)

    def lift(self, h) -> np.ndarray:
        return self.groups.lift(h)

    def generators(self) -> list[np.ndarray]:
        return self.groups.generators()


def cohomology(C: Complex, n: int) -> ModuleCohomology:
    return ModuleCohomology(C, n)


def induced_map(f: ChainMap, n: int) -> tuple[np.ndarray, ModuleCohomology, ModuleCohomology]:
    HE, HF = cohomology(f.source, n), cohomology(f.target, n)
    cols = [HF.classify(f.f(n) @ HE.lift(np.eye(HE.group.rank, dtype=np.int64)[i]))
            for i in range(HE.group.rank)]
    M = np.stack(cols, axis=1) if cols else _zeros(HF.group.rank, 0)
    return M, HE, HF


def is_quasi_iso(f: ChainMap) -> bool:
    for n in range(f.degrees().start - 1, f.degrees().stop + 1):
        M, HE, HF = induced_map(f, n)
        if HE.size != HF.size:
            return False
        if not LinearMap(M, HE.group, HF.group).is_injective():
            return False
    return True


def is_acyclic(C: Complex) -> bool:
    return all(cohomology(C, n).is_zero() for n in C.degrees())


def is_strictly_perfect(C: Complex) -> bool:
    return C.is_strictly_perfect()


# -- Hom complexes ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HomComplex:
    """``Hom^m(E, F) = prod_n Hom(E^n, F^(n+m))`` with ``D f = d f - (-1)^m f d``.

    A homomorphism from the free module ``E^n`` is stored as the list of
    images of its basis vectors, so the slot for ``n`` is ``(F^(n+m))^(r_n)``.
    """

    source: Complex
    target: Complex
    complex: Complex
    slots: dict  # m -> list of (n, offset, size)

    def slot(self, m: int, n: int) -> slice:
        for nn, off, size in self.slots.get(m, []):
            if nn == n:
                return slice(off, off + size)
        raise KeyError((m, n))

    def component(self, x, m: int, n: int) -> np.ndarray:
        """Matrix ``F^(n+m)``-coordinates x basis of ``E^n`` for the degree-``m`` element ``x``."""
        r = self.source.term(n).free_rank
        g = self.target.term(n + m).rank
        return np.asarray(x)[self.slot(m, n)].reshape(r, g).T

    def assemble(self, m: int, comps: dict) -> np.ndarray:
        """Inverse of :meth:`component`: ``comps[n]`` is a group matrix ``E^n -> F^(n+m)``
        evaluated on basis vectors (shape ``g x r``)."""
        out = np.zeros(self.complex.term(m).rank, dtype=np.int64)
        for n, B in comps.items():
            out[self.slot(m, n)] = np.asarray(B).T.reshape(-1)
        return self.complex.term(m).reduce(out)

    def from_chain_map(self, f: ChainMap) -> np.ndarray:
        """Degree-0 element of a chain map given by group matrices on free terms."""
        comps = {}
        for n in self.source.degrees():
            r = self.source.term(n).free_rank
            k = self.source.ring.k
            basis = np.zeros((self.source.term(n).rank, r), dtype=np.int64)
            for i in range(r):
                basis[i * k:(i + 1) * k, i] = self.source.ring.one_vec
            comps[n] = f.f(n) @ basis
        return self.assemble(0, comps)


def hom_complex(E: Complex, F: Complex) -> HomComplex:
    if not E.is_strictly_perfect():
        raise NotStrictlyPerfect("source is not strictly perfect")
    R = E.ring
    r = E.ranks()
    mlo = F.lo - E.hi
    mhi = F.hi - E.lo
    terms, slots = [], {}
    for m in range(mlo, mhi + 1):
        mods, sl, off = [], [], 0
        for n in E.degrees():
            M = F.term(n + m)
            mods.append(M.power(r[n]))
            size = M.rank * r[n]
            sl.append((n, off, size))
            off += size
        terms.append(direct_sum(mods, ring=R))
        slots[m] = sl
    diffs = []
    for m in range(mlo, mhi):
        src, dst = terms[m - mlo], terms[m + 1 - mlo]
        D = _zeros(dst.rank, src.rank)
        sign = -1 if m % 2 else 1
        for (n, so, ss) in slots[m]:
            # d_F o f^n lands in slot n of degree m+1
            dF = F.d(n + m)
            for (n2, do, ds) in slots[m + 1]:
                if n2 == n and ds and ss:
                    D[do:do + ds, so:so + ss] += np.kron(np.eye(r[n], dtype=np.int64), dF)
            # -(-1)^m f^n o d_E^(n-1) lands in slot n-1 of degree m+1
            if n - 1 >= E.lo:
                A = E.ring_d(n - 1)  # r_n x r_(n-1)
                Fm = F.term(n + m)
                blk = act_matrix(Fm, np.transpose(A, (1, 0, 2)))
                for (n2, do, ds) in slots[m + 1]:
                    if n2 == n - 1 and ds and ss:
                        D[do:do + ds, so:so + ss] -= sign * blk
        diffs.append(D)
    C = Complex(R, mlo, tuple(terms), tuple(diffs))
    return HomComplex(E, F, C, slots)


def ext(E: Complex, F: Complex, i: int) -> ModuleCohomology:
    return cohomology(hom_complex(E, F).complex, i)


def tensor_with_module(C: Complex, M: FpModule, phi: RingHom | None = None) -> Complex:
    """Termwise ``C^n (x) M = M^(r_n)`` for strictly perfect ``C`` (``M`` over ``phi.target``)."""
    if not C.is_strictly_perfect():
        raise NotStrictlyPerfect("complex is not strictly perfect")
    if phi is None:
        phi = RingHom.identity(C.ring)
    if M.ring != phi.target:
        raise ValueError("module is not over the target of the ring map")
    r = C.ranks()
    terms = tuple(M.power(r[n]) for n in C.degrees())
    diffs = tuple(act_matrix(M, phi(C.ring_d(n))) for n in range(C.lo, C.hi))
    return Complex(M.ring, C.lo, terms, diffs)


def base_change(C: Complex, phi: RingHom) -> Complex:
    """Strictly perfect ``C (x)_R S`` along ``phi: R -> S``."""
    return tensor_with_module(C, free(phi.target, 1), phi)
