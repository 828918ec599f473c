"""Deformations of locally free complexes along a square-zero extension.

A deformation is recorded as lifted matrices ``(d', rho')`` over ``O'`` on the
chosen bases.  Its failure to be a complex of sheaves is an explicit 2-cocycle
in ``Tot(E, E (x) K)`` with components

* ``-d' d'`` on points (Hom degree 2),
* ``rho' d' - d' rho'`` on pairs (Hom degree 1),
* ``rho'_qs phi(rho'_pq) - rho'_ps`` on triples (Hom degree 0).

With these signs, replacing ``(d', rho')`` by ``(d' + a, rho' - b)`` changes
the cocycle by ``-D(a, b)``; this fixes the sign of the torsor action.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .detline import alternating_det, det_complex
from .module import FpModule, free, ring_matrix_to_group
from .ring import FiniteRing, RingHom, reye, rmatmul, rzeros
from .site import (CechHom, FreeSheafComplex, LineBundle, PosetSite, SheafComplex, SheafModule,
                   nerve_cochain)
from .complexes import Complex
from .trace import CechClass, ext_trace, nerve_class, total_class
from .zn import AbGroup, LinearMap


class BudgetExceeded(RuntimeError):
    """The finite search space is larger than the allowed budget."""


class NotClosed(ValueError):
    pass


# -- square-zero extensions ----------------------------------------------------------------

@dataclass(eq=False)
class SquareZeroExt:
    """Stalkwise surjections ``O'(p) -> O(p)`` compatible with restrictions, with ``K^2 = 0``.

    ``section`` optionally holds ring maps ``O(p) -> O'(p)`` splitting the
    surjections compatibly (trivial extensions); they give canonical lifts.
    """

    big: PosetSite
    small: PosetSite
    pi: tuple
    section: tuple | None = None
    name: str = ""

    def __post_init__(self):
        self.pi = tuple(self.pi)
        self._totals: dict = {}

    @staticmethod
    def constant(poset, big_ring: FiniteRing, small_ring: FiniteRing, pi: RingHom,
                 section: RingHom | None = None, name: str = "") -> "SquareZeroExt":
        big = PosetSite.constant(poset, big_ring)
        small = PosetSite.constant(poset, small_ring)
        sec = None if section is None else (section,) * poset.n
        return SquareZeroExt(big, small, (pi,) * poset.n, sec, name=name)

    @property
    def site(self) -> PosetSite:
        return self.small

    @property
    def n(self) -> int:
        return self.small.n

    @cached_property
    def _kernel(self) -> list:
        out = []
        for p in range(self.n):
            Kg, incl = self.pi[p].kernel_gens
            out.append((Kg, incl))
        return out

    def K_group(self, p: int) -> AbGroup:
        return self._kernel[p][0]

    def K_incl(self, p: int) -> np.ndarray:
        """Group matrix ``K(p) -> O'(p)``."""
        return self._kernel[p][1]

    @cached_property
    def K_modules(self) -> tuple[FpModule, ...]:
        mods = []
        for p in range(self.n):
            Rb = self.big.ring(p)
            if not self.kdim(p):
                mods.append(FpModule(self.small.ring(p), AbGroup(()),
                                     np.zeros((self.small.ring(p).k, 0, 0), dtype=np.int64)))
                continue
            # express the action in the coordinates of K_group(p)
            incl = self._incl_maps[p]
            A = []
            for a in range(Rb.k):
                Y, ok = incl.solve(Rb.gen_action[a] @ self.K_incl(p))
                assert ok.all()
                A.append(Y)
            big_mod = FpModule(Rb, self.K_group(p), np.stack(A))
            mods.append(big_mod.descend(self.pi[p]))
        return tuple(mods)

    @cached_property
    def K(self) -> SheafModule:
        """The kernel as a sheaf of modules over ``O``."""
        res = {}
        for p, q in self.small.poset.pairs:
            Y, ok = self._incl_maps[q].solve(self.big.hom(p, q).images @ self.K_incl(p))
            assert ok.all(), "restriction does not preserve the kernel"
            res[(p, q)] = Y
        return SheafModule(self.small, self.K_modules, res)

    @cached_property
    def _incl_maps(self) -> tuple[LinearMap, ...]:
        return tuple(LinearMap(self.K_incl(p), self.K_group(p), self.big.ring(p).group) for p in range(self.n))

    def kdim(self, p: int) -> int:
        return self.K_group(p).rank

    def to_K(self, p: int, X) -> np.ndarray:
        """``O'``-coordinates (last axis) of kernel elements to ``K``-coordinates."""
        X = np.asarray(X, dtype=np.int64)
        Rb = self.big.ring(p)
        flat = X.reshape(-1, Rb.k).T
        Y, ok = self._incl_maps[p].solve(flat)
        if not ok.all():
            raise ValueError("element is not in the kernel")
        return Y.T.reshape(X.shape[:-1] + (self.kdim(p),))

    def from_K(self, p: int, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.int64)
        return self.big.ring(p).reduce(np.einsum("ca,...a->...c", self.K_incl(p), Y))

    def lift(self, p: int, X, rng: np.random.Generator | None = None) -> np.ndarray:
        """Lift ``O(p)`` coordinates to ``O'(p)``: canonical via the section if any, else some
        preimage; ``rng`` adds a random kernel element to every entry."""
        X = np.asarray(X, dtype=np.int64)
        if self.section is not None:
            out = self.section[p](X)
        else:
            out = self.pi[p].lift(X)
        if rng is not None and self.kdim(p):
            Kg = self.K_group(p)
            noise = rng.integers(0, np.array(Kg.orders), size=X.shape[:-1] + (Kg.rank,))
            out = out + self.from_K(p, noise)
        return self.big.ring(p).reduce(out)

    def reduce(self, p: int, X) -> np.ndarray:
        return self.pi[p](X)

    def check(self) -> tuple[bool, str | None]:
        for site in (self.big, self.small):
            ok, why = site.check()
            if not ok:
                return False, why
        for p in range(self.n):
            ok, why = self.pi[p].check()
            if not ok:
                return False, f"surjection at {p}: {why}"
            if not self.pi[p].is_surjective():
                return False, f"map at {p} is not surjective"
            Rb = self.big.ring(p)
            gens = self.K_incl(p).T
            for a, b in itertools.product(gens, repeat=2):
                if not Rb.is_zero(Rb.mul(a, b)):
                    return False, f"kernel at {p} does not square to zero"
            if self.section is not None:
                ok, why = self.section[p].check()
                if not ok or not self.pi[p].compose(self.section[p]) == RingHom.identity(self.small.ring(p)):
                    return False, f"section at {p} is not a splitting"
        for p, q in self.small.poset.pairs:
            lhs = self.pi[q].compose(self.big.hom(p, q))
            rhs = self.small.hom(p, q).compose(self.pi[p])
            if lhs != rhs:
                return False, f"surjections do not commute with restriction {p}->{q}"
            if self.section is not None:
                if self.big.hom(p, q).compose(self.section[p]) != self.section[q].compose(self.small.hom(p, q)):
                    return False, f"section does not commute with restriction {p}->{q}"
        return True, None

    def total(self, E: FreeSheafComplex) -> CechHom:
        """``Tot(E, E (x) K)``, cached per complex."""
        key = id(E)
        hit = self._totals.get(key)
        if hit is None or hit[0] is not E:
            hit = (E, CechHom(E, E.tensor(self.K)))
            self._totals[key] = hit
        return hit[1]

    def total_E(self, E: FreeSheafComplex) -> CechHom:
        """``Tot(E, E)`` over ``O``."""
        key = ("EE", id(E))
        hit = self._totals.get(key)
        if hit is None or hit[0] is not E:
            hit = (E, CechHom(E, E.tensor()))
            self._totals[key] = hit
        return hit[1]

    # -- conversions between K-valued matrices and slot components --------------------

    def slot_from_big(self, q: int, A) -> np.ndarray:
        """Slot component of an ``O'(q)``-matrix with entries in ``K``."""
        A = np.asarray(A, dtype=np.int64)
        rows, cols = A.shape[:2]
        Km = self.to_K(q, A)  # rows x cols x kdim
        return Km.transpose(0, 2, 1).reshape(rows * self.kdim(q), cols)

    def big_from_slot(self, q: int, comp, rows: int) -> np.ndarray:
        comp = np.asarray(comp, dtype=np.int64)
        cols = comp.shape[1]
        Km = comp.reshape(rows, self.kdim(q), cols).transpose(0, 2, 1)
        return self.from_K(q, Km)


def trivial_extension(site: PosetSite, name: str = "") -> SquareZeroExt:
    """``O[eps]/(eps^2) -> O`` with the canonical section."""
    from .ring import dual_numbers
    rings, pis, secs = [], [], []
    for p in range(site.n):
        R = site.ring(p)
        D = dual_numbers(R)
        k = R.k
        rings.append(D)
        pis.append(RingHom(D, R, np.concatenate([np.eye(k, dtype=np.int64), np.zeros((k, k), dtype=np.int64)], 1)))
        secs.append(RingHom(R, D, np.concatenate([np.eye(k, dtype=np.int64), np.zeros((k, k), dtype=np.int64)], 0)))
    homs = {}
    for (p, q), h in site.homs.items():
        k_p, k_q = site.ring(p).k, site.ring(q).k
        M = np.zeros((2 * k_q, 2 * k_p), dtype=np.int64)
        M[:k_q, :k_p] = h.images
        M[k_q:, k_p:] = h.images
        homs[(p, q)] = RingHom(rings[p], rings[q], M)
    big = PosetSite(site.poset, tuple(rings), homs, name=site.name)
    return SquareZeroExt(big, site, tuple(pis), tuple(secs), name=name or "trivial")


# -- deformation representatives -------------------------------------------------------------

@dataclass(eq=False)
class DefRep:
    """Lifted differentials and restrictions of ``base`` over ``O'``."""

    ext: SquareZeroExt
    base: FreeSheafComplex
    lifted: FreeSheafComplex

    def reduces(self) -> bool:
        X, E = self.ext, self.base
        for p in range(X.n):
            for n in range(E.lo, E.hi):
                if not np.array_equal(X.reduce(p, self.lifted.dmat(p, n)), E.dmat(p, n)):
                    return False
        for p, q in X.small.poset.pairs:
            for n in E.degrees():
                if not np.array_equal(X.reduce(q, self.lifted.rhomat(p, q, n)), E.rhomat(p, q, n)):
                    return False
        return True

    def is_closed(self) -> bool:
        return self.lifted.check()[0]

    def d(self, p: int, n: int) -> np.ndarray:
        return self.lifted.dmat(p, n)

    def rho(self, p: int, q: int, n: int) -> np.ndarray:
        return self.lifted.rhomat(p, q, n)


def partial_lift(ext: SquareZeroExt, E: FreeSheafComplex, rng: np.random.Generator | None = None) -> DefRep:
    """Entrywise lift of all matrices of ``E`` (canonical for split extensions when ``rng`` is None)."""
    d = {p: [ext.lift(p, m, rng) for m in E.d[p]] for p in range(E.site.n)}
    rho = {(p, q): [ext.lift(q, m, rng) for m in ms] for (p, q), ms in E.rho.items()}
    return DefRep(ext, E, FreeSheafComplex(ext.big, E.lo, E.ranks, d, rho))


def _big_mul(ext, q, *mats):
    R = ext.big.ring(q)
    out = mats[0]
    for M in mats[1:]:
        out = rmatmul(R, out, M)
    return out


def obstruction_cochain(rep: DefRep) -> np.ndarray:
    """The failure cocycle of a partial lift, in ``Tot^2(E, E (x) K)``."""
    ext, E = rep.ext, rep.base
    T = ext.total(E)
    P = E.site.poset
    comps = {}
    for p in range(E.site.n):
        for n in range(E.lo, E.hi - 1):
            A = _big_mul(ext, p, rep.d(p, n + 1), rep.d(p, n))
            comps[((p,), n)] = ext.slot_from_big(p, ext.big.ring(p).reduce(-A))
    for p, q in P.pairs:
        phi = ext.big.hom(p, q)
        for n in range(E.lo, E.hi):
            A = _big_mul(ext, q, rep.rho(p, q, n + 1), phi(rep.d(p, n))) \
                - _big_mul(ext, q, rep.d(q, n), rep.rho(p, q, n))
            comps[((p, q), n)] = ext.slot_from_big(q, ext.big.ring(q).reduce(A))
    for c in P.chains[2] if len(P.chains) > 2 else ():
        p, q, s = c
        for n in E.degrees():
            A = _big_mul(ext, s, rep.rho(q, s, n), ext.big.hom(q, s)(rep.rho(p, q, n))) - rep.rho(p, s, n)
            comps[(c, n)] = ext.slot_from_big(s, ext.big.ring(s).reduce(A))
    return T.assemble(2, comps)


def obstruction_cocycle(ext: SquareZeroExt, E: FreeSheafComplex, rep: DefRep | None = None,
                        rng: np.random.Generator | None = None) -> CechClass:
    """Class of the failure cocycle of a partial lift (``rep`` or a fresh lift)."""
    if not isinstance(E, FreeSheafComplex):
        from .complexes import NotStrictlyPerfect
        raise NotStrictlyPerfect("complex must be stalkwise strictly perfect with chosen bases")
    rep = rep if rep is not None else partial_lift(ext, E, rng)
    T = ext.total(E)
    return total_class(T, 2, obstruction_cochain(rep))


# -- the route through an acyclic free resolution of E ----------------------------------------

class _GabberData:
    """``G``: for each ``p`` and degree ``n`` a disk ``O'^(r_n(p)) = O'^(r_n(p))`` in degrees ``n, n+1``,
    extended by zero from the up-set of ``p``; ``pi: G -> E`` sends the degree-``n`` generators
    at ``p`` to the basis of ``E^n(p)`` transported by the restriction maps."""

    def __init__(self, ext: SquareZeroExt, E: FreeSheafComplex):
        self.ext, self.E = ext, E
        S = ext.big
        P = S.poset
        self.degrees = range(E.lo, E.hi + 2)
        self.basis: dict = {}
        self.index: dict = {}
        for q in range(S.n):
            for j in self.degrees:
                lst = []
                for p in range(S.n):
                    if P.leq[p, q]:
                        lst += [("a", p, i) for i in range(E.rank(p, j))]
                        lst += [("b", p, i) for i in range(E.rank(p, j - 1))]
                self.basis[q, j] = lst
                self.index[q, j] = {b: t for t, b in enumerate(lst)}
        self.sheaf = self._sheaf()

    def size(self, q, j) -> int:
        return len(self.basis.get((q, j), ()))

    def _sheaf(self) -> SheafComplex:
        S = self.ext.big
        lo = self.E.lo
        stalks = []
        for q in range(S.n):
            R = S.ring(q)
            terms = tuple(free(R, self.size(q, j)) for j in self.degrees)
            diffs = []
            for j in list(self.degrees)[:-1]:
                M = rzeros(R, self.size(q, j + 1), self.size(q, j))
                for t, (kind, p, i) in enumerate(self.basis[q, j]):
                    if kind == "a":
                        M[self.index[q, j + 1][("b", p, i)], t] = R.one_vec
                diffs.append(ring_matrix_to_group(R, M))
            stalks.append(Complex(R, lo, terms, tuple(diffs)))
        res = {}
        for q, t in S.poset.pairs:
            R = S.ring(t)
            phi = S.hom(q, t)
            mats = []
            for j in self.degrees:
                B = rzeros(R, self.size(t, j), self.size(q, j))
                for c, b in enumerate(self.basis[q, j]):
                    B[self.index[t, j][b], c] = R.one_vec
                mats.append(ring_matrix_to_group(R, B) @ np.kron(np.eye(self.size(q, j), dtype=np.int64),
                                                                 phi.images))
            res[(q, t)] = tuple(mats)
        return SheafComplex(S, lo, tuple(stalks), res)

    def projection(self, q: int, j: int) -> np.ndarray:
        """Group matrix of ``pi: G^j(q) -> E^j(q)`` (semilinear along ``O' -> O``)."""
        ext, E = self.ext, self.E
        Rs = ext.small.ring(q)
        cols = []
        for kind, p, i in self.basis[q, j]:
            if kind == "a":
                cols.append(E.rhomat(p, q, j)[:, i])
            else:
                cols.append(rmatmul(Rs, E.dmat(q, j - 1), E.rhomat(p, q, j - 1))[:, i])
        r = E.rank(q, j)
        Pi = np.stack(cols, axis=1) if cols else rzeros(Rs, r, 0)
        return ring_matrix_to_group(Rs, Pi) @ np.kron(np.eye(len(cols), dtype=np.int64), ext.pi[q].images)

    def own_basis(self, q: int, j: int) -> np.ndarray:
        """Group vectors (columns) of the generators ``a_i`` at ``q`` itself in ``G^j(q)``."""
        Rb = self.ext.big.ring(q)
        k = Rb.k
        r = self.E.rank(q, j)
        out = np.zeros((self.size(q, j) * k, r), dtype=np.int64)
        for i in range(r):
            t = self.index[q, j][("a", q, i)]
            out[t * k:(t + 1) * k, i] = Rb.one_vec
        return out

    def kernel_solver(self, q: int, j: int) -> tuple[LinearMap, int]:
        """Solver for ``x = sum_l kappa_l a_l + (element of K S)`` in ``G^j(q)``."""
        ext = self.ext
        Rb = ext.big.ring(q)
        Gq = free(Rb, self.size(q, j))
        target = AbGroup(tuple(ext.small.ring(q).orders) * self.E.rank(q, j))
        _, Sx = LinearMap(self.projection(q, j), Gq.group, target).kernel
        incl = ext.K_incl(q)
        own = self.own_basis(q, j)
        r = self.E.rank(q, j)
        kd = ext.kdim(q)
        cols = []
        for l in range(r):
            for a in range(kd):
                cols.append(Gq.act(incl[:, a]) @ own[:, l])
        ks = [Gq.act(incl[:, a]) @ Sx[:, s] for a in range(kd) for s in range(Sx.shape[1])]
        M = np.stack(cols + ks, axis=1) if cols + ks else np.zeros((Gq.rank, 0), dtype=np.int64)
        src = AbGroup(tuple(ext.K_group(q).orders) * r + (Gq.group.N,) * len(ks))
        return LinearMap(M, src, Gq.group), r * kd


def gabber_obstruction(ext: SquareZeroExt, E: FreeSheafComplex,
                       rng: np.random.Generator | None = None) -> CechClass:
    """Obstruction class from the four-term sequence ``E(x)K -> S(x)O -> G(x)O -> E``.

    ``id_E`` is lifted to ``Hom(E, G)``; two applications of the total
    differential (built from entrywise lifts of ``E`` over ``O'``) followed
    by division through ``K (x) E -> S / K S`` give the class.
    """
    data = _GabberData(ext, E)
    lifted = partial_lift(ext, E, rng).lifted
    T = CechHom(lifted, data.sheaf)
    comps = {((p,), n): data.own_basis(p, n) for p in range(E.site.n) for n in E.degrees() if E.rank(p, n)}
    y0 = T.assemble(0, comps)
    w1 = T.apply(0, y0)
    w2 = T.apply(1, w1)
    TK = ext.total(E)
    out = {}
    solvers: dict = {}
    for s in T.slots(2):
        q = s.chain[-1]
        j = s.n + s.m
        if not E.rank(q, j):
            continue
        key = (q, j)
        if key not in solvers:
            solvers[key] = data.kernel_solver(q, j)
        L, nk = solvers[key]
        X, ok = L.solve(T.component(w2, 2, s.chain, s.n))
        if not ok.all():
            raise ArithmeticError("second lift does not land in the image of E (x) K")
        out[(s.chain, s.n)] = X[:nk]
    return total_class(TK, 2, TK.assemble(2, out))


# -- lifting -----------------------------------------------------------------------------------

@dataclass
class LiftResult:
    status: str            # "found", "none", "obstructed", "unknown"
    rep: DefRep | None = None
    searched: int = 0

    @property
    def exists(self) -> bool | None:
        if self.status == "found":
            return True
        if self.status in ("none", "obstructed"):
            return False
        return None


def _k_translates(ext: SquareZeroExt, p: int, rows: int, cols: int) -> np.ndarray:
    """All ``K(p)``-valued ``rows x cols`` matrices as ``O'(p)`` matrices, stacked."""
    Kg = ext.K_group(p)
    cells = rows * cols
    grids = list(itertools.product(*[range(o) for o in Kg.orders] * cells)) if cells else [()]
    arr = np.array(grids, dtype=np.int64).reshape(len(grids), rows, cols, Kg.rank)
    return ext.from_K(p, arr)


def search_space(ext: SquareZeroExt, E: FreeSheafComplex) -> int:
    total = 1
    for p in range(E.site.n):
        for n in range(E.lo, E.hi):
            total *= ext.K_group(p).size ** (E.rank(p, n + 1) * E.rank(p, n))
    for p, q in E.site.poset.pairs:
        for n in E.degrees():
            total *= ext.K_group(q).size ** (E.rank(q, n) * E.rank(p, n))
    return total


def _exhaustive_point(ext, E, budget) -> LiftResult:
    size = search_space(ext, E)
    if size > budget:
        raise BudgetExceeded(f"search space {size} exceeds budget {budget}")
    R = ext.big.ring(0)
    base = partial_lift(ext, E)
    degs = list(range(E.lo, E.hi))
    cands = []
    for n in degs:
        T = _k_translates(ext, 0, E.rank(0, n + 1), E.rank(0, n))
        cands.append(R.reduce(base.d(0, n)[None] + T))
    if len(degs) <= 1:
        pick = [0] * len(degs)
    else:
        # compatible[i][a, b]: candidate b for degree i+1 after candidate a for degree i
        compat = []
        for i in range(len(degs) - 1):
            A, B = cands[i], cands[i + 1]
            prod = np.einsum("ylma,xmnb,abc->xylnc", B, A, R.table, optimize=True)
            compat.append(~R.reduce(prod).reshape(A.shape[0], B.shape[0], -1).any(axis=2))
        reach = [np.ones(cands[0].shape[0], dtype=bool)]
        for C in compat:
            reach.append((reach[-1][:, None] & C).any(axis=0))
        if not reach[-1].any():
            return LiftResult("none", None, size)
        pick = [0] * len(degs)
        pick[-1] = int(np.nonzero(reach[-1])[0][0])
        for i in range(len(degs) - 2, -1, -1):
            ok = reach[i] & compat[i][:, pick[i + 1]]
            pick[i] = int(np.nonzero(ok)[0][0])
    d = {0: [cands[i][pick[i]] for i in range(len(degs))]}
    rep = DefRep(ext, E, FreeSheafComplex(ext.big, E.lo, E.ranks, d, {}))
    assert rep.is_closed() and rep.reduces()
    return LiftResult("found", rep, size)


def _exhaustive_general(ext, E, budget) -> LiftResult:
    size = search_space(ext, E)
    if size > budget:
        raise BudgetExceeded(f"search space {size} exceeds budget {budget}")
    base = partial_lift(ext, E)
    slots = []
    for p in range(E.site.n):
        for n in range(E.lo, E.hi):
            slots.append(("d", p, n, _k_translates(ext, p, E.rank(p, n + 1), E.rank(p, n))))
    for p, q in E.site.poset.pairs:
        for n in E.degrees():
            slots.append(("r", (p, q), n, _k_translates(ext, q, E.rank(q, n), E.rank(p, n))))
    for choice in itertools.product(*[range(len(s[3])) for s in slots]):
        d = {p: [base.d(p, n).copy() for n in range(E.lo, E.hi)] for p in range(E.site.n)}
        rho = {pq: [base.rho(*pq, n).copy() for n in E.degrees()] for pq in E.site.poset.pairs}
        for (kind, where, n, T), c in zip(slots, choice):
            if kind == "d":
                d[where][n - E.lo] = d[where][n - E.lo] + T[c]
            else:
                rho[where][n - E.lo] = rho[where][n - E.lo] + T[c]
        rep = DefRep(ext, E, FreeSheafComplex(ext.big, E.lo, E.ranks, d, rho))
        if rep.is_closed():
            return LiftResult("found", rep, size)
    return LiftResult("none", None, size)


def _strict_solve(T: CechHom, t: int, ks, target) -> np.ndarray | None:
    """Some ``x`` supported on Cech degrees ``ks`` with ``D x = target``."""
    cols = np.nonzero(T.mask(t, ks))[0]
    G = T.group(t)
    sub = AbGroup(tuple(G.orders[c] for c in cols))
    L = LinearMap(T.D(t)[:, cols], sub, T.group(t + 1))
    y = L.solve_one(target)
    if y is None:
        return None
    x = T.zero(t)
    x[cols] = y
    return x


def lift_exists(ext: SquareZeroExt, E: FreeSheafComplex, budget: int = 2 ** 16,
                method: str = "auto") -> LiftResult:
    """Find a closed deformation of ``E``.

    ``exhaustive`` searches all ``K``-translates of an entrywise lift (raises
    :class:`BudgetExceeded` when the space exceeds ``budget``).  ``structured``
    corrects an entrywise lift by solving for its failure cocycle within
    differentials and restrictions.  ``auto`` prefers the exhaustive search.
    """
    if ext.section is not None:
        rep = partial_lift(ext, E)
        if rep.is_closed():
            return LiftResult("found", rep, 1)
    if method in ("auto", "exhaustive"):
        try:
            if E.site.n == 1:
                return _exhaustive_point(ext, E, budget)
            return _exhaustive_general(ext, E, budget)
        except BudgetExceeded:
            if method == "exhaustive":
                raise
    rep = partial_lift(ext, E)
    T = ext.total(E)
    w = obstruction_cochain(rep)
    x = _strict_solve(T, 1, (0, 1), w)
    if x is not None:
        new = _translate(rep, x)
        if new.is_closed():
            return LiftResult("found", new, 0)
    if not T.cohomology(2).is_coboundary(w):
        return LiftResult("obstructed", None, 0)
    return LiftResult("unknown", None, 0)


# -- torsor structure ----------------------------------------------------------------------------

def _translate(rep: DefRep, x) -> DefRep:
    """``(d' + x^(0,1), rho' - x^(1,0))`` for ``x`` in ``Tot^1`` supported on Cech degrees 0, 1."""
    ext, E = rep.ext, rep.base
    T = ext.total(E)
    d = {p: [rep.d(p, n).copy() for n in range(E.lo, E.hi)] for p in range(E.site.n)}
    rho = {pq: [rep.rho(*pq, n).copy() for n in E.degrees()] for pq in E.site.poset.pairs}
    for s in T.slots(1):
        comp = T.component(x, 1, s.chain, s.n)
        if s.k == 0:
            p = s.chain[0]
            A = ext.big_from_slot(p, comp, E.rank(p, s.n + 1))
            d[p][s.n - E.lo] = ext.big.ring(p).reduce(d[p][s.n - E.lo] + A)
        elif s.k == 1:
            p, q = s.chain
            A = ext.big_from_slot(q, comp, E.rank(q, s.n))
            rho[(p, q)][s.n - E.lo] = ext.big.ring(q).reduce(rho[(p, q)][s.n - E.lo] - A)
        elif comp.any():
            raise ValueError("class must be supported on differentials and restrictions")
    return DefRep(ext, E, FreeSheafComplex(ext.big, E.lo, E.ranks, d, rho))


def torsor_act(alpha, rep: DefRep) -> DefRep:
    """Modify a closed deformation by a 1-cocycle of ``Tot(E, E (x) K)``."""
    T = rep.ext.total(rep.base)
    x = alpha.cochain if isinstance(alpha, CechClass) else np.asarray(alpha)
    if T.apply(1, x).any():
        raise ValueError("alpha is not a cocycle")
    return _translate(rep, x)


def difference_cochain(rep1: DefRep, rep2: DefRep) -> np.ndarray:
    """``x`` with ``rep2 = (d1' + x^(0,1), rho1' - x^(1,0))``."""
    if rep1.base is not rep2.base and not (rep1.base.ranks == rep2.base.ranks and rep1.base.lo == rep2.base.lo):
        raise ValueError("mismatched bases")
    ext, E = rep1.ext, rep1.base
    T = ext.total(E)
    comps = {}
    for p in range(E.site.n):
        for n in range(E.lo, E.hi):
            comps[((p,), n)] = ext.slot_from_big(p, ext.big.ring(p).reduce(rep2.d(p, n) - rep1.d(p, n)))
    for p, q in E.site.poset.pairs:
        for n in E.degrees():
            comps[((p, q), n)] = ext.slot_from_big(q, ext.big.ring(q).reduce(rep1.rho(p, q, n) - rep2.rho(p, q, n)))
    return T.assemble(1, comps)


def difference_class(rep1: DefRep, rep2: DefRep) -> CechClass:
    return total_class(rep1.ext.total(rep1.base), 1, difference_cochain(rep1, rep2))


@dataclass
class Isomorphism:
    """``1 + h`` from ``rep1`` to ``rep2``; ``strict`` when ``h`` only has stalkwise components."""

    h: np.ndarray
    strict: bool
    matrices: dict = field(default_factory=dict)  # p -> list of O'-matrices 1 + h_p^n (strict only)


def strict_iso_matrices(rep: DefRep, h) -> dict:
    ext, E = rep.ext, rep.base
    T = ext.total(E)
    out = {}
    for p in range(E.site.n):
        R = ext.big.ring(p)
        mats = []
        for n in E.degrees():
            comp = T.component(h, 0, (p,), n)
            mats.append(R.reduce(reye(R, E.rank(p, n)) + ext.big_from_slot(p, comp, E.rank(p, n))))
        out[p] = mats
    return out


def is_strict_iso(rep1: DefRep, rep2: DefRep, g: dict) -> bool:
    ext, E = rep1.ext, rep1.base
    for p in range(E.site.n):
        R = ext.big.ring(p)
        for n in range(E.lo, E.hi):
            lhs = rmatmul(R, rep2.d(p, n), g[p][n - E.lo])
            rhs = rmatmul(R, g[p][n + 1 - E.lo], rep1.d(p, n))
            if not np.array_equal(lhs, rhs):
                return False
    for p, q in E.site.poset.pairs:
        R = ext.big.ring(q)
        phi = ext.big.hom(p, q)
        for n in E.degrees():
            lhs = rmatmul(R, rep2.rho(p, q, n), phi(g[p][n - E.lo]))
            rhs = rmatmul(R, g[q][n - E.lo], rep1.rho(p, q, n))
            if not np.array_equal(lhs, rhs):
                return False
    return True


def def_isomorphic(rep1: DefRep, rep2: DefRep) -> Isomorphism | None:
    """An isomorphism ``1 + h`` if the difference class vanishes.

    A stalkwise (strict) ``h`` is preferred; otherwise ``h`` is a general
    degree-0 cochain of the total complex.
    """
    T = rep1.ext.total(rep1.base)
    x = difference_cochain(rep1, rep2)
    y = _strict_solve(T, 0, (0,), x)
    if y is not None:
        h = T.group(0).reduce(-y)
        g = strict_iso_matrices(rep1, h)
        assert is_strict_iso(rep1, rep2, g)
        return Isomorphism(h, True, g)
    y = T.dmap(0).solve_one(x)
    if y is None:
        return None
    return Isomorphism(T.group(0).reduce(-y), False)


# -- automorphisms -----------------------------------------------------------------------------

@dataclass
class AutGroup:
    ext0: object                 # Cohomology of Tot^0(E, E (x) K)
    ext_minus1: object           # Cohomology of Tot^-1(E, E)
    boundary_images: np.ndarray  # columns: cocycles in Tot^0(E, E (x) K)
    image_classes: np.ndarray    # their classes in ext0
    group: AbGroup               # ext0 / image

    @property
    def order(self) -> int:
        return self.group.size


def boundary_map(rep: DefRep, z) -> np.ndarray:
    """Connecting map ``Ext^-1(E, E) -> Ext^0(E, E (x) K)`` on a cocycle ``z`` (lift, differentiate over ``O'``)."""
    ext, E = rep.ext, rep.base
    TE = ext.total_E(E)
    Tb = CechHom(rep.lifted, rep.lifted.tensor())
    TK = ext.total(E)
    comps = {}
    for s in TE.slots(-1):
        q = s.chain[-1]
        j = s.n + s.m
        rows = E.rank(q, j)
        k = ext.small.ring(q).k
        comp = TE.component(z, -1, s.chain, s.n)
        ring_m = comp.reshape(rows, k, s.r).transpose(0, 2, 1)
        big = ext.lift(q, ring_m)
        kb = ext.big.ring(q).k
        comps[(s.chain, s.n)] = big.transpose(0, 2, 1).reshape(rows * kb, s.r)
    zb = Tb.assemble(-1, comps)
    w = Tb.apply(-1, zb)
    out = {}
    for s in Tb.slots(0):
        q = s.chain[-1]
        rows = E.rank(q, s.n + s.m)
        kb = ext.big.ring(q).k
        comp = Tb.component(w, 0, s.chain, s.n)
        big = comp.reshape(rows, kb, s.r).transpose(0, 2, 1)
        out[(s.chain, s.n)] = ext.slot_from_big(q, big)
    return TK.assemble(0, out)


def aut_group(rep: DefRep) -> AutGroup:
    """Automorphisms of a closed deformation modulo homotopy: ``Ext^0(E, E(x)K) / im(boundary)``."""
    if not rep.is_closed():
        raise NotClosed("deformation is not closed")
    ext, E = rep.ext, rep.base
    TK = ext.total(E)
    H0 = TK.cohomology(0)
    Hm1 = ext.total_E(E).cohomology(-1)
    gens = Hm1.generators()
    imgs = [boundary_map(rep, z) for z in gens]
    B = np.stack(imgs, axis=1) if imgs else np.zeros((TK.dim(0), 0), dtype=np.int64)
    classes = np.stack([H0.classify(b) for b in imgs], axis=1) if imgs else np.zeros((H0.group.rank, 0), dtype=np.int64)
    from .zn import Quotient
    Q = Quotient(H0.group, classes)
    return AutGroup(H0, Hm1, B, classes, Q.group)


# -- determinants and lines -------------------------------------------------------------------------

def det_of_deformation(rep: DefRep) -> DefRep:
    """Rank-one deformation of ``det E`` with transitions ``prod_n det(rho'^n)^((-1)^n)``."""
    ext, E = rep.ext, rep.base
    L = det_complex(E).line.as_complex(0)
    rho = {(p, q): [alternating_det(ext.big.ring(q), [rep.rho(p, q, n) for n in E.degrees()], E.lo)
                    .reshape(1, 1, -1)] for p, q in E.site.poset.pairs}
    lifted = FreeSheafComplex(ext.big, 0, L.ranks, {}, rho)
    return DefRep(ext, L, lifted)


def line_obstruction_cochain(ext: SquareZeroExt, L: LineBundle, rng: np.random.Generator | None = None) -> np.ndarray:
    """``u~_qs phi(u~_pq) u~_ps^-1 - 1`` for lifts ``u~`` of the transitions."""
    S = ext.small
    P = S.poset
    lifts = {pq: ext.lift(pq[1], L.u(*pq), rng) for pq in P.pairs}
    vals = {}
    for c in P.chains[2] if len(P.chains) > 2 else ():
        p, q, s = c
        R = ext.big.ring(s)
        prod = R.mul(R.mul(lifts[(q, s)], ext.big.hom(q, s)(lifts[(p, q)])), R.inverse(lifts[(p, s)]))
        vals[c] = ext.to_K(s, R.sub(prod, R.one_vec))
    return nerve_cochain(S, ext.K, 2, vals)


def line_obstruction(ext: SquareZeroExt, L: LineBundle, rng: np.random.Generator | None = None) -> CechClass:
    return nerve_class(ext.small, ext.K, 2, line_obstruction_cochain(ext, L, rng))


def line_alpha(ext: SquareZeroExt, Lc: FreeSheafComplex, beta) -> np.ndarray:
    """The 1-cochain of ``Tot(L, L (x) K)`` whose trace is the nerve cochain ``beta`` of ``K``."""
    from .site import nerve_value
    T = ext.total(Lc)
    comps = {}
    for p, q in ext.small.poset.pairs:
        b = nerve_value(ext.small, ext.K, 1, beta, (p, q))
        u = Lc.rhomat(p, q, Lc.lo)[0, 0]
        comps[((p, q), Lc.lo)] = ext.K.value(q).scale(u, b).reshape(-1, 1)
    return T.assemble(1, comps)


def strict_cocycles(T: CechHom, t: int, ks) -> np.ndarray:
    """Generators (columns) of cocycles supported on Cech degrees ``ks``."""
    cols = np.nonzero(T.mask(t, ks))[0]
    G = T.group(t)
    sub = AbGroup(tuple(G.orders[c] for c in cols))
    _, X = LinearMap(T.D(t)[:, cols], sub, T.group(t + 1)).kernel
    out = np.zeros((T.dim(t), X.shape[1]), dtype=np.int64)
    out[cols] = X
    return out


def random_combination(T: CechHom, t: int, gens: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if gens.shape[1] == 0:
        return T.zero(t)
    c = rng.integers(0, max(T.group(t).N, 1), size=gens.shape[1])
    return T.group(t).reduce(gens @ c)


def det_of_automorphism(rep: DefRep, h) -> np.ndarray:
    """Nerve 0-cochain ``p -> prod_n det(1 + h_p^n)^((-1)^n) - 1`` in ``K``."""
    ext, E = rep.ext, rep.base
    g = strict_iso_matrices(rep, h)
    vals = {}
    for p in range(E.site.n):
        R = ext.big.ring(p)
        dt = alternating_det(R, g[p], E.lo)
        vals[(p,)] = ext.to_K(p, R.sub(dt, R.one_vec))
    return nerve_cochain(ext.small, ext.K, 0, vals)


# -- the main compatibility checks ----------------------------------------------------------------

def check_part_i(ext: SquareZeroExt, E: FreeSheafComplex, rng: np.random.Generator | None = None) -> dict:
    omega = obstruction_cocycle(ext, E, rng=rng)
    lhs = nerve_class(ext.small, ext.K, 2, ext_trace(ext.total(E), ext.K, omega.cochain, 2))
    rhs = line_obstruction(ext, det_complex(E).line, rng)
    return {"ok": lhs.same_class(rhs), "omega_zero": omega.is_zero(), "lhs_zero": lhs.is_zero(),
            "lhs": lhs, "rhs": rhs, "omega": omega}


def check_part_ii(rep: DefRep, samples: int, rng: np.random.Generator) -> dict:
    ext, E = rep.ext, rep.base
    T = ext.total(E)
    gens = strict_cocycles(T, 1, (0, 1))
    det0 = det_of_deformation(rep)
    ok, nonzero = True, 0
    for _ in range(samples):
        alpha = random_combination(T, 1, gens, rng)
        lhs = det_of_deformation(torsor_act(alpha, rep))
        beta = ext_trace(T, ext.K, alpha, 1)
        if not nerve_class(ext.small, ext.K, 1, beta).is_zero():
            nonzero += 1
        rhs = torsor_act(line_alpha(ext, det0.base, beta), det0)
        if not lhs.is_closed() or not difference_class(lhs, rhs).is_zero():
            ok = False
    return {"ok": ok, "nonzero_traces": nonzero, "samples": samples}


def check_part_iii(rep: DefRep, samples: int, rng: np.random.Generator) -> dict:
    ext, E = rep.ext, rep.base
    if not ext.total_E(E).cohomology(-1).group.size == 1:
        return {"ok": None, "reason": "Ext^-1(E, E) is nonzero"}
    T = ext.total(E)
    gens = strict_cocycles(T, 0, (0,))
    ok, nonzero = True, 0
    for _ in range(samples):
        h = random_combination(T, 0, gens, rng)
        g = strict_iso_matrices(rep, h)
        if not is_strict_iso(rep, rep, g):
            ok = False
            continue
        a = det_of_automorphism(rep, h)
        b = ext_trace(T, ext.K, h, 0)
        if ext.K.value(0).group.size and np.asarray(b).any():
            nonzero += 1
        if not np.array_equal(a, b):
            ok = False
    return {"ok": ok, "nonzero_traces": nonzero, "samples": samples}


def verify_main_theorem(ext: SquareZeroExt, E: FreeSheafComplex, rng: np.random.Generator | None = None,
                        samples: int = 10, budget: int = 2 ** 16) -> dict:
    """Check the three compatibilities of determinant and trace on one instance.

    ``part_ii`` and ``part_iii`` are ``None`` when no closed deformation was
    found (or, for ``part_iii``, when ``Ext^-1(E, E)`` is nonzero).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    out = {"part_i": check_part_i(ext, E, rng)["ok"], "part_ii": None, "part_iii": None}
    res = lift_exists(ext, E, budget=budget, method="structured")
    if res.rep is not None:
        out["part_ii"] = check_part_ii(res.rep, samples, rng)["ok"]
        out["part_iii"] = check_part_iii(res.rep, samples, rng)["ok"]
    return out
