"""Traces: of endomorphisms, of Cech-Hom classes, and of filtered maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ring import rinv
from .site import (CechHom, FreeSheafComplex, PosetSite, SheafModule, cech_hom_total,
                   nerve_cochain, nerve_complex)
from .zn import Cohomology, LinearMap


class CechClass:
    """A cochain of a given degree together with the cohomology it is a class in."""

    def __init__(self, coh: Cohomology, degree: int, cochain, complex_=None):
        self.coh = coh
        self.degree = degree
        self.cochain = coh.C.reduce(np.asarray(cochain, dtype=np.int64))
        self.complex = complex_

    def is_cocycle(self) -> bool:
        return self.coh.is_cocycle(self.cochain)

    def is_zero(self) -> bool:
        return self.coh.is_coboundary(self.cochain)

    def classify(self) -> np.ndarray:
        return self.coh.classify(self.cochain)

    def __add__(self, other: "CechClass") -> "CechClass":
        return CechClass(self.coh, self.degree, self.cochain + other.cochain, self.complex)

    def __sub__(self, other: "CechClass") -> "CechClass":
        return CechClass(self.coh, self.degree, self.cochain - other.cochain, self.complex)

    def __neg__(self) -> "CechClass":
        return CechClass(self.coh, self.degree, -self.cochain, self.complex)

    def same_class(self, other: "CechClass") -> bool:
        return (self - other).is_zero()

    def __repr__(self):
        try:
            cls = tuple(int(c) for c in self.classify())
        except ValueError:
            cls = "not a cocycle"
        return f"CechClass(degree={self.degree}, class={cls})"


# nerve cohomology is reused across many checks on one instance
_NERVE_CACHE: dict = {}


def nerve_cohomology(site: PosetSite, F: SheafModule, t: int) -> Cohomology:
    key = (id(site), id(F), t)
    hit = _NERVE_CACHE.get(key)
    if hit is not None and hit[0] is site and hit[1] is F:
        return hit[2]
    C = nerve_complex(site, F)
    coh = Cohomology(C.dmap(t - 1), C.dmap(t))
    if len(_NERVE_CACHE) > 256:
        _NERVE_CACHE.clear()
    _NERVE_CACHE[key] = (site, F, coh)
    return coh


def nerve_class(site: PosetSite, F: SheafModule, t: int, cochain) -> CechClass:
    return CechClass(nerve_cohomology(site, F, t), t, cochain)


def total_class(T: CechHom, t: int, cochain) -> CechClass:
    return CechClass(T.cohomology(t), t, cochain, T)


# -- traces -----------------------------------------------------------------------------

def _slot_trace(E: FreeSheafComplex, M: SheafModule, chain, n: int, comp: np.ndarray) -> np.ndarray:
    """Trace of ``f o rho^-1`` for a slot map ``f`` with values in ``E^n (x) M``."""
    S = E.site
    p0, pk = chain[0], chain[-1]
    Mk = M.value(pk)
    r = E.rank(p0, n)
    g = Mk.rank
    F = comp.reshape(r, g, r)  # F[l, :, i] = M-coordinates of entry (l, i)
    if p0 != pk:
        rho_inv = rinv(S.ring(pk), E.rhomat(p0, pk, n))  # maps E(pk) -> E(p0) (x) O(pk)
        # (f o rho^-1)[:, i] = sum_j rho_inv[j, i] * f[:, j]
        F = np.einsum("jiab,lbj->lai", Mk.act_many(rho_inv), F)
    tr = np.einsum("lal->a", F)
    return Mk.reduce(tr)


def ext_trace(T: CechHom, M: SheafModule, x, t: int) -> np.ndarray:
    """Nerve ``t``-cochain of ``M`` from the Hom-degree-0 part of ``x`` in ``Tot^t(E, E (x) M)``."""
    E = T.E
    S = T.site
    vals: dict = {}
    for s in T.slots(t):
        if s.m != 0:
            continue
        comp = T.component(x, t, s.chain, s.n)
        tr = _slot_trace(E, M, s.chain, s.n, comp)
        sign = -1 if s.n % 2 else 1
        vals[s.chain] = vals.get(s.chain, 0) + sign * tr
    return nerve_cochain(S, M, t, {c: M.value(c[-1]).reduce(v) for c, v in vals.items()})


def ext_trace_class(c: CechClass, M: SheafModule) -> CechClass:
    if not c.is_cocycle():
        raise ValueError("input is not a cocycle")
    T = c.complex
    return nerve_class(T.site, M, c.degree, ext_trace(T, M, c.cochain, c.degree))


def endo_cochain(E: FreeSheafComplex, M: SheafModule, u: dict) -> tuple[CechHom, np.ndarray]:
    """Degree-0 cochain of stalkwise maps ``u[p][i]`` (``M``-valued ``r x r`` matrices)."""
    T = cech_hom_total(E.site, E, E.tensor(M))
    comps = {}
    for p in range(E.site.n):
        for i, n in enumerate(E.degrees()):
            U = np.asarray(u[p][i], dtype=np.int64)
            r = E.rank(p, n)
            if r:
                g = M.value(p).rank
                comps[((p,), n)] = U.reshape(r, r, g).transpose(0, 2, 1).reshape(r * g, r)
    return T, T.assemble(0, comps)


def endo_trace(E: FreeSheafComplex, u: dict, M: SheafModule) -> CechClass:
    """Alternating sum of stalkwise traces of a map ``E -> E (x) M`` compatible with restrictions."""
    T, x = endo_cochain(E, M, u)
    if T.apply(0, x).any():
        raise ValueError("map is not compatible with differentials and restrictions")
    return nerve_class(E.site, M, 0, ext_trace(T, M, x, 0))


# -- filtrations ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FilteredComplex:
    """Decreasing filtration by basis levels: ``F^i`` is spanned by basis vectors of level ``>= i``."""

    E: FreeSheafComplex
    levels: tuple  # levels[i] = tuple of integer levels of the basis of E^(lo+i)

    def level(self, n: int) -> tuple[int, ...]:
        return tuple(self.levels[n - self.E.lo]) if self.E.lo <= n <= self.E.hi else ()

    def allowed(self, n_src: int, n_dst: int) -> np.ndarray:
        """Entries ``(a, b)`` of a matrix ``E^n_src -> E^n_dst`` preserving the filtration."""
        a = np.array(self.level(n_dst), dtype=int)
        b = np.array(self.level(n_src), dtype=int)
        return a[:, None] >= b[None, :]

    def steps(self) -> list[int]:
        return sorted({lv for lvs in self.levels for lv in lvs})

    def check(self) -> tuple[bool, str | None]:
        E = self.E
        S = E.site
        for p in range(S.n):
            for n in range(E.lo, E.hi):
                bad = ~self.allowed(n, n + 1)
                if S.ring(p).reduce(E.dmat(p, n))[bad].any():
                    return False, f"differential leaves the filtration at {p} degree {n}"
        for p, q in S.poset.pairs:
            for n in E.degrees():
                bad = ~self.allowed(n, n)
                if S.ring(q).reduce(E.rhomat(p, q, n))[bad].any():
                    return False, f"restriction leaves the filtration on {p}->{q}"
        return True, None

    def graded(self, i: int) -> tuple[FreeSheafComplex, list]:
        """``gr^i`` and the basis indices it keeps in each degree."""
        E = self.E
        keep = [[j for j, lv in enumerate(self.level(n)) if lv == i] for n in E.degrees()]
        ranks = tuple(tuple(len(k) for k in keep) for _ in range(E.site.n))
        d = {p: [E.dmat(p, n)[np.ix_(keep[t + 1], keep[t])] for t, n in enumerate(range(E.lo, E.hi))]
             for p in range(E.site.n)}
        rho = {pq: [E.rhomat(*pq, n)[np.ix_(keep[t], keep[t])] for t, n in enumerate(E.degrees())]
               for pq in E.site.poset.pairs}
        return FreeSheafComplex(E.site, E.lo, ranks, d, rho), keep


@dataclass(frozen=True, eq=False)
class FilteredMap:
    F: FilteredComplex
    M: SheafModule
    u: dict  # u[p][i]: M-valued r x r matrices (r, r, g)

    def check(self) -> tuple[bool, str | None]:
        E = self.F.E
        for p in range(E.site.n):
            for t, n in enumerate(E.degrees()):
                bad = ~self.F.allowed(n, n)
                if np.asarray(self.u[p][t])[bad].any():
                    return False, f"map leaves the filtration at {p} degree {n}"
        T, x = endo_cochain(E, self.M, self.u)
        if T.apply(0, x).any():
            return False, "not a map of complexes of sheaves"
        return True, None

    def graded(self, i: int) -> tuple[FreeSheafComplex, dict]:
        G, keep = self.F.graded(i)
        u = {p: [np.asarray(self.u[p][t])[np.ix_(keep[t], keep[t])] for t in range(len(keep))]
             for p in range(G.site.n)}
        return G, u


def filtered_trace_check(fm: FilteredMap, M: SheafModule | None = None):
    """``(lhs, rhs, equal)`` with ``lhs`` the trace of the map and ``rhs`` the sum over graded pieces."""
    M = fm.M if M is None else M
    ok, why = fm.F.check()
    if not ok:
        raise ValueError(why)
    ok, why = fm.check()
    if not ok:
        raise ValueError(why)
    lhs = endo_trace(fm.F.E, fm.u, M)
    rhs_cochain = np.zeros_like(lhs.cochain)
    for i in fm.F.steps():
        G, u = fm.graded(i)
        rhs_cochain = rhs_cochain + endo_trace(G, u, M).cochain
    rhs = CechClass(lhs.coh, 0, rhs_cochain)
    equal = bool(np.array_equal(lhs.cochain, rhs.cochain))
    return lhs, rhs, equal


def filtered_maps_basis(F: FilteredComplex, M: SheafModule) -> tuple[CechHom, np.ndarray, np.ndarray]:
    """Generators of the filtered maps ``E -> E (x) M`` as degree-0 strict cochains.

    Returns ``(T, mask, gens)`` where ``gens`` columns are cochains.
    """
    E = F.E
    T = cech_hom_total(E.site, E, E.tensor(M))
    mask = np.zeros(T.dim(0), dtype=bool)
    for s in T.slots(0):
        if s.k != 0 or s.m != 0:
            continue
        g = M.value(s.chain[-1]).rank
        allowed = F.allowed(s.n, s.n)  # (r, r) destination x source
        # coordinate layout: block i (source basis), then destination l, then M coordinate
        blk = np.repeat(allowed.T[:, :, None], g, axis=2).reshape(-1)
        mask[s.off:s.off + s.size] = blk
    cols = np.nonzero(mask)[0]
    G = T.group(0)
    from .zn import AbGroup
    sub = AbGroup(tuple(G.orders[c] for c in cols))
    D = T.D(0)[:, cols]
    Kgrp, X = LinearMap(D, sub, T.group(1)).kernel
    gens = np.zeros((T.dim(0), X.shape[1]), dtype=np.int64)
    gens[cols] = X
    return T, mask, gens


def cochain_to_endo(T: CechHom, M: SheafModule, x) -> dict:
    E = T.E
    u = {}
    for p in range(E.site.n):
        mats = []
        for n in E.degrees():
            r = E.rank(p, n)
            g = M.value(p).rank
            comp = T.component(x, 0, (p,), n)
            mats.append(comp.reshape(r, g, r).transpose(0, 2, 1) if r else np.zeros((0, 0, g), dtype=np.int64))
        u[p] = mats
    return u


def random_filtered_map(F: FilteredComplex, M: SheafModule, rng: np.random.Generator) -> FilteredMap:
    T, mask, gens = filtered_maps_basis(F, M)
    coeffs = rng.integers(0, max(T.group(0).N, 1), size=gens.shape[1])
    x = T.group(0).reduce(gens @ coeffs)
    return FilteredMap(F, M, cochain_to_endo(T, M, x))
