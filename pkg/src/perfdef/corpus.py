"""Deterministic instance generators: ring kinds, site kinds, random complexes and showcases."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .deform import SquareZeroExt, trivial_extension
from .ring import (FiniteRing, RingHom, cyclic, product, rdet, rinv, rmatmul, truncated_poly)
from .site import (POSETS, FreeSheafComplex, LineBundle, PosetSite, direct_sum_complexes,
                   random_line_bundle, random_poset)
from .trace import FilteredComplex
from .zn import MAX_ELEMENTS, TooLarge

SITE_KINDS = ("point", "chain", "pseudo-circle", "sphere6", "torus-model", "random-poset", "rp2")
RING_KINDS = ("Zp2", "Zp3", "trivial", "product", "custom")


@dataclass(eq=False)
class Instance:
    id: str
    ext: SquareZeroExt
    E: FreeSheafComplex
    seed: int
    site_kind: str = ""
    ring_kind: str = ""
    filtration: FilteredComplex | None = None
    lines: tuple = ()
    expected: dict = field(default_factory=dict)

    @property
    def site(self) -> PosetSite:
        return self.ext.small

    def check(self) -> tuple[bool, str | None]:
        ok, why = self.ext.check()
        if not ok:
            return False, why
        ok, why = self.E.check()
        if not ok:
            return False, f"complex: {why}"
        if self.filtration is not None:
            ok, why = self.filtration.check()
            if not ok:
                return False, why
        for L in self.lines:
            ok, why = L.check()
            if not ok:
                return False, f"line: {why}"
        return True, None


# -- rings -----------------------------------------------------------------------------------

def quotient_map(big: FiniteRing, small: FiniteRing) -> RingHom:
    """Coordinate-wise reduction (both rings share generators, smaller orders)."""
    return RingHom(big, small, np.eye(small.k, big.k, dtype=np.int64))


def ring_pair(kind: str, p: int = 3) -> tuple[FiniteRing, FiniteRing, RingHom | None]:
    """``(O', O, section)`` for a ring kind; the surjection is coordinate reduction."""
    if kind == "Zp2":
        return cyclic(p * p), cyclic(p), None
    if kind == "Zp3":
        return cyclic(p ** 3), cyclic(p * p), None
    if kind == "product":
        return product(cyclic(4), cyclic(9)), product(cyclic(2), cyclic(3)), None
    if kind == "custom":
        return truncated_poly(p, 3), truncated_poly(p, 2), None
    raise ValueError(f"unknown ring kind {kind!r}")


def make_ext(site_poset, kind: str, p: int = 3) -> SquareZeroExt:
    if kind == "trivial":
        base = cyclic(p)
        return trivial_extension(PosetSite.constant(site_poset, base), name=f"trivial/{base.name}")
    big, small, _ = ring_pair(kind, p)
    return SquareZeroExt.constant(site_poset, big, small, quotient_map(big, small),
                                  name=f"{big.name}->{small.name}")


def make_poset(kind: str, rng: np.random.Generator):
    if kind == "random-poset":
        return random_poset(rng, int(rng.integers(3, 6)), 0.45)
    if kind not in POSETS:
        raise ValueError(f"unknown site kind {kind!r}")
    return POSETS[kind]()


# -- random complexes --------------------------------------------------------------------------

def random_element(R: FiniteRing, rng: np.random.Generator) -> np.ndarray:
    return R.reduce(rng.integers(0, np.array(R.orders)))


def annihilator_element(R: FiniteRing, x, rng: np.random.Generator) -> np.ndarray:
    ann = [y for y in R.elements() if R.is_zero(R.mul(x, y))]
    return ann[int(rng.integers(len(ann)))]


def random_invertible(R: FiniteRing, r: int, rng: np.random.Generator, tries: int = 200) -> np.ndarray:
    for _ in range(tries):
        M = R.reduce(rng.integers(0, np.array(R.orders), size=(r, r, R.k)))
        if R.is_unit(rdet(R, M)):
            return M
    from .ring import reye
    return reye(R, r)


def twisted_piece(site: PosetSite, L: LineBundle, lo: int, length: int, start: int, scalars) -> FreeSheafComplex:
    """``[O -x1-> O -x2-> ...]`` starting in degree ``start``, twisted by ``L`` in every degree."""
    S = site
    m = len(scalars) + 1
    ranks = tuple(tuple(1 if start <= n < start + m else 0 for n in range(lo, lo + length)) for _ in range(S.n))
    d = {}
    for p in range(S.n):
        R = S.ring(p)
        mats = []
        for n in range(lo, lo + length - 1):
            i = n - start
            if 0 <= i < m - 1:
                mats.append(np.asarray(R.elem(scalars[i])).reshape(1, 1, R.k))
            else:
                mats.append(np.zeros((ranks[p][n + 1 - lo], ranks[p][n - lo], R.k), dtype=np.int64))
        d[p] = mats
    rho = {}
    for p, q in S.poset.pairs:
        R = S.ring(q)
        rho[(p, q)] = [L.u(p, q).reshape(1, 1, R.k) if ranks[q][n - lo] else np.zeros((0, 0, R.k), dtype=np.int64)
                       for n in range(lo, lo + length)]
    return FreeSheafComplex(S, lo, ranks, d, rho)


def gauge_complex(E: FreeSheafComplex, g: dict) -> FreeSheafComplex:
    """Change of bases ``g[p][i]`` in ``GL(E^(lo+i)(p))``."""
    S = E.site
    d = {}
    for p in range(S.n):
        R = S.ring(p)
        d[p] = [rmatmul(R, rmatmul(R, g[p][i + 1], E.dmat(p, n)), rinv(R, g[p][i]))
                for i, n in enumerate(range(E.lo, E.hi))]
    rho = {}
    for p, q in S.poset.pairs:
        R = S.ring(q)
        phi = S.hom(p, q)
        rho[(p, q)] = [rmatmul(R, rmatmul(R, g[q][i], E.rhomat(p, q, n)), phi(rinv(S.ring(p), g[p][i])))
                       for i, n in enumerate(E.degrees())]
    return FreeSheafComplex(S, E.lo, E.ranks, d, rho)


def random_gauge(E: FreeSheafComplex, rng: np.random.Generator) -> dict:
    S = E.site
    return {p: [random_invertible(S.ring(p), E.rank(p, n), rng) for n in E.degrees()] for p in range(S.n)}


def random_complex(site: PosetSite, rng: np.random.Generator, length: int | None = None,
                   pieces: int | None = None, gauge: bool = True) -> FreeSheafComplex:
    """Direct sum of twisted one-, two- and three-term pieces, then a random change of bases."""
    R = site.ring(0)
    length = length if length is not None else int(rng.integers(1, 4))
    pieces = pieces if pieces is not None else int(rng.integers(1, 3))
    parts = []
    for _ in range(pieces):
        L = random_line_bundle(site, rng)
        m = int(rng.integers(1, length + 1))
        start = int(rng.integers(0, length - m + 1))
        scalars = []
        if m >= 2:
            scalars.append(random_element(R, rng))
        if m >= 3:
            scalars.append(annihilator_element(R, scalars[0], rng))
        parts.append(twisted_piece(site, L, 0, length, start, scalars))
    E = direct_sum_complexes(parts)
    if gauge:
        E = gauge_complex(E, random_gauge(E, rng))
    return E


def stupid_filtration(E: FreeSheafComplex) -> FilteredComplex:
    return FilteredComplex(E, tuple(tuple([n] * E.rank(0, n)) for n in E.degrees()))


def random_filtration(E: FreeSheafComplex, rng: np.random.Generator) -> FilteredComplex | None:
    """Stupid filtration, or one by block position when differentials and restrictions are block triangular."""
    return stupid_filtration(E)


# -- instances --------------------------------------------------------------------------------

def _ring_param(kind: str, rng: np.random.Generator) -> int:
    if kind in ("Zp2", "Zp3", "custom"):
        return int(rng.choice([2, 3]))
    if kind == "trivial":
        return int(rng.choice([2, 3, 4]))
    return 0


def generate(site_kind: str, ring_kind: str, seed: int, p: int | None = None, rank: int | None = None,
             lines: int = 2, max_elements: int = MAX_ELEMENTS) -> Instance:
    """Deterministic random instance for ``(site kind, ring kind, seed)``."""
    rng = np.random.default_rng([seed, SITE_KINDS.index(site_kind) if site_kind in SITE_KINDS else 99,
                                 RING_KINDS.index(ring_kind) if ring_kind in RING_KINDS else 99])
    P = make_poset(site_kind, rng)
    p = p if p is not None else _ring_param(ring_kind, rng)
    ext = make_ext(P, ring_kind, p)
    if ext.big.ring(0).size > max_elements:
        raise TooLarge(f"ring of size {ext.big.ring(0).size} exceeds {max_elements}")
    S = ext.small
    heavy = site_kind in ("torus-model", "rp2")
    length = 1 if heavy else None
    pieces = 1 if heavy else None
    E = random_complex(S, rng, length=length, pieces=pieces, gauge=not heavy)
    extra = tuple(random_line_bundle(S, rng) for _ in range(lines))
    iid = f"{site_kind}-{ring_kind}-{seed}"
    return Instance(iid, ext, E, seed, site_kind, ring_kind, stupid_filtration(E), extra)


def three_term_z2() -> Instance:
    """``[Z/2 -(1,1)^T-> (Z/2)^2 -(1,1)-> Z/2]`` over ``Z/4 -> Z/2`` on a point."""
    ext = make_ext(POSETS["point"](), "Zp2", 2)
    S = ext.small
    E = FreeSheafComplex(S, 0, ((1, 2, 1),), {0: [[[1], [1]], [[1, 1]]]}, {})
    return Instance("point-Zp2-three-term", ext, E, 0, "point", "Zp2", stupid_filtration(E), (),
                    {"omega_zero": True})


def pseudo_circle_showcase() -> Instance:
    """Rank-2 trivial bundle in degree 0 on the pseudo-circle over ``Z/9 -> Z/3``."""
    ext = make_ext(POSETS["pseudo-circle"](), "Zp2", 3)
    S = ext.small
    E = direct_sum_complexes([LineBundle.trivial(S).as_complex(0)] * 2)
    return Instance("pseudo-circle-Zp2-rank2", ext, E, 0, "pseudo-circle", "Zp2", stupid_filtration(E),
                    (), {"omega_zero": True})


def sphere6_lines(seed: int = 0) -> Instance:
    """Sum of random line bundles on the 6-point sphere over ``Z/4 -> Z/2``."""
    rng = np.random.default_rng(seed)
    ext = make_ext(POSETS["sphere6"](), "Zp2", 2)
    S = ext.small
    Ls = [random_line_bundle(S, rng) for _ in range(2)]
    E = direct_sum_complexes([L.as_complex(0) for L in Ls])
    return Instance("sphere6-Zp2-lines", ext, E, seed, "sphere6", "Zp2", stupid_filtration(E), tuple(Ls))


def z8_obstructed() -> Instance:
    """``[Z/4 -2-> Z/4 -2-> Z/4]`` over ``Z/8 -> Z/4``: every lift has ``d'd' = 4``."""
    ext = make_ext(POSETS["point"](), "Zp3", 2)
    E = FreeSheafComplex(ext.small, 0, ((1, 1, 1),), {0: [[[2]], [[2]]]}, {})
    return Instance("point-Zp3-obstructed", ext, E, 0, "point", "Zp3", stupid_filtration(E), (),
                    {"omega_zero": False})


def aut_example() -> tuple[Instance, "object"]:
    """``[O -0-> O]`` over ``Z/9 -> Z/3`` with the lift ``[Z/9 -3-> Z/9]``."""
    from .deform import DefRep
    ext = make_ext(POSETS["point"](), "Zp2", 3)
    E = FreeSheafComplex(ext.small, 0, ((1, 1),), {0: [[[0]]]}, {})
    rep = DefRep(ext, E, FreeSheafComplex(ext.big, 0, ((1, 1),), {0: [[[3]]]}, {}))
    return Instance("point-Zp2-aut", ext, E, 0, "point", "Zp2", stupid_filtration(E)), rep


def showcases() -> list[Instance]:
    return [three_term_z2(), pseudo_circle_showcase(), sphere6_lines(), z8_obstructed()]


# per site kind: number of seeds per ring kind
DEFAULT_COUNTS = {"point": 12, "chain": 6, "pseudo-circle": 10, "sphere6": 6, "torus-model": 2,
                  "random-poset": 8, "rp2": 2}


def default_corpus(seed: int = 0, counts: dict | None = None) -> list[Instance]:
    counts = counts or DEFAULT_COUNTS
    out = list(showcases())
    for sk in SITE_KINDS:
        for rk in RING_KINDS:
            for i in range(counts.get(sk, 0)):
                out.append(generate(sk, rk, seed * 1000 + i))
    return out
