"""Graded lines, determinants of locally free complexes, and K_0 / K_1 shadows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ring import FiniteRing, NotLocal, k1_class, rdet, rinv, rmatmul
from .site import FreeSheafComplex, LineBundle, PosetSite


class SiteMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GradedLine:
    """A locally constant rank together with an invertible sheaf."""

    site: PosetSite
    rank: tuple[int, ...]
    line: LineBundle

    def __post_init__(self):
        object.__setattr__(self, "rank", tuple(int(r) for r in self.rank))

    @staticmethod
    def unit(site: PosetSite) -> "GradedLine":
        return GradedLine(site, (0,) * site.n, LineBundle.trivial(site))

    @staticmethod
    def constant(site: PosetSite, r: int, line: LineBundle | None = None) -> "GradedLine":
        return GradedLine(site, (r,) * site.n, line or LineBundle.trivial(site))

    def check(self) -> tuple[bool, str | None]:
        for p, q in self.site.poset.pairs:
            if self.rank[p] != self.rank[q]:
                return False, "rank is not locally constant"
        return self.line.check()

    def is_isomorphic(self, other: "GradedLine") -> bool:
        return self.rank == other.rank and self.line.is_isomorphic(other.line)

    def same(self, other: "GradedLine") -> bool:
        """Equal ranks and identical transition data."""
        return self.rank == other.rank and self.line.key() == other.line.key()


@dataclass(frozen=True, eq=False)
class GradedLineIso:
    """Stalkwise unit scalars ``c_p`` identifying the source basis with ``c_p`` times the target basis."""

    source: GradedLine
    target: GradedLine
    scalars: tuple

    def check(self) -> tuple[bool, str | None]:
        S = self.source.site
        if self.source.rank != self.target.rank:
            return False, "ranks differ"
        for p in range(S.n):
            if not S.ring(p).is_unit(self.scalars[p]):
                return False, f"scalar at {p} is not a unit"
        for p, q in S.poset.pairs:
            R = S.ring(q)
            lhs = R.mul(self.scalars[q], self.source.line.u(p, q))
            rhs = R.mul(self.target.line.u(p, q), S.hom(p, q)(self.scalars[p]))
            if not R.eq(lhs, rhs):
                return False, f"not compatible with restriction {p}->{q}"
        return True, None

    def compose(self, other: "GradedLineIso") -> "GradedLineIso":
        """``self o other``."""
        S = self.source.site
        sc = tuple(S.ring(p).mul(self.scalars[p], other.scalars[p]) for p in range(S.n))
        return GradedLineIso(other.source, self.target, sc)

    def inverse(self) -> "GradedLineIso":
        S = self.source.site
        sc = tuple(S.ring(p).inverse(self.scalars[p]) for p in range(S.n))
        return GradedLineIso(self.target, self.source, sc)

    def is_identity_scalar(self) -> bool:
        S = self.source.site
        return all(S.ring(p).eq(self.scalars[p], S.ring(p).one_vec) for p in range(S.n))


def _same_site(a: GradedLine, b: GradedLine):
    if a.site.poset != b.site.poset or a.site.rings != b.site.rings:
        raise SiteMismatch("graded lines live on different sites")


def pic_add(a: GradedLine, b: GradedLine) -> GradedLine:
    _same_site(a, b)
    return GradedLine(a.site, tuple(x + y for x, y in zip(a.rank, b.rank)), a.line.tensor(b.line))


def pic_symmetry(a: GradedLine, b: GradedLine) -> GradedLineIso:
    """Swap ``a + b -> b + a``, scaled by ``(-1)^(r r')`` at every point."""
    _same_site(a, b)
    S = a.site
    sc = tuple(S.ring(p).scalar(-1 if (a.rank[p] * b.rank[p]) % 2 else 1) for p in range(S.n))
    return GradedLineIso(pic_add(a, b), pic_add(b, a), sc)


def pic_neg(a: GradedLine) -> GradedLine:
    return GradedLine(a.site, tuple(-r for r in a.rank), a.line.dual())


def pic_mul(a: GradedLine, b: GradedLine) -> GradedLine:
    """``(r r', L^(r') (x) L'^(r))``."""
    _same_site(a, b)
    S = a.site
    units = {}
    for p, q in S.poset.pairs:
        R = S.ring(q)
        units[(p, q)] = R.mul(R.power(a.line.u(p, q), b.rank[p]), R.power(b.line.u(p, q), a.rank[p]))
    return GradedLine(S, tuple(x * y for x, y in zip(a.rank, b.rank)), LineBundle(S, units))


def alternating_det(R: FiniteRing, mats, lo: int) -> np.ndarray:
    """``prod_n det(mats[n - lo])^((-1)^n)``."""
    out = R.one_vec.copy()
    for i, M in enumerate(mats):
        dt = rdet(R, M)
        out = R.mul(out, dt if (lo + i) % 2 == 0 else R.inverse(dt))
    return out


def det_complex(E: FreeSheafComplex) -> GradedLine:
    S = E.site
    rank = tuple(E.euler_rank(p) for p in range(S.n))
    units = {(p, q): alternating_det(S.ring(q), [E.rhomat(p, q, n) for n in E.degrees()], E.lo)
             for p, q in S.poset.pairs}
    return GradedLine(S, rank, LineBundle(S, units))


def det_iso(E: FreeSheafComplex, F: FreeSheafComplex, f: dict) -> GradedLineIso:
    """Iso ``det E -> det F`` induced by a degreewise isomorphism ``f[p][i]``."""
    S = E.site
    sc = tuple(alternating_det(S.ring(p), f[p], E.lo) for p in range(S.n))
    return GradedLineIso(det_complex(E), det_complex(F), sc)


@dataclass(frozen=True, eq=False)
class SplitSES:
    """``0 -> A -i-> B -> C -> 0`` with splittings ``s: C -> B`` (ring matrices per point and degree)."""

    A: FreeSheafComplex
    B: FreeSheafComplex
    C: FreeSheafComplex
    i: dict
    s: dict

    def block(self, p: int, n: int) -> np.ndarray:
        k = n - self.B.lo
        return np.concatenate([self.i[p][k], self.s[p][k]], axis=1)

    def projection(self, p: int, n: int) -> np.ndarray:
        R = self.B.site.ring(p)
        inv = rinv(R, self.block(p, n))
        return inv[self.A.rank(p, n):]

    def check(self) -> tuple[bool, str | None]:
        S = self.B.site
        if not (self.A.lo == self.B.lo == self.C.lo and self.A.hi == self.B.hi == self.C.hi):
            return False, "degree ranges differ"
        for p in range(S.n):
            R = S.ring(p)
            for n in self.B.degrees():
                try:
                    q_ = self.projection(p, n)
                except ValueError:
                    return False, f"not termwise split exact at {p} degree {n}"
                k = n - self.B.lo
                if n < self.B.hi:
                    lhs = rmatmul(R, self.B.dmat(p, n), self.i[p][k])
                    rhs = rmatmul(R, self.i[p][k + 1], self.A.dmat(p, n))
                    if not np.array_equal(lhs, rhs):
                        return False, f"inclusion is not a chain map at {p}"
                    lhs = rmatmul(R, self.projection(p, n + 1), self.B.dmat(p, n))
                    rhs = rmatmul(R, self.C.dmat(p, n), q_)
                    if not np.array_equal(lhs, rhs):
                        return False, f"projection is not a chain map at {p}"
        for p, q in S.poset.pairs:
            R = S.ring(q)
            phi = S.hom(p, q)
            for n in self.B.degrees():
                k = n - self.B.lo
                lhs = rmatmul(R, self.B.rhomat(p, q, n), phi(self.i[p][k]))
                rhs = rmatmul(R, self.i[q][k], self.A.rhomat(p, q, n))
                if not np.array_equal(lhs, rhs):
                    return False, f"inclusion does not commute with restriction {p}->{q}"
                lhs = rmatmul(R, self.projection(q, n), self.B.rhomat(p, q, n))
                rhs = rmatmul(R, self.C.rhomat(p, q, n), phi(self.projection(p, n)))
                if not np.array_equal(lhs, rhs):
                    return False, f"projection does not commute with restriction {p}->{q}"
        return True, None


def det_of_ses(ses: SplitSES) -> GradedLineIso:
    """Iso ``det A + det C -> det B``; its scalar at ``p`` is ``prod_n det([i | s])^((-1)^n)``."""
    ok, why = ses.check()
    if not ok:
        raise ValueError(f"not a split short exact sequence: {why}")
    S = ses.B.site
    sc = tuple(alternating_det(S.ring(p), [ses.block(p, n) for n in ses.B.degrees()], ses.B.lo)
               for p in range(S.n))
    src = pic_add(det_complex(ses.A), det_complex(ses.C))
    return GradedLineIso(src, det_complex(ses.B), sc)


# -- K-theory of finite rings --------------------------------------------------------------

@dataclass(frozen=True)
class K0:
    """``K_0`` of a finite ring: free abelian on its local factors."""

    ring: FiniteRing
    idempotents: tuple  # primitive idempotents, one per local factor

    @property
    def rank(self) -> int:
        return len(self.idempotents)

    def class_of_free(self, r: int) -> tuple[int, ...]:
        return (r,) * self.rank


def k0(R: FiniteRing) -> K0:
    idem = [e for e in R.idempotents() if not R.is_zero(e)]
    prim = []
    for e in idem:
        # primitive: no nonzero idempotent f != e with f e = f
        if not any(not R.eq(f, e) and R.eq(R.mul(f, e), f) for f in idem):
            prim.append(R.key(e))
    return K0(R, tuple(sorted(prim)))


__all__ = [
    "GradedLine", "GradedLineIso", "SplitSES", "K0", "NotLocal", "SiteMismatch",
    "pic_add", "pic_symmetry", "pic_neg", "pic_mul", "det_complex", "det_iso", "det_of_ses",
    "alternating_det", "k0", "k1_class",
]
