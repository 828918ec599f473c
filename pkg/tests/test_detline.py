import numpy as np
import pytest
from hypothesis import given, strategies as st

from perfdef import oracle
from perfdef.detline import (GradedLine, SplitSES, alternating_det, det_complex, det_iso, det_of_ses, k0,
                             pic_add, pic_mul, pic_neg, pic_symmetry)
from perfdef.harness import complex_with_det, lines_complex
from perfdef.ring import cyclic, product, reye, rzeros, truncated_poly
from perfdef.site import POSETS, FreeSheafComplex, LineBundle, PosetSite, random_line_bundle


def site(name="point", R=None):
    return PosetSite.constant(POSETS[name](), R or cyclic(4))


def nontrivial_line(S):
    units = {pq: [1] for pq in S.poset.pairs}
    units[S.poset.pairs[-1]] = [3]
    return LineBundle(S, units)


def scalars(iso):
    return [int(iso.source.site.ring(p).key(c)[0]) for p, c in enumerate(iso.scalars)]


@pytest.mark.parametrize("r, s, sign", [(0, 0, 1), (1, 1, 3), (1, 2, 1), (3, 3, 3), (-1, 1, 3)])
def test_symmetry_sign_on_trivial_lines(r, s, sign):
    S = site()
    a, b = GradedLine.constant(S, r), GradedLine.constant(S, s)
    total = pic_add(a, b)
    assert total.rank == (r + s,)
    assert scalars(pic_symmetry(a, b)) == [sign]


def test_sum_of_nontrivial_lines_on_pseudo_circle():
    S = site("pseudo-circle")
    L = nontrivial_line(S)
    a = GradedLine.constant(S, 1, L)
    assert not a.is_isomorphic(GradedLine.constant(S, 1))
    total = pic_add(a, a)
    assert total.rank == (2,) * 4
    assert total.is_isomorphic(GradedLine.constant(S, 2))


def test_pic_mul_examples():
    S = site("pseudo-circle")
    L = nontrivial_line(S)
    one = GradedLine.constant(S, 1)
    x = GradedLine.constant(S, 3, L)
    assert pic_mul(one, x).same(x)
    assert pic_mul(GradedLine.constant(S, 0, L), GradedLine.constant(S, 0, L)).same(GradedLine.constant(S, 0))
    assert pic_mul(GradedLine.constant(S, 2), GradedLine.constant(S, 3)).same(GradedLine.constant(S, 6))


def test_det_complex_examples():
    S = site("pseudo-circle")
    O = LineBundle.trivial(S)
    assert det_complex(lines_complex(S, [(O, 0), (O, 0)])).same(GradedLine.constant(S, 2))
    ranks = tuple(((1, 1)) for _ in range(S.n))
    d = {p: [reye(S.ring(p), 1)] for p in range(S.n)}
    rho = {pq: [reye(S.ring(0), 1), reye(S.ring(0), 1)] for pq in S.poset.pairs}
    acyclic = FreeSheafComplex(S, 0, ranks, d, rho)
    assert det_complex(acyclic).same(GradedLine.constant(S, 0))
    L = nontrivial_line(S)
    assert [L.u(*pq)[0] for pq in S.poset.pairs] == [1, 1, 1, 3]
    det = det_complex(L.as_complex(0))
    assert det.rank == (1,) * 4
    assert not det.line.is_isomorphic(O)


def point_ses(R, block_i, block_s, A, B, C):
    return SplitSES(A, B, C, {0: block_i}, {0: block_s})


def test_det_of_ses_direct_sum_has_scalar_one():
    S = site()
    R = S.ring(0)
    O = LineBundle.trivial(S)
    A = lines_complex(S, [(O, 0)], 0, 1)
    C = lines_complex(S, [(O, 1)], 0, 1)
    B = lines_complex(S, [(O, 0), (O, 1)], 0, 1)
    i = [reye(R, 1), rzeros(R, 1, 0)]
    s = [rzeros(R, 1, 0), reye(R, 1)]
    iso = det_of_ses(SplitSES(A, B, C, {0: i}, {0: s}))
    assert iso.check()[0]
    assert scalars(iso) == [1]
    assert iso.source.rank == (0,)


def test_det_of_ses_inside_a_cone():
    # O[-1] -> [O -id-> O] -> O: ranks (-1) + (1) = 0
    S = site()
    R = S.ring(0)
    A = FreeSheafComplex(S, 0, ((0, 1),), {0: [rzeros(R, 1, 0)]}, {})
    B = FreeSheafComplex(S, 0, ((1, 1),), {0: [reye(R, 1)]}, {})
    C = FreeSheafComplex(S, 0, ((1, 0),), {0: [rzeros(R, 0, 1)]}, {})
    ses = SplitSES(A, B, C, {0: [rzeros(R, 1, 0), reye(R, 1)]}, {0: [reye(R, 1), rzeros(R, 1, 0)]})
    iso = det_of_ses(ses)
    assert iso.source.rank == (0,) and iso.target.rank == (0,)
    assert iso.check()[0]


def test_stupid_filtration_iterates_to_product_of_terms():
    # E = [O^2 -> O] with stupid pieces E^0 and E^1[-1]
    S = site("pseudo-circle", cyclic(9))
    L = LineBundle(S, {pq: [1] for pq in S.poset.pairs})
    E = lines_complex(S, [(L, 0), (L, 0), (L, 1)])
    pieces = [lines_complex(S, [(L, 0), (L, 0)], 0, 1), lines_complex(S, [(L, 1)], 0, 1)]
    R = S.ring(0)
    i = {p: [reye(R, 2), rzeros(R, 1, 0)] for p in range(S.n)}
    s = {p: [rzeros(R, 2, 0), reye(R, 1)] for p in range(S.n)}
    iso = det_of_ses(SplitSES(pieces[0], E, pieces[1], i, s))
    assert iso.check()[0]
    assert iso.target.same(pic_add(det_complex(pieces[0]), det_complex(pieces[1])))


@given(st.integers(-3, 3), st.integers(-3, 3))
def test_symmetry_sign_matches_permutation_sign(r, s):
    S = site()
    sym = pic_symmetry(GradedLine.constant(S, r), GradedLine.constant(S, s))
    swap = list(range(abs(s), abs(s) + abs(r))) + list(range(abs(s)))
    want = S.ring(0).scalar(oracle.permutation_sign(swap))
    assert S.ring(0).eq(sym.scalars[0], want)
    assert sym.compose(pic_symmetry(GradedLine.constant(S, s), GradedLine.constant(S, r))).is_identity_scalar()


@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(0, 2 ** 20))
def test_pic_mul_is_det_of_tensor_product(r, s, seed):
    S = site("pseudo-circle", truncated_poly(2, 2))
    rng = np.random.default_rng(seed)
    L, M = random_line_bundle(S, rng), random_line_bundle(S, rng)
    Er, Es = complex_with_det(S, L, r), complex_with_det(S, M, s)
    assert det_complex(Er).is_isomorphic(GradedLine.constant(S, r, L))
    prod = pic_mul(det_complex(Er), det_complex(Es))
    lo, ranks, rho = oracle.tensor_restrictions(S, Er, Es)
    for pq in S.poset.pairs:
        assert S.ring(pq[1]).eq(alternating_det(S.ring(pq[1]), rho[pq], lo), prod.line.u(*pq))
    assert prod.rank == (r * s,) * S.n


@given(st.integers(-3, 3), st.integers(0, 2 ** 20))
def test_negation_is_inverse(r, seed):
    S = site("pseudo-circle", truncated_poly(2, 2))
    L = random_line_bundle(S, np.random.default_rng(seed))
    a = GradedLine.constant(S, r, L)
    assert pic_add(a, pic_neg(a)).is_isomorphic(GradedLine.unit(S))


def test_det_iso_of_change_of_basis():
    S = site()
    R = S.ring(0)
    O = LineBundle.trivial(S)
    E = lines_complex(S, [(O, 0), (O, 0)])
    g = {0: [np.array([[1, 1], [0, 3]])[..., None]]}
    iso = det_iso(E, E, g)
    assert scalars(iso) == [3]
    assert iso.check()[0]
    assert R.eq(alternating_det(R, g[0], 1), R.scalar(3))


@pytest.mark.parametrize("R, rank", [(cyclic(9), 1), (product(cyclic(2), cyclic(3)), 2)], ids=repr)
def test_k0(R, rank):
    K = k0(R)
    assert K.rank == rank
    assert K.class_of_free(2) == (2,) * rank
