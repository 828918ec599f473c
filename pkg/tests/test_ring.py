import numpy as np
import pytest
from hypothesis import given, strategies as st

from perfdef import oracle
from perfdef.ring import (FiniteRing, NotLocal, RingHom, cyclic, dual_numbers, elementary_reduce, k0_rank,
                          k1_class, poly_quotient, product, rdet, reye, rinv, ring_check, rmatmul,
                          truncated_poly)

RINGS = [cyclic(4), cyclic(9), cyclic(6), cyclic(8), truncated_poly(2, 2), truncated_poly(3, 2),
         truncated_poly(2, 3), poly_quotient(2, [1, 1]), dual_numbers(cyclic(4)), product(cyclic(2), cyclic(3))]
LOCAL = [R for R in RINGS if R.is_local()[0]]


def keys(R, xs):
    return sorted(R.key(x) for x in xs)


@pytest.mark.parametrize("R", RINGS, ids=repr)
def test_constructed_rings_are_valid(R):
    assert ring_check(R)[0]


def test_broken_associativity_is_detected():
    # over Z/2 with e0 e0 = 0 and e0 e1 = e1: (e0 e0) e1 = 0 but e0 (e0 e1) = e1
    T = np.zeros((2, 2, 2), dtype=int)
    T[0, 1] = T[1, 0] = [0, 1]
    R = FiniteRing((2, 2), T, (1, 0))
    ok, axiom, witness = ring_check(R)
    assert not ok and axiom == "associativity"
    i, j, l = witness
    e = np.eye(2, dtype=int)
    assert not R.eq(R.mul(R.mul(e[i], e[j]), e[l]), R.mul(e[i], R.mul(e[j], e[l])))


def test_units_and_localness():
    Z4 = cyclic(4)
    assert keys(Z4, Z4.units()) == [(1,), (3,)]
    local, m = Z4.is_local()
    assert local and keys(Z4, m) == [(0,), (2,)]
    Z6 = cyclic(6)
    assert keys(Z6, Z6.units()) == [(1,), (5,)]
    assert not Z6.is_local()[0]
    D = truncated_poly(2, 2)
    assert keys(D, D.units()) == [(1, 0), (1, 1)]
    assert D.is_local()[0]


@pytest.mark.parametrize("m, u", [
    ([[1, 0], [0, 1]], 1),
    ([[1, 2], [2, 1]], 1),
    ([[3, 0], [0, 1]], 3),
])
def test_elementary_reduce_examples(m, u):
    R = cyclic(4)
    A = np.array(m)[..., None]
    fac = elementary_reduce(R, A)
    assert np.array_equal(fac.product(), R.reduce(A))
    assert R.eq(fac.unit, R.scalar(u))
    if m == [[1, 0], [0, 1]]:
        assert fac.factors == []


def test_elementary_reduce_needs_local_ring():
    R = cyclic(6)
    with pytest.raises(NotLocal):
        elementary_reduce(R, reye(R, 2))


def random_matrix(R, n, seed):
    rng = np.random.default_rng(seed)
    return R.reduce(rng.integers(0, max(R.orders), size=(n, n, R.k)))


@given(st.sampled_from(RINGS), st.integers(0, 4), st.integers(0, 2 ** 20))
def test_rdet_agrees_with_leibniz(R, n, seed):
    A = random_matrix(R, n, seed)
    want = oracle.leibniz_det(R, A) if n else R.one_vec
    assert R.eq(rdet(R, A), want)


@given(st.sampled_from(RINGS), st.integers(1, 3), st.integers(0, 2 ** 20))
def test_rdet_is_multiplicative(R, n, seed):
    A, B = random_matrix(R, n, seed), random_matrix(R, n, seed + 1)
    assert R.eq(rdet(R, rmatmul(R, A, B)), R.mul(rdet(R, A), rdet(R, B)))


@given(st.sampled_from(LOCAL), st.integers(1, 4), st.integers(0, 2 ** 20))
def test_k1_class_is_the_determinant(R, n, seed):
    A = random_matrix(R, n, seed)
    if not R.is_unit(rdet(R, A)):
        A = rmatmul(R, reye(R, n), reye(R, n))
    fac = elementary_reduce(R, A)
    assert np.array_equal(fac.product(), R.reduce(A))
    assert R.eq(k1_class(R, A), oracle.leibniz_det(R, A))
    assert R.eq(rmatmul(R, A, rinv(R, A)), reye(R, n))


@pytest.mark.parametrize("R, rank", [(cyclic(4), 1), (cyclic(6), 2), (product(cyclic(2), cyclic(2), cyclic(3)), 3)],
                         ids=repr)
def test_k0_rank_counts_local_factors(R, rank):
    assert k0_rank(R) == rank


def test_ring_hom_reduction():
    pi = RingHom(cyclic(9), cyclic(3), np.eye(1, dtype=int))
    assert pi.check()[0]
    assert pi.is_surjective()
    K, X = pi.kernel_gens
    assert K.size == 3
    assert cyclic(3).eq(pi(pi.lift([2])), [2])
