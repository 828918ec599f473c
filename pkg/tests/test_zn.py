import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from perfdef.zn import AbGroup, Cohomology, LinearMap, Quotient, smith_like_normal_form, snf, subgroup


def brute_image(M, src, dst):
    return {tuple(dst.reduce(M @ np.array(x))) for x in itertools.product(*map(range, src.orders))}


def cyclic_group(n, r=1):
    return AbGroup((n,) * r)


@pytest.mark.parametrize("A, N, diag", [
    ([[2]], 4, [2]),
    ([[1, 0], [0, 1]], 9, [1, 1]),
    ([[2, 0], [0, 6]], 12, [2, 6]),
    ([[4, 6]], 12, [2]),
])
def test_smith_form_examples(A, N, diag):
    U, D, V = smith_like_normal_form(A, N)
    A = np.array(A)
    assert np.array_equal((U @ A @ V) % N, D)
    assert [int(D[i, i]) for i in range(len(diag))] == diag


def test_cokernel_of_2_6_over_z12():
    # brute force: Z/12^2 modulo the image has 144 / 12 = 12 elements
    G = cyclic_group(12, 2)
    M = np.array([[2, 0], [0, 6]])
    image = brute_image(M, G, G)
    assert 144 // len(image) == 12
    Q = LinearMap(M, G, G).cokernel
    assert Q.group.invariants() == (2, 6)
    assert Q.group.size == 12


def test_cokernel_of_2_over_z4():
    Q = LinearMap([[2]], cyclic_group(4), cyclic_group(4)).cokernel
    assert Q.group.invariants() == (2,)


def test_identity_has_trivial_kernel_and_cokernel():
    f = LinearMap(np.eye(2, dtype=int), cyclic_group(9, 2), cyclic_group(9, 2))
    assert f.is_injective() and f.is_surjective()
    assert f.cokernel.group.size == 1


def test_solve_2x_equals_2_over_z4():
    f = LinearMap([[2]], cyclic_group(4), cyclic_group(4))
    x0 = f.solve_one([2])
    K, X = f.kernel
    sols = {int((x0[0] + X[0] @ np.array(c)) % 4) for c in itertools.product(*map(range, K.orders))}
    assert sols == {1, 3}
    assert f.solve_one([1]) is None


def test_kernel_of_1_1_over_z3():
    f = LinearMap([[1, 1]], cyclic_group(3, 2), cyclic_group(3))
    K, X = f.kernel
    assert K.orders == (3,)
    # brute force over 9 vectors
    ker = {v for v in itertools.product(range(3), repeat=2) if (v[0] + v[1]) % 3 == 0}
    span = {tuple((X[:, 0] * c) % 3) for c in range(3)}
    assert span == ker
    assert (1, 2) in span


small_matrix = st.tuples(st.integers(1, 3), st.integers(1, 3), st.sampled_from([2, 3, 4, 6, 8, 9, 12])).flatmap(
    lambda t: st.tuples(st.lists(st.integers(0, t[2] - 1), min_size=t[0] * t[1], max_size=t[0] * t[1]),
                        st.just(t)))


@given(small_matrix)
def test_snf_factorization(data):
    entries, (m, n, N) = data
    A = np.array(entries).reshape(m, n)
    s = snf(A, N)
    D = (s.U @ A @ s.V) % N
    off = D.copy()
    k = min(m, n)
    off[range(k), range(k)] = 0
    assert not off.any()
    diag = s.diag
    assert all(diag[i + 1] % diag[i] == 0 for i in range(len(diag) - 1))
    assert np.array_equal((s.U @ s.Uinv) % N, np.eye(m, dtype=int) % N)


@given(small_matrix)
def test_solve_and_kernel_match_brute_force(data):
    entries, (m, n, N) = data
    G, H = cyclic_group(N, n), cyclic_group(N, m)
    M = np.array(entries).reshape(m, n)
    f = LinearMap(M, G, H)
    image = brute_image(M, G, H)
    assert f.image[0].size == len(image)
    assert f.kernel[0].size * len(image) == G.size
    assert f.cokernel.group.size * len(image) == H.size
    for b in itertools.product(range(N), repeat=m):
        x = f.solve_one(b)
        assert (x is not None) == (b in image)
        if x is not None:
            assert tuple(f(x)) == b


@given(st.lists(st.sampled_from([2, 3, 4, 6, 9]), min_size=1, max_size=3), st.data())
def test_subgroup_and_quotient_orders(orders, data):
    G = AbGroup(tuple(orders))
    cols = data.draw(st.integers(0, 3))
    X = np.array([[data.draw(st.integers(0, o - 1)) for _ in range(cols)] for o in orders]).reshape(len(orders), cols)
    S, incl = subgroup(X, G)
    span = brute_image(X, AbGroup((G.N,) * cols), G) if cols else {tuple([0] * len(orders))}
    assert S.size == len(span)
    assert Quotient(G, X).group.size * S.size == G.size


def test_cohomology_of_z4_times_2():
    # 0 -> Z/4 -2-> Z/4 -> 0: H^0 = ker = Z/2 and H^1 = coker = Z/2
    G = cyclic_group(4)
    zero_in = LinearMap(np.zeros((1, 0), dtype=int), AbGroup(()), G)
    d = LinearMap([[2]], G, G)
    zero_out = LinearMap(np.zeros((0, 1), dtype=int), G, AbGroup(()))
    assert Cohomology(zero_in, d).group.invariants() == (2,)
    assert Cohomology(d, zero_out).group.invariants() == (2,)
