import numpy as np
import pytest
from hypothesis import given, strategies as st

from perfdef import oracle
from perfdef.module import free
from perfdef.ring import cyclic, truncated_poly
from perfdef.site import (POSETS, LineBundle, Poset, PosetSite, constant_sheaf, global_ext, invertible_sheaves,
                          nerve_complex, random_line_bundle, random_poset, sheaf_cohomology, structure_sheaf)


def constant_site(name, N):
    return PosetSite.constant(POSETS[name](), cyclic(N))


def invariants(site, i):
    return sheaf_cohomology(site, structure_sheaf(site), i).group.invariants()


def test_point_site():
    S = constant_site("point", 3)
    C = nerve_complex(S, structure_sheaf(S))
    assert C.term(0).size == 3
    assert invariants(S, 0) == (3,)
    assert invariants(S, 1) == ()


def test_pseudo_circle_over_z3():
    S = constant_site("pseudo-circle", 3)
    assert len(S.poset.pairs) == 4
    assert invariants(S, 0) == (3,)
    assert invariants(S, 1) == (3,)


def test_sphere6_over_z2():
    S = constant_site("sphere6", 2)
    assert [invariants(S, i) for i in range(3)] == [(2,), (), (2,)]


@pytest.mark.parametrize("name", sorted(POSETS))
@pytest.mark.parametrize("m", [2, 3, 4])
def test_matches_simplicial_oracle(name, m):
    S = constant_site(name, m)
    want = oracle.simplicial_cohomology(S.poset.leq, m)
    assert [invariants(S, i) for i in range(len(want))] == want


@given(st.integers(0, 2 ** 20), st.integers(2, 6), st.sampled_from([2, 3]))
def test_random_posets_match_simplicial_oracle(seed, n, m):
    P = random_poset(np.random.default_rng(seed), n)
    S = PosetSite.constant(P, cyclic(m))
    want = oracle.simplicial_cohomology(P.leq, m)
    assert [invariants(S, i) for i in range(len(want))] == want
    assert invariants(S, len(want)) == ()


def test_constant_sheaf_of_module():
    S = PosetSite.constant(POSETS["pseudo-circle"](), cyclic(9))
    F = constant_sheaf(S, free(cyclic(9), 1))
    assert sheaf_cohomology(S, F, 1).group.invariants() == (9,)


@pytest.mark.parametrize("name, N, classes", [
    ("point", 4, 1),
    ("pseudo-circle", 2, 1),
    ("pseudo-circle", 4, 2),
    ("pseudo-circle", 5, 4),
    ("sphere6", 4, 1),
])
def test_invertible_sheaves(name, N, classes):
    S = constant_site(name, N)
    reps = invertible_sheaves(S)
    assert len(reps) == classes
    for i, L in enumerate(reps):
        assert L.check()[0]
        assert all(not L.is_isomorphic(M) for M in reps[i + 1:])


def test_nontrivial_line_on_pseudo_circle():
    S = constant_site("pseudo-circle", 4)
    P = S.poset
    units = {pq: [1] for pq in P.pairs}
    units[P.pairs[-1]] = [3]
    L = LineBundle(S, units)
    assert L.check()[0]
    assert not L.is_isomorphic(LineBundle.trivial(S))
    assert L.tensor(L).is_isomorphic(LineBundle.trivial(S))


@given(st.integers(0, 2 ** 20), st.sampled_from(["pseudo-circle", "sphere6", "chain", "wedge"]))
def test_random_line_bundles_are_valid(seed, name):
    rng = np.random.default_rng(seed)
    S = PosetSite.constant(POSETS[name](), truncated_poly(2, 2))
    L = random_line_bundle(S, rng)
    assert L.check()[0]
    assert L.tensor(L.dual()).is_isomorphic(LineBundle.trivial(S))


def test_global_ext_of_structure_sheaf_is_cohomology():
    S = constant_site("pseudo-circle", 3)
    E = LineBundle.trivial(S).as_complex(0)
    assert global_ext(S, E, structure_sheaf(S), 1).group.invariants() == (3,)


def test_poset_validation():
    assert Poset.from_relations(("a", "b"), [("a", "b")]).check()[0]
    ok, why = Poset.from_relations(("a", "b"), [("a", "b"), ("b", "a")]).check()
    assert not ok and why == "not antisymmetric"
