import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perfdef.corpus import random_complex, random_filtration, stupid_filtration
from perfdef.harness import lines_complex
from perfdef.ring import cyclic, reye, rzeros, truncated_poly
from perfdef.site import (POSETS, FreeSheafComplex, LineBundle, PosetSite, cech_hom_total,
                          direct_sum_complexes, structure_sheaf)
from perfdef.trace import (FilteredComplex, FilteredMap, endo_trace, ext_trace_class, filtered_trace_check,
                           random_filtered_map, total_class)


def scalar_maps(E, per_degree):
    """``u[p][i]`` from one ``Z/n`` matrix per degree, the same at every point."""
    return {p: [np.asarray(m, dtype=np.int64).reshape(len(m), len(m), 1) if len(m) else np.zeros((0, 0, 1), np.int64)
                for m in per_degree] for p in range(E.site.n)}


@pytest.fixture
def point9():
    return PosetSite.constant(POSETS["point"](), cyclic(9))


def test_identity_on_free_module_has_trace_rank(point9):
    O = LineBundle.trivial(point9)
    E = lines_complex(point9, [(O, 0), (O, 0)])
    tr = endo_trace(E, scalar_maps(E, [[[1, 0], [0, 1]]]), structure_sheaf(point9))
    assert tr.classify().tolist() == [2]


def test_identity_on_two_term_complex_has_trace_zero(point9):
    E = FreeSheafComplex(point9, 0, ((1, 1),), {0: [rzeros(cyclic(9), 1, 1)]}, {})
    tr = endo_trace(E, scalar_maps(E, [[[1]], [[1]]]), structure_sheaf(point9))
    assert tr.is_zero()


@pytest.mark.parametrize("a, b, d", [(1, 2, 3), (4, 7, 8), (0, 5, 0)])
def test_upper_triangular_trace_is_diagonal_sum(point9, a, b, d):
    O = LineBundle.trivial(point9)
    E = lines_complex(point9, [(O, 0), (O, 0)])
    tr = endo_trace(E, scalar_maps(E, [[[a, b], [0, d]]]), structure_sheaf(point9))
    assert tr.classify().tolist() == [(a + d) % 9]


def test_trace_of_noncommuting_map_is_rejected(point9):
    E = FreeSheafComplex(point9, 0, ((1, 1),), {0: [reye(cyclic(9), 1)]}, {})
    with pytest.raises(ValueError):
        endo_trace(E, scalar_maps(E, [[[1]], [[2]]]), structure_sheaf(point9))


def test_ext_trace_of_generator_on_pseudo_circle():
    # Ext^1(O, O) = H^1(Z/4) = Z/4 and the trace is the identity on it
    S = PosetSite.constant(POSETS["pseudo-circle"](), cyclic(4))
    M = structure_sheaf(S)
    E = LineBundle.trivial(S).as_complex(0)
    T = cech_hom_total(S, E, E.tensor(M))
    H = T.cohomology(1)
    assert H.group.orders == (4,)
    (g,) = H.generators()
    assert ext_trace_class(total_class(T, 1, g), M).classify().tolist() == [1]


def test_ext_trace_of_diagonal_class_on_rank_two():
    S = PosetSite.constant(POSETS["pseudo-circle"](), cyclic(3))
    M = structure_sheaf(S)
    E1 = LineBundle.trivial(S).as_complex(0)
    E = direct_sum_complexes([E1, E1])
    T1 = cech_hom_total(S, E1, E1.tensor(M))
    (g,) = T1.cohomology(1).generators()
    T = cech_hom_total(S, E, E.tensor(M))
    # put the generator in the (0, 0) entry of every slot
    comps = {}
    for s in T.slots(1):
        comp = np.zeros((2, 2), dtype=np.int64)
        src = T1.component(g, 1, s.chain, s.n)
        comp[0, 0] = src.reshape(-1)[0]
        comps[(s.chain, s.n)] = comp
    x = T.assemble(1, comps)
    c = total_class(T, 1, x)
    assert c.is_cocycle()
    assert ext_trace_class(c, M).classify().tolist() == [1]


def test_trivial_filtration_trace_check(point9):
    O = LineBundle.trivial(point9)
    E = lines_complex(point9, [(O, 0), (O, 0)])
    F = FilteredComplex(E, ((0, 0),))
    lhs, rhs, equal = filtered_trace_check(FilteredMap(F, structure_sheaf(point9), scalar_maps(E, [[[2, 3], [4, 5]]])))
    assert equal and lhs.classify().tolist() == [7]


def test_two_step_filtration(point9):
    O = LineBundle.trivial(point9)
    E = lines_complex(point9, [(O, 0), (O, 0)])
    F = FilteredComplex(E, ((0, 1),))
    assert F.check()[0]
    fm = FilteredMap(F, structure_sheaf(point9), scalar_maps(E, [[[2, 0], [6, 5]]]))
    assert fm.check()[0]
    lhs, rhs, equal = filtered_trace_check(fm)
    assert equal and rhs.classify().tolist() == [7]
    bad = FilteredMap(F, structure_sheaf(point9), scalar_maps(E, [[[2, 1], [6, 5]]]))
    assert not bad.check()[0]


def test_three_term_complex_stupid_filtration(point9):
    # [O -3-> O -3-> O] over Z/9 with u = (1, 4, 7) commuting with d
    E = FreeSheafComplex(point9, 0, ((1, 1, 1),), {0: [[[[3]]], [[[3]]]]}, {})
    assert E.check()[0]
    F = stupid_filtration(E)
    fm = FilteredMap(F, structure_sheaf(point9), scalar_maps(E, [[[1]], [[4]], [[7]]]))
    lhs, rhs, equal = filtered_trace_check(fm)
    assert equal and lhs.classify().tolist() == [(1 - 4 + 7) % 9]


@settings(max_examples=20)
@given(st.sampled_from(["point", "chain", "pseudo-circle"]), st.integers(0, 2 ** 20))
def test_random_filtered_maps_are_additive(name, seed):
    rng = np.random.default_rng(seed)
    S = PosetSite.constant(POSETS[name](), truncated_poly(3, 2) if seed % 2 else cyclic(8))
    E = random_complex(S, rng)
    F = random_filtration(E, rng) or stupid_filtration(E)
    fm = random_filtered_map(F, structure_sheaf(S), rng)
    assert fm.check()[0]
    assert filtered_trace_check(fm)[2]
