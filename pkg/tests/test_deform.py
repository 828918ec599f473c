import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perfdef.corpus import (aut_example, generate, make_ext, pseudo_circle_showcase, sphere6_lines,
                            three_term_z2, z8_obstructed)
from perfdef.deform import (DefRep, aut_group, det_of_automorphism, det_of_deformation, difference_class,
                            def_isomorphic, gabber_obstruction, lift_exists, line_obstruction,
                            obstruction_cocycle, strict_cocycles, strict_iso_matrices, torsor_act,
                            trivial_extension, verify_main_theorem)
from perfdef.detline import alternating_det
from perfdef.ring import cyclic, reye
from perfdef.site import POSETS, FreeSheafComplex, LineBundle, PosetSite, direct_sum_complexes, random_line_bundle
from perfdef.trace import ext_trace


@pytest.mark.parametrize("make, zero", [(three_term_z2, True), (pseudo_circle_showcase, True),
                                        (sphere6_lines, True), (z8_obstructed, False)])
def test_obstruction_examples(make, zero):
    inst = make()
    omega = obstruction_cocycle(inst.ext, inst.E)
    assert omega.is_cocycle()
    assert omega.is_zero() == zero
    # the resolution route lands on the same class
    assert gabber_obstruction(inst.ext, inst.E).same_class(omega)


def test_z8_obstruction_generates():
    inst = z8_obstructed()
    assert obstruction_cocycle(inst.ext, inst.E).classify().tolist() == [1]
    res = lift_exists(inst.ext, inst.E, method="exhaustive")
    assert res.exists is False and res.rep is None
    assert lift_exists(inst.ext, inst.E, method="structured").exists is False


def test_three_term_lift_found_by_search():
    inst = three_term_z2()
    res = lift_exists(inst.ext, inst.E, method="exhaustive")
    assert res.exists and res.rep.is_closed() and res.rep.reduces()
    # 1 + 3 = 0 mod 4
    assert res.rep.d(0, 0)[..., 0].tolist() == [[1], [3]]
    assert res.rep.d(0, 1)[..., 0].tolist() == [[1, 1]]
    assert lift_exists(inst.ext, inst.E, method="structured").rep.is_closed()


def test_obstruction_does_not_depend_on_lift():
    inst = z8_obstructed()
    classes = {tuple(obstruction_cocycle(inst.ext, inst.E, rng=np.random.default_rng(s)).classify())
               for s in range(8)}
    assert classes == {(1,)}


@pytest.fixture
def showcase_rep():
    inst = pseudo_circle_showcase()
    return inst, lift_exists(inst.ext, inst.E).rep


def test_torsor_zero_and_difference(showcase_rep):
    inst, rep = showcase_rep
    T = inst.ext.total(inst.E)
    assert def_isomorphic(rep, torsor_act(T.zero(1), rep)) is not None
    gens = strict_cocycles(T, 1, (0, 1))
    for j in range(gens.shape[1]):
        alpha = gens[:, j]
        moved = torsor_act(alpha, rep)
        assert moved.is_closed()
        assert np.array_equal(difference_class(rep, moved).cochain, T.group(1).reduce(alpha))


def test_coboundary_acts_trivially(showcase_rep):
    inst, rep = showcase_rep
    T = inst.ext.total(inst.E)
    h = np.random.default_rng(3).integers(0, 3, T.dim(0))
    moved = torsor_act(T.apply(0, h), rep)
    assert def_isomorphic(rep, moved) is not None


def test_nonzero_class_gives_inequivalent_deformation(showcase_rep):
    inst, rep = showcase_rep
    T = inst.ext.total(inst.E)
    gens = strict_cocycles(T, 1, (0, 1))
    nonzero = [gens[:, j] for j in range(gens.shape[1])
               if not T.cohomology(1).is_coboundary(gens[:, j])]
    assert nonzero
    assert def_isomorphic(rep, torsor_act(nonzero[0], rep)) is None


def test_aut_example_quotient():
    _, rep = aut_example()
    A = aut_group(rep)
    assert A.ext0.group.orders == (3, 3)
    assert A.ext_minus1.group.orders == (3,)
    assert A.group.orders == (3,) and A.order == 3


@pytest.mark.parametrize("r", [1, 2])
def test_aut_of_free_module_is_matrix_group(r):
    ext = make_ext(POSETS["point"](), "Zp2", 3)
    E = direct_sum_complexes([LineBundle.trivial(ext.small).as_complex(0)] * r)
    assert aut_group(lift_exists(ext, E).rep).order == 3 ** (r * r)


def test_aut_on_trivial_extension_equals_ext0():
    S = PosetSite.constant(POSETS["pseudo-circle"](), cyclic(3))
    ext = trivial_extension(S)
    assert ext.check()[0]
    E = LineBundle.trivial(S).as_complex(0)
    A = aut_group(lift_exists(ext, E).rep)
    assert A.order == A.ext0.group.size == 3


def test_det_of_automorphism_on_z9():
    # det(1 + 3 diag(1, 0)) = 4 = 1 + 3 = 1 + tr(3 diag(1, 0))
    ext = make_ext(POSETS["point"](), "Zp2", 3)
    E = direct_sum_complexes([LineBundle.trivial(ext.small).as_complex(0)] * 2)
    rep = lift_exists(ext, E).rep
    T = ext.total(E)
    three = ext.to_K(0, np.array([3]))[0]
    comp = np.array([[three, 0], [0, 0]], dtype=np.int64)
    h = T.assemble(0, {((0,), 0): comp})
    g = strict_iso_matrices(rep, h)
    R = ext.big.ring(0)
    assert R.key(alternating_det(R, g[0], 0)) == (4,)
    assert np.array_equal(det_of_automorphism(rep, h), ext_trace(T, ext.K, h, 0))
    assert det_of_automorphism(rep, h).tolist() == [three]


def test_det_of_deformation_reduces(showcase_rep):
    _, rep = showcase_rep
    d = det_of_deformation(rep)
    assert d.is_closed() and d.reduces()
    assert d.base.ranks == ((1,),) * 4


def test_line_obstruction_examples():
    S = PosetSite.constant(POSETS["sphere6"](), cyclic(2))
    ext = make_ext(POSETS["sphere6"](), "Zp2", 2)
    assert line_obstruction(ext, LineBundle.trivial(ext.small)).is_zero()
    te = trivial_extension(S)
    rng = np.random.default_rng(0)
    assert line_obstruction(te, random_line_bundle(S, rng)).is_zero()


@settings(max_examples=15)
@given(st.integers(0, 2 ** 20))
def test_line_obstruction_is_additive(seed):
    ext = make_ext(POSETS["pseudo-circle"](), "Zp2", 2)
    rng = np.random.default_rng(seed)
    L, M = random_line_bundle(ext.small, rng), random_line_bundle(ext.small, rng)
    lhs = line_obstruction(ext, L.tensor(M))
    assert lhs.same_class(line_obstruction(ext, L) + line_obstruction(ext, M))


@pytest.mark.parametrize("site, ring, seed", [("point", "Zp2", 0), ("chain", "product", 1),
                                              ("pseudo-circle", "custom", 2), ("random-poset", "Zp3", 3)])
def test_verify_main_theorem_on_generated(site, ring, seed):
    inst = generate(site, ring, seed)
    out = verify_main_theorem(inst.ext, inst.E, np.random.default_rng(seed), samples=4)
    assert out["part_i"] is True
    assert out["part_ii"] in (True, None)
    assert out["part_iii"] in (True, None)


def test_closed_lift_must_reduce():
    ext = make_ext(POSETS["point"](), "Zp2", 3)
    E = FreeSheafComplex(ext.small, 0, ((1, 1),), {0: [[[1]]]}, {})
    wrong = DefRep(ext, E, FreeSheafComplex(ext.big, 0, ((1, 1),), {0: [[[2]]]}, {}))
    assert not wrong.reduces()
    right = DefRep(ext, E, FreeSheafComplex(ext.big, 0, ((1, 1),), {0: [[[4]]]}, {}))
    assert right.reduces() and right.is_closed()
    assert reye(ext.big.ring(0), 1).shape == (1, 1, 1)
