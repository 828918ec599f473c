import pytest

from perfdef import oracle
from perfdef.site import POSETS

# frozen values of the simplicial oracle (integral homology of the order complexes)
HOMOLOGY = {
    "point": [(1, ())],
    "chain": [(1, ()), (0, ()), (0, ())],
    "wedge": [(1, ()), (0, ())],
    "pseudo-circle": [(1, ()), (1, ())],
    "sphere6": [(1, ()), (0, ()), (1, ())],
    "torus-model": [(1, ()), (2, ()), (1, ())],
    "rp2": [(1, ()), (0, (2,)), (0, ())],
}


@pytest.mark.parametrize("name", sorted(HOMOLOGY))
def test_integral_homology(name):
    assert oracle.integral_homology(POSETS[name]().leq) == HOMOLOGY[name]


@pytest.mark.parametrize("name, m, expected", [
    ("pseudo-circle", 3, [(3,), (3,)]),
    ("sphere6", 2, [(2,), (), (2,)]),
    ("rp2", 2, [(2,), (2,), (2,)]),
    ("rp2", 3, [(3,), (), ()]),
    ("torus-model", 2, [(2,), (2, 2), (2,)]),
])
def test_universal_coefficients(name, m, expected):
    assert oracle.simplicial_cohomology(POSETS[name]().leq, m) == expected


def test_order_complex_of_pseudo_circle():
    simp = oracle.order_complex(POSETS["pseudo-circle"]().leq)
    assert [len(s) for s in simp] == [4, 4]


@pytest.mark.parametrize("perm, sign", [((0, 1, 2), 1), ((1, 0, 2), -1), ((1, 2, 0), 1), ((3, 2, 1, 0), 1),
                                        ((1, 0, 3, 2, 4), 1), ((4, 0, 1, 2, 3), 1), ((1, 2, 3, 0), -1)])
def test_permutation_sign(perm, sign):
    assert oracle.permutation_sign(perm) == sign
