import pytest

from perfdef.corpus import Instance, aut_example, showcases
from perfdef.ring import cyclic, product, truncated_poly
from perfdef.serialize import FormatError, dumps, key, load_one, loads
from perfdef.site import POSETS, LineBundle, PosetSite


def test_corpus_round_trip(corpus):
    for inst in corpus:
        text = dumps(inst)
        back = load_one(text, Instance)
        assert key(back) == key(inst), inst.id
        assert back.id == inst.id and back.seed == inst.seed
        assert dumps(back) == text


@pytest.mark.parametrize("R", [cyclic(9), product(cyclic(2), cyclic(3)), truncated_poly(2, 3)], ids=repr)
def test_ring_round_trip(R):
    assert key(load_one(dumps(R))) == key(R)


def test_several_objects_share_records():
    S = PosetSite.constant(POSETS["pseudo-circle"](), cyclic(4))
    L = LineBundle.trivial(S)
    objs = loads(dumps(S, L))
    assert [type(o).__name__ for o in objs.values()].count("PosetSite") == 1
    assert key(load_one(dumps(S, L), LineBundle)) == key(L)


def test_expected_values_survive():
    inst = showcases()[-1]
    assert load_one(dumps(inst), Instance).expected == inst.expected
    inst, _ = aut_example()
    assert key(load_one(dumps(inst), Instance)) == key(inst)


@pytest.mark.parametrize("text", ["", "not a header\n", "perfdef v1\nRING R0\norders 4\n",
                                  "perfdef v1\nRING\nEND\n"])
def test_malformed_input_raises(text):
    with pytest.raises(FormatError):
        loads(text)
