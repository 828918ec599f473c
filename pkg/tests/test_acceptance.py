"""Acceptance suite: one test per criterion, each run over the default corpus.

Every test records its outcome in ``conftest.ACCEPTANCE``; the run ends with
one ``CRITERION <n> <name> <pass|fail>`` line per criterion.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE
from perfdef import harness
from perfdef.corpus import make_ext, pseudo_circle_showcase
from perfdef.deform import lift_exists, search_space, strict_iso_matrices
from perfdef.detline import alternating_det
from perfdef.harness import Config, verify_all
from perfdef.ring import cyclic
from perfdef.site import POSETS, LineBundle, PosetSite, direct_sum_complexes, sheaf_cohomology, structure_sheaf
from perfdef.trace import ext_trace

pytestmark = pytest.mark.slow

SITE_KINDS = {"point", "chain", "pseudo-circle", "sphere6", "torus-model", "random-poset", "rp2"}


@contextmanager
def criterion(n: int, name: str):
    ACCEPTANCE[n] = (name, False)
    yield
    ACCEPTANCE[n] = (name, True)


def run(corpus, check, cfg=None):
    t0 = time.perf_counter()
    rep = verify_all(corpus, [check], cfg or Config())
    return rep, time.perf_counter() - t0


def assert_clean(rep):
    assert rep.ok, [(k, rep.results[k].witness) for k in rep.failures()]
    for r in rep.results.values():
        if r.status == "skipped":
            assert r.witness.startswith("reason=")


def test_01_main_i(corpus):
    with criterion(1, "MAIN-i"):
        rep, secs = run(corpus, "MAIN-i")
        assert_clean(rep)
        assert rep.count("pass") >= 200
        assert {i.site_kind for i in corpus} == SITE_KINDS
        assert {i.ring_kind for i in corpus} >= {"Zp2", "Zp3", "trivial", "product", "custom"}
        assert secs < 60


def test_02_main_ii(corpus):
    with criterion(2, "MAIN-ii"):
        rep, secs = run(corpus, "MAIN-ii", Config(samples=10))
        assert_clean(rep)
        for (_, iid), r in rep.results.items():
            if r.status == "skipped":
                assert r.witness == "reason=no-deformation-exists", iid
        show = rep.results[("MAIN-ii", pseudo_circle_showcase().id)]
        assert show.status == "pass"
        nonzero, samples = map(int, show.witness.split("=")[1].split("/"))
        assert samples == 10 and nonzero > 0
        assert secs < 30


def test_03_main_iii(corpus):
    with criterion(3, "MAIN-iii"):
        rep, secs = run(corpus, "MAIN-iii")
        assert_clean(rep)
        assert rep.count("pass") > 0
        assert secs < 10
        # det(I + 3 diag(1, 0)) = 4 = 1 + 3 over Z/9
        ext = make_ext(POSETS["point"](), "Zp2", 3)
        E = direct_sum_complexes([LineBundle.trivial(ext.small).as_complex(0)] * 2)
        rep9 = lift_exists(ext, E).rep
        T = ext.total(E)
        three = ext.to_K(0, np.array([3]))[0]
        h = T.assemble(0, {((0,), 0): np.array([[three, 0], [0, 0]])})
        R = ext.big.ring(0)
        assert R.key(alternating_det(R, strict_iso_matrices(rep9, h)[0], 0)) == (4,)
        assert ext.from_K(0, ext_trace(T, ext.K, h, 0)).tolist() == [3]


def test_04_oracle_eq(corpus):
    with criterion(4, "ORACLE-EQ"):
        rep, secs = run(corpus, "ORACLE-EQ")
        assert_clean(rep)
        assert rep.count("pass") >= 200
        assert any(r.witness.startswith("class=") for r in rep.results.values())
        assert secs < 120


def test_05_vanish(corpus):
    with criterion(5, "VANISH"):
        rep, _ = run(corpus, "VANISH")
        assert_clean(rep)
        small_points = [i for i in corpus if i.site.n == 1 and search_space(i.ext, i.E) <= 2 ** 16]
        assert len(small_points) > 0
        for inst in small_points:
            assert rep.results[("VANISH", inst.id)].status == "pass", inst.id
        assert any(r.witness.endswith("lift=no") for r in rep.results.values())


def test_06_filter_add(corpus):
    with criterion(6, "FILTER-ADD"):
        rep, _ = run(corpus, "FILTER-ADD")
        assert_clean(rep)
        assert rep.count("pass") >= 100


def test_07_cohom_simplicial(corpus):
    with criterion(7, "COHOM-SIMPLICIAL"):
        rep, _ = run(corpus, "COHOM-SIMPLICIAL")
        assert_clean(rep)
        kinds = {i.site_kind for i in corpus if rep.results[("COHOM-SIMPLICIAL", i.id)].status == "pass"}
        assert kinds >= {"point", "chain", "pseudo-circle", "sphere6"}
        for name in ("point", "chain", "pseudo-circle", "sphere6"):
            assert harness.cohomology_matches(POSETS[name](), 3)[0]
            assert harness.cohomology_matches(POSETS[name](), 2)[0]
        circle = PosetSite.constant(POSETS["pseudo-circle"](), cyclic(3))
        assert sheaf_cohomology(circle, structure_sheaf(circle), 1).group.invariants() == (3,)
        sphere = PosetSite.constant(POSETS["sphere6"](), cyclic(2))
        assert sheaf_cohomology(sphere, structure_sheaf(sphere), 2).group.invariants() == (2,)


def test_08_k1_local(corpus):
    with criterion(8, "K1-LOCAL"):
        cfg = Config()
        assert cfg.k1_matrices == 100 and cfg.max_elements == 512
        rep, _ = run(corpus, "K1-LOCAL", cfg)
        assert_clean(rep)
        for inst in corpus:
            rings = [s.ring(p) for s in (inst.ext.big, inst.ext.small) for p in range(s.n)]
            if any(R.is_local()[0] and R.size <= 512 for R in rings):
                assert rep.results[("K1-LOCAL", inst.id)].status == "pass", inst.id


def test_09_pic_ring(corpus):
    with criterion(9, "PIC-RING"):
        cfg = Config()
        assert cfg.pic_range == 3
        rep, _ = run(corpus, "PIC-RING", cfg)
        assert_clean(rep)
        assert rep.count("pass") == len(corpus)


def test_10_line_add(corpus):
    with criterion(10, "LINE-ADD"):
        rep, _ = run(corpus, "LINE-ADD")
        assert_clean(rep)
        assert rep.count("pass") == len(corpus)


# recorded seed and budget for the witness search
SEARCH_SEED = 0
SEARCH_BUDGET = 200


def test_11_witness_search(tmp_path):
    with criterion(11, "WITNESS-SEARCH"):
        res = harness.search("nonzero-obstruction", budget=SEARCH_BUDGET, seed=SEARCH_SEED)
        assert res.found
        rep = harness.witness_check(res)
        assert rep.ok and rep.count("pass") == 1
        path = harness.save_instance(res.instance, harness.corpus_dirs(tmp_path)["witnesses"])
        assert path.exists()

        res = harness.search("nonzero-trace", budget=SEARCH_BUDGET, seed=SEARCH_SEED)
        assert res.found and res.lhs_nonzero
        main = harness.check_main_i(res.instance, Config())
        assert main.status == "pass" and main.witness.startswith("lhs=")

        # an exhausted budget produces an explicit skipped record
        empty = harness.witness_check(harness.search("nonzero-trace", budget=1, seed=3))
        (r,) = empty.results.values()
        assert r.status == "skipped" and r.witness.startswith("reason=none-found")
