import re

import pytest

from perfdef import harness
from perfdef.cli import main
from perfdef.corpus import aut_example, generate, pseudo_circle_showcase, three_term_z2, z8_obstructed
from perfdef.harness import CHECKS, Config, Report, parse_report, verify, verify_all
from perfdef.site import FreeSheafComplex

LINE = re.compile(r"^CHECK [A-Za-z0-9-]+ \S+ (pass|fail|skipped)( \S+)?$")


@pytest.fixture(scope="module")
def small():
    return [three_term_z2(), z8_obstructed(), generate("point", "product", 1), generate("chain", "Zp2", 2)]


def test_report_lines_are_well_formed(small):
    rep = verify_all(small)
    lines = rep.body().splitlines()
    assert len(lines) == len(small) * len(CHECKS)
    assert all(LINE.match(ln) for ln in lines)
    assert rep.ok
    for (name, iid), r in rep.results.items():
        if r.status == "skipped":
            assert r.witness.startswith("reason=")


def test_report_body_is_deterministic(small):
    a = verify_all(small, cfg=Config(seed=5)).body()
    b = verify_all(small, cfg=Config(seed=5)).body()
    assert a == b
    assert "TIME" not in a


def test_report_round_trips_through_text(small):
    rep = verify_all(small, ["MAIN-i", "TORSOR"])
    back = parse_report(rep.text())
    assert back.body() == rep.body()
    assert set(back.timings) == {"MAIN-i", "TORSOR"}


def test_showcase_records():
    rep = verify(z8_obstructed(), ["ORACLE-EQ", "VANISH", "MAIN-i"])
    assert rep.results[("VANISH", "point-Zp3-obstructed")].witness.endswith("lift=no")
    assert "class=(1)" in rep.results[("ORACLE-EQ", "point-Zp3-obstructed")].witness
    inst, _ = aut_example()
    assert verify(inst, ["MAIN-iii"]).count("skipped") == 1
    rep = verify(pseudo_circle_showcase(), ["MAIN-ii"], Config(samples=10))
    r = rep.results[("MAIN-ii", "pseudo-circle-Zp2-rank2")]
    assert r.status == "pass" and r.witness.startswith("nonzero_traces=") and not r.witness.startswith("nonzero_traces=0/")


def test_invalid_instance_fails_every_check():
    inst = z8_obstructed()
    inst.E = FreeSheafComplex(inst.site, 0, ((1, 1, 1),), {0: [[[1]], [[1]]]}, {})
    assert not inst.check()[0]
    rep = verify(inst, ["MAIN-i", "TORSOR"])
    assert rep.count("fail") == 2
    assert all(r.witness.startswith("invalid-instance:") for r in rep.results.values())


def test_unknown_check_is_an_error():
    with pytest.raises(KeyError):
        verify(three_term_z2(), ["NOPE"])


def test_merge_and_counts():
    a, b = Report(), Report()
    a.add("X", "i1", harness.passed())
    b.add("X", "i2", harness.failed("w=1"))
    a.merge(b)
    assert a.count("pass") == 1 and a.count("fail") == 1 and not a.ok
    assert a.lines() == ["CHECK X i1 pass", "CHECK X i2 fail w=1"]


def test_skip_reason_has_no_spaces():
    r = harness.skipped("Ext^-1(E,E) is nonzero")
    assert r.status == "skipped" and " " not in r.witness and "," not in r.witness


def test_cli_workflow(tmp_path, capsys):
    corpus = tmp_path / "c"
    assert main(["generate", "--kind", "point", "--ring", "Zp2", "--count", "2", "--corpus", str(corpus)]) == 0
    assert len(list((corpus / "instances").glob("*.pd"))) == 2
    assert main(["validate", "--corpus", str(corpus)]) == 0
    assert "2/2 valid" in capsys.readouterr().out
    assert main(["verify", "--corpus", str(corpus), "--checks", "MAIN-i,VANISH"]) == 0
    out = capsys.readouterr().out
    assert "0 fail" in out
    report = (corpus / "reports" / "verify-seed0.txt").read_text()
    assert report.count("CHECK ") == 4 and "TIME MAIN-i" in report
    assert main(["report", "--corpus", str(corpus)]) == 0
    assert "MAIN-i" in capsys.readouterr().out


def test_cli_validate_rejects_bad_file(tmp_path, capsys):
    corpus = tmp_path / "c"
    harness.corpus_dirs(corpus)
    (corpus / "instances" / "bad.pd").write_text("garbage\n")
    assert main(["validate", "--corpus", str(corpus)]) == 1
    assert "INVALID bad.pd" in capsys.readouterr().out


def test_cli_verify_without_corpus(tmp_path):
    assert main(["verify", "--corpus", str(tmp_path / "empty")]) == 1


def test_cli_search_writes_witness(tmp_path, capsys):
    corpus = tmp_path / "c"
    assert main(["search", "--seed", "0", "--budget", "20", "--corpus", str(corpus)]) == 0
    assert len(list((corpus / "witnesses").glob("*.pd"))) == 1
    text = (corpus / "reports" / "search-seed0.txt").read_text()
    assert text.startswith("CHECK WITNESS-SEARCH search-seed-0 pass witness=")


def test_search_with_no_budget_is_skipped():
    res = harness.search(budget=0)
    rep = harness.witness_check(res)
    assert rep.count("skipped") == 1 and rep.ok


def test_cli_rejects_unknown_check(tmp_path):
    with pytest.raises(SystemExit):
        main(["verify", "--corpus", str(tmp_path), "--checks", "BOGUS"])
