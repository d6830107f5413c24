import json

import pytest

from weakmem.litmus import (
    ALIASES, INCONCLUSIVE, bundled_corpus, corpus_files, expectation_for, load_test, parse_litmus, run_corpus,
    run_test,
)
from weakmem.explorer import Options
from weakmem.reorder import ALL_ARCHS, architecture

# verdict letters in the order sc, tso, arm-mca, arm-nmca, power; "-" means not run
FROZEN = {
    "2+2W+fences": "NNNNN",
    "2+2W": "NNOOO",
    "CoRR": "NNNNN",
    "CoWR": "NNNNN",
    "CoWW": "NNNNN",
    "Forward": "NNNNN",
    "IRIW+addrs": "NNNOO",
    "IRIW+fences": "NNNNN",
    "IRIW+lwfences": "----O",
    "LB+ctrls": "NNNNN",
    "LB+datas": "NNNNN",
    "LB+fences": "NNNNN",
    "LB": "NNOOO",
    "MP+eieio+addr": "----N",
    "MP+fence+addr": "NNNNN",
    "MP+fence+ctrl": "NNOOO",
    "MP+fence+ctrlcfence": "NNNNN",
    "MP+fence.st+fence": "NNNNN",
    "MP+fences": "NNNNN",
    "MP+lwfences": "----N",
    "MP": "NNOOO",
    "PPO017": "NNOOO",
    "R+fences": "NNNNN",
    "R": "NOOOO",
    "S+fences": "NNNNN",
    "S": "NNOOO",
    "SB+fence.sts": "NNOOO",
    "SB+fences": "NNNNN",
    "SB+forwarding": "NOOOO",
    "SB+lwfences": "----O",
    "SB": "NOOOO",
    "TwoWrites+addrs": "NNNOO",
    "WRC+data+addr": "NNNOO",
    "WRC+fences": "NNNNN",
    "WRC+lwfence+addr": "----N",
}
LETTER = {"Observable": "O", "NotObservable": "N", "NotObservableBounded": "B"}


def test_every_corpus_file_is_frozen():
    names = {load_test(p).name for p in corpus_files(bundled_corpus())}
    assert names == set(FROZEN)


@pytest.mark.parametrize("path", corpus_files(bundled_corpus()), ids=lambda p: p.stem)
def test_corpus_verdicts(path):
    t = load_test(path)
    want = FROZEN[t.name]
    for i, arch in enumerate(ALL_ARCHS):
        if want[i] == "-":
            assert t.arch is not None and ALIASES[t.arch] is not arch.model
            continue
        row = run_test(t, arch)
        assert LETTER[row.verdict] == want[i], (t.name, arch.name, row.verdict)
        assert row.agrees is not False, (t.name, arch.name, row.expected)


def test_every_test_has_expectations():
    for p in corpus_files(bundled_corpus()):
        t = load_test(p)
        assert t.expectations, t.name
        for e in t.expectations:
            assert e.source in ("literature", "oracle", "derived")


def test_corpus_report_agrees(monkeypatch):
    monkeypatch.setenv("WEAKMEM_WORKERS", "1")
    rep = run_corpus(corpus_files(bundled_corpus()), architecture("arm-nmca"), only_expected=True)
    s = rep.summary()
    assert s["disagree"] == 0 and s["inconclusive"] == 0 and s["agree"] == s["tests"]
    assert "agree" in rep.table()


def test_parallel_corpus_matches_serial():
    paths = corpus_files(bundled_corpus())[:6]
    arch = architecture("tso")
    a = run_corpus(paths, arch, workers=1)
    b = run_corpus(paths, arch, workers=2)
    assert [(r.test, r.verdict) for r in a.rows] == [(r.test, r.verdict) for r in b.rows]


def test_disagreement_is_reported():
    t = parse_litmus("""test wrong
expect sc Observable derived
init { x = 0 }
process 1 locals { r = 0 } { r := x }
exists (1:r = 1)
""")
    row = run_test(t, architecture("sc"))
    assert row.verdict == "NotObservable" and row.agrees is False


def test_cap_gives_inconclusive():
    t = load_test(bundled_corpus() / "IRIW+addrs.lit")
    row = run_test(t, architecture("sc"), Options(max_configs=5))
    assert row.verdict == INCONCLUSIVE and row.agrees is None and row.error


def test_structured_row_is_json_and_stable():
    t = load_test(bundled_corpus() / "SB.lit")
    docs = []
    for _ in range(2):
        d = run_test(t, architecture("tso")).as_dict()
        d["stats"].pop("seconds", None)
        d.pop("seconds", None)
        docs.append(json.dumps(d, sort_keys=True))
    assert docs[0] == docs[1]


def test_expectation_lookup_accepts_aliases():
    t = parse_litmus("test a\nexpect x86 Observable derived\ninit { x = 0 }\nprocess 1 { x := 1 }\nexists (x = 1)\n")
    assert expectation_for(t, architecture("tso")) == "Observable"
    assert expectation_for(t, architecture("sc")) is None
