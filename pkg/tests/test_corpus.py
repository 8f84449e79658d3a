import time

import pytest

from reachfx.corpus import (
    Expectation, ExpectationError, check_file, corpus_manifest, parse_expectation, run_corpus,
)

# every listing the corpus must encode, with the verdict it must carry
REQUIRED = {
    "counter_alias": "ACCEPT",
    "inc_capture": "ACCEPT",
    "id_separation": "ACCEPT",
    "update_counter": "REJECT E-SEPARATION",
    "exact_referent_accept": "ACCEPT",
    "exact_referent_reject": "REJECT E-QUAL-MISMATCH",
    "widened_referent_a": "ACCEPT",
    "widened_referent_b": "ACCEPT",
    "free_then_deref": "REJECT E-USE-AFTER-KILL",
    "mention_after_kill": "ACCEPT",
    "double_free": "ACCEPT",
    "kill_then_use_other": "ACCEPT",
    "move_then_use": "REJECT E-USE-AFTER-KILL",
    "move_then_use_destination": "ACCEPT",
    "move_of_dead": "REJECT E-USE-AFTER-KILL",
    "move_of_dead_raw": "REJECT E-UNBOUND",
    "fresh_escape_kill": "REJECT E-FRESH-ESCAPE-KILL",
    "empty": "ACCEPT",
}


def test_manifest_covers_required_listings():
    manifest = {p.stem: e for p, e in corpus_manifest()}
    assert len(manifest) >= 14
    for name, verdict in REQUIRED.items():
        assert name in manifest, name
        exp = manifest[name]
        got = "ACCEPT" if exp.accept else f"REJECT {exp.code}"
        assert got == verdict, name


def test_empty_program_header():
    manifest = {p.stem: e for p, e in corpus_manifest()}
    assert manifest["empty"].output == "TYPE Unit QUAL {} EFF {};{}"


@pytest.mark.parametrize("result", run_corpus(), ids=lambda r: r.path.stem)
def test_corpus_file(result):
    assert result.passed, f"expected {result.expectation}, got {result.actual}"


def test_whole_corpus_is_fast():
    start = time.perf_counter()
    results = run_corpus()
    assert all(r.passed for r in results)
    assert time.perf_counter() - start < 1.0


class TestHeaders:
    def test_accept(self):
        assert parse_expectation("// EXPECT: ACCEPT TYPE Int QUAL {} EFF {};{}\n1") == \
            Expectation(True, output="TYPE Int QUAL {} EFF {};{}")

    def test_reject(self):
        assert parse_expectation("// EXPECT: REJECT E-OBS @ 3\n") == Expectation(False, code="E-OBS", line=3)

    def test_missing(self):
        with pytest.raises(ExpectationError):
            parse_expectation("unit\n// EXPECT: ACCEPT x")

    def test_wrong_line_fails(self, tmp_path):
        p = tmp_path / "x.rt"
        p.write_text("// EXPECT: REJECT E-UNBOUND @ 1\n\nnope\n")
        assert not check_file(p).passed
        p.write_text("// EXPECT: REJECT E-UNBOUND @ 3\n\nnope\n")
        assert check_file(p).passed
