"""Tests for the run ledger."""

from genbound.db import get_runs, record_run


def add(command, violations=0, target="binary-gibbs:1"):
    return record_run(command=command, target=target, config_hash="ab" * 32, seed=0, checks=5, violations=violations)


class TestLedger:
    def test_empty(self, home):
        assert get_runs() == []
        assert (home / "genbound.db").exists()

    def test_record_and_read(self, home):
        first = add("run")
        second = add("verify:lemma7", violations=2, target="lemma7")
        assert second > first
        rows = get_runs()
        assert [r["id"] for r in rows] == [second, first]
        assert rows[0]["passed"] == 0
        assert rows[1]["passed"] == 1
        assert rows[1]["checks"] == 5

    def test_filters(self, home):
        add("run")
        add("verify:lemma7")
        add("verify:ghost", violations=1)
        assert [r["command"] for r in get_runs(command="verify")] == ["verify:ghost", "verify:lemma7"]
        assert [r["command"] for r in get_runs(failed_only=True)] == ["verify:ghost"]
        assert len(get_runs(limit=2)) == 2
